"""DP-WGAN: Wasserstein GAN whose critic is trained with DP-SGD.

Only the critic reads private rows, so only its updates are clipped and
noised; the generator sees the data through the (private) critic alone.
"""

import logging, math

import numpy as np

from src.dense_net import DenseNet, NetGradients, per_example_clip, per_example_norms
from src.errors import BudgetError
from src.gan_common import (FittedGan, GanConfig, build_discriminator, build_generator, epoch_iterations,
                            generate_encoded, generator_step, make_optimizer)
from src.privacy_core import BudgetLedger, PrivacySpec, calibrate_noise_multiplier, sgd_accountant_epsilon
from src.synthesizer import private_access
from src.tabular_domain import Table
from src.tabular_encoder import TableEncoder

logger = logging.getLogger(__name__)


def dpsgd_steps(n: int, batch_size: int, epochs: int) -> int:
    """Critic steps fed to the accountant."""
    return epochs * epoch_iterations(n, batch_size)


def private_critic_gradient(critic: DenseNet, real: np.ndarray, fake: np.ndarray, clip_norm: float,
                            noise_multiplier: float, rng: np.random.Generator,
                            clip_counter: dict | None = None, expected_batch: float | None = None) -> NetGradients:
    """Noisy mean gradient of mean(D(fake)) - mean(D(real)).

    Example i contributes the pair (real[i], fake[i]); its gradient is clipped
    to `clip_norm` before summing and N(0, sigma^2 C^2) noise is added. The
    sum is divided by `expected_batch` (the actual batch size if omitted), so
    a Poisson batch keeps a fixed sensitivity. `noise_multiplier` of 0
    disables clipping and noise.
    """
    b = real.shape[0]
    divisor = float(expected_batch) if expected_batch is not None else float(b)
    std = noise_multiplier * clip_norm
    if b == 0:
        # an empty Poisson batch still releases the noise
        return NetGradients([rng.normal(0.0, std, w.shape) / divisor for w in critic.weights],
                            [rng.normal(0.0, std, g.shape) / divisor for g in critic.biases])

    critic.forward(np.vstack([real, fake]))
    upstream = np.concatenate([-np.ones(b), np.ones(b)]).reshape(-1, 1)
    if noise_multiplier == 0:
        return critic.backward(upstream).scaled(1.0 / divisor)

    per_row = critic.per_example_backward(upstream)
    paired = NetGradients([w[:b] + w[b:] for w in per_row.weights], [g[:b] + g[b:] for g in per_row.biases])

    clipped = per_example_clip(paired, clip_norm)
    if clip_counter is not None:
        norms = per_example_norms(clipped)
        clip_counter["checked"] = clip_counter.get("checked", 0) + norms.size
        clip_counter["violations"] = clip_counter.get("violations", 0) + int(np.sum(norms > clip_norm * (1 + 1e-9)))
        assert np.all(norms <= clip_norm * (1 + 1e-9)), f"clipped norm {norms.max()} > {clip_norm}"

    weights = [(w.sum(axis=0) + rng.normal(0.0, std, w.shape[1:])) / divisor for w in clipped.weights]
    biases = [(g.sum(axis=0) + rng.normal(0.0, std, g.shape[1:])) / divisor for g in clipped.biases]
    return NetGradients(weights, biases)


def poisson_batch(n: int, q: float, rng: np.random.Generator) -> np.ndarray:
    """Row indices, each row kept independently with probability q."""
    return np.flatnonzero(rng.random(n) < q)


def dpwgan_fit(train: Table, spec: PrivacySpec, seed: int, gan_config: GanConfig | None = None,
               check_clipping: bool = False) -> FittedGan:
    cfg = gan_config or GanConfig.from_config()
    n = train.n
    cfg.check_rows(n)
    if not spec.is_infinite and spec.delta <= 0:
        raise BudgetError("DP-WGAN is accounted with (eps, delta) and needs delta > 0")

    steps = dpsgd_steps(n, cfg.batch_size, cfg.epochs)
    q = cfg.batch_size / n
    # Calibration failures surface here, before any training
    sigma = 0.0 if spec.is_infinite else calibrate_noise_multiplier(spec, q, steps)
    logger.info("DP-WGAN fit: n=%d d=%d, %d critic steps at q=%.4g, noise multiplier %.4g, %s",
                n, train.d, steps, q, sigma, cfg.optimizer)

    rng = np.random.default_rng(seed)
    encoder = TableEncoder(train.schema)
    generator = build_generator(cfg, encoder, rng)
    critic = build_discriminator(cfg, encoder, rng)
    critic.clip_weights(cfg.weight_clip)
    critic_opt, generator_opt = make_optimizer(critic, cfg), make_optimizer(generator, cfg)
    counter: dict | None = {} if check_clipping else None
    rows_sampled = 0

    with private_access(train) as data:
        encoded = encoder.encode(data.table)
        for step in range(1, steps + 1):
            # Poisson sampling at rate q, as the accountant assumes
            real = encoded[poisson_batch(n, q, rng)]
            rows_sampled += real.shape[0]
            fake = generate_encoded(generator, encoder, real.shape[0], rng)
            grads = private_critic_gradient(critic, real, fake, cfg.clip_norm, sigma, rng, counter,
                                            expected_batch=cfg.batch_size)
            critic_opt.step(grads)
            critic.clip_weights(cfg.weight_clip)

            if step % cfg.critic_iterations == 0:
                fake = generate_encoded(generator, encoder, cfg.batch_size, rng)
                # generator maximises the critic score on fakes
                generator_step(generator, critic, encoder, fake, -np.ones(cfg.batch_size) / cfg.batch_size,
                               generator_opt)

            if step % max(steps // 10, 1) == 0 and real.shape[0]:
                logger.debug("DP-WGAN step %d/%d: critic gap %.4g", step, steps,
                             float(critic.predict(real).mean() - critic.predict(fake).mean()))

    ledger = BudgetLedger(spec)
    if spec.is_infinite:
        ledger.spend("dpwgan:dp-sgd (no noise)", math.inf)
    else:
        spent = sgd_accountant_epsilon(sigma, q, steps, spec.delta)
        ledger.spend(f"dpwgan:dp-sgd[{steps} steps, sigma={sigma:.4g}]", spent, spec.delta)

    diagnostics = {"steps": steps, "noise_multiplier": sigma, "sampling_rate": q, "rows_sampled": rows_sampled,
                   "critic_weight_max": max(float(np.abs(p).max()) for p in critic.parameters())}
    if counter is not None:
        diagnostics.update(clipped_checked=counter.get("checked", 0), clip_violations=counter.get("violations", 0))
    return FittedGan("dpwgan", train.schema, ledger, generator, encoder, diagnostics).finish_fit()
