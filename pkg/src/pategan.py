import logging, math

import numpy as np

from src.dense_net import Adam, DenseNet, Sgd
from src.errors import BudgetError, InputError
from src.gan_common import (FittedGan, GanConfig, bce_logit_grad, build_discriminator, build_generator,
                            epoch_iterations, generate_encoded, generator_step, make_optimizer)
from src.privacy_core import (BudgetLedger, PrivacySpec, calibrate_per_query_epsilon, pate_accountant_epsilon,
                              spawn_rngs)
from src.synthesizer import private_access
from src.tabular_domain import Table
from src.tabular_encoder import TableEncoder

logger = logging.getLogger(__name__)


def partition_shards(n: int, teachers: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Disjoint row-index shards covering 0..n-1."""
    if teachers < 2:
        raise InputError(f"PATE needs at least two teachers, got {teachers}")
    if n < teachers:
        raise InputError(f"{n} rows cannot feed {teachers} teachers")
    return np.array_split(rng.permutation(n), teachers)


def update_teachers(teachers: list[DenseNet], shards: list[np.ndarray], fake: np.ndarray, batch_size: int,
                    optimizers: list[Adam | Sgd], rngs: list[np.random.Generator]) -> None:
    """One BCE step per teacher: its own shard's rows as real (1), shared fakes as 0.

    Teacher k reads nothing but shards[k] and draws with rngs[k].
    """
    for teacher, shard, optimizer, rng in zip(teachers, shards, optimizers, rngs):
        size = min(batch_size, shard.shape[0])
        real = shard[rng.choice(shard.shape[0], size, replace=False)]
        batch = np.vstack([real, fake])
        labels = np.concatenate([np.ones(size), np.zeros(fake.shape[0])])
        logits = teacher.forward(batch)
        optimizer.step(teacher.backward(bce_logit_grad(logits, labels).reshape(-1, 1)))


def teacher_votes(teachers: list[DenseNet], fake: np.ndarray) -> np.ndarray:
    """(teachers x records) matrix of {0, 1} votes; 1 means 'looks real'."""
    return np.stack([(teacher.predict(fake).ravel() > 0).astype(np.int64) for teacher in teachers])


def aggregate_votes(votes: np.ndarray, noise_scale: float, rng: np.random.Generator) -> np.ndarray:
    """Noisy plurality per record: Laplace(noise_scale) on both vote counts; ties go to 0."""
    votes = np.asarray(votes)
    ones = votes.sum(axis=0).astype(float)
    zeros = votes.shape[0] - ones
    if noise_scale > 0:
        ones = ones + rng.laplace(0.0, noise_scale, ones.shape)
        zeros = zeros + rng.laplace(0.0, noise_scale, zeros.shape)
    return (ones > zeros).astype(float)


def per_query_epsilon(spec: PrivacySpec, cfg: GanConfig, planned_queries: int) -> float:
    """Configured scale b gives 2/b; otherwise the largest value fitting the planned queries."""
    if cfg.vote_noise_scale is not None:
        return 2.0 / cfg.vote_noise_scale
    return calibrate_per_query_epsilon(spec, planned_queries)


def pategan_fit(train: Table, spec: PrivacySpec, seed: int, gan_config: GanConfig | None = None) -> FittedGan:
    cfg = gan_config or GanConfig.from_config()
    n = train.n
    cfg.check_rows(n)
    if not spec.is_infinite and spec.delta <= 0:
        raise BudgetError("PATE-GAN's composition bound needs delta > 0")

    seeds = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(seeds[0])
    teacher_rngs = spawn_rngs(seeds[1], cfg.teachers)
    shards_idx = partition_shards(n, cfg.teachers, rng)

    iterations = epoch_iterations(min(len(s) for s in shards_idx), cfg.batch_size)
    planned = cfg.epochs * iterations * cfg.batch_size
    if spec.is_infinite:
        eps0, noise_scale = math.inf, 0.0
    else:
        eps0 = per_query_epsilon(spec, cfg, planned)
        noise_scale = 2.0 / eps0
    logger.info("PATE-GAN fit: n=%d d=%d, %d teachers, %d planned queries, eps0=%.4g (Laplace b=%.4g)",
                n, train.d, cfg.teachers, planned, eps0, noise_scale)

    encoder = TableEncoder(train.schema)
    generator = build_generator(cfg, encoder, rng)
    student = build_discriminator(cfg, encoder, rng)
    teachers = [build_discriminator(cfg, encoder, r) for r in teacher_rngs]
    teacher_opts = [make_optimizer(t, cfg) for t in teachers]
    student_opt, generator_opt = make_optimizer(student, cfg), make_optimizer(generator, cfg)

    queries = 0
    stopped_early = False
    with private_access(train) as data:
        encoded = encoder.encode(data.table)
        shards = [encoded[idx] for idx in shards_idx]
        for epoch in range(1, cfg.epochs + 1):
            for _ in range(iterations):
                fake = generate_encoded(generator, encoder, cfg.batch_size, rng)
                update_teachers(teachers, shards, fake, cfg.batch_size, teacher_opts, teacher_rngs)

                if not spec.is_infinite and \
                        pate_accountant_epsilon(queries + cfg.batch_size, eps0, spec.delta) > spec.epsilon:
                    stopped_early = True
                    break
                fake = generate_encoded(generator, encoder, cfg.batch_size, rng)
                labels = aggregate_votes(teacher_votes(teachers, fake), noise_scale, rng)
                queries += cfg.batch_size

                logits = student.forward(fake)
                student_opt.step(student.backward(bce_logit_grad(logits, labels).reshape(-1, 1)))

                # non-saturating generator loss -log sigmoid(S(G(z)))
                fake = generate_encoded(generator, encoder, cfg.batch_size, rng)
                score_grad = bce_logit_grad(student.predict(fake), np.ones(cfg.batch_size))
                generator_step(generator, student, encoder, fake, score_grad, generator_opt)
            if stopped_early:
                logger.warning("PATE-GAN budget reached after %d queries in epoch %d/%d; stopping with the "
                               "current generator", queries, epoch, cfg.epochs)
                break
            logger.debug("PATE-GAN epoch %d/%d: %d queries so far", epoch, cfg.epochs, queries)

    ledger = BudgetLedger(spec)
    if spec.is_infinite:
        ledger.spend(f"pategan:votes[{queries} queries, no noise]", math.inf)
    elif queries:
        ledger.spend(f"pategan:votes[{queries} queries, eps0={eps0:.4g}]",
                     pate_accountant_epsilon(queries, eps0, spec.delta), spec.delta)

    diagnostics = {"queries": queries, "planned_queries": planned, "per_query_epsilon": eps0,
                   "stopped_early": stopped_early}
    return FittedGan("pategan", train.schema, ledger, generator, encoder, diagnostics).finish_fit()
