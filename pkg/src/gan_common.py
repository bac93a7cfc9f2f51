import logging, math
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.special import expit

from src.config import config
from src.dense_net import Activation, Adam, DenseNet, Sgd
from src.errors import InputError
from src.privacy_core import BudgetLedger
from src.synthesizer import FittedSynthesizer
from src.tabular_domain import Schema, Table
from src.tabular_encoder import TableEncoder

logger = logging.getLogger(__name__)

OPTIMIZERS = ("adam", "sgd")

# He-uniform gain for the generator's relu layers
RELU_GAIN = math.sqrt(6.0)
CENTERING_DRAWS = 4096


@dataclass(frozen=True)
class GanConfig:
    noise_dim: int
    hidden: tuple[int, ...]
    batch_size: int
    epochs: int
    clip_norm: float
    weight_clip: float
    learning_rate: float
    critic_iterations: int
    teachers: int
    vote_noise_scale: float | None = None     # None: calibrate to the budget
    optimizer: str = "adam"
    beta1: float = 0.5
    beta2: float = 0.999

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "vote_noise_scale" and value is None:
                continue
            if f.name == "optimizer":
                if value not in OPTIMIZERS:
                    raise InputError(f"optimizer must be one of {', '.join(OPTIMIZERS)}, got {value!r}")
            elif f.name in ("beta1", "beta2"):
                if not 0 <= value < 1:
                    raise InputError(f"{f.name} must lie in [0, 1), got {value}")
            elif f.name == "hidden":
                if not value or min(value) < 1:
                    raise InputError(f"hidden sizes must be positive, got {value}")
            elif not value > 0:
                raise InputError(f"{f.name} must be positive, got {value}")

    @classmethod
    def from_config(cls, **overrides) -> "GanConfig":
        base = cls(config.gan_noise_dim, config.gan_hidden, config.gan_batch_size, config.gan_epochs,
                   config.gan_clip_norm, config.gan_weight_clip, config.gan_learning_rate,
                   config.gan_critic_iterations, config.pate_teachers, config.pate_vote_noise_scale,
                   config.gan_optimizer, config.gan_adam_beta1, config.gan_adam_beta2)
        return replace(base, **overrides) if overrides else base

    def check_rows(self, n: int) -> None:
        if self.batch_size > n:
            raise InputError(f"batch size {self.batch_size} exceeds the {n} training rows")


def make_optimizer(net: DenseNet, cfg: GanConfig) -> Adam | Sgd:
    if cfg.optimizer == "sgd":
        return Sgd(net, cfg.learning_rate)
    return Adam(net, cfg.learning_rate, cfg.beta1, cfg.beta2)


def build_generator(cfg: GanConfig, encoder: TableEncoder, rng: np.random.Generator) -> DenseNet:
    """Relu MLP with a linear head whose output is centred at zero on fresh noise.

    Centering only looks at noise draws, never at training rows.
    """
    sizes = (cfg.noise_dim, *cfg.hidden, encoder.width)
    activations = [Activation.RELU] * len(cfg.hidden) + [Activation.IDENTITY]
    generator = DenseNet.create(sizes, activations, rng, gains=[RELU_GAIN] * len(cfg.hidden) + [1.0])
    z = rng.standard_normal((CENTERING_DRAWS, cfg.noise_dim))
    generator.biases[-1] -= generator.predict(z).mean(axis=0)
    return generator


def build_discriminator(cfg: GanConfig, encoder: TableEncoder, rng: np.random.Generator) -> DenseNet:
    sizes = (encoder.width, *cfg.hidden, 1)
    activations = [Activation.LEAKY_RELU] * len(cfg.hidden) + [Activation.IDENTITY]
    return DenseNet.create(sizes, activations, rng)


def generate_encoded(generator: DenseNet, encoder: TableEncoder, count: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Training-time forward pass; leaves the generator cache set for `generator_step`."""
    z = rng.standard_normal((count, generator.sizes[0]))
    return encoder.activate(generator.forward(z))


def generator_step(generator: DenseNet, discriminator: DenseNet, encoder: TableEncoder,
                   fake: np.ndarray, score_grad: np.ndarray, optimizer: Adam | Sgd) -> None:
    """Backprop `score_grad` (dLoss/dScore per fake row) through the discriminator into the generator."""
    discriminator.forward(fake)
    input_grad = discriminator.backward(score_grad.reshape(-1, 1)).input_grad
    optimizer.step(generator.backward(encoder.activate_backward(fake, input_grad)))


def bce_logit_grad(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """d/ds of the mean binary cross-entropy for logits s."""
    return (expit(logits.ravel()) - labels) / logits.shape[0]


def epoch_iterations(rows: int, batch_size: int) -> int:
    return math.ceil(rows / batch_size)


class FittedGan(FittedSynthesizer):
    """Generator network plus encoder; sampling draws fresh noise only."""

    def __init__(self, name: str, schema: Schema, ledger: BudgetLedger, generator: DenseNet,
                 encoder: TableEncoder, diagnostics: dict | None = None):
        super().__init__(schema, ledger)
        self.name = name
        self.generator = generator
        self.encoder = encoder
        self.diagnostics = diagnostics or {}

    def _sample_rows(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((n, self.generator.sizes[0]))
        encoded = self.encoder.activate(self.generator.predict(z))
        return self.encoder.decode(encoded).rows


def gan_sample(model: FittedGan, n: int, seed: int) -> Table:
    return model.sample(n, seed)
