import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from src.errors import InputError
from src.tabular_domain import Schema, Table

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Block:
    column: int
    start: int
    width: int
    categorical: bool


class TableEncoder:
    """Continuous columns scaled to [-1, 1] with public bounds; categoricals one-hot.

    The generator's last layer is linear; `activate` applies tanh to the
    continuous slots and a softmax to each one-hot block.
    """

    def __init__(self, schema: Schema):
        self.schema = schema
        blocks, start = [], 0
        for i, col in enumerate(schema.columns):
            width = col.cardinality if col.is_categorical else 1
            blocks.append(Block(i, start, width, col.is_categorical))
            start += width
        self.blocks = tuple(blocks)
        self.width = start

    def encode(self, table: Table) -> np.ndarray:
        if table.schema != self.schema:
            raise InputError("table schema differs from the encoder schema")
        out = np.zeros((table.n, self.width))
        for block in self.blocks:
            col = self.schema.columns[block.column]
            values = table.column(block.column)
            if block.categorical:
                out[np.arange(table.n), block.start + values.astype(np.int64)] = 1.0
            else:
                scaled = 2.0 * (values - col.lower) / (col.upper - col.lower) - 1.0
                out[:, block.start] = np.clip(scaled, -1.0, 1.0)
        return out

    def activate(self, logits: np.ndarray) -> np.ndarray:
        out = np.empty_like(logits)
        for block in self.blocks:
            part = slice(block.start, block.start + block.width)
            if block.categorical:
                out[:, part] = softmax(logits[:, part], axis=1)
            else:
                out[:, part] = np.tanh(logits[:, part])
        return out

    def activate_backward(self, activated: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """Gradient w.r.t. the logits given the upstream gradient on `activate`'s output."""
        out = np.empty_like(grad)
        for block in self.blocks:
            part = slice(block.start, block.start + block.width)
            a, g = activated[:, part], grad[:, part]
            if block.categorical:
                out[:, part] = a * (g - np.sum(a * g, axis=1, keepdims=True))
            else:
                out[:, part] = (1.0 - a ** 2) * g
        return out

    def decode(self, encoded: np.ndarray) -> Table:
        """Argmax per one-hot block; inverse scaling of continuous slots."""
        encoded = np.asarray(encoded, dtype=float)
        if encoded.ndim != 2 or encoded.shape[1] != self.width:
            raise InputError(f"encoded rows must have width {self.width}, got shape {encoded.shape}")
        rows = np.empty((encoded.shape[0], self.schema.d))
        for block in self.blocks:
            col = self.schema.columns[block.column]
            part = encoded[:, block.start:block.start + block.width]
            if block.categorical:
                rows[:, block.column] = np.argmax(part, axis=1)
            else:
                scaled = np.clip(part[:, 0], -1.0, 1.0)
                rows[:, block.column] = col.lower + (scaled + 1.0) / 2.0 * (col.upper - col.lower)
        return Table(self.schema, rows)


def encode_features(table: Table, drop_target: bool = True) -> np.ndarray:
    """Model-ready feature matrix: scaled continuous plus one-hot categoricals, target removed."""
    schema = table.schema
    keep = [i for i in range(schema.d) if not (drop_target and i == schema.target_index)]
    if not keep:
        raise InputError("no feature columns left after dropping the target")
    sub = table.select_columns(keep)
    return TableEncoder(sub.schema).encode(sub)
