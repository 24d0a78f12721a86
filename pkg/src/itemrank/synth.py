"""Deterministic synthetic generators: independent columns and noisy copies.

Every column draws from its own counter-based stream (Philox keyed by the
seed, a generator tag, and the column index), so regenerating with more
columns or rows never perturbs the data already produced for earlier
columns under the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset

__all__ = ["GenConfig", "gen_ind", "gen_copy", "gen_ind_margins", "gen_copy_noise"]

_TAG_IND = 0
_TAG_COPY = 1


@dataclass(frozen=True)
class GenConfig:
    k_attrs: int
    m_rows: int
    seed: int

    def __post_init__(self):
        if self.k_attrs < 1 or self.m_rows < 1:
            raise ValueError("K and M must be at least 1")
        if not 0 <= self.seed < (1 << 64):
            raise ValueError("seed must fit in 64 bits")


def _column_stream(seed: int, tag: int, column: int) -> np.random.Generator:
    key = np.array([seed, (tag << 48) | column], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _pack(columns: list[np.ndarray], m: int) -> Dataset:
    cols = tuple(
        int.from_bytes(np.packbits(c.astype(np.uint8), bitorder="little").tobytes(), "little")
        for c in columns
    )
    return Dataset(cols=cols, m_rows=m, item_ids=tuple(range(len(cols))))


def gen_ind_margins(cfg: GenConfig) -> np.ndarray:
    """The per-column margins gen_ind draws, reproduced without the data."""
    return np.array(
        [_column_stream(cfg.seed, _TAG_IND, j).random() for j in range(cfg.k_attrs)]
    )


def gen_ind(cfg: GenConfig) -> Dataset:
    """Independent columns; margin of column j ~ Uniform[0, 1] per stream j."""
    columns = []
    for j in range(cfg.k_attrs):
        rng = _column_stream(cfg.seed, _TAG_IND, j)
        theta = rng.random()
        columns.append(rng.random(cfg.m_rows) < theta)
    return _pack(columns, cfg.m_rows)


def gen_copy_noise(cfg: GenConfig) -> np.ndarray:
    """Flip probabilities used by gen_copy for columns 1..K-1 (entry 0 unused)."""
    eps = np.zeros(cfg.k_attrs)
    for j in range(1, cfg.k_attrs):
        eps[j] = _column_stream(cfg.seed, _TAG_COPY, j).random()
    return eps


def gen_copy(cfg: GenConfig) -> Dataset:
    """Markov chain of columns: each is the previous one with symmetric noise.

    Column 0 is a fair coin; column j > 0 copies column j-1 and flips each
    bit independently with probability eps_j ~ Uniform[0, 1].
    """
    columns: list[np.ndarray] = []
    rng0 = _column_stream(cfg.seed, _TAG_COPY, 0)
    columns.append(rng0.random(cfg.m_rows) < 0.5)
    for j in range(1, cfg.k_attrs):
        rng = _column_stream(cfg.seed, _TAG_COPY, j)
        eps = rng.random()
        flips = rng.random(cfg.m_rows) < eps
        columns.append(columns[-1] ^ flips)
    return _pack(columns, cfg.m_rows)
