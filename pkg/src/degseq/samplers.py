"""Seeded samplers for the five degree-sequence models.

Every draw comes from its own PCG64 substream whose SeedSequence is keyed by
``(seed, ...indices)``, so outputs do not depend on call order or on how work
is split between processes.

Batch functions take a ``numpy.random.Generator`` and return an integer array
of shape ``(size, n)``; the ``sample_*`` functions wrap them for one draw
addressed by ``(cfg.seed, graph index, replicate index)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError
from .graphs import LabeledGraph, pair_from_index
from .models import ModelParams, normalize_model, unit_interval_mass

MASK64 = (1 << 64) - 1
DENSE_MAX_PAIRS = 4096
GEOMETRIC_BELOW = 0.01
PAIR_TABLE_MAX = 1 << 24
MIN_TRUNC_ACCEPTANCE = 1e-6

_SINGLE, _BULK, _PLAN = 0, 1, 2
MODEL_CODES = {"B": 0, "E": 1, "E'": 2, "I": 3, "D": 4}


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & MASK64, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class SamplerConfig:
    seed: int
    model: str
    params: ModelParams

    def __post_init__(self):
        object.__setattr__(self, "model", normalize_model(self.model))


# --------------------------------------------------------------------------
# batch samplers


def batch_B(rng: np.random.Generator, n: int, p: float, size: int) -> np.ndarray:
    return rng.binomial(n - 1, p, size=(size, n))


def batch_E(rng, n: int, p: float, size: int, return_attempts: bool = False):
    """Rejection from B until the degree sum is even (acceptance >= 1/2)."""
    D = batch_B(rng, n, p, size)
    attempts = np.ones(size, dtype=np.int64)
    odd = np.flatnonzero(D.sum(axis=1) % 2)
    while odd.size:
        D[odd] = batch_B(rng, n, p, odd.size)
        attempts[odd] += 1
        odd = odd[D[odd].sum(axis=1) % 2 == 1]
    return (D, attempts) if return_attempts else D


def conditional_fill(rng, n: int, totals: np.ndarray) -> np.ndarray:
    """Draw B-model sequences conditioned on their degree sums.

    Entry j given the remaining sum r over c remaining entries is
    hypergeometric: P(d_j = a) = C(n-1, a) C((c-1)(n-1), r-a) / C(c(n-1), r),
    which does not depend on p.
    """
    totals = np.asarray(totals, dtype=np.int64)
    size = totals.size
    D = np.empty((size, n), dtype=np.int64)
    rem = totals.copy()
    for j in range(n - 1):
        c = n - j
        D[:, j] = rng.hypergeometric(n - 1, (c - 1) * (n - 1), rem) if size else 0
        rem -= D[:, j]
    D[:, n - 1] = rem
    assert np.all((rem >= 0) & (rem <= n - 1)), "infeasible remaining degree sum"
    return D


def batch_Eprime(rng, n: int, p: float, size: int) -> np.ndarray:
    """M/2 ~ Bin(N, p), then the sequence from B conditioned on its sum.

    Conditioning E on S_m gives the same law as conditioning B on S_m, and the
    reweighting in E' is constant on S_m, so this is exact.
    """
    N = n * (n - 1) // 2
    half = rng.binomial(N, p, size=size)
    return conditional_fill(rng, n, 2 * half)


def batch_truncated_normal(rng, mean: float, sigma: float, size: int) -> np.ndarray:
    """Normal(mean, sigma^2) restricted to [0, 1], by rejection."""
    if unit_interval_mass(mean, sigma) < MIN_TRUNC_ACCEPTANCE:
        raise ParameterError("truncated-normal acceptance below 1e-6; check parameters")
    out = rng.normal(mean, sigma, size=size)
    bad = np.flatnonzero((out < 0.0) | (out > 1.0))
    while bad.size:
        out[bad] = rng.normal(mean, sigma, size=bad.size)
        bad = bad[(out[bad] < 0.0) | (out[bad] > 1.0)]
    return out


def batch_I(rng, n: int, p: float, size: int, return_params: bool = False):
    N = n * (n - 1) // 2
    sigma = math.sqrt(p * (1.0 - p) / (2 * N))
    pp = batch_truncated_normal(rng, p, sigma, size)
    D = rng.binomial(n - 1, pp[:, None], size=(size, n))
    odd = np.flatnonzero(D.sum(axis=1) % 2)
    while odd.size:
        D[odd] = rng.binomial(n - 1, pp[odd, None], size=(odd.size, n))
        odd = odd[D[odd].sum(axis=1) % 2 == 1]
    return (D, pp) if return_params else D


def _edge_positions_geometric(rng, N: int, p: float, size: int):
    """Success positions of N Bernoulli(p) trials per row via geometric gaps.

    Returns (rows, positions) for all edges of all rows.
    """
    mean = N * p
    L = int(mean + 10.0 * math.sqrt(mean) + 16)
    L = min(L, N + 1)
    cum = np.cumsum(rng.geometric(p, size=(size, L)), axis=1)
    while size and np.any(cum[:, -1] <= N):
        extra = np.cumsum(rng.geometric(p, size=(size, L)), axis=1)
        cum = np.hstack([cum, cum[:, -1:] + extra])
    pos = cum - 1
    rows, cols = np.nonzero(pos < N)
    return rows, pos[rows, cols]


def _edge_positions_dense(rng, N: int, p: float, size: int):
    bits = rng.random((size, N)) < p
    return np.nonzero(bits)


def _edge_positions(rng, N: int, p: float, size: int):
    if p >= GEOMETRIC_BELOW and N <= DENSE_MAX_PAIRS:
        return _edge_positions_dense(rng, N, p, size)
    return _edge_positions_geometric(rng, N, p, size)


@lru_cache(maxsize=4)
def _pair_table(n: int):
    N = n * (n - 1) // 2
    u, v = pair_from_index(np.arange(N))
    return u.astype(np.int32), v.astype(np.int32)


def _endpoints(n: int, pos: np.ndarray):
    if n * (n - 1) // 2 <= PAIR_TABLE_MAX:
        u, v = _pair_table(n)
        return u[pos], v[pos]
    return pair_from_index(pos)


def batch_D(rng, n: int, p: float, size: int) -> np.ndarray:
    """Degree sequences of independent G(n, p) graphs."""
    N = n * (n - 1) // 2
    per_row = max(1.0, N * p + 10.0 * math.sqrt(N * p) + 16)
    chunk = max(1, int(4_000_000 // (per_row if N > DENSE_MAX_PAIRS or p < GEOMETRIC_BELOW else N)))
    out = np.empty((size, n), dtype=np.int64)
    for start in range(0, size, chunk):
        m = min(chunk, size - start)
        rows, pos = _edge_positions(rng, N, p, m)
        u, v = _endpoints(n, pos)
        deg = (np.bincount(rows * n + u, minlength=m * n)
               + np.bincount(rows * n + v, minlength=m * n))
        out[start:start + m] = deg.reshape(m, n)
    return out


def batch_D_graphs(rng, n: int, p: float, size: int) -> list[LabeledGraph]:
    N = n * (n - 1) // 2
    rows, pos = _edge_positions(rng, N, p, size)
    return [LabeledGraph.from_pair_indices(n, pos[rows == r]) for r in range(size)]


_BATCH = {"B": batch_B, "E": batch_E, "E'": batch_Eprime, "I": batch_I, "D": batch_D}


def batch_sample(model: str, rng, n: int, p: float, size: int) -> np.ndarray:
    return _BATCH[normalize_model(model)](rng, n, p, size)


# --------------------------------------------------------------------------
# addressed single draws


def _draw(cfg: SamplerConfig, model: str, i: int, replicate: int) -> np.ndarray:
    p = cfg.params.p[cfg.params._index(i)]
    rng = substream(cfg.seed, _SINGLE, i, replicate)
    return batch_sample(model, rng, cfg.params.n, p, 1)[0]


def _as_tuple(row) -> tuple[int, ...]:
    return tuple(int(x) for x in row)


def sample_B(cfg: SamplerConfig, i: int = 0, replicate: int = 0) -> tuple[int, ...]:
    return _as_tuple(_draw(cfg, "B", i, replicate))


def sample_E(cfg: SamplerConfig, i: int = 0, replicate: int = 0) -> tuple[int, ...]:
    return _as_tuple(_draw(cfg, "E", i, replicate))


def sample_Eprime(cfg: SamplerConfig, i: int = 0, replicate: int = 0) -> tuple[int, ...]:
    return _as_tuple(_draw(cfg, "E'", i, replicate))


def sample_I(cfg: SamplerConfig, i: int = 0, replicate: int = 0) -> tuple[int, ...]:
    return _as_tuple(_draw(cfg, "I", i, replicate))


def sample_D(cfg: SamplerConfig, i: int = 0, replicate: int = 0):
    p = cfg.params.p[cfg.params._index(i)]
    rng = substream(cfg.seed, _SINGLE, i, replicate)
    g = batch_D_graphs(rng, cfg.params.n, p, 1)[0]
    return g, g.degrees()


def sample_one(cfg: SamplerConfig, i: int = 0, replicate: int = 0):
    if cfg.model == "D":
        return sample_D(cfg, i, replicate)[1]
    return _as_tuple(_draw(cfg, cfg.model, i, replicate))


def sample_multi(cfg: SamplerConfig, replicate: int = 0):
    """One draw of all k components; for model D also returns the graphs."""
    if cfg.model == "D":
        pairs = [sample_D(cfg, i, replicate) for i in range(cfg.params.k)]
        return tuple(d for _, d in pairs), tuple(g for g, _ in pairs)
    return tuple(sample_one(cfg, i, replicate) for i in range(cfg.params.k))


def sample_many(cfg: SamplerConfig, count: int, i: int = 0, block: int = 10_000) -> np.ndarray:
    """``count`` draws of component ``i``, generated in fixed-size blocks each
    on its own substream."""
    p = cfg.params.p[cfg.params._index(i)]
    parts = []
    for b, start in enumerate(range(0, count, block)):
        rng = substream(cfg.seed, _BULK, i, b)
        parts.append(batch_sample(cfg.model, rng, cfg.params.n, p, min(block, count - start)))
    if not parts:
        return np.empty((0, cfg.params.n), dtype=np.int64)
    return np.vstack(parts)
