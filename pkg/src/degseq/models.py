"""Probability models over degree sequences.

Five measures are defined on I_n = {0..n-1}^n:

* ``B``  -- n iid Bin(n-1, p) entries;
* ``E``  -- B conditioned on an even degree sum;
* ``E'`` -- E rescaled on each level set S_m so that M/2 ~ Bin(N, p);
* ``I``  -- E with p replaced by a truncated-normal random parameter;
* ``D``  -- the degree sequence of G(n, p) (see :mod:`degseq.oracle`).

Every probability is returned as a natural log, with ``-inf`` standing in for
an exact zero (see :data:`ZERO`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import erfc, gammaln, logsumexp, xlog1py, xlogy

from .errors import DegenerateInputError, ParameterError, CapacityError
from .quadrature import integrate

ZERO = -math.inf
"""Log-probability of an impossible event."""

ENUMERATION_LIMIT = 10**7
QUAD_WIDTH = 12.0
MODEL_TAGS = ("B", "E", "E'", "I", "D")


def is_zero(logp: float) -> bool:
    return logp == ZERO


def log_sum(values: Iterable[float]) -> float:
    """Deterministic log of a sum of exponentials (order-independent)."""
    vals = [v for v in values if v != ZERO]
    if not vals:
        return ZERO
    top = max(vals)
    return top + math.log(math.fsum(math.exp(v - top) for v in vals))


_ALIASES = {"EP": "E'", "EPRIME": "E'", "E_PRIME": "E'"}


def normalize_model(tag: str) -> str:
    t = str(tag).strip().upper()
    t = _ALIASES.get(t, t)
    if t not in MODEL_TAGS:
        raise ParameterError(f"unknown model tag {tag!r}; expected one of {MODEL_TAGS}")
    return t


# --------------------------------------------------------------------------
# parameters and sequence statistics


@dataclass(frozen=True)
class ModelParams:
    """Vertex count ``n`` and one edge probability per graph."""

    n: int
    p: tuple[float, ...]

    def __post_init__(self):
        p = self.p
        if isinstance(p, (int, float)):
            p = (float(p),)
        p = tuple(float(x) for x in p)
        object.__setattr__(self, "p", p)
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"n must be an integer >= 2, got {self.n}")
        if not p:
            raise ParameterError("at least one edge probability is required")
        for x in p:
            if not 0.0 < x < 1.0:
                raise ParameterError(f"edge probabilities must lie in (0, 1), got {x}")

    @property
    def k(self) -> int:
        return len(self.p)

    @property
    def N(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def q(self) -> tuple[float, ...]:
        return tuple(1.0 - x for x in self.p)

    def single(self, i: int) -> "ModelParams":
        return ModelParams(self.n, (self.p[self._index(i)],))

    def _index(self, i: int) -> int:
        if not 0 <= i < self.k:
            raise ParameterError(f"graph index {i} out of range for k={self.k}")
        return i


@dataclass(frozen=True)
class SequenceStats:
    M: int
    lam: float
    gamma2: float
    even_sum: bool


def check_sequence(n: int, d: Sequence[int]) -> tuple[int, ...]:
    d = tuple(int(x) for x in d)
    if len(d) != n:
        raise ParameterError(f"degree sequence has length {len(d)}, expected {n}")
    if any(x < 0 or x > n - 1 for x in d):
        raise ParameterError(f"degree sequence entries must lie in [0, {n - 1}]: {d}")
    return d


def check_multi(params: ModelParams, dvec) -> tuple[tuple[int, ...], ...]:
    if len(dvec) != params.k:
        raise ParameterError(f"expected {params.k} component sequences, got {len(dvec)}")
    return tuple(check_sequence(params.n, d) for d in dvec)


def gamma2(d: Sequence[int], center: str = "total") -> float:
    """Second-moment statistic (n-1)^-2 * sum_j (d_j - c)^2.

    ``center="total"`` subtracts the full degree sum M(d), as the formula is
    printed; ``center="mean"`` subtracts M(d)/n instead.
    """
    n = len(d)
    M = sum(d)
    if center == "total":
        c = M
    elif center == "mean":
        c = M / n
    else:
        raise ParameterError(f"unknown gamma2 centering {center!r}")
    return math.fsum((x - c) ** 2 for x in d) / (n - 1) ** 2


def sequence_stats(d: Sequence[int], center: str = "total") -> SequenceStats:
    n = len(d)
    M = int(sum(d))
    N = n * (n - 1) // 2
    return SequenceStats(M=M, lam=M / (2 * N), gamma2=gamma2(d, center), even_sum=M % 2 == 0)


# --------------------------------------------------------------------------
# binomial building blocks


def binomial_logpmf(k, trials, p):
    """log b(k; trials, p) via log-gamma; ``-inf`` outside the support."""
    k = np.asarray(k, dtype=float)
    trials = np.asarray(trials, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (gammaln(trials + 1) - gammaln(k + 1) - gammaln(trials - k + 1)
               + xlogy(k, p) + xlog1py(trials - k, -p))
    out = np.where((k < 0) | (k > trials), -np.inf, out)
    return out if out.ndim else float(out)


def log_parity_term(N: int, p: float) -> float:
    """log (q - p)^{2N}; ``-inf`` once the power underflows."""
    gap = abs(1.0 - 2.0 * p)
    if gap == 0.0 or gap < math.exp(-700.0 / (2 * N)):
        return ZERO
    return 2 * N * math.log(gap)


def log_even_normalizer(N: int, p: float) -> float:
    """log P_B(E_n) = log((1 + (q-p)^{2N}) / 2)."""
    t = log_parity_term(N, p)
    return math.log1p(math.exp(t)) - math.log(2.0) if t != ZERO else -math.log(2.0)


def _seq_logprob_array(n: int, p: float, D: np.ndarray) -> np.ndarray:
    return binomial_logpmf(D, n - 1, p).sum(axis=-1)


def binomial_seq_logprob_array(params: ModelParams, i: int, D) -> np.ndarray:
    """Vectorised :func:`binomial_seq_prob` over the rows of ``D``."""
    p = params.p[params._index(i)]
    D = np.atleast_2d(np.asarray(D))
    if D.shape[-1] != params.n:
        raise ParameterError(f"rows must have length {params.n}")
    return _seq_logprob_array(params.n, p, D)


def binomial_seq_prob(params: ModelParams, i: int, d: Sequence[int]) -> float:
    p = params.p[params._index(i)]
    d = check_sequence(params.n, d)
    return math.fsum(binomial_logpmf(x, params.n - 1, p) for x in d)


def even_sum_prob(params: ModelParams, i: int, d: Sequence[int]) -> float:
    d = check_sequence(params.n, d)
    if sum(d) % 2:
        return ZERO
    p = params.p[params._index(i)]
    return binomial_seq_prob(params, i, d) - log_even_normalizer(params.N, p)


def compute_sum_distribution(params: ModelParams, i: int) -> np.ndarray:
    """log P_B(M = m) for m = 0..n(n-1); the sum of n iid Bin(n-1, p) is
    Bin(n(n-1), p)."""
    p = params.p[params._index(i)]
    m = np.arange(2 * params.N + 1)
    return binomial_logpmf(m, 2 * params.N, p)


def even_level_distribution(params: ModelParams, i: int) -> np.ndarray:
    """log P_E(S_m) for m = 0..n(n-1); ``-inf`` at odd m."""
    p = params.p[params._index(i)]
    out = compute_sum_distribution(params, i) - log_even_normalizer(params.N, p)
    out[1::2] = -np.inf
    return out


def weighted_even_sum_prob(params: ModelParams, i: int, d: Sequence[int],
                           level_mass=None) -> float:
    """P_E'(d) = P_E(d) * b(M/2; N, p) / P_E(S_M).

    ``level_mass`` may supply log P_E(S_m) indexed by m (e.g. from an
    enumeration); by default it comes from :func:`even_level_distribution`.
    """
    d = check_sequence(params.n, d)
    M = sum(d)
    if M % 2:
        return ZERO
    p = params.p[params._index(i)]
    if level_mass is None:
        level_mass = even_level_distribution(params, i)
    target = binomial_logpmf(M // 2, params.N, p)
    assert level_mass[M] != ZERO, "empty level set with positive target mass"
    return even_sum_prob(params, i, d) + target - float(level_mass[M])


def weighted_even_sum_logprob_array(params: ModelParams, i: int, D) -> np.ndarray:
    p = params.p[params._index(i)]
    D = np.atleast_2d(np.asarray(D))
    M = D.sum(axis=1)
    out = (_seq_logprob_array(params.n, p, D) + binomial_logpmf(M // 2, params.N, p)
           - binomial_logpmf(M, 2 * params.N, p))
    return np.where(M % 2 == 0, out, -np.inf)


def even_sum_logprob_array(params: ModelParams, i: int, D) -> np.ndarray:
    p = params.p[params._index(i)]
    D = np.atleast_2d(np.asarray(D))
    out = _seq_logprob_array(params.n, p, D) - log_even_normalizer(params.N, p)
    return np.where(D.sum(axis=1) % 2 == 0, out, -np.inf)


def model_logprob_array(model: str, params: ModelParams, i: int, D) -> np.ndarray:
    model = normalize_model(model)
    if model == "B":
        return binomial_seq_logprob_array(params, i, D)
    if model == "E":
        return even_sum_logprob_array(params, i, D)
    if model == "E'":
        return weighted_even_sum_logprob_array(params, i, D)
    raise ParameterError(f"no pointwise closed form for model {model}")


_SINGLE = {"B": binomial_seq_prob, "E": even_sum_prob, "E'": weighted_even_sum_prob}


def product_prob(model: str, params: ModelParams, dvec) -> float:
    model = normalize_model(model)
    if model not in _SINGLE:
        raise ParameterError(f"product_prob supports B, E, E'; got {model}")
    dvec = check_multi(params, dvec)
    total = 0.0
    for i, d in enumerate(dvec):
        lp = _SINGLE[model](params, i, d)
        if lp == ZERO:
            return ZERO
        total += lp
    return total


def multi_even_sum_identity(params: ModelParams, A) -> tuple[float, float]:
    """Both sides of P_E(A) = 2^k P_B(A) / prod_i (1 + (q_i - p_i)^{2N})."""
    members = [check_multi(params, dvec) for dvec in A]
    members = [dv for dv in members if all(sum(d) % 2 == 0 for d in dv)]
    lhs = log_sum(product_prob("E", params, dv) for dv in members)
    b = log_sum(product_prob("B", params, dv) for dv in members)
    if b == ZERO:
        return lhs, ZERO
    denom = math.fsum(math.log1p(math.exp(log_parity_term(params.N, p))) for p in params.p)
    return lhs, params.k * math.log(2.0) + b - denom


# --------------------------------------------------------------------------
# integrated model


def q_function(z):
    """Upper tail of the standard normal."""
    return 0.5 * erfc(np.asarray(z, dtype=float) / math.sqrt(2.0))


def unit_interval_mass(mean: float, sigma: float) -> float:
    """Mass of Normal(mean, sigma^2) on [0, 1]."""
    return float(q_function(-mean / sigma) - q_function((1.0 - mean) / sigma))


def param_sigma(params: ModelParams, i: int) -> float:
    p = params.p[params._index(i)]
    return math.sqrt(p * (1.0 - p) / (2 * params.N))


def truncated_normal_V(params: ModelParams, i: int) -> float:
    p = params.p[params._index(i)]
    return unit_interval_mass(p, param_sigma(params, i))


def enumerate_space(n: int, even: bool = False) -> np.ndarray:
    """All of I_n (or E_n) as an (m, n) integer array in lexicographic order."""
    if n**n > ENUMERATION_LIMIT:
        raise CapacityError(f"I_{n} has {n**n} points, above the enumeration limit")
    grid = np.indices((n,) * n).reshape(n, -1).T.astype(np.int64)
    if even:
        grid = grid[grid.sum(axis=1) % 2 == 0]
    return grid


@dataclass
class Event:
    """A set of degree sequences given by a predicate, an explicit point
    list, or both (the list wins when present)."""

    predicate: Callable[[tuple[int, ...]], bool] | None = None
    points: Sequence[Sequence[int]] | None = None
    name: str = "event"

    def members(self, n: int, even: bool = True) -> np.ndarray:
        if self.points is not None:
            pts = [check_sequence(n, d) for d in self.points]
            arr = np.array(pts, dtype=np.int64).reshape(len(pts), n)
        else:
            if self.predicate is None:
                raise ParameterError("event needs a predicate or explicit points")
            space = enumerate_space(n)
            keep = np.fromiter((bool(self.predicate(tuple(int(v) for v in row))) for row in space),
                               dtype=bool, count=len(space))
            arr = space[keep]
        if even:
            arr = arr[arr.sum(axis=1) % 2 == 0]
        return arr


def even_sum_curve(n: int, points) -> Callable[[np.ndarray], np.ndarray]:
    """x -> P_{E_{n,x}}(A) for an explicit point set A, vectorised over x.

    The points are grouped by degree sum so P_{B,x}(A) becomes a polynomial
    sum_M c_M x^M (1-x)^{2N-M} with integer coefficients c_M.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.int64)).reshape(-1, n)
    pts = pts[pts.sum(axis=1) % 2 == 0]
    N = n * (n - 1) // 2
    coeff: dict[int, int] = {}
    for row in pts:
        c = 1
        for x in row:
            c *= math.comb(n - 1, int(x))
        M = int(row.sum())
        coeff[M] = coeff.get(M, 0) + c
    sums = np.array(sorted(coeff), dtype=float)
    logc = np.array([math.log(coeff[int(m)]) for m in sums])

    def curve(x):
        x = np.asarray(x, dtype=float)
        if sums.size == 0:
            return np.zeros_like(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = (logc[None, :] + xlogy(sums[None, :], x[:, None])
                     + xlog1py(2 * N - sums[None, :], -x[:, None]))
            logb = logsumexp(terms, axis=1)
        parity = np.abs(1.0 - 2.0 * x) ** (2 * N)
        return 2.0 * np.exp(logb) / (1.0 + parity)

    return curve


def integration_window(params: ModelParams, i: int) -> tuple[float, float]:
    p = params.p[params._index(i)]
    s = param_sigma(params, i)
    return max(0.0, p - QUAD_WIDTH * s), min(1.0, p + QUAD_WIDTH * s)


def integrated_event_prob(params: ModelParams, i: int, event, *, e_prob=None,
                          rtol: float = 1e-9) -> float:
    """P_I(A) = V^-1 * int_0^1 phi(x; p, pq/2N) P_{E,x}(A) dx.

    ``event`` is an :class:`Event` (or an explicit list of points); pass
    ``e_prob`` instead to supply x -> P_{E,x}(A) in closed form.
    """
    p = params.p[params._index(i)]
    s = param_sigma(params, i)
    if e_prob is None:
        if not isinstance(event, Event):
            event = Event(points=event)
        pts = event.members(params.n)
        if len(pts) == 0:
            return ZERO
        e_prob = even_sum_curve(params.n, pts)
    a, b = integration_window(params, i)

    def integrand(x):
        dens = np.exp(-0.5 * ((x - p) / s) ** 2) / (s * math.sqrt(2 * math.pi))
        return dens * e_prob(x)

    val = float(integrate(integrand, a, b, rtol=rtol))
    if val <= 0.0:
        return ZERO
    return math.log(val) - math.log(truncated_normal_V(params, i))


def integrated_point_probs(params: ModelParams, i: int, points, rtol: float = 1e-9) -> np.ndarray:
    """P_I(d) for each row of ``points`` with one vector-valued quadrature."""
    p = params.p[params._index(i)]
    s = param_sigma(params, i)
    pts = np.atleast_2d(np.asarray(points, dtype=np.int64))
    n = params.n
    N = params.N
    M = pts.sum(axis=1).astype(float)
    logc = np.array([math.fsum(math.log(math.comb(n - 1, int(x))) for x in row) for row in pts])
    a, b = integration_window(params, i)

    def integrand(x):
        dens = np.exp(-0.5 * ((x - p) / s) ** 2) / (s * math.sqrt(2 * math.pi))
        with np.errstate(divide="ignore", invalid="ignore"):
            logb = logc[None, :] + xlogy(M[None, :], x[:, None]) + xlog1py(2 * N - M[None, :], -x[:, None])
        parity = np.abs(1.0 - 2.0 * x) ** (2 * N)
        return (dens * 2.0 / (1.0 + parity))[:, None] * np.exp(logb)

    vals = integrate(integrand, a, b, rtol=rtol) / truncated_normal_V(params, i)
    vals = np.where(M % 2 == 0, vals, 0.0)
    return vals


# --------------------------------------------------------------------------
# D versus E' ratio


def ratio_from_stats(stats: Sequence[SequenceStats]) -> float:
    """exp{(1/4)(k - sum_i gamma2_i^2 / (lam_i^2 (1-lam_i)^2))}."""
    acc = []
    for st in stats:
        if st.lam <= 0.0 or st.lam >= 1.0:
            raise DegenerateInputError(f"lambda = {st.lam} makes the ratio formula singular")
        acc.append(st.gamma2**2 / (st.lam**2 * (1.0 - st.lam) ** 2))
    return math.exp(0.25 * (len(stats) - math.fsum(acc)))


def dp_ratio_formula(params: ModelParams, dvec, center: str = "total") -> float:
    dvec = check_multi(params, dvec)
    stats = [sequence_stats(d, center) for d in dvec]
    if any(not st.even_sum for st in stats):
        raise ParameterError("ratio formula requires even-sum components")
    return ratio_from_stats(stats)


# --------------------------------------------------------------------------
# parameter-range diagnostics


@dataclass
class AcceptabilityReport:
    n: int
    graphs: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def plausible(self) -> bool:
        return not self.warnings


def acceptability_check(params: ModelParams) -> AcceptabilityReport:
    """Finite-n proxies for the asymptotic regime conditions.

    Lower proxies (pq n^2/log n, p n/log n) should be large, upper proxies
    (pq sqrt(n), p sqrt(n)) small; "large" and "small" mean above/below 1.
    Purely advisory.
    """
    n = params.n
    ln = math.log(n)
    rep = AcceptabilityReport(n=n)
    for i, (p, q) in enumerate(zip(params.p, params.q)):
        row = {
            "graph": i,
            "p": p,
            "pq_n2_over_log_n": p * q * n * n / ln,
            "pq_sqrt_n": p * q * math.sqrt(n),
            "p_n_over_log_n": p * n / ln,
            "p_sqrt_n": p * math.sqrt(n),
        }
        rep.graphs.append(row)
        if row["pq_n2_over_log_n"] < 1.0:
            rep.warnings.append(f"graph {i}: pq*n^2/log n = {row['pq_n2_over_log_n']:.3g} (below regime)")
        if row["pq_sqrt_n"] > 1.0:
            rep.warnings.append(f"graph {i}: pq*sqrt(n) = {row['pq_sqrt_n']:.3g} (outside regime)")
        if row["p_n_over_log_n"] < 1.0:
            rep.warnings.append(f"graph {i}: p*n/log n = {row['p_n_over_log_n']:.3g} (below regime)")
        if row["p_sqrt_n"] > 1.0:
            rep.warnings.append(f"graph {i}: p*sqrt(n) = {row['p_sqrt_n']:.3g} (outside regime)")
    return rep
