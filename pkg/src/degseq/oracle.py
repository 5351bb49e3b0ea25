"""Brute-force ground truth at small n.

Labeled graphs are enumerated as N-bit masks to obtain the exact law of the
degree sequence of G(n, p); I_n and E_n are enumerated to check the closed
forms in :mod:`degseq.models` point by point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate as sp_integrate

from . import models as mdl
from .errors import CapacityError, ParameterError
from .graphs import LabeledGraph, is_isomorphic, pair_from_index
from .models import ZERO, ModelParams, log_sum

MAX_GRAPH_N = 7
MAX_SUITE_N = 5
MAX_SUITE_K = 2


@dataclass
class GraphCountTable:
    """Number of labeled graphs on n vertices realising each degree sequence
    (raw vertex order, not sorted)."""

    n: int
    counts: dict[tuple[int, ...], int] = field(default_factory=dict)

    def count(self, d) -> int:
        return self.counts.get(tuple(int(x) for x in d), 0)

    def total(self) -> int:
        return sum(self.counts.values())

    def to_text(self) -> str:
        lines = [" ".join(map(str, d)) + "\t" + str(c) for d, c in sorted(self.counts.items())]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GraphCountTable":
        counts = {}
        n = None
        for line in text.splitlines():
            if not line.strip():
                continue
            seq, c = line.split("\t")
            d = tuple(int(x) for x in seq.split())
            n = len(d) if n is None else n
            if len(d) != n:
                raise ParameterError("inconsistent sequence lengths in count table")
            counts[d] = int(c)
        if n is None:
            raise ParameterError("empty count table")
        return cls(n, counts)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "GraphCountTable":
        return cls.from_text(Path(path).read_text())


def _encode(D: np.ndarray, n: int) -> np.ndarray:
    weights = n ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return D @ weights


def _decode(code: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        code, r = divmod(code, n)
        out.append(r)
    return tuple(reversed(out))


@lru_cache(maxsize=None)
def enumerate_graph_counts(n: int) -> GraphCountTable:
    if n < 1:
        raise ParameterError("n must be positive")
    if n > MAX_GRAPH_N:
        raise CapacityError(f"graph enumeration is limited to n <= {MAX_GRAPH_N}")
    N = n * (n - 1) // 2
    u, v = pair_from_index(np.arange(N))
    incidence = np.zeros((N, n), dtype=np.int64)
    incidence[np.arange(N), u] = 1
    incidence[np.arange(N), v] = 1
    shifts = np.arange(N, dtype=np.int64)
    totals: dict[int, int] = {}
    chunk = 1 << 16
    for start in range(0, 1 << N, chunk):
        masks = np.arange(start, min(start + chunk, 1 << N), dtype=np.int64)
        bits = (masks[:, None] >> shifts[None, :]) & 1
        codes, cnt = np.unique(_encode(bits @ incidence, n), return_counts=True)
        for c, k in zip(codes.tolist(), cnt.tolist()):
            totals[c] = totals.get(c, 0) + k
    return GraphCountTable(n, {_decode(c, n): k for c, k in sorted(totals.items())})


def exact_degree_seq_prob(table: GraphCountTable, p: float, d) -> float:
    d = mdl.check_sequence(table.n, d)
    c = table.count(d)
    if c == 0:
        return ZERO
    N = table.n * (table.n - 1) // 2
    e = sum(d) // 2
    return math.log(c) + e * math.log(p) + (N - e) * math.log1p(-p)


def degree_seq_logprob_array(params: ModelParams, i: int, D) -> np.ndarray:
    """log P_D for each row of ``D`` from the enumerated count table."""
    table = enumerate_graph_counts(params.n)
    p = params.p[params._index(i)]
    D = np.atleast_2d(np.asarray(D))
    return np.array([exact_degree_seq_prob(table, p, d) for d in D])


def sum_distribution_by_convolution(n: int, p: float) -> np.ndarray:
    """P_B(M = m) by convolving n copies of the Bin(n-1, p) pmf."""
    k = np.arange(n)
    pmf = np.array([math.comb(n - 1, int(j)) * p**j * (1 - p) ** (n - 1 - j) for j in k])
    out = np.array([1.0])
    for _ in range(n):
        out = np.convolve(out, pmf)
    return out


def _members(n: int, A) -> np.ndarray:
    if isinstance(A, mdl.Event):
        return A.members(n, even=False)
    pts = [mdl.check_sequence(n, d) for d in A]
    return np.array(pts, dtype=np.int64).reshape(len(pts), n)


def exact_event_prob(model: str, params: ModelParams, i: int, A) -> float:
    """Sum of pointwise probabilities over an explicit set of sequences."""
    model = mdl.normalize_model(model)
    n = params.n
    if n**n > mdl.ENUMERATION_LIMIT:
        raise CapacityError(f"n={n} is beyond the enumeration cutoff")
    D = _members(n, A)
    if len(D) == 0:
        return ZERO
    if model == "D":
        lp = degree_seq_logprob_array(params, i, D)
    elif model == "I":
        vals = mdl.integrated_point_probs(params, i, D)
        lp = np.log(np.where(vals > 0, vals, 1.0))
        lp[vals <= 0] = ZERO
    else:
        lp = mdl.model_logprob_array(model, params, i, D)
    return log_sum(lp.tolist())


# --------------------------------------------------------------------------
# isomorphism-class probabilities


@lru_cache(maxsize=None)
def _iso_classes(n: int) -> list[list[int]]:
    """Edge counts of the members of each isomorphism class of n-vertex graphs."""
    if n > 6:
        raise CapacityError("isomorphism-class enumeration is limited to n <= 6")
    N = n * (n - 1) // 2
    buckets: dict[tuple, list[tuple[LabeledGraph, list[int]]]] = {}
    for mask in range(1 << N):
        g = LabeledGraph(n, mask)
        deg = g.degrees()
        rows = g.rows()
        key = tuple(sorted((deg[v], tuple(sorted(deg[u] for u in range(n) if rows[v] >> u & 1)))
                           for v in range(n)))
        reps = buckets.setdefault(key, [])
        for rep, members in reps:
            if is_isomorphic(rep, g):
                members.append(g.edge_count())
                break
        else:
            reps.append((g, [g.edge_count()]))
    return [members for reps in buckets.values() for _, members in reps]


def iso_class_probabilities(n: int, p: float) -> np.ndarray:
    N = n * (n - 1) // 2
    return np.array([math.fsum(p**e * (1 - p) ** (N - e) for e in members)
                     for members in _iso_classes(n)])


def exact_pair_isomorphism_prob(n: int, p1: float, p2: float) -> float:
    """P[G(n, p1) and G(n, p2) are isomorphic] by class enumeration."""
    return math.fsum(iso_class_probabilities(n, p1) * iso_class_probabilities(n, p2))


# --------------------------------------------------------------------------
# identity suite


@dataclass
class StatementResult:
    name: str
    max_error: float
    tolerance: float | None
    witness: object = None

    @property
    def passed(self) -> bool:
        return self.tolerance is None or self.max_error <= self.tolerance


@dataclass
class IdentityReport:
    params: ModelParams
    results: list[StatementResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> list[StatementResult]:
        return [r for r in self.results if not r.passed]

    def lines(self) -> list[str]:
        out = []
        for r in self.results:
            status = "diag" if r.tolerance is None else ("PASS" if r.passed else "FAIL")
            tol = "-" if r.tolerance is None else f"{r.tolerance:.0e}"
            line = f"{status}  {r.name:<34} max_err={r.max_error:.3e}  tol={tol}"
            if not r.passed:
                line += f"  witness={r.witness}"
            out.append(line)
        return out


def _rel(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """|exp(a - b) - 1| for log-probabilities, 0 where both are zero."""
    both_zero = np.isneginf(a) & np.isneginf(b)
    with np.errstate(invalid="ignore"):
        r = np.abs(np.expm1(a - b))
    r = np.where(both_zero, 0.0, r)
    return np.where(np.isnan(r), np.inf, r)


def _worst(errs: np.ndarray, witnesses) -> tuple[float, object]:
    if errs.size == 0:
        return 0.0, None
    j = int(np.argmax(errs))
    return float(errs[j]), witnesses(j)


def restriction_errors(params: ModelParams) -> tuple[float, object]:
    """Closed-form even-sum probabilities versus the enumerated restriction
    P_B(d)/P_B(E_n^k), over every point of E_n^k."""
    n = params.n
    E = mdl.enumerate_space(n, even=True)
    closed, enumerated = [], []
    for i in range(params.k):
        logB = mdl.binomial_seq_logprob_array(params, i, mdl.enumerate_space(n))
        logZ = log_sum(logB[mdl.enumerate_space(n).sum(axis=1) % 2 == 0].tolist())
        closed.append(mdl.even_sum_logprob_array(params, i, E))
        enumerated.append(mdl.binomial_seq_logprob_array(params, i, E) - logZ)
    worst, witness = 0.0, None
    # single-graph identities, then the k-fold product over E_n^k
    for i in range(params.k):
        err, w = _worst(_rel(closed[i], enumerated[i]), lambda j, i=i: (i, tuple(E[j])))
        if err > worst:
            worst, witness = err, w
    if params.k >= 2:
        lhs = closed[0][:, None] + closed[1][None, :]
        rhs = enumerated[0][:, None] + enumerated[1][None, :]
        for extra in range(2, params.k):
            lhs = lhs[..., None] + closed[extra]
            rhs = rhs[..., None] + enumerated[extra]
        errs = _rel(lhs, rhs)
        j = int(np.argmax(errs))
        if errs.flat[j] > worst:
            idx = np.unravel_index(j, errs.shape)
            worst, witness = float(errs.flat[j]), tuple(tuple(E[t]) for t in idx)
    return worst, witness


def weighted_marginal_errors(params: ModelParams, i: int) -> tuple[float, float, object]:
    """Returns (marginal-law error, conditional-invariance error, witness)."""
    n, N = params.n, params.N
    p = params.p[i]
    E = mdl.enumerate_space(n, even=True)
    M = E.sum(axis=1)
    lw = mdl.weighted_even_sum_logprob_array(params, i, E)
    le = mdl.even_sum_logprob_array(params, i, E)
    marg, cond, witness = 0.0, 0.0, None
    for m in np.unique(M):
        sel = M == m
        total = log_sum(lw[sel].tolist())
        target = mdl.binomial_logpmf(m // 2, N, p)
        err = abs(math.expm1(total - target))
        if err > marg:
            marg, witness = err, ("S_m", int(m))
        r = lw[sel] - le[sel]
        err = float(np.max(np.abs(np.expm1(r - r[0]))))
        if err > cond:
            cond = err
    return marg, cond, witness


def degree_model_errors(params: ModelParams, i: int) -> tuple[float, object]:
    """Oracle P_D: total mass 1 and P_D(S_m) = b(m/2; N, p)."""
    table = enumerate_graph_counts(params.n)
    p = params.p[i]
    N = params.N
    by_m: dict[int, list[float]] = {}
    for d in table.counts:
        by_m.setdefault(sum(d), []).append(exact_degree_seq_prob(table, p, d))
    worst, witness = abs(math.expm1(log_sum(v for vs in by_m.values() for v in vs))), "total"
    for m, vals in by_m.items():
        err = abs(math.expm1(log_sum(vals) - mdl.binomial_logpmf(m // 2, N, p)))
        if err > worst:
            worst, witness = err, ("S_m", m)
    return worst, witness


def _reference_events(n: int):
    N = n * (n - 1) // 2
    return [
        mdl.Event(lambda d: sum(d) == 0, name="M=0"),
        mdl.Event(lambda d: sum(d) <= N, name="M<=N"),
        mdl.Event(lambda d: d[0] >= 2 if n > 2 else d[0] >= 1, name="d_1 high"),
        mdl.Event(lambda d: len(set(d)) == 1, name="regular"),
        mdl.Event(lambda d: max(d) == n - 1, name="max degree n-1"),
    ]


def integrated_errors(params: ModelParams) -> tuple[float, object]:
    """Two quadrature routes for the integrated model, checked against each
    other and against normalisation."""
    n, N = params.n, params.N
    E = mdl.enumerate_space(n, even=True)
    worst, witness = 0.0, None

    def track(err, w):
        nonlocal worst, witness
        if err > worst:
            worst, witness = err, w

    point = []
    for i in range(params.k):
        pi = mdl.integrated_point_probs(params, i, E)
        point.append(pi)
        track(abs(math.fsum(pi) - 1.0), (i, "normalisation"))
        p, s = params.p[i], mdl.param_sigma(params, i)
        a, b = mdl.integration_window(params, i)
        V = mdl.truncated_normal_V(params, i)
        for ev in _reference_events(n):
            pts = ev.members(n)
            if len(pts) == 0:
                continue
            grouped = math.exp(mdl.integrated_event_prob(params, i, ev))
            summed = math.fsum(pi[np.isin(E @ (n ** np.arange(n)), pts @ (n ** np.arange(n)))])
            track(abs(grouped - summed) / grouped, (i, ev.name, "grouped-vs-pointwise"))
            curve = mdl.even_sum_curve(n, pts)

            def f(x):
                return (math.exp(-0.5 * ((x - p) / s) ** 2) / (s * math.sqrt(2 * math.pi))
                        * float(curve(np.array([x]))[0]))

            ref, _ = sp_integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=200)
            track(abs(grouped - ref / V) / grouped, (i, ev.name, "vs-independent-quadrature"))
    if params.k == 2:
        # non-product event {M(d_1) = M(d_2)} on the 2-D tensor rule
        from .quadrature import _rule
        M = E.sum(axis=1)
        summed = math.fsum(float(point[0][M == m].sum() * point[1][M == m].sum())
                           for m in np.unique(M))
        nodes, weights = _rule(60)
        grids = []
        for i in range(2):
            a, b = mdl.integration_window(params, i)
            x = 0.5 * (b - a) * nodes + 0.5 * (a + b)
            w = 0.5 * (b - a) * weights
            p, s = params.p[i], mdl.param_sigma(params, i)
            dens = np.exp(-0.5 * ((x - p) / s) ** 2) / (s * math.sqrt(2 * math.pi))
            levels = np.stack([mdl.even_sum_curve(n, E[M == m])(x) for m in np.unique(M)])
            grids.append((w * dens, levels, mdl.truncated_normal_V(params, i)))
        (w0, L0, V0), (w1, L1, V1) = grids
        tensor = float(np.sum((L0 @ w0) * (L1 @ w1))) / (V0 * V1)
        track(abs(tensor - summed) / summed, ("k=2", "M(d1)=M(d2)", "tensor-vs-product"))
    return worst, witness


def integrated_vs_weighted(params: ModelParams, i: int) -> float:
    """max |P_I(d)/P_E'(d) - 1| over E_n (an asymptotic statement; reported
    only)."""
    E = mdl.enumerate_space(params.n, even=True)
    pi = mdl.integrated_point_probs(params, i, E)
    pw = np.exp(mdl.weighted_even_sum_logprob_array(params, i, E))
    return float(np.max(np.abs(pi / pw - 1.0)))


def degree_vs_weighted(params: ModelParams, i: int, center: str) -> float:
    """max |log(P_D/P_E') - log(ratio formula)| over sequences where the
    formula is defined (reported only)."""
    table = enumerate_graph_counts(params.n)
    p = params.p[i]
    single = params.single(i)
    worst = 0.0
    for d, c in table.counts.items():
        st = mdl.sequence_stats(d, center)
        if st.lam <= 0.0 or st.lam >= 1.0:
            continue
        ratio = exact_degree_seq_prob(table, p, d) - mdl.weighted_even_sum_prob(single, 0, d)
        pred = mdl.ratio_from_stats([st])
        lp = math.log(pred) if pred > 0 else -math.inf
        worst = max(worst, abs(ratio - lp))
    return worst


def verify_identity_suite(params: ModelParams, tol: float = 1e-12, quad_tol: float = 1e-8) -> IdentityReport:
    if params.n > MAX_SUITE_N:
        raise CapacityError(f"identity suite is limited to n <= {MAX_SUITE_N}")
    if params.k > MAX_SUITE_K:
        raise CapacityError(f"identity suite is limited to k <= {MAX_SUITE_K}")
    rep = IdentityReport(params)
    err, w = restriction_errors(params)
    rep.results.append(StatementResult("1: even-sum restriction", err, tol, w))
    err, w = integrated_errors(params)
    rep.results.append(StatementResult("2: integrated model quadrature", err, quad_tol, w))
    marg = cond = 0.0
    mw = None
    for i in range(params.k):
        a, b, w = weighted_marginal_errors(params, i)
        if a >= marg:
            marg, mw = a, (i, w)
        cond = max(cond, b)
    rep.results.append(StatementResult("E' marginal law", marg, tol, mw))
    rep.results.append(StatementResult("E' uniform reweighting", cond, tol))
    worst, dw = 0.0, None
    for i in range(params.k):
        e, w = degree_model_errors(params, i)
        if e >= worst:
            worst, dw = e, (i, w)
    rep.results.append(StatementResult("D level-set law", worst, tol, dw))
    rep.results.append(StatementResult(
        "3: I vs E' (diagnostic)", max(integrated_vs_weighted(params, i) for i in range(params.k)), None))
    for center in ("total", "mean"):
        rep.results.append(StatementResult(
            f"4: D/E' ratio, gamma2 {center} (diag)",
            max(degree_vs_weighted(params, i, center) for i in range(params.k)), None))
    return rep
