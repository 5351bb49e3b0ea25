"""Monte Carlo experiments on degree-sequence events across an n-grid.

A plan fixes the grid, the rule giving edge probabilities at each n, the
events, the models and the seed. Replicates are generated in fixed-size
blocks, each block on a substream keyed by (seed, model, n, block, graph), so
results do not depend on the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np
from scipy.stats import binom

from . import samplers
from .errors import ParameterError
from .graphs import MAX_ISO_N, BorelSet, collision_array, degree_counts, fingerprint_threshold_set, is_isomorphic
from .models import ModelParams, acceptability_check, binomial_logpmf, log_parity_term, normalize_model

Z95 = 1.959963984540054
MIN_FIT_HITS = 10
EVENT_KINDS = ("fb_pair_collision", "fb_all_collision", "sum_odd", "sum_at_least", "impossible")
CSV_COLUMNS = ("model", "n", "event", "replicates", "hits", "phat", "ci_lo", "ci_hi")


@dataclass(frozen=True)
class PRule:
    """Edge probabilities as a function of n.

    ``power``: c * n^-beta; ``log``: c * log(n) / n; ``const``: c.
    ``c`` and ``beta`` are scalars or one value per graph.
    """

    kind: str = "power"
    c: float | tuple = 1.0
    beta: float | tuple = 0.7

    def __post_init__(self):
        if self.kind not in ("power", "log", "const"):
            raise ParameterError(f"unknown p rule {self.kind!r}")

    def probabilities(self, n: int, k: int) -> tuple[float, ...]:
        def per_graph(v):
            if isinstance(v, (list, tuple)):
                if len(v) != k:
                    raise ParameterError(f"p rule needs {k} values, got {len(v)}")
                return [float(x) for x in v]
            return [float(v)] * k

        cs, betas = per_graph(self.c), per_graph(self.beta)
        if self.kind == "power":
            return tuple(c * n ** -b for c, b in zip(cs, betas))
        if self.kind == "log":
            return tuple(c * math.log(n) / n for c in cs)
        return tuple(cs)


@dataclass(frozen=True)
class EventSpec:
    kind: str
    threshold: int | None = None
    graphs: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ParameterError(f"unknown event {self.kind!r}; expected one of {EVENT_KINDS}")
        if self.kind == "sum_at_least" and self.threshold is None:
            raise ParameterError("sum_at_least needs a threshold")
        if self.graphs is not None:
            object.__setattr__(self, "graphs", tuple(int(g) for g in self.graphs))

    @property
    def label(self) -> str:
        s = self.kind
        if self.threshold is not None:
            s += f">={self.threshold}"
        if self.graphs is not None:
            s += "@" + "-".join(map(str, self.graphs))
        return s

    def evaluate(self, D: list[np.ndarray], B: BorelSet) -> np.ndarray:
        """Indicator per replicate given one (R, n) array per graph."""
        if self.kind == "impossible":
            return np.zeros(len(D[0]), dtype=bool)
        if self.kind == "sum_odd":
            return D[0].sum(axis=1) % 2 == 1
        if self.kind == "sum_at_least":
            return D[0].sum(axis=1) >= self.threshold
        idx = self.graphs if self.graphs is not None else range(len(D))
        F = np.stack([degree_counts(D[i], B) for i in idx], axis=1)
        return collision_array(F, "all" if self.kind == "fb_all_collision" else "any-pair")


@dataclass(frozen=True)
class ExperimentPlan:
    n_grid: tuple[int, ...]
    p_rule: PRule
    k: int
    events: tuple[EventSpec, ...]
    replicates: int
    seed: int
    models: tuple[str, ...] = ("B", "D")
    block_size: int = 1000
    override_regime: bool = False

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "models", tuple(normalize_model(m) for m in self.models))
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 2:
            raise ParameterError("n_grid must be strictly increasing with entries >= 2")
        if self.replicates < 100:
            raise ParameterError("at least 100 replicates per cell are required")
        if self.k < 1:
            raise ParameterError("k must be at least 1")
        if self.block_size < 1:
            raise ParameterError("block_size must be positive")
        for ev in self.events:
            if ev.kind.startswith("fb_") and self.k < 2 and ev.graphs is None:
                raise ParameterError("collision events need k >= 2")
            if ev.graphs is not None and (len(ev.graphs) < 2 or max(ev.graphs) >= self.k):
                raise ParameterError(f"bad graph subset {ev.graphs} for k={self.k}")

    def params(self, n: int) -> ModelParams:
        return ModelParams(n, self.p_rule.probabilities(n, self.k))

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentPlan":
        rule = doc.get("p_rule", {})
        events = doc.get("events")
        if events is None:
            events = [doc["event"]]
        return cls(
            n_grid=tuple(doc["n_grid"]),
            p_rule=PRule(rule.get("kind", "power"), _tup(rule.get("c", 1.0)), _tup(rule.get("beta", 0.7))),
            k=int(doc["k"]),
            events=tuple(EventSpec(e["kind"], e.get("threshold"), e.get("graphs")) for e in events),
            replicates=int(doc["replicates"]),
            seed=int(doc["seed"]),
            models=tuple(doc.get("models", ("B", "D"))),
            block_size=int(doc.get("block_size", 1000)),
            override_regime=bool(doc.get("override_regime", False)),
        )


def _tup(v):
    return tuple(v) if isinstance(v, list) else v


# --------------------------------------------------------------------------
# statistics


def wilson_interval(hits: int, total: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval; rule of three (0, 3/R) for zero-hit cells."""
    if total <= 0:
        raise ParameterError("empty cell")
    if hits == 0:
        return 0.0, min(1.0, 3.0 / total)
    ph = hits / total
    denom = 1.0 + z * z / total
    centre = (ph + z * z / (2 * total)) / denom
    half = z * math.sqrt(ph * (1 - ph) / total + z * z / (4 * total * total)) / denom
    lo = max(0.0, centre - half)
    hi = 1.0 if hits == total else min(1.0, centre + half)
    return min(lo, ph), max(hi, ph)


@dataclass
class PowerFit:
    slope: float
    intercept: float
    slope_se: float
    intercept_se: float
    points: int


def fit_power_law(ns, hits, totals, min_hits: int = MIN_FIT_HITS) -> PowerFit | None:
    """Weighted least squares of log(phat) on log(n).

    Each point has delta-method variance (1 - phat)/hits, and the coefficient
    covariance is taken from those known variances.
    """
    ns, hits, totals = (np.asarray(a, dtype=float) for a in (ns, hits, totals))
    keep = hits >= min_hits
    if keep.sum() < 2:
        return None
    ph = hits[keep] / totals[keep]
    x = np.log(ns[keep])
    y = np.log(ph)
    var = np.maximum((1.0 - ph) / hits[keep], 1e-300)
    w = 1.0 / var
    X = np.column_stack([np.ones_like(x), x])
    cov = np.linalg.inv(X.T @ (w[:, None] * X))
    beta = cov @ (X.T @ (w * y))
    return PowerFit(slope=float(beta[1]), intercept=float(beta[0]),
                    slope_se=float(math.sqrt(cov[1, 1])), intercept_se=float(math.sqrt(cov[0, 0])),
                    points=int(keep.sum()))


def max_binomial_mode(n: int, alpha: float) -> float:
    """max_x b(x; n, alpha), attained at floor((n+1) alpha) or its left
    neighbour."""
    if not 0.0 < alpha < 1.0:
        raise ParameterError("alpha must lie in (0, 1)")
    m = math.floor((n + 1) * alpha)
    cands = [x for x in (m - 1, m, m + 1) if 0 <= x <= n]
    return max(math.exp(binomial_logpmf(x, n, alpha)) for x in cands)


def threshold_alpha(n: int, p: float, B: BorelSet) -> float:
    """P(Bin(n-1, p) in B), computed exactly."""
    total = 0.0
    for lo, hi in B.intervals:
        lo = max(lo, 0)
        hi = min(hi, n - 1)
        if hi >= lo:
            total += binom.cdf(hi, n - 1, p) - binom.cdf(lo - 1, n - 1, p)
    return float(total)


def closed_form_B(event: EventSpec, params: ModelParams) -> float | None:
    """Exact event probability under the B model, where one is available."""
    p = params.p[0]
    if event.kind == "impossible":
        return 0.0
    if event.kind == "sum_odd":
        t = log_parity_term(params.N, p)
        return 0.5 * (1.0 - (math.exp(t) if t != -math.inf else 0.0))
    if event.kind == "sum_at_least":
        return float(binom.sf(event.threshold - 1, 2 * params.N, p))
    return None


# --------------------------------------------------------------------------
# execution


def _block_hits(seed: int, model: str, n: int, pvec: tuple, events: tuple, block: int, size: int):
    code = samplers.MODEL_CODES[model]
    D = []
    for i, p in enumerate(pvec):
        rng = samplers.substream(seed, samplers._PLAN, code, n, block, i)
        D.append(samplers.batch_sample(model, rng, n, p, size))
    B = fingerprint_threshold_set(ModelParams(n, pvec))
    return [int(ev.evaluate(D, B).sum()) for ev in events]


def _run_task(args):
    return _block_hits(*args)


@dataclass
class Cell:
    model: str
    n: int
    event: str
    replicates: int
    hits: int
    phat: float
    ci_lo: float
    ci_hi: float


@dataclass
class DecayReport:
    cells: list[Cell] = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    gaps: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    degenerate: list[str] = field(default_factory=list)

    def cell(self, model: str, n: int, event: str) -> Cell:
        for c in self.cells:
            if c.model == model and c.n == n and c.event == event:
                return c
        raise KeyError((model, n, event))

    def fit(self, model: str, event: str) -> PowerFit | None:
        return self.fits.get(f"{model}|{event}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in self.cells:
            w.writerow([c.model, c.n, c.event, c.replicates, c.hits,
                        repr(c.phat), repr(c.ci_lo), repr(c.ci_hi)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "fits": {k: (asdict(v) if v is not None else None) for k, v in self.fits.items()},
            "slope_gaps": self.gaps,
            "degenerate": self.degenerate,
            "warnings": self.warnings,
        }


def _execute(tasks, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * threads))))


def regime_warnings(plan: ExperimentPlan) -> list[str]:
    out = []
    for n in plan.n_grid:
        for w in acceptability_check(plan.params(n)).warnings:
            out.append(f"n={n}: {w}" + (" [overridden]" if plan.override_regime else ""))
    return out


def run_plan(plan: ExperimentPlan, threads: int = 1, progress=None) -> DecayReport:
    report = DecayReport(warnings=regime_warnings(plan))
    tasks, keys = [], []
    for model in plan.models:
        for n in plan.n_grid:
            pvec = plan.params(n).p
            for b, start in enumerate(range(0, plan.replicates, plan.block_size)):
                size = min(plan.block_size, plan.replicates - start)
                tasks.append((plan.seed, model, n, pvec, plan.events, b, size))
                keys.append((model, n))
    results = _execute(tasks, threads)
    totals: dict = {}
    for key, hits in zip(keys, results):
        acc = totals.setdefault(key, [0] * len(plan.events))
        for j, h in enumerate(hits):
            acc[j] += h
        if progress is not None:
            progress(key)
    R = plan.replicates
    for model in plan.models:
        for j, ev in enumerate(plan.events):
            for n in plan.n_grid:
                h = totals[(model, n)][j]
                lo, hi = wilson_interval(h, R)
                report.cells.append(Cell(model, n, ev.label, R, h, h / R, lo, hi))
            hits = [totals[(model, n)][j] for n in plan.n_grid]
            fit = fit_power_law(plan.n_grid, hits, [R] * len(hits))
            report.fits[f"{model}|{ev.label}"] = fit
            if all(h == 0 for h in hits):
                report.degenerate.append(f"{model}|{ev.label}: no hits in any cell")
    for ev in plan.events:
        for m1, m2 in combinations(plan.models, 2):
            f1, f2 = report.fit(m1, ev.label), report.fit(m2, ev.label)
            if f1 is None or f2 is None:
                continue
            report.gaps.append({
                "event": ev.label, "models": [m1, m2],
                "gap": f1.slope - f2.slope,
                "joint_se": math.hypot(f1.slope_se, f2.slope_se),
            })
    return report


# --------------------------------------------------------------------------
# isomorphism collision bound


def collision_bound(params: ModelParams, mode: str = "any-pair") -> float:
    """C(k,2) max_i max_x b(x; n, alpha_i) for any-pair collisions, or
    prod_{i>=2} max_x b(x; n, alpha_i) when all F_B values must agree."""
    B = fingerprint_threshold_set(params)
    modes = []
    for p in params.p:
        a = threshold_alpha(params.n, p, B)
        modes.append(max_binomial_mode(params.n, a) if 0.0 < a < 1.0 else 1.0)
    if mode == "all":
        return float(np.prod(modes[1:]))
    return math.comb(params.k, 2) * max(modes)


@dataclass
class CollisionReport:
    decay: DecayReport
    rows: list[dict] = field(default_factory=list)
    iso: list[dict] = field(default_factory=list)

    def summary(self) -> dict:
        return {"bound_ratios": self.rows, "isomorphism": self.iso, **self.decay.summary()}


def empirical_isomorphism(plan: ExperimentPlan, n: int, replicates: int | None = None) -> dict:
    """Frequency of at least one isomorphic pair among k sampled G(n, p_i)."""
    from .oracle import exact_pair_isomorphism_prob

    params = plan.params(n)
    R = replicates or plan.replicates
    hits = 0
    for b, start in enumerate(range(0, R, plan.block_size)):
        size = min(plan.block_size, R - start)
        graphs = [samplers.batch_D_graphs(
            samplers.substream(plan.seed, samplers._PLAN, 99, n, b, i), n, p, size)
            for i, p in enumerate(params.p)]
        for r in range(size):
            if any(is_isomorphic(graphs[i][r], graphs[j][r])
                   for i, j in combinations(range(params.k), 2)):
                hits += 1
    lo, hi = wilson_interval(hits, R)
    row = {"n": n, "replicates": R, "hits": hits, "phat": hits / R, "ci_lo": lo, "ci_hi": hi}
    if params.k == 2 and n <= 6:
        row["exact"] = exact_pair_isomorphism_prob(n, *params.p)
    return row


def collision_bound_check(plan: ExperimentPlan, threads: int = 1, iso_max_n: int = 10,
                          iso_replicates: int | None = None) -> CollisionReport:
    if plan.k < 2:
        raise ParameterError("collision checks need k >= 2")
    events = tuple(ev for ev in plan.events if ev.kind.startswith("fb_")) or (
        EventSpec("fb_pair_collision"),)
    sub = ExperimentPlan(plan.n_grid, plan.p_rule, plan.k, events, plan.replicates, plan.seed,
                         plan.models, plan.block_size, plan.override_regime)
    rep = CollisionReport(decay=run_plan(sub, threads))
    for ev in events:
        mode = "all" if ev.kind == "fb_all_collision" else "any-pair"
        for n in plan.n_grid:
            params = plan.params(n)
            if ev.graphs is not None:
                params = ModelParams(n, tuple(params.p[g] for g in ev.graphs))
            bound = collision_bound(params, mode)
            for model in plan.models:
                c = rep.decay.cell(model, n, ev.label)
                sd = math.sqrt(max(c.phat * (1 - c.phat), 1e-300) / c.replicates)
                rep.rows.append({"model": model, "n": n, "event": ev.label, "phat": c.phat,
                                 "bound": bound, "ratio": c.phat / bound, "ratio_sd": sd / bound})
    for n in plan.n_grid:
        if n <= min(iso_max_n, MAX_ISO_N):
            rep.iso.append(empirical_isomorphism(plan, n, iso_replicates))
    return rep


def write_outputs(report: DecayReport | CollisionReport, csv_path, json_path) -> None:
    decay = report.decay if isinstance(report, CollisionReport) else report
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(decay.to_csv())
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
