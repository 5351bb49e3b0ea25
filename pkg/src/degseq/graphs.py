"""Labeled graphs, degree-count statistics and small-n isomorphism."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, ParameterError
from .models import ModelParams

MAX_ISO_N = 10


def pair_index(u: int, v: int) -> int:
    """Position of the pair {u, v} in colex order: v(v-1)/2 + u for u < v."""
    if u == v:
        raise ParameterError("self-loops are not allowed")
    if u > v:
        u, v = v, u
    return v * (v - 1) // 2 + u


def pair_from_index(idx):
    """Inverse of :func:`pair_index`; works elementwise on integer arrays."""
    idx = np.asarray(idx, dtype=np.int64)
    v = ((1 + np.sqrt(1 + 8 * idx.astype(np.float64))) // 2).astype(np.int64)
    # float sqrt can land one off near perfect squares
    v = np.where(v * (v - 1) // 2 > idx, v - 1, v)
    v = np.where((v + 1) * v // 2 <= idx, v + 1, v)
    u = idx - v * (v - 1) // 2
    return u, v


@dataclass(frozen=True)
class LabeledGraph:
    """Simple undirected graph on vertices 0..n-1.

    ``edges`` is an N-bit integer; bit ``pair_index(u, v)`` is set iff
    {u, v} is an edge.
    """

    n: int
    edges: int = 0

    @classmethod
    def from_edges(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "LabeledGraph":
        mask = 0
        for u, v in pairs:
            if not (0 <= u < n and 0 <= v < n):
                raise ParameterError(f"edge ({u}, {v}) out of range for n={n}")
            mask |= 1 << pair_index(u, v)
        return cls(n, mask)

    @classmethod
    def from_pair_indices(cls, n: int, idx) -> "LabeledGraph":
        N = n * (n - 1) // 2
        bits = np.zeros(N, dtype=np.uint8)
        bits[np.asarray(idx, dtype=np.int64)] = 1
        packed = np.packbits(bits, bitorder="little")
        return cls(n, int.from_bytes(packed.tobytes(), "little"))

    @property
    def N(self) -> int:
        return self.n * (self.n - 1) // 2

    def pair_indices(self) -> np.ndarray:
        raw = self.edges.to_bytes((self.N + 7) // 8 or 1, "little")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[: self.N]
        return np.flatnonzero(bits)

    def edge_list(self) -> list[tuple[int, int]]:
        u, v = pair_from_index(self.pair_indices())
        return list(zip(u.tolist(), v.tolist()))

    def edge_count(self) -> int:
        return bin(self.edges).count("1")

    def degrees(self) -> tuple[int, ...]:
        u, v = pair_from_index(self.pair_indices())
        deg = np.bincount(u, minlength=self.n) + np.bincount(v, minlength=self.n)
        return tuple(int(x) for x in deg)

    def rows(self) -> list[int]:
        """Neighbour sets as vertex bitmasks."""
        rows = [0] * self.n
        for u, v in self.edge_list():
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return rows

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.edges >> pair_index(u, v) & 1)

    def relabel(self, perm: Sequence[int]) -> "LabeledGraph":
        """Graph with vertex v renamed perm[v]."""
        if sorted(perm) != list(range(self.n)):
            raise ParameterError("relabeling must be a permutation of the vertices")
        return LabeledGraph.from_edges(self.n, ((perm[u], perm[v]) for u, v in self.edge_list()))

    def to_edge_list_text(self) -> str:
        lines = [f"# n={self.n}"] + [f"{u} {v}" for u, v in self.edge_list()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list_text(cls, text: str, n: int | None = None) -> "LabeledGraph":
        pairs = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if n is None and line[1:].strip().startswith("n="):
                    n = int(line[1:].strip()[2:])
                continue
            u, v = (int(t) for t in line.split())
            pairs.append((u, v))
        if n is None:
            n = 1 + max((max(e) for e in pairs), default=-1)
        return cls.from_edges(n, pairs)


def read_edge_list(path, n: int | None = None) -> LabeledGraph:
    return LabeledGraph.from_edge_list_text(Path(path).read_text(), n)


def write_edge_list(graph: LabeledGraph, path) -> None:
    Path(path).write_text(graph.to_edge_list_text())


def complete_graph(n: int) -> LabeledGraph:
    return LabeledGraph(n, (1 << (n * (n - 1) // 2)) - 1)


def cycle_graph(n: int) -> LabeledGraph:
    return LabeledGraph.from_edges(n, ((v, (v + 1) % n) for v in range(n)))


def path_graph(n: int) -> LabeledGraph:
    return LabeledGraph.from_edges(n, ((v, v + 1) for v in range(n - 1)))


def disjoint_union(*graphs: LabeledGraph) -> LabeledGraph:
    pairs, offset = [], 0
    for g in graphs:
        pairs += [(u + offset, v + offset) for u, v in g.edge_list()]
        offset += g.n
    return LabeledGraph.from_edges(offset, pairs)


# --------------------------------------------------------------------------
# Borel sets restricted to integer intervals


@dataclass(frozen=True)
class BorelSet:
    """Finite union of closed integer intervals; ``hi`` may be ``math.inf``."""

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        def snap(x, f):
            return x if math.isinf(x) else f(x)

        ivs = sorted((snap(lo, math.ceil), snap(hi, math.floor)) for lo, hi in self.intervals)
        merged: list[list] = []
        for lo, hi in ivs:
            if hi < lo:
                continue
            if merged and lo <= merged[-1][1] + 1:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        object.__setattr__(self, "intervals", tuple((lo, hi) for lo, hi in merged))

    @classmethod
    def half_line(cls, lo: float) -> "BorelSet":
        return cls(((lo, math.inf),))

    def __contains__(self, x) -> bool:
        return any(lo <= x <= hi for lo, hi in self.intervals)

    def mask(self, values) -> np.ndarray:
        values = np.asarray(values)
        out = np.zeros(values.shape, dtype=bool)
        for lo, hi in self.intervals:
            out |= (values >= lo) & (values <= hi)
        return out


def degree_count(g_or_d, B: BorelSet) -> int:
    """F_B: number of vertices whose degree lies in B."""
    d = g_or_d.degrees() if isinstance(g_or_d, LabeledGraph) else g_or_d
    return int(B.mask(np.asarray(d)).sum())


def degree_counts(D: np.ndarray, B: BorelSet) -> np.ndarray:
    """F_B along the last axis of an array of degree sequences."""
    return B.mask(D).sum(axis=-1)


def fingerprint_threshold_set(params: ModelParams) -> BorelSet:
    return BorelSet.half_line(math.floor(params.n * min(params.p)))


def collision_event(dvec, B: BorelSet, mode: str = "any-pair") -> bool:
    if len(dvec) < 2:
        raise ParameterError("collision events need at least two sequences")
    F = [degree_count(d, B) for d in dvec]
    if mode == "any-pair":
        return len(set(F)) < len(F)
    if mode == "all":
        return len(set(F)) == 1
    raise ParameterError(f"unknown collision mode {mode!r}")


def collision_array(F: np.ndarray, mode: str) -> np.ndarray:
    """Row-wise collision indicator for an (R, k) array of F_B values."""
    if F.shape[1] < 2:
        raise ParameterError("collision events need at least two sequences")
    if mode == "all":
        return np.all(F == F[:, :1], axis=1)
    if mode == "any-pair":
        S = np.sort(F, axis=1)
        return np.any(S[:, 1:] == S[:, :-1], axis=1)
    raise ParameterError(f"unknown collision mode {mode!r}")


# --------------------------------------------------------------------------
# isomorphism


def _colors(rows: list[int], deg: Sequence[int]) -> list[tuple]:
    out = []
    for v, r in enumerate(rows):
        nb = sorted(deg[u] for u in range(len(rows)) if r >> u & 1)
        out.append((deg[v], tuple(nb)))
    return out


def is_isomorphic(g1: LabeledGraph, g2: LabeledGraph) -> bool:
    """Exact test by backtracking over degree-respecting vertex maps."""
    if max(g1.n, g2.n) > MAX_ISO_N:
        raise CapacityError(f"isomorphism search is limited to n <= {MAX_ISO_N}")
    if g1.n != g2.n or g1.edge_count() != g2.edge_count():
        return False
    n = g1.n
    d1, d2 = g1.degrees(), g2.degrees()
    if sorted(d1) != sorted(d2):
        return False
    r1, r2 = g1.rows(), g2.rows()
    c1, c2 = _colors(r1, d1), _colors(r2, d2)
    if sorted(c1) != sorted(c2):
        return False

    by_color: dict[tuple, list[int]] = {}
    for w, c in enumerate(c2):
        by_color.setdefault(c, []).append(w)
    # smallest candidate classes first, then prefer vertices adjacent to already placed ones
    order: list[int] = []
    remaining = set(range(n))
    while remaining:
        placed = 0
        for v in order:
            placed |= 1 << v
        v = min(remaining, key=lambda x: (-bin(r1[x] & placed).count("1"),
                                          len(by_color[c1[x]]), x))
        order.append(v)
        remaining.discard(v)

    mapping = [-1] * n
    used = [False] * n

    def extend(pos: int) -> bool:
        if pos == n:
            return True
        v = order[pos]
        for w in by_color[c1[v]]:
            if used[w]:
                continue
            ok = True
            for u in order[:pos]:
                if (r1[v] >> u & 1) != (r2[w] >> mapping[u] & 1):
                    ok = False
                    break
            if not ok:
                continue
            mapping[v], used[w] = w, True
            if extend(pos + 1):
                return True
            mapping[v], used[w] = -1, False
        return False

    return extend(0)


def iso_invariance_check(g1: LabeledGraph, g2: LabeledGraph, Bs: Iterable[BorelSet]) -> bool:
    return all(degree_count(g1, B) == degree_count(g2, B) for B in Bs)
