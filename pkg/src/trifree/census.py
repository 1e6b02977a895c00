"""Small-subgraph census: 2-densities, containment, appearance experiments.

The 2-density of a graph H on at least 3 vertices is
d2(H) = (|E|-1)/(|V|-2); m2(H) is the maximum of d2 over subgraphs with
at least 3 vertices.  Containment is subgraph (not induced) isomorphism,
decided by backtracking over bitset candidate sets with a
most-constrained-first order.  The appearance experiment measures, per
candidate graph H, the fraction of completed process runs containing H,
with Wilson 95% intervals; the threshold m2 <= 2 separates the graphs
that appear from those that do not.
"""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations

import numpy as np

__all__ = [
    "SmallGraph",
    "DensityReport",
    "two_density",
    "contains",
    "ContainsResult",
    "SearchBudgetExceeded",
    "appearance_experiment",
    "wilson_interval",
    "parse_small_graph",
    "format_small_graph",
    "CATALOG",
]

MAX_H_VERTICES = 10


@dataclass(frozen=True)
class SmallGraph:
    name: str
    v: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.v > MAX_H_VERTICES:
            raise ValueError(f"{self.name}: at most {MAX_H_VERTICES} vertices")
        seen = set()
        for a, b in self.edges:
            if a == b or not (0 <= a < self.v and 0 <= b < self.v):
                raise ValueError(f"{self.name}: bad edge ({a},{b})")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"{self.name}: duplicate edge ({a},{b})")
            seen.add(key)

    @property
    def e(self) -> int:
        return len(self.edges)

    def adjacency(self) -> list[set[int]]:
        adj = [set() for _ in range(self.v)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def is_triangle_free(self) -> bool:
        adj = self.adjacency()
        return not any(adj[a] & adj[b] for a, b in self.edges)


def small_graph(name: str, v: int, edges) -> SmallGraph:
    return SmallGraph(name, v, tuple((min(a, b), max(a, b)) for a, b in edges))


def _cycle(name: str, k: int) -> SmallGraph:
    return small_graph(name, k, [(i, (i + 1) % k) for i in range(k)])


def _complete_bipartite(name: str, a: int, b: int) -> SmallGraph:
    return small_graph(name, a + b, [(i, a + j) for i in range(a) for j in range(b)])


PETERSEN = small_graph(
    "petersen", 10,
    [(i, (i + 1) % 5) for i in range(5)]
    + [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    + [(i, 5 + i) for i in range(5)],
)

CATALOG: dict[str, SmallGraph] = {
    g.name: g
    for g in [
        small_graph("P3", 3, [(0, 1), (1, 2)]),
        _cycle("C4", 4),
        _cycle("C5", 5),
        _cycle("C6", 6),
        _complete_bipartite("K33", 3, 3),
        _complete_bipartite("K34", 3, 4),
        _complete_bipartite("K45", 4, 5),
        PETERSEN,
    ]
}


@dataclass(frozen=True)
class DensityReport:
    d2: Fraction
    m2: Fraction
    argmax: tuple[int, ...]


def two_density(h: SmallGraph) -> DensityReport:
    """Exact d2 and m2 by scanning induced vertex subsets of size >= 3.

    Induced subgraphs suffice for the maximum: deleting edges at a fixed
    vertex set only lowers d2.
    """
    if h.v < 3:
        raise ValueError("2-density needs at least 3 vertices")
    adj = h.adjacency()
    d2 = Fraction(h.e - 1, h.v - 2)
    best = d2
    argmax = tuple(range(h.v))
    for size in range(3, h.v):
        for sub in combinations(range(h.v), size):
            ss = set(sub)
            e = sum(1 for a in sub for b in adj[a] if b > a and b in ss)
            val = Fraction(e - 1, size - 2)
            if val > best:
                best = val
                argmax = sub
    return DensityReport(d2=d2, m2=best, argmax=argmax)


def two_density_edge_subsets(h: SmallGraph) -> Fraction:
    """Independent oracle: maximise over all subgraphs (vertex and edge
    subsets).  Exponential; for cross-checks on graphs with v <= 6."""
    best = None
    for size in range(3, h.v + 1):
        for sub in combinations(range(h.v), size):
            ss = set(sub)
            pool = [e for e in h.edges if e[0] in ss and e[1] in ss]
            for k in range(len(pool) + 1):
                for chosen in combinations(pool, k):
                    val = Fraction(len(chosen) - 1, size - 2)
                    if best is None or val > best:
                        best = val
    return best


# -- containment --------------------------------------------------------------


class SearchBudgetExceeded(RuntimeError):
    """The containment search ran out of time; the answer is indeterminate."""


@dataclass
class ContainsResult:
    found: bool
    witness: dict[int, int] | None = None
    nodes: int = 0


def _neighbor_bits(n: int, edges) -> list[int]:
    bits = [0] * n
    for a, b in edges:
        bits[a] |= 1 << b
        bits[b] |= 1 << a
    return bits


def contains(g_n: int, g_edges, h: SmallGraph,
             timeout_s: float = 10.0) -> ContainsResult:
    """Does the graph (g_n, g_edges) contain H as a (not necessarily
    induced) subgraph?  Returns a verified witness embedding when found.

    Backtracking with bitset candidate sets, degree pruning and a
    most-constrained-vertex order; raises SearchBudgetExceeded past the
    time budget rather than silently answering.
    """
    if h.e == 0:
        ok = g_n >= h.v
        return ContainsResult(found=ok, witness={i: i for i in range(h.v)} if ok else None)
    if h.v > g_n:
        return ContainsResult(found=False)
    gbits = _neighbor_bits(g_n, g_edges)
    gdeg = [b.bit_count() for b in gbits]
    hadj = h.adjacency()
    hdeg = [len(a) for a in hadj]
    full = (1 << g_n) - 1
    used = 0
    assign: dict[int, int] = {}
    # static candidate masks by degree
    base_cand = [0] * h.v
    for hv in range(h.v):
        mask = 0
        for gv in range(g_n):
            if gdeg[gv] >= hdeg[hv]:
                mask |= 1 << gv
        base_cand[hv] = mask
    deadline = time.monotonic() + timeout_s
    nodes = 0

    def current_candidates(hv: int) -> int:
        mask = base_cand[hv] & ~used
        for hn in hadj[hv]:
            if hn in assign:
                mask &= gbits[assign[hn]]
        return mask

    def pick_next() -> int | None:
        best_hv = None
        best_count = None
        for hv in range(h.v):
            if hv in assign:
                continue
            placed_nbrs = sum(1 for x in hadj[hv] if x in assign)
            cnt = current_candidates(hv).bit_count()
            key = (cnt, -placed_nbrs)
            if best_count is None or key < best_count:
                best_count = key
                best_hv = hv
        return best_hv

    def search() -> bool:
        nonlocal used, nodes
        if len(assign) == h.v:
            return True
        nodes += 1
        if nodes % 4096 == 0 and time.monotonic() > deadline:
            raise SearchBudgetExceeded(
                f"containment search for {h.name} exceeded {timeout_s:.0f}s"
            )
        hv = pick_next()
        cand = current_candidates(hv)
        while cand:
            gv = (cand & -cand).bit_length() - 1
            cand &= cand - 1
            assign[hv] = gv
            used |= 1 << gv
            if search():
                return True
            del assign[hv]
            used &= ~(1 << gv)
        return False

    found = search()
    if found:
        witness = dict(assign)
        assert verify_embedding(g_edges, h, witness)
        return ContainsResult(found=True, witness=witness, nodes=nodes)
    return ContainsResult(found=False, nodes=nodes)


def verify_embedding(g_edges, h: SmallGraph, witness: dict[int, int]) -> bool:
    imgs = list(witness.values())
    if len(set(imgs)) != len(imgs) or set(witness) != set(range(h.v)):
        return False
    eset = set()
    for a, b in g_edges:
        eset.add((min(a, b), max(a, b)))
    return all(
        (min(witness[a], witness[b]), max(witness[a], witness[b])) in eset
        for a, b in h.edges
    )


def brute_force_contains(g_n: int, g_edges, h: SmallGraph) -> bool:
    """Oracle: enumerate all injections (tiny inputs only)."""
    eset = {(min(a, b), max(a, b)) for a, b in g_edges}
    for images in permutations(range(g_n), h.v):
        if all(
            (min(images[a], images[b]), max(images[a], images[b])) in eset
            for a, b in h.edges
        ):
            return True
    return False


# -- appearance experiment -----------------------------------------------------


def wilson_interval(hits: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    phat = hits / trials
    denom = 1.0 + z * z / trials
    centre = phat + z * z / (2 * trials)
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    return (centre - half) / denom, (centre + half) / denom


@dataclass
class AppearanceRow:
    h: SmallGraph
    m2: Fraction
    n: int
    runs: int
    hits: int
    indeterminate: int
    freq: float
    lo95: float
    hi95: float


def appearance_experiment(n: int, seeds, h_list, run_fn=None,
                          timeout_s: float = 10.0,
                          progress=None) -> list[AppearanceRow]:
    """Fraction of completed runs containing each H, with Wilson 95% CIs.

    Every H must be triangle-free (others can never appear).  ``run_fn``
    maps a seed to a final edge list (defaults to running the process);
    indeterminate searches are reported separately from hits.
    """
    from .engine import ProcessState, run_streams

    for h in h_list:
        if not h.is_triangle_free():
            raise ValueError(f"{h.name} has a triangle; it can never appear")

    if run_fn is None:
        def run_fn(seed):
            rng, _ = run_streams(seed, 0)
            state = ProcessState(n, seed=rng, record_history=False,
                                 seed_label=seed)
            state.run_to_completion()
            return state.store.edges

    counts = {h.name: [0, 0] for h in h_list}  # hits, indeterminate
    total = 0
    for seed in seeds:
        edges = run_fn(seed)
        total += 1
        for h in h_list:
            try:
                res = contains(n, edges, h, timeout_s=timeout_s)
                if res.found:
                    counts[h.name][0] += 1
            except SearchBudgetExceeded:
                counts[h.name][1] += 1
        if progress is not None:
            progress(seed)
    rows = []
    for h in h_list:
        hits, indet = counts[h.name]
        decided = total - indet
        freq = hits / decided if decided else 0.0
        lo, hi = wilson_interval(hits, decided)
        rows.append(AppearanceRow(h=h, m2=two_density(h).m2, n=n, runs=total,
                                  hits=hits, indeterminate=indet, freq=freq,
                                  lo95=lo, hi95=hi))
    return rows


# -- text formats --------------------------------------------------------------

_H_RE = re.compile(r"^\s*([\w\-]+)\s*:\s*v\s*=\s*(\d+)\s*;\s*edges\s*=\s*((?:\(\s*\d+\s*,\s*\d+\s*\))*)\s*$")
_PAIR_RE = re.compile(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)")


def parse_small_graph(text: str) -> SmallGraph:
    """Parse ``name: v=7; edges=(0,3)(0,4)...`` or a catalog name."""
    key = text.strip()
    if key in CATALOG:
        return CATALOG[key]
    m = _H_RE.match(text)
    if not m:
        raise ValueError(f"malformed small-graph literal: {text!r}")
    edges = [(int(a), int(b)) for a, b in _PAIR_RE.findall(m.group(3))]
    return small_graph(m.group(1), int(m.group(2)), edges)


def format_small_graph(h: SmallGraph) -> str:
    pairs = "".join(f"({a},{b})" for a, b in h.edges)
    return f"{h.name}: v={h.v}; edges={pairs}"
