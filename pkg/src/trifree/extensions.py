"""General extension variables: counting, scalings, balance, controllability.

An extension pattern is a triple (A, J, Gamma): base vertices A, required
edges J, required open pairs Gamma \\ J.  Given an injective base
assignment phi the pattern's count is the number of injective maps of the
whole pattern into the current graph sending J-pairs to edges and the
remaining pattern pairs to open pairs (pairs inside A are checked against
phi directly; a mismatch makes the count 0 by definition).

Scalings S^{B'}_B are computed with integer exponent bookkeeping and a
single exponentiation, so the chain identity S^{B''}_B = S^{B''}_{B'}
S^{B'}_B is exact in exponent arithmetic.  Subset minimisation (strict
balance, extension series, controllability) is exhaustive for small
patterns; for large patterns the minimum of ln S^B_A over B is found
exactly by a max-closure (min-cut) reduction, since vertex costs (ln n)
are positive while every pair weight (ln p, -4t^2) is non-positive.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from itertools import combinations, permutations

import networkx as nx
import numpy as np

from .pairstore import CLOSED, EDGE, OPEN, PairStore
from .scaling import ScalingContext

__all__ = [
    "ExtensionPattern",
    "make_pattern",
    "PatternError",
    "live_violations",
    "is_live",
    "scaling_exponents",
    "ln_scaling",
    "scaling_value",
    "count_embeddings",
    "is_strictly_balanced",
    "extension_series",
    "min_subset_scaling",
    "is_controllable",
    "is_bad",
    "fan_pattern",
    "parse_pattern",
    "format_pattern",
]

MAX_NEW_VERTICES = 16


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class ExtensionPattern:
    """(A, J, Gamma) with vertices 0..vertex_count-1.

    ``open_pairs`` is Gamma minus J.  Any (A, J, Gamma) is legal; only
    *live* configurations (see :func:`live_violations`) can actually
    embed into a reachable graph, the rest count zero but still carry
    well-defined scalings, which the theory uses as union-bound devices.
    """

    vertex_count: int
    base: tuple[int, ...]
    j_edges: tuple[tuple[int, int], ...]
    open_pairs: tuple[tuple[int, int], ...]
    label: str = ""

    # -- derived quantities -------------------------------------------------

    @property
    def all_pairs(self) -> tuple[tuple[int, int], ...]:
        return self.j_edges + self.open_pairs

    @property
    def new_vertices(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.vertex_count) if v not in self.base)

    @property
    def n_v(self) -> int:
        """n(V) = |V_Gamma| - |A|."""
        return self.vertex_count - len(self.base)

    @property
    def e_v(self) -> int:
        """e(V): J-edges not inside the base."""
        a = set(self.base)
        return sum(1 for p in self.j_edges if not (p[0] in a and p[1] in a))

    @property
    def o_v(self) -> int:
        """o(V): open pairs not inside the base."""
        a = set(self.base)
        return sum(1 for p in self.open_pairs if not (p[0] in a and p[1] in a))

    def with_base(self, base) -> "ExtensionPattern":
        return make_pattern(self.vertex_count, tuple(sorted(base)),
                            self.j_edges, self.open_pairs, self.label)


def _norm_pairs(pairs) -> tuple[tuple[int, int], ...]:
    out = []
    for a, b in pairs:
        if a == b:
            raise PatternError(f"degenerate pair ({a},{b})")
        out.append((a, b) if a < b else (b, a))
    return tuple(sorted(out))


def make_pattern(vertex_count, base, edges, opens, label="") -> ExtensionPattern:
    base = tuple(sorted(int(b) for b in base))
    edges = _norm_pairs(edges)
    opens = _norm_pairs(opens)
    if len(set(base)) != len(base):
        raise PatternError("base vertices must be distinct")
    for v in base + tuple(x for p in edges + opens for x in p):
        if not 0 <= v < vertex_count:
            raise PatternError(f"vertex {v} outside range 0..{vertex_count - 1}")
    if len(set(edges)) != len(edges) or len(set(opens)) != len(opens):
        raise PatternError("duplicate pairs")
    if set(edges) & set(opens):
        raise PatternError("a pair cannot be both edge and open")
    return ExtensionPattern(vertex_count=vertex_count, base=base,
                            j_edges=edges, open_pairs=opens, label=label)


def live_violations(pattern: ExtensionPattern) -> list[str]:
    """Why this pattern can never embed into a reachable graph.

    A live configuration has triangle-free required edges and no open
    pair whose endpoints are joined by two required edges.  Non-live
    patterns are still legal (their scalings are well-defined and used
    as union-bound devices); their count is identically zero.
    """
    adj = {v: set() for v in range(pattern.vertex_count)}
    for a, b in pattern.j_edges:
        adj[a].add(b)
        adj[b].add(a)
    out = []
    for a, b in pattern.j_edges:
        if adj[a] & adj[b]:
            out.append(f"required edges form a triangle at ({a},{b})")
    for a, b in pattern.open_pairs:
        if adj[a] & adj[b]:
            out.append(f"open pair ({a},{b}) joined by two required edges")
    return out


def is_live(pattern: ExtensionPattern) -> bool:
    return not live_violations(pattern)


# -- scalings -----------------------------------------------------------------


def _induced_counts(pattern: ExtensionPattern, bset: frozenset) -> tuple[int, int]:
    e = sum(1 for a, b in pattern.j_edges if a in bset and b in bset)
    o = sum(1 for a, b in pattern.open_pairs if a in bset and b in bset)
    return e, o


def scaling_exponents(pattern: ExtensionPattern, B, B_prime) -> tuple[int, int, int]:
    """Integer exponents (dn, de, do) of S^{B'}_B = n^dn p^de qhat^do."""
    bs = frozenset(B)
    bps = frozenset(B_prime)
    if not bs <= bps:
        raise PatternError("need B contained in B'")
    if not set(pattern.base) <= bs:
        raise PatternError("need A contained in B")
    e_b, o_b = _induced_counts(pattern, bs)
    e_bp, o_bp = _induced_counts(pattern, bps)
    return len(bps) - len(bs), e_bp - e_b, o_bp - o_b


def ln_scaling(pattern: ExtensionPattern, B, B_prime, ctx: ScalingContext) -> float:
    dn, de, do = scaling_exponents(pattern, B, B_prime)
    return _ln_from_exponents(dn, de, do, ctx)


def _ln_from_exponents(dn: int, de: int, do: int, ctx: ScalingContext) -> float:
    out = dn * math.log(ctx.n) - 4.0 * ctx.t * ctx.t * do
    if de:
        if ctx.p == 0.0:
            return -math.inf
        out += de * math.log(ctx.p)
    return out


def scaling_value(pattern: ExtensionPattern, B, B_prime, ctx: ScalingContext) -> float:
    """S^{B'}_B evaluated at ctx (exp of the exact-exponent log form)."""
    ln = ln_scaling(pattern, B, B_prime, ctx)
    return math.exp(ln) if ln < 700 else math.inf


# -- embedding counting -------------------------------------------------------


def _check_base_statuses(store: PairStore, pattern: ExtensionPattern,
                         phi: dict) -> bool:
    a = set(pattern.base)
    for x, y in pattern.j_edges:
        if x in a and y in a and not store.is_edge(phi[x], phi[y]):
            return False
    for x, y in pattern.open_pairs:
        if x in a and y in a and not store.is_open(phi[x], phi[y]):
            return False
    return True


def _placement_order(pattern: ExtensionPattern) -> list[int]:
    """Greedy order over new vertices: most placed constraints first,
    preferring vertices with an edge to a placed one (small candidate sets).
    """
    placed = set(pattern.base)
    edges_of = {v: set() for v in range(pattern.vertex_count)}
    opens_of = {v: set() for v in range(pattern.vertex_count)}
    for a, b in pattern.j_edges:
        edges_of[a].add(b)
        edges_of[b].add(a)
    for a, b in pattern.open_pairs:
        opens_of[a].add(b)
        opens_of[b].add(a)
    order = []
    remaining = set(pattern.new_vertices)
    while remaining:
        best = None
        best_key = None
        for v in sorted(remaining):
            n_edge = len(edges_of[v] & placed)
            n_open = len(opens_of[v] & placed)
            key = (1 if n_edge else 0, n_edge + n_open)
            if best_key is None or key > best_key:
                best_key = key
                best = v
        order.append(best)
        placed.add(best)
        remaining.discard(best)
    return order


def count_embeddings(store: PairStore, pattern: ExtensionPattern, phi: dict,
                     group_by: int | None = None):
    """Exact number of injective embeddings extending phi.

    ``phi`` maps base vertices to graph vertices (injective).  With
    ``group_by`` set to a pattern vertex, returns a dict mapping that
    vertex's image to the number of embeddings using it.
    """
    if pattern.n_v > MAX_NEW_VERTICES:
        raise PatternError(
            f"pattern has {pattern.n_v} non-base vertices > {MAX_NEW_VERTICES}"
        )
    if set(phi) != set(pattern.base):
        raise PatternError("phi must assign exactly the base vertices")
    imgs = list(phi.values())
    if len(set(imgs)) != len(imgs):
        raise PatternError("phi must be injective")
    grouping = group_by is not None
    if not _check_base_statuses(store, pattern, phi):
        return {} if grouping else 0

    n = store.n
    order = _placement_order(pattern)
    level_of = {v: k for k, v in enumerate(order)}
    if grouping and group_by in pattern.base:
        total = count_embeddings(store, pattern, phi)
        return {phi[group_by]: total} if total else {}

    # constraints[k]: list of (already-placed pattern vertex, status)
    placed_before = list(pattern.base)
    constraints: list[list[tuple[int, int]]] = []
    for v in order:
        cons = []
        for a, b in pattern.j_edges:
            if a == v and b in placed_before:
                cons.append((b, EDGE))
            elif b == v and a in placed_before:
                cons.append((a, EDGE))
        for a, b in pattern.open_pairs:
            if a == v and b in placed_before:
                cons.append((b, OPEN))
            elif b == v and a in placed_before:
                cons.append((a, OPEN))
        constraints.append(cons)
        placed_before.append(v)

    assign = dict(phi)
    used = np.zeros(n, dtype=bool)
    for x in imgs:
        used[x] = True
    group_counts: dict[int, int] = {}
    depth = len(order)

    def candidates(level: int) -> np.ndarray:
        cons = constraints[level]
        edge_cons = [(p, s) for p, s in cons if s == EDGE]
        if edge_cons:
            anchor, _ = min(edge_cons, key=lambda ps: store.degree(assign[ps[0]]))
            cand = store.neighbors(assign[anchor]).astype(np.int64).copy()
            rest = [(p, s) for p, s in cons if p != anchor]
        else:
            cand = np.arange(n, dtype=np.int64)
            rest = cons
        for p, s in rest:
            if len(cand) == 0:
                break
            cand = cand[store.statuses_with(assign[p], cand) == s]
        if len(cand):
            cand = cand[~used[cand]]
        return cand

    def recurse(level: int) -> int:
        cand = candidates(level)
        if level == depth - 1 and not (grouping and level_of[group_by] == level):
            if grouping:
                # group vertex was placed earlier; attribute leafs to it
                return len(cand)
            return len(cand)
        v = order[level]
        total = 0
        for c in cand.tolist():
            assign[v] = c
            used[c] = True
            sub = recurse(level + 1) if level < depth - 1 else 1
            total += sub
            if grouping and group_by == v and sub:
                group_counts[c] = group_counts.get(c, 0) + sub
            used[c] = False
        if grouping and group_by == v:
            return total
        return total

    if depth == 0:
        return {} if grouping else 1
    result = recurse(0)
    if grouping:
        return group_counts
    return result


def brute_force_count(store: PairStore, pattern: ExtensionPattern,
                      phi: dict) -> int:
    """Oracle: enumerate all injections of the new vertices directly."""
    if not _check_base_statuses(store, pattern, phi):
        return 0
    n = store.n
    new = pattern.new_vertices
    free = [x for x in range(n) if x not in set(phi.values())]
    count = 0
    for images in permutations(free, len(new)):
        f = dict(phi)
        f.update(zip(new, images))
        ok = True
        for a, b in pattern.j_edges:
            if a in f and b in f and not store.is_edge(f[a], f[b]):
                ok = False
                break
        if ok:
            for a, b in pattern.open_pairs:
                if not store.is_open(f[a], f[b]):
                    ok = False
                    break
        if ok:
            count += 1
    return count


# -- balance, series, controllability ----------------------------------------


def _proper_supersets(pattern: ExtensionPattern, base, strict_upper=True):
    """Subsets B with base < B (< or <=) V, as frozensets."""
    others = [v for v in range(pattern.vertex_count) if v not in set(base)]
    full = 1 << len(others)
    for mask in range(1, full):
        if strict_upper and mask == full - 1:
            continue
        yield frozenset(base) | {
            others[i] for i in range(len(others)) if mask >> i & 1
        }


def is_strictly_balanced(pattern: ExtensionPattern, ctx: ScalingContext,
                         base=None) -> bool:
    """True iff S^{V}_B < 1 for every B strictly between the base and V."""
    base = tuple(base) if base is not None else pattern.base
    if pattern.vertex_count - len(base) > MAX_NEW_VERTICES:
        raise PatternError("strict balance limited to 16 non-base vertices")
    full = frozenset(range(pattern.vertex_count))
    for b in _proper_supersets(pattern, base, strict_upper=True):
        if ln_scaling(pattern, b, full, ctx) >= 0.0:
            return False
    return True


def extension_series(pattern: ExtensionPattern, ctx: ScalingContext) -> list[frozenset]:
    """The greedy chain A = B_0 < B_1 < ... < B_d = V at time ctx.t.

    While (B_i, J, Gamma) is not strictly balanced, B_{i+1} is a minimal
    set strictly between B_i and V minimising S^C_{B_i}; ties broken by
    smallest cardinality, then lexicographic vertex order.
    """
    if pattern.n_v > MAX_NEW_VERTICES:
        raise PatternError("extension series limited to 16 non-base vertices")
    full = frozenset(range(pattern.vertex_count))
    chain = [frozenset(pattern.base)]
    current = chain[0]
    while current != full:
        if is_strictly_balanced(pattern, ctx, base=current):
            chain.append(full)
            break
        best = None
        best_key = None
        for c in _proper_supersets(pattern, current, strict_upper=True):
            key = (ln_scaling(pattern, current, c, ctx), len(c),
                   tuple(sorted(c)))
            if best_key is None or key < best_key:
                best_key = key
                best = c
        chain.append(best)
        current = best
    return chain


def min_subset_scaling(pattern: ExtensionPattern, ctx: ScalingContext,
                       method: str = "auto") -> tuple[float, frozenset]:
    """(min over A < B <= V of ln S^B_A, an argmin B).

    ``method``: "exhaustive", "mincut", or "auto" (min-cut above 16
    non-base vertices).  The min-cut route requires p < 1 and t > 0 so
    that all pair weights are non-positive; it solves one max-closure
    problem per forced vertex, which is exact.
    """
    if method == "auto":
        method = "exhaustive" if pattern.n_v <= MAX_NEW_VERTICES else "mincut"
    base = frozenset(pattern.base)
    if method == "exhaustive":
        best = math.inf
        best_set = None
        for b in _proper_supersets(pattern, pattern.base, strict_upper=False):
            val = ln_scaling(pattern, base, b, ctx)
            if val < best:
                best = val
                best_set = b
        return best, best_set
    if method != "mincut":
        raise ValueError(f"unknown method {method!r}")
    if not (0.0 < ctx.p < 1.0):
        raise PatternError("min-cut subset scan needs 0 < p < 1")
    return _min_subset_scaling_mincut(pattern, ctx)


def _min_subset_scaling_mincut(pattern: ExtensionPattern,
                               ctx: ScalingContext) -> tuple[float, frozenset]:
    """Exact min of ln S^B_A over nonempty extensions, via max-closure.

    ln S^B_A decomposes as |B \\ A| * ln n plus a non-positive weight for
    every pattern pair inside B not inside A, so minimising it is a
    project-selection problem: each pair is a project with profit
    -weight whose prerequisites are its non-base endpoints (cost ln n).
    The empty selection is excluded by forcing each vertex in turn.
    """
    ln_n = math.log(ctx.n)
    profit_edge = -math.log(ctx.p)   # > 0 since p < 1
    profit_open = 4.0 * ctx.t * ctx.t
    base = set(pattern.base)
    new = pattern.new_vertices
    pairs = [(a, b, profit_edge) for a, b in pattern.j_edges] + [
        (a, b, profit_open) for a, b in pattern.open_pairs
    ]
    best = math.inf
    best_set: frozenset = frozenset()
    for forced in new:
        g = nx.DiGraph()
        g.add_node("s")
        g.add_node("t")
        const = ln_n  # cost of the forced vertex itself
        total_profit = 0.0
        for a, b, w in pairs:
            if a in base and b in base:
                continue  # pairs inside A never contribute to S^B_A
            inside = {a, b} - base - {forced}
            if not inside:  # touches forced, rest in base: always covered
                const -= w
                continue
            node = ("p", a, b, w)
            g.add_edge("s", node, capacity=w)
            total_profit += w
            for v in inside:
                g.add_edge(node, ("v", v))  # uncapacitated = infinite
        for v in new:
            if v != forced:
                g.add_edge(("v", v), "t", capacity=ln_n)
        if total_profit == 0.0:
            val = const
            sel: set = set()
        else:
            cut_value, (s_side, _) = nx.minimum_cut(g, "s", "t")
            val = const - (total_profit - cut_value)
            sel = {node[1] for node in s_side
                   if isinstance(node, tuple) and node[0] == "v"}
        if val < best:
            best = val
            best_set = frozenset(base) | {forced} | sel
    return best, best_set


def is_controllable(pattern: ExtensionPattern, t_prime: float, n: int,
                    delta: float = 0.01, t_lo: float = 1.0,
                    method: str = "auto") -> bool:
    """Controllability at time t_prime.

    Requires at least one open pair, and min over t in [t_lo, t_prime]
    and over A < B <= V of S^B_A(t) >= n^delta.  Each ln S^B_A(t) is
    concave in t (a ln t - 4 b t^2 + const with a, b >= 0), so the
    minimum over the interval is attained at an endpoint; only the two
    endpoint times are evaluated.  ``t_lo`` is exposed because parts of
    the theory evaluate the same condition from times below 1.
    """
    if t_prime < t_lo:
        raise ValueError(f"need t_prime >= {t_lo}")
    if not pattern.open_pairs:
        return False  # J = Gamma
    from .scaling import context_at_time

    threshold = delta * math.log(n)
    for t in {t_lo, t_prime}:
        val, _ = min_subset_scaling(pattern, context_at_time(n, t),
                                    method=method)
        if val < threshold:
            return False
    return True


# -- badness ------------------------------------------------------------------


def is_bad(pattern: ExtensionPattern, phi: dict, store: PairStore) -> bool:
    """True iff some current edge, pulled back through phi, forbids V.

    Concretely: for an edge of the graph between two phi-images, adding
    the corresponding base pair to J creates a triangle or a length-two
    path joining the endpoints of an open pair of Gamma.
    """
    imgs = list(phi.values())
    if len(set(imgs)) != len(imgs):
        raise PatternError("phi must be injective")
    inv = {g: a for a, g in phi.items()}
    adj = {v: set() for v in range(pattern.vertex_count)}
    for a, b in pattern.j_edges:
        adj[a].add(b)
        adj[b].add(a)
    for ga, gb in combinations(imgs, 2):
        if not store.is_edge(ga, gb):
            continue
        a, b = inv[ga], inv[gb]
        if (min(a, b), max(a, b)) in pattern.j_edges:
            continue  # already required; adds nothing new
        adj[a].add(b)
        adj[b].add(a)
        bad = any(adj[x] & adj[y] for x, y in pattern.j_edges + ((a, b),)) or any(
            adj[x] & adj[y] for x, y in pattern.open_pairs
        )
        adj[a].discard(b)
        adj[b].discard(a)
        if bad:
            return True
    return False


# -- pattern constructors and text format -------------------------------------


def fan_pattern(h: int, path_edges=None, label: str = "") -> ExtensionPattern:
    """Fan at a base triple (a, b, c): a path b, v_1, ..., v_h, c plus an
    open pair from a to every v_i.  ``path_edges`` flags which of the
    h+1 path pairs are required edges (default: all of them, the
    minimum-scaling configuration)."""
    if h < 1:
        raise PatternError("fan needs h >= 1")
    if path_edges is None:
        path_edges = [True] * (h + 1)
    if len(path_edges) != h + 1:
        raise PatternError(f"need {h + 1} path flags, got {len(path_edges)}")
    a, b, c = 0, 1, 2
    vs = list(range(3, 3 + h))
    path = [(b, vs[0])] + [(vs[i], vs[i + 1]) for i in range(h - 1)] + [(vs[-1], c)]
    edges = [p for p, is_e in zip(path, path_edges) if is_e]
    opens = [p for p, is_e in zip(path, path_edges) if not is_e]
    opens += [(a, v) for v in vs]
    return make_pattern(3 + h, (a, b, c), edges, opens,
                        label=label or f"fan_{h}")


_PATTERN_RE = re.compile(
    r"^\s*vertices\s*=\s*(\d+)\s*;\s*base\s*=\s*\[([^\]]*)\]\s*;"
    r"\s*edges\s*=\s*\[([^\]]*)\]\s*;\s*opens\s*=\s*\[([^\]]*)\]\s*$"
)
_PAIR_RE = re.compile(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)")


def parse_pattern(text: str, label: str = "") -> ExtensionPattern:
    """Parse ``vertices=k; base=[...]; edges=[(a,b),...]; opens=[(c,d),...]``."""
    m = _PATTERN_RE.match(text)
    if not m:
        raise PatternError(f"malformed pattern literal: {text!r}")
    k = int(m.group(1))
    base_txt = m.group(2).strip()
    base = tuple(int(x) for x in base_txt.split(",") if x.strip()) if base_txt else ()
    edges = [(int(a), int(b)) for a, b in _PAIR_RE.findall(m.group(3))]
    opens = [(int(a), int(b)) for a, b in _PAIR_RE.findall(m.group(4))]
    return make_pattern(k, base, edges, opens, label=label)


def format_pattern(pattern: ExtensionPattern) -> str:
    base = ",".join(str(b) for b in pattern.base)
    edges = ",".join(f"({a},{b})" for a, b in pattern.j_edges)
    opens = ",".join(f"({a},{b})" for a, b in pattern.open_pairs)
    return (f"vertices={pattern.vertex_count}; base=[{base}]; "
            f"edges=[{edges}]; opens=[{opens}]")
