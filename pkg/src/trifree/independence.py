"""Independence numbers of final graphs and Ramsey lower-bound witnesses.

A maximal triangle-free graph on n vertices with independence number
alpha certifies R(3, alpha+1) > n.  The lab measures exact alpha by
branch and bound on the (sparse) graph itself: triangle-free graphs
admit two strong ingredients, a clique-cover bound |P| - matching(P)
(all cliques are edges) and unconditional degree-2 folding (the folded
vertex's neighbours are never adjacent).  Greedy restarts provide the
initial incumbent.  Witnesses serialize to self-contained JSON that
re-verifies from the edge list alone.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MisResult",
    "greedy_mis",
    "exact_alpha",
    "alpha_ratio",
    "RamseyWitness",
    "ramsey_witness",
    "verify_witness",
    "BudgetExceeded",
]


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class MisResult:
    alpha: int           # exact value, or best lower bound
    upper: int           # matching upper bound (== alpha when exact)
    witness: tuple[int, ...]
    method: str          # "exact-bb" | "greedy" | "degree-bound"
    nodes: int = 0

    @property
    def exact(self) -> bool:
        return self.alpha == self.upper


def _adj_bits(n: int, edges) -> list[int]:
    bits = [0] * n
    for a, b in edges:
        bits[a] |= 1 << b
        bits[b] |= 1 << a
    return bits


def _check_independent(bits: list[int], members) -> bool:
    mask = 0
    for v in members:
        mask |= 1 << v
    return all(bits[v] & mask == 0 for v in members)


def greedy_mis(n: int, edges, rng: np.random.Generator,
               restarts: int = 20) -> MisResult:
    """Best of ``restarts`` randomised min-degree greedy passes."""
    bits = _adj_bits(n, edges)
    full = (1 << n) - 1
    best: tuple[int, ...] = ()
    for _ in range(max(1, restarts)):
        alive = full
        chosen = []
        degs = {v: (bits[v] & alive).bit_count() for v in range(n)}
        while alive:
            live = [v for v in range(n) if alive >> v & 1]
            dmin = min(degs[v] for v in live)
            pool = [v for v in live if degs[v] == dmin]
            v = pool[int(rng.integers(len(pool)))]
            chosen.append(v)
            removed = (bits[v] & alive) | (1 << v)
            alive &= ~removed
            for w in range(n):
                if alive >> w & 1:
                    degs[w] = (bits[w] & alive).bit_count()
        if len(chosen) > len(best):
            best = tuple(sorted(chosen))
    assert _check_independent(bits, best)
    return MisResult(alpha=len(best), upper=n, witness=best, method="greedy")


def _greedy_matching_bound(bits: list[int], alive: int) -> int:
    """Upper bound alpha(G[alive]) <= |alive| - |greedy maximal matching|."""
    count = alive.bit_count()
    seen = alive
    matched = 0
    rest = alive
    while rest:
        v = (rest & -rest).bit_length() - 1
        rest &= rest - 1
        if not (seen >> v & 1):
            continue
        nb = bits[v] & seen & ~(1 << v)
        if nb:
            w = (nb & -nb).bit_length() - 1
            seen &= ~((1 << v) | (1 << w))
            rest &= ~(1 << w)
            matched += 1
    return count - matched


def exact_alpha(n: int, edges, budget_s: float = 300.0,
                rng: np.random.Generator | None = None,
                cap: int = 300) -> MisResult:
    """Exact maximum independent set by branch and bound.

    Reductions run to a fixed point at every node: isolated and pendant
    vertices are taken, a degree-2 vertex whose neighbours are adjacent
    is taken, and one whose neighbours are non-adjacent turns into the
    exact two-way branch {v in} / {both neighbours in}.  The candidate
    set is split into connected components, solved independently.
    Branching is on a maximum-degree vertex; pruning uses the
    clique-cover bound |P| - matching(P) (cliques in a triangle-free
    graph are vertices and edges).  Past the time budget, returns
    certified bounds (method "degree-bound") instead of an exact value.
    """
    if n > cap:
        raise ValueError(f"exact alpha capped at {cap} vertices, got {n}")
    base_bits = _adj_bits(n, edges)
    rng = rng if rng is not None else np.random.default_rng(0)
    incumbent = greedy_mis(n, edges, rng, restarts=40)
    deadline = time.monotonic() + budget_s
    nodes = 0
    # bits grows: folding allocates fresh virtual vertices past n
    bits: list[int] = list(base_bits)

    def components(alive: int) -> list[int]:
        out = []
        rest = alive
        while rest:
            comp = rest & -rest
            frontier = comp
            while frontier:
                grown = comp
                f = frontier
                while f:
                    v = (f & -f).bit_length() - 1
                    f &= f - 1
                    grown |= bits[v] & alive
                frontier = grown & ~comp
                comp = grown
            out.append(comp)
            rest &= ~comp
        return out

    def solve(alive: int, lower: int) -> tuple[int, int]:
        """(size, member mask) of a maximum independent set of G[alive].

        May return any valid solution of size <= lower when
        alpha(alive) <= lower (such branches cannot beat the caller's
        incumbent).  The mask may use virtual fold vertices, expanded
        before returning.
        """
        nonlocal nodes
        nodes += 1
        if nodes % 4096 == 0 and time.monotonic() > deadline:
            raise BudgetExceeded
        forced_size = 0
        forced_mask = 0
        folds: list[tuple[int, int, int, int, int]] = []  # (z, v, a, b, zmask)
        while True:
            if not alive:
                size, mask = forced_size, forced_mask
                break
            vmin = vmax = -1
            dmin = 1 << 30
            dmax = -1
            rest = alive
            while rest:
                v = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                d = (bits[v] & alive).bit_count()
                if d < dmin:
                    dmin, vmin = d, v
                if d > dmax:
                    dmax, vmax = d, v
            if dmin == 0:
                forced_size += 1
                forced_mask |= 1 << vmin
                alive &= ~(1 << vmin)
                continue
            if dmin == 1:
                forced_size += 1
                forced_mask |= 1 << vmin
                alive &= ~((bits[vmin] & alive) | (1 << vmin))
                continue
            if dmin == 2:
                nb = bits[vmin] & alive
                a = (nb & -nb).bit_length() - 1
                b = (nb & (nb - 1)).bit_length() - 1
                if bits[a] >> b & 1:  # neighbours adjacent: take vmin
                    forced_size += 1
                    forced_mask |= 1 << vmin
                    alive &= ~(nb | (1 << vmin))
                    continue
                # fold {a, vmin, b} into a fresh vertex z: alpha = 1 + alpha'
                z = len(bits)
                zmask = (bits[a] | bits[b]) & alive & ~nb & ~(1 << vmin)
                bits.append(zmask)
                zbit = 1 << z
                rest = zmask
                while rest:
                    w = (rest & -rest).bit_length() - 1
                    rest &= rest - 1
                    bits[w] |= zbit
                folds.append((z, vmin, a, b, zmask))
                forced_size += 1
                alive = (alive | zbit) & ~(nb | (1 << vmin))
                continue
            # min degree >= 3: decompose, bound, branch
            comps = components(alive)
            if len(comps) > 1:
                ubs = [_greedy_matching_bound(bits, c) for c in comps]
                total_ub = sum(ubs)
                size = 0
                mask = 0
                for comp, ub in sorted(zip(comps, ubs), key=lambda t: -t[1]):
                    total_ub -= ub
                    lo = lower - forced_size - size - total_ub
                    s, m = solve(comp, max(lo, 0))
                    size += s
                    mask |= m
                size += forced_size
                mask |= forced_mask
                break
            if forced_size + _greedy_matching_bound(bits, alive) <= lower:
                size, mask = forced_size, forced_mask  # pruned
                break
            v = vmax
            s1, m1 = solve(alive & ~(bits[v] | (1 << v)),
                           max(lower - forced_size - 1, 0))
            s1 += 1
            m1 |= 1 << v
            s2, m2 = solve(alive & ~(1 << v), max(lower - forced_size, s1))
            if s2 > s1:
                s1, m1 = s2, m2
            size, mask = forced_size + s1, forced_mask | m1
            break
        # undo folds (reverse order) and translate the solution mask
        for z, v, a, b, zmask in reversed(folds):
            zbit = 1 << z
            rest = zmask
            while rest:
                w = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                bits[w] &= ~zbit
            bits.pop()
            if mask & zbit:  # z selected: the fold contributes both a and b
                mask = (mask & ~zbit) | (1 << a) | (1 << b)
            else:  # fold contributes v
                mask |= 1 << v
        return size, mask

    try:
        size, mask = solve((1 << n) - 1, incumbent.alpha - 1)
        if size < incumbent.alpha:  # fully pruned against the incumbent
            size = incumbent.alpha
            members = incumbent.witness
        else:
            members = tuple(v for v in range(n) if mask >> v & 1)
        assert len(members) == size
        assert _check_independent(bits, members)
        return MisResult(alpha=size, upper=size,
                         witness=tuple(sorted(members)), method="exact-bb",
                         nodes=nodes)
    except BudgetExceeded:
        ub = _greedy_matching_bound(bits, (1 << n) - 1)
        return MisResult(alpha=incumbent.alpha, upper=ub,
                         witness=incumbent.witness, method="degree-bound",
                         nodes=nodes)


def brute_force_alpha(n: int, edges) -> int:
    """2^n oracle for tiny graphs."""
    bits = _adj_bits(n, edges)
    best = 0
    for mask in range(1 << n):
        if mask.bit_count() <= best:
            continue
        ok = True
        m = mask
        while m:
            v = (m & -m).bit_length() - 1
            m &= m - 1
            if bits[v] & mask:
                ok = False
                break
        if ok:
            best = mask.bit_count()
    return best


def alpha_ratio(n: int, alpha: float) -> float:
    """alpha / sqrt(2 n ln n), the quantity that tends to at most 1."""
    return alpha / math.sqrt(2.0 * n * math.log(n))


@dataclass
class RamseyWitness:
    n: int
    seed: int | None
    alpha: int
    witness: tuple[int, ...]
    edges_sha256: str
    t: int
    rho: float

    @property
    def bound(self) -> str:
        return f"R(3,{self.t})>{self.n}"

    def to_json_dict(self) -> dict:
        return {
            "format_version": 1,
            "n": self.n,
            "seed": self.seed,
            "alpha": self.alpha,
            "witness": list(self.witness),
            "edges_sha256": self.edges_sha256,
            "bound": self.bound,
            "t": self.t,
            "rho": self.rho,
        }


def _edges_text(edges) -> str:
    return "".join(f"{min(a,b)} {max(a,b)}\n" for a, b in edges)


def _has_triangle(n: int, edges) -> bool:
    bits = _adj_bits(n, edges)
    return any(bits[a] & bits[b] for a, b in edges)


def ramsey_witness(n: int, edges, mis: MisResult,
                   seed: int | None = None) -> RamseyWitness:
    """Certificate R(3, alpha+1) > n from a triangle-free graph.

    Refuses graphs with triangles and non-exact alpha: the bound needs
    a verified triangle-free graph whose independence number is exactly
    alpha.  rho = n ln(alpha) / alpha^2 tends to at most 1/4 + o(1).
    """
    if not mis.exact:
        raise ValueError("ramsey witness needs an exact independence number")
    if _has_triangle(n, edges):
        raise ValueError("graph has a triangle; not a valid R(3,t) witness")
    digest = hashlib.sha256(_edges_text(edges).encode()).hexdigest()
    alpha = mis.alpha
    return RamseyWitness(
        n=n, seed=seed, alpha=alpha, witness=mis.witness,
        edges_sha256=digest, t=alpha + 1,
        rho=n * math.log(alpha) / alpha ** 2 if alpha >= 2 else math.inf,
    )


def verify_witness(wit: RamseyWitness | dict, edges,
                   recheck_alpha: bool = True,
                   budget_s: float = 300.0) -> tuple[bool, str]:
    """Re-verify a witness from its serialized form plus the edge list.

    Checks the edge-list hash, triangle-freeness, independence of the
    witness set, and (optionally, by re-solving) that alpha is exactly
    the maximum.
    """
    d = wit.to_json_dict() if isinstance(wit, RamseyWitness) else dict(wit)
    n = d["n"]
    digest = hashlib.sha256(_edges_text(edges).encode()).hexdigest()
    if digest != d["edges_sha256"]:
        return False, "edge list hash mismatch"
    if _has_triangle(n, edges):
        return False, "graph contains a triangle"
    bits = _adj_bits(n, edges)
    if not _check_independent(bits, d["witness"]):
        return False, "witness set is not independent"
    if len(set(d["witness"])) != d["alpha"]:
        return False, "witness size disagrees with alpha"
    if d["t"] != d["alpha"] + 1:
        return False, "t != alpha + 1"
    if recheck_alpha:
        res = exact_alpha(n, edges, budget_s=budget_s, cap=max(n, 300))
        if not res.exact:
            return False, "alpha re-check exceeded budget"
        if res.alpha != d["alpha"]:
            return False, f"alpha mismatch: claimed {d['alpha']}, found {res.alpha}"
    return True, "ok"
