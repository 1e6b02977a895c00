"""Observed ensemble variables at snapshots, and their deviations.

Global variables use the ordered-count conventions: Q is the number of
ordered open pairs (twice the unordered count), R the ordered triples
with three open pairs, S the ordered triples abc with ab an edge and
ac, bc open.  Exact R and S are computed from per-vertex open-row
bitsets; above the exact cap they are estimated from uniform samples
with reported standard errors.  Codegree variables are computed on
demand for a sampled set of pairs rather than maintained for all n^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bits, scaling
from .pairstore import CLOSED, EDGE, OPEN, PairStore
from .scaling import ScalingContext, VariableKind

__all__ = [
    "GlobalStats",
    "DegreeStats",
    "TrajectoryRecord",
    "global_stats",
    "codegree",
    "degree_stats",
    "deviation_report",
    "open_rows_packed",
    "TRAJECTORY_HEADER",
    "trajectory_row",
    "make_snapshot_fn",
]

DEFAULT_EXACT_CAP = 8192


@dataclass
class GlobalStats:
    Q: int
    R: float
    S: float
    exact: bool
    std_err: dict = field(default_factory=dict)


@dataclass
class DegreeStats:
    min_deg: int
    max_deg: int
    mean_deg: float
    min_open: int
    max_open: int
    mean_open: float
    deg_hist: np.ndarray
    open_hist: np.ndarray


def open_rows_packed(store: PairStore) -> np.ndarray:
    """(n, ceil(n/8)) packed rows: bit w of row u set iff {u,w} is open."""
    n = store.n
    mat = np.zeros((n, n), dtype=bool)
    for u in range(n):
        mat[u] = store.status_row(u) == OPEN
    return np.packbits(mat, axis=1, bitorder="little")


def _pairs_from_indices(idx: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised inverse of the flat triangular pair index."""
    k = idx.astype(np.float64)
    u = ((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * k)) // 2).astype(np.int64)
    base = u * n - (u * (u + 1)) // 2
    under = base > idx
    u[under] -= 1
    base[under] = u[under] * n - (u[under] * (u[under] + 1)) // 2
    over = idx - base >= n - u - 1
    u[over] += 1
    base[over] = u[over] * n - (u[over] * (u[over] + 1)) // 2
    v = u + 1 + (idx - base)
    return u, v


def _sum_and_popcounts(rows: np.ndarray, a: np.ndarray, b: np.ndarray,
                       chunk: int = 1 << 16) -> tuple[float, float]:
    """Sum and sum-of-squares of |row(a_i) AND row(b_i)| over pairs."""
    total = 0.0
    total_sq = 0.0
    for s in range(0, len(a), chunk):
        ra = rows[a[s : s + chunk]]
        rb = rows[b[s : s + chunk]]
        counts = bits._bitwise_count(ra & rb).sum(axis=1, dtype=np.int64)
        total += float(counts.sum())
        total_sq += float((counts.astype(np.float64) ** 2).sum())
    return total, total_sq


def global_stats(store: PairStore, mode: str = "exact", k: int = 4096,
                 rng: np.random.Generator | None = None,
                 n_exact: int = DEFAULT_EXACT_CAP) -> GlobalStats:
    """Exact or sampled (Q, R, S).

    Q is always exact (from the store counters).  Exact mode enumerates
    R over all open pairs and S over all edges via packed open-row
    bitsets and is refused above ``n_exact``.  Sampled mode estimates
    R from k uniform open pairs and S from k uniform edges.
    """
    n = store.n
    Q = 2 * store.open_count
    if mode == "exact":
        if n > n_exact:
            raise ValueError(
                f"exact global stats refused for n={n} > cap {n_exact}; "
                "use sampled mode"
            )
        rows = open_rows_packed(store)
        open_idx = store.open_pair_indices()
        a, b = _pairs_from_indices(open_idx, n)
        r_sum, _ = _sum_and_popcounts(rows, a, b)
        if store.edge_count:
            ea = np.array([e[0] for e in store.edges], dtype=np.int64)
            eb = np.array([e[1] for e in store.edges], dtype=np.int64)
            s_sum, _ = _sum_and_popcounts(rows, ea, eb)
        else:
            s_sum = 0.0
        return GlobalStats(Q=Q, R=2.0 * r_sum, S=2.0 * s_sum, exact=True)

    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rng = rng if rng is not None else np.random.default_rng(0)
    # R = Q * E[X_ab | ab open];  S = 2E * E[#common-open | ab edge]
    R = 0.0
    S = 0.0
    err: dict = {}
    if store.open_count:
        kk = min(k, store.open_count)
        open_idx = store.open_pair_indices()
        pick = open_idx[rng.integers(len(open_idx), size=kk)]
        a, b = _pairs_from_indices(pick, n)
        xs = np.array(
            [_common_count(store, int(u), int(v), OPEN, OPEN) for u, v in zip(a, b)],
            dtype=np.float64,
        )
        R = Q * float(xs.mean())
        err["R"] = Q * float(xs.std(ddof=1)) / math.sqrt(kk) if kk > 1 else 0.0
    if store.edge_count:
        kk = min(k, store.edge_count)
        pick = rng.integers(store.edge_count, size=kk)
        ss = np.array(
            [
                _common_count(store, *store.edges[int(j)], OPEN, OPEN)
                for j in pick
            ],
            dtype=np.float64,
        )
        S = 2.0 * store.edge_count * float(ss.mean())
        err["S"] = (
            2.0 * store.edge_count * float(ss.std(ddof=1)) / math.sqrt(kk)
            if kk > 1
            else 0.0
        )
    return GlobalStats(Q=Q, R=R, S=S, exact=False, std_err=err)


def _common_count(store: PairStore, u: int, v: int, su: int, sv: int) -> int:
    ru = store.status_row(u)
    rv = store.status_row(v)
    return int(np.count_nonzero((ru == su) & (rv == sv)))


def codegree(store: PairStore, u: int, v: int) -> tuple[int, int, int]:
    """(X_uv, Y_uv, Y_vu) for one vertex pair.

    X_uv counts w with uw and vw open; Y_uv counts w with uw open and
    vw an edge.
    """
    if u == v:
        raise ValueError("codegree needs two distinct vertices")
    ru = store.status_row(u)
    rv = store.status_row(v)
    ou = ru == OPEN
    ov = rv == OPEN
    x_uv = int(np.count_nonzero(ou & ov))
    y_uv = int(np.count_nonzero(ou & (rv == EDGE)))
    y_vu = int(np.count_nonzero((ru == EDGE) & ov))
    return x_uv, y_uv, y_vu


def degree_stats(store: PairStore) -> DegreeStats:
    deg = store.degrees()
    od = store.open_deg
    return DegreeStats(
        min_deg=int(deg.min()),
        max_deg=int(deg.max()),
        mean_deg=float(deg.mean()),
        min_open=int(od.min()),
        max_open=int(od.max()),
        mean_open=float(od.mean()),
        deg_hist=np.bincount(deg),
        open_hist=np.bincount(np.maximum(od, 0)),
    )


@dataclass
class TrajectoryRecord:
    n: int
    seed: int | None
    i: int
    t: float
    Q: int
    R: float
    S: float
    q: float
    r: float
    s: float
    devQ: float
    devR: float
    devS: float
    minY: int
    maxY: int
    meanY: float
    minX: int
    maxX: int
    meanXuv: float
    maxYuv: float
    stats_exact: bool = True
    band_flags: dict = field(default_factory=dict)


def deviation_report(stats: GlobalStats, ctx: ScalingContext,
                     deg: DegreeStats | None = None,
                     codeg: dict | None = None,
                     seed: int | None = None,
                     params: scaling.ErrorParams | None = None) -> TrajectoryRecord:
    """Per-variable deviations (V - TV)/v, plus reporting-only band flags.

    The band flags compare |V - TV| against the e_V band in log-space;
    at desk scale those bands exceed 1 and the flags are informational.
    """
    params = params or scaling.ErrorParams()
    q = scaling.scaling_of(VariableKind.Q, ctx)
    r = scaling.scaling_of(VariableKind.R, ctx)
    s = scaling.scaling_of(VariableKind.S, ctx)
    tq = scaling.tracking_value(VariableKind.Q, stats.Q, ctx)
    tr = scaling.tracking_value(VariableKind.R, stats.Q, ctx)
    ts = scaling.tracking_value(VariableKind.S, stats.Q, ctx)
    devQ = (stats.Q - tq) / q
    devR = (stats.R - tr) / r if r > 0 else 0.0
    devS = (stats.S - ts) / s if s > 0 else 0.0
    flags = {}
    for kind, v_, tv, obs in (
        (VariableKind.Q, q, tq, stats.Q),
        (VariableKind.R, r, tr, stats.R),
        (VariableKind.S, s, ts, stats.S),
    ):
        band = scaling.error_band(kind, ctx, params)
        dev = abs(obs - tv)
        ln_dev = math.log(dev) if dev > 0 else -math.inf
        ln_allowed = band.ln_e + (math.log(v_) if v_ > 0 else -math.inf)
        flags[kind.value] = bool(ln_dev < ln_allowed)
    deg = deg if deg is not None else DegreeStats(0, 0, 0.0, 0, 0, 0.0,
                                                 np.zeros(1, np.int64),
                                                 np.zeros(1, np.int64))
    codeg = codeg or {}
    return TrajectoryRecord(
        n=ctx.n, seed=seed, i=ctx.i, t=ctx.t,
        Q=stats.Q, R=stats.R, S=stats.S, q=q, r=r, s=s,
        devQ=devQ, devR=devR, devS=devS,
        minY=deg.min_deg, maxY=deg.max_deg, meanY=deg.mean_deg,
        minX=deg.min_open, maxX=deg.max_open,
        meanXuv=codeg.get("meanXuv", 0.0), maxYuv=codeg.get("maxYuv", 0.0),
        stats_exact=stats.exact, band_flags=flags,
    )


TRAJECTORY_HEADER = (
    "n,seed,i,t,Q,R,S,q,r,s,devQ,devR,devS,"
    "minY,maxY,meanY,minX,maxX,meanXuv,maxYuv"
)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".9g")


def trajectory_row(rec: TrajectoryRecord) -> str:
    cells = [
        rec.n, rec.seed if rec.seed is not None else -1, rec.i, rec.t,
        rec.Q, rec.R, rec.S, rec.q, rec.r, rec.s,
        rec.devQ, rec.devR, rec.devS,
        rec.minY, rec.maxY, rec.meanY, rec.minX, rec.maxX,
        rec.meanXuv, rec.maxYuv,
    ]
    return ",".join(_fmt(c) for c in cells)


def sample_codegrees(store: PairStore, k: int,
                     rng: np.random.Generator) -> dict:
    """Mean/max of X_uv and Y_uv over k uniformly sampled vertex pairs."""
    if k <= 0:
        return {"meanXuv": 0.0, "maxXuv": 0.0, "meanYuv": 0.0, "maxYuv": 0.0}
    idx = rng.integers(store.total_pairs, size=k)
    a, b = _pairs_from_indices(np.asarray(idx, dtype=np.int64), store.n)
    xs = np.empty(k, dtype=np.int64)
    ys = np.empty(k, dtype=np.int64)
    for j in range(k):
        x_uv, y_uv, _ = codegree(store, int(a[j]), int(b[j]))
        xs[j] = x_uv
        ys[j] = y_uv
    return {
        "meanXuv": float(xs.mean()),
        "maxXuv": float(xs.max()),
        "meanYuv": float(ys.mean()),
        "maxYuv": float(ys.max()),
    }


def make_snapshot_fn(seed: int | None, stats_rng: np.random.Generator,
                     sample_pairs: int = 1024,
                     r_exact_cap: int = 1024,
                     s_exact_cap: int = 2048,
                     sample_k: int = 4096,
                     params: scaling.ErrorParams | None = None):
    """Snapshot callback computing a full TrajectoryRecord.

    Exact R/S below their caps, sampled estimates above; the sampling
    stream is independent of the process stream.
    """

    def snapshot(state) -> TrajectoryRecord:
        store = state.store
        ctx = scaling.context(store.n, state.i)
        if store.n <= min(r_exact_cap, s_exact_cap):
            stats = global_stats(store, "exact")
        else:
            stats = global_stats(store, "sampled", k=sample_k, rng=stats_rng)
        deg = degree_stats(store)
        codeg = sample_codegrees(store, sample_pairs, stats_rng)
        return deviation_report(stats, ctx, deg, codeg, seed=seed,
                                params=params)

    return snapshot
