"""Pair-state bookkeeping for the triangle-free process.

A ``PairStore`` tracks the status of every unordered vertex pair of an
n-vertex graph as one of Open / Edge / Closed, together with adjacency
lists and exact counters.  A pair is *open* if adding it as an edge
creates no triangle, *closed* if it is a non-edge whose endpoints already
have a common neighbour.  ``add_edge`` keeps this invariant incrementally:
it only ever moves pairs Open -> Edge (the chosen pair) or Open -> Closed
(pairs now completing a cherry), so the edge set stays triangle-free.

``OpenSampler`` supplies amortised O(1) uniform sampling over the open
pairs via a lazy-deletion candidate list with periodic compaction.
"""

from __future__ import annotations

import math
from enum import IntEnum

import numpy as np

__all__ = [
    "PairStatus",
    "PairStore",
    "OpenSampler",
    "pair_index",
    "pair_from_index",
]

OPEN = 0
EDGE = 1
CLOSED = 2


class PairStatus(IntEnum):
    OPEN = OPEN
    EDGE = EDGE
    CLOSED = CLOSED


class ProcessTerminated(RuntimeError):
    """Raised when an open pair is requested but none remain."""


def pair_index(u: int, v: int, n: int) -> int:
    """Flat index of pair {u, v} in the upper-triangular layout.

    Row u occupies the block [u*n - u*(u+1)/2, ...) of length n-u-1.
    """
    if u > v:
        u, v = v, u
    if u == v:
        raise ValueError(f"not a pair: ({u}, {v})")
    return u * n - (u * (u + 1)) // 2 + (v - u - 1)


def pair_from_index(k: int, n: int) -> tuple[int, int]:
    """Inverse of :func:`pair_index` (scalar, used by tests and sampling)."""
    # Solve for the row u: largest u with u*n - u*(u+1)/2 <= k.
    u = int((2 * n - 1 - math.sqrt((2 * n - 1) ** 2 - 8 * k)) // 2)
    while u > 0 and u * n - (u * (u + 1)) // 2 > k:  # float-rounding guards
        u -= 1
    while k - (u * n - (u * (u + 1)) // 2) >= n - u - 1:
        u += 1
    base = u * n - (u * (u + 1)) // 2
    return u, u + 1 + (k - base)


class PairStore:
    """Tri-state pair status plus adjacency for an evolving graph.

    Vertices are 0-based.  The status array is flat upper-triangular,
    one byte per pair.  Adjacency buffers are append-only (the process
    never removes edges) and grow by doubling.
    """

    def __init__(self, n: int):
        if n < 2:
            raise ValueError(f"need at least 2 vertices, got n={n}")
        self.n = n
        self.total_pairs = n * (n - 1) // 2
        self.status = np.zeros(self.total_pairs, dtype=np.uint8)
        self.open_count = self.total_pairs
        self.edge_count = 0
        self.closed_count = 0
        self.edges: list[tuple[int, int]] = []
        # adjacency: one growable int64 buffer per vertex + fill counts
        self._adj = [np.empty(4, dtype=np.int64) for _ in range(n)]
        self._deg = np.zeros(n, dtype=np.int64)
        # open degree X_u, maintained exactly on every transition
        self.open_deg = np.full(n, n - 1, dtype=np.int64)
        # row start offsets into the flat status array
        self._row_base = np.zeros(n, dtype=np.int64)
        for u in range(1, n):
            self._row_base[u] = self._row_base[u - 1] + (n - u)

    # -- indexing ---------------------------------------------------------

    def index_of(self, u: int, v: int) -> int:
        return pair_index(u, v, self.n)

    def _indices_with(self, u: int, others: np.ndarray) -> np.ndarray:
        """Flat indices of pairs {u, w} for an int64 array of vertices w != u."""
        lo = np.minimum(u, others)
        hi = np.maximum(u, others)
        hi -= 1
        hi -= lo
        hi += self._row_base[lo]
        return hi

    # -- queries ----------------------------------------------------------

    def pair_status(self, u: int, v: int) -> PairStatus:
        if u == v:
            raise ValueError(f"not a pair: ({u}, {v})")
        return PairStatus(int(self.status[pair_index(u, v, self.n)]))

    def statuses_with(self, u: int, others: np.ndarray) -> np.ndarray:
        """Statuses of pairs {u, w} for an array of vertices w != u."""
        return self.status[self._indices_with(u, np.asarray(others, np.int64))]

    def is_open(self, u: int, v: int) -> bool:
        return self.status[pair_index(u, v, self.n)] == OPEN

    def is_edge(self, u: int, v: int) -> bool:
        return self.status[pair_index(u, v, self.n)] == EDGE

    def neighbors(self, u: int) -> np.ndarray:
        """Edge-neighbours of u (insertion order, read-only view)."""
        return self._adj[u][: self._deg[u]]

    def degree(self, u: int) -> int:
        return int(self._deg[u])

    def degrees(self) -> np.ndarray:
        return self._deg.copy()

    def status_row(self, u: int) -> np.ndarray:
        """Statuses of pairs {u, w} for all w, with position u marked CLOSED.

        Length-n uint8 array; entry w is the status of pair {u, w}.
        The diagonal placeholder lets callers mask it out uniformly.
        """
        n = self.n
        row = np.empty(n, dtype=np.uint8)
        row[u] = CLOSED
        if u > 0:
            lows = np.arange(u, dtype=np.int64)
            row[:u] = self.status[self._row_base[lows] + (u - lows - 1)]
        if u < n - 1:
            base = self._row_base[u]
            row[u + 1 :] = self.status[base : base + (n - u - 1)]
        return row

    def kth_open_pair(self, k: int) -> tuple[int, int]:
        """The k-th open pair in sorted flat-index order (O(P); oracle use)."""
        open_idx = np.flatnonzero(self.status == OPEN)
        return pair_from_index(int(open_idx[k]), self.n)

    def open_pair_indices(self) -> np.ndarray:
        return np.flatnonzero(self.status == OPEN)

    # -- mutation ---------------------------------------------------------

    def _append_neighbor(self, u: int, v: int) -> None:
        buf = self._adj[u]
        d = self._deg[u]
        if d == len(buf):
            grown = np.empty(2 * len(buf), dtype=np.int32)
            grown[:d] = buf
            self._adj[u] = grown
            buf = grown
        buf[d] = v
        self._deg[u] += 1

    def add_edge(self, u: int, v: int) -> list[tuple[int, int]]:
        """Turn the open pair {u, v} into an edge; close completed cherries.

        Returns the list of pairs that transitioned Open -> Closed,
        each in canonical (min, max) order.
        """
        count, hit1, hit2 = self.add_edge_arrays(u, v)
        out = [(u, w) if u < w else (w, u) for w in hit1.tolist()]
        out += [(v, w) if v < w else (w, v) for w in hit2.tolist()]
        return out

    def add_edge_arrays(
        self, u: int, v: int
    ) -> tuple[int, np.ndarray, np.ndarray]:
        """Hot-path variant of :meth:`add_edge`.

        Returns (k, hit1, hit2): k pairs transitioned Open -> Closed,
        namely {u, w} for w in hit1 and {v, w} for w in hit2.
        """
        e = pair_index(u, v, self.n)
        if self.status[e] != OPEN:
            raise ValueError(
                f"pair ({u},{v}) is {PairStatus(int(self.status[e])).name}, "
                "not OPEN; sampler or caller is corrupted"
            )
        status = self.status
        # neighbours w of v close {u, w}; neighbours w of u close {w, v}
        nv = self._adj[v][: self._deg[v]]
        idx_uw = self._indices_with(u, nv)
        m1 = status[idx_uw] == OPEN
        hit1 = nv[m1]
        status[idx_uw[m1]] = CLOSED

        nu = self._adj[u][: self._deg[u]]
        idx_wv = self._indices_with(v, nu)
        m2 = status[idx_wv] == OPEN
        hit2 = nu[m2]
        status[idx_wv[m2]] = CLOSED

        k1 = len(hit1)
        k2 = len(hit2)
        status[e] = EDGE
        self._append_neighbor(u, v)
        self._append_neighbor(v, u)
        self.edges.append((u, v) if u < v else (v, u))

        self.open_count -= k1 + k2 + 1
        self.closed_count += k1 + k2
        self.edge_count += 1
        # open-degree updates: the edge removes one open pair at u and v;
        # each closure removes one at u (resp. v) and one at the witness w.
        self.open_deg[u] -= k1 + 1
        self.open_deg[v] -= k2 + 1
        if k1:  # entries of hit1 are distinct, so fancy indexing is safe
            self.open_deg[hit1] -= 1
        if k2:
            self.open_deg[hit2] -= 1
        return k1 + k2, hit1, hit2

    # -- verification and export ------------------------------------------

    def recompute_brute_force(self) -> np.ndarray:
        """Status of every pair from the edge list alone (oracle path).

        Edge iff added; Closed iff non-edge whose endpoints share an
        edge-neighbour; Open otherwise.
        """
        n = self.n
        adj = np.zeros((n, n), dtype=bool)
        for a, b in self.edges:
            adj[a, b] = adj[b, a] = True
        out = np.empty(self.total_pairs, dtype=np.uint8)
        common = adj @ adj  # common[u,v] = number of shared neighbours > 0
        for u in range(n - 1):
            base = self._row_base[u]
            sl = slice(base, base + (n - u - 1))
            row = np.where(
                adj[u, u + 1 :], EDGE, np.where(common[u, u + 1 :], CLOSED, OPEN)
            )
            out[sl] = row
        return out

    def counters_consistent(self) -> bool:
        return (
            self.open_count + self.edge_count + self.closed_count
            == self.total_pairs
            and self.edge_count == len(self.edges)
        )

    def export_edges(self) -> str:
        """Edge list as text: one ``u v`` line per edge, insertion order."""
        return "".join(f"{u} {v}\n" for u, v in self.edges)


def new_empty(n: int) -> PairStore:
    """Fresh store with all pairs open (the process's initial state)."""
    return PairStore(n)


class OpenSampler:
    """Uniform sampling over open pairs via a lazy-deletion list.

    The candidate list holds flat pair indices and contains every open
    pair exactly once, possibly interleaved with stale (no longer open)
    entries.  Until the first compaction the list is the implicit
    identity [0, total_pairs), which avoids materialising an array the
    size of all pairs.  Sampling draws a uniform slot; a stale hit is
    swap-removed and the draw repeated.  When more than half the
    materialised list is stale it is compacted in one vectorised pass.
    """

    def __init__(self, store: PairStore):
        self.store = store
        self._cand: np.ndarray | None = None  # None = implicit identity
        self._len = store.total_pairs
        self._stale = store.total_pairs - store.open_count

    @property
    def candidate_count(self) -> int:
        return self._len

    @property
    def stale_count(self) -> int:
        return self._stale

    def notify_closed(self, k: int) -> None:
        """Record that k formerly open pairs are now stale in the list."""
        self._stale += k

    def _materialise(self) -> None:
        # int32 suffices: flat pair indices stay below 2^31 for n <= 2^16
        self._cand = np.flatnonzero(self.store.status == OPEN).astype(np.int32)
        self._len = len(self._cand)
        self._stale = 0

    def _compact(self) -> None:
        if self._cand is None:
            self._materialise()
            return
        live = self._cand[: self._len]
        self._cand = live[self.store.status[live] == OPEN]
        self._len = len(self._cand)
        self._stale = 0

    def sample(self, rng: np.random.Generator) -> tuple[int, int]:
        """Draw a uniformly random open pair; assumes one exists."""
        store = self.store
        if store.open_count == 0:
            raise ProcessTerminated("no open pairs remain")
        if 2 * self._stale > self._len:
            self._compact()
        status = store.status
        if self._cand is None:
            while True:  # identity phase: rejection against the status array
                k = int(rng.integers(self._len))
                if status[k] == OPEN:
                    self._last_slot = k
                    return pair_from_index(k, store.n)
        cand = self._cand
        while True:
            j = int(rng.integers(self._len))
            k = int(cand[j])
            if status[k] == OPEN:
                self._last_slot = j
                return pair_from_index(k, store.n)
            # stale: swap-remove and redraw
            self._len -= 1
            cand[j] = cand[self._len]
            self._stale -= 1

    def remove_last_sampled(self) -> None:
        """Drop the pair returned by the last ``sample`` from the list.

        Call after turning that pair into an edge, so it is removed
        eagerly instead of lingering as a stale entry.
        """
        if self._cand is None:
            # identity phase has no explicit entries; the new edge simply
            # becomes a stale identity slot
            self._stale += 1
            if 2 * self._stale > self._len:
                self._materialise()
            return
        j = self._last_slot
        self._len -= 1
        self._cand[j] = self._cand[self._len]

    def live_entries(self) -> np.ndarray:
        """Current non-stale candidate pair indices (for invariant tests)."""
        if self._cand is None:
            return np.flatnonzero(self.store.status == OPEN)
        live = self._cand[: self._len]
        return np.sort(live[self.store.status[live] == OPEN])
