"""Drivers for the triangle-free process and its Erdős–Rényi baseline.

One run owns a :class:`~trifree.pairstore.PairStore`, a step counter and a
seeded RNG stream.  The RNG family is pinned to numpy's PCG64 (PCG XSL RR
128/64); per-run substreams are derived from ``(master_seed, run_index)``
through ``SeedSequence`` spawn keys, so sweeps are reproducible regardless
of scheduling.  Each run keeps two independent substreams: one drives the
edge selections, the other any snapshot-time sampling, so computing
statistics can never perturb the trajectory.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import bits
from .pairstore import (
    CLOSED,
    EDGE,
    OPEN,
    OpenSampler,
    PairStore,
    ProcessTerminated,
    pair_from_index,
)

__all__ = [
    "ProcessState",
    "TerminationReport",
    "SnapshotSchedule",
    "default_schedule",
    "pinned_rng",
    "run_streams",
    "NaiveEngine",
    "equivalence_run",
    "er_process",
    "coupled_run",
    "verify_final",
]

FORMAT_VERSION = 1


def pinned_rng(seed) -> np.random.Generator:
    """Generator over the pinned PCG64 bit stream.

    ``seed`` may be an int, a SeedSequence, or an existing Generator
    (returned unchanged).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def run_streams(master_seed: int, run_index: int):
    """(process_rng, stats_rng) for one run of a seeded sweep."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(run_index,))
    child_process, child_stats = ss.spawn(2)
    return pinned_rng(child_process), pinned_rng(child_stats)


@dataclass(frozen=True)
class SnapshotSchedule:
    """Step indices at which statistics are computed.

    ``steps`` is strictly increasing; steps beyond the actual termination
    simply never fire.  Step 0 and the termination step are always
    emitted when the corresponding flags are set.
    """

    steps: tuple[int, ...] = ()
    include_zero: bool = True
    include_termination: bool = True

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.steps, self.steps[1:])):
            raise ValueError("schedule steps must be strictly increasing")


def default_schedule(n: int, points: int = 128) -> SnapshotSchedule:
    """Geometric grid of snapshot steps from n^(5/4) up to past termination.

    The grid starts where trajectory tracking starts (i = n^(5/4)) and ends
    at 0.5*sqrt(ln n)*n^(3/2), comfortably above the typical termination
    step, so the late trajectory is covered at every n.
    """
    lo = int(np.ceil(n ** 1.25))
    hi = int(np.ceil(0.5 * np.sqrt(np.log(n)) * n ** 1.5))
    if hi <= lo:
        return SnapshotSchedule(steps=())
    grid = np.unique(
        np.rint(np.geomspace(lo, hi, num=points)).astype(np.int64)
    )
    return SnapshotSchedule(steps=tuple(int(s) for s in grid))


@dataclass
class TerminationReport:
    n: int
    seed: int | None
    steps: int
    final_edges: int
    runtime_ms: float
    rejected: int | None = None
    snapshots: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        out = {
            "format_version": FORMAT_VERSION,
            "n": self.n,
            "seed": self.seed,
            "steps": self.steps,
            "final_edges": self.final_edges,
            "runtime_ms": self.runtime_ms,
        }
        if self.rejected is not None:
            out["rejected"] = self.rejected
        return out


class SinkFailure(RuntimeError):
    """A snapshot sink raised; the run aborted with partial outputs."""

    def __init__(self, step: int, cause: BaseException):
        super().__init__(f"snapshot sink failed at step {step}: {cause!r}")
        self.step = step
        self.cause = cause


class ProcessState:
    """One run of the triangle-free process.

    Identical (n, seed) produce bit-identical edge sequences.  ``history``
    records the selected pairs per step and defaults to on for n <= 4096.
    """

    def __init__(
        self,
        n: int,
        seed=0,
        *,
        stats_rng: np.random.Generator | None = None,
        record_history: bool | None = None,
        seed_label: int | None = None,
    ):
        self.store = PairStore(n)
        self.sampler = OpenSampler(self.store)
        self.rng = pinned_rng(seed)
        self.stats_rng = stats_rng if stats_rng is not None else pinned_rng(
            np.random.SeedSequence(seed if isinstance(seed, int) else 0,
                                   spawn_key=(0x5747,))
        )
        self.i = 0
        self.seed_label = seed_label if seed_label is not None else (
            seed if isinstance(seed, int) else None
        )
        if record_history is None:
            record_history = n <= 4096
        self.history: list[tuple[int, int]] | None = (
            [] if record_history else None
        )

    @property
    def n(self) -> int:
        return self.store.n

    def step(self) -> tuple[int, int]:
        """Select one uniform open pair, add it as an edge."""
        if self.store.open_count == 0:
            raise ProcessTerminated(f"process terminated after {self.i} steps")
        u, v = self.sampler.sample(self.rng)
        self.sampler.remove_last_sampled()
        k, _, _ = self.store.add_edge_arrays(u, v)
        self.sampler.notify_closed(k)
        self.i += 1
        if self.history is not None:
            self.history.append((u, v))
        return (u, v)

    def run_to_completion(
        self,
        schedule: SnapshotSchedule | None = None,
        sink: Callable[[dict], None] | None = None,
        snapshot_fn: Callable[["ProcessState"], dict] | None = None,
    ) -> TerminationReport:
        """Run until no open pair remains.

        At every scheduled step (plus step 0 and termination when enabled)
        ``snapshot_fn(self)`` is evaluated and handed to ``sink``.  Sink
        errors abort the run with :class:`SinkFailure`.
        """
        t0 = time.perf_counter()
        snapshots: list = []
        if schedule is None:
            schedule = SnapshotSchedule(steps=())
        if snapshot_fn is None:
            snapshot_fn = _basic_snapshot

        def emit():
            try:
                rec = snapshot_fn(self)
                snapshots.append(rec)
                if sink is not None:
                    sink(rec)
            except Exception as exc:  # sink or stats failure: flag partials
                raise SinkFailure(self.i, exc) from exc

        pending = iter(schedule.steps)
        next_step = next(pending, None)
        while next_step is not None and next_step <= self.i:
            next_step = next(pending, None)
        if schedule.include_zero and self.i == 0:
            emit()
        while self.store.open_count > 0:
            self.step()
            if next_step is not None and self.i == next_step:
                emit()
                next_step = next(pending, None)
        if schedule.include_termination:
            emit()
        runtime_ms = 1000.0 * (time.perf_counter() - t0)
        return TerminationReport(
            n=self.n,
            seed=self.seed_label,
            steps=self.i,
            final_edges=self.store.edge_count,
            runtime_ms=runtime_ms,
            snapshots=snapshots,
        )


def _basic_snapshot(state: ProcessState) -> dict:
    n = state.n
    return {
        "i": state.i,
        "t": state.i * n ** -1.5,
        "Q": 2 * state.store.open_count,
        "edges": state.store.edge_count,
        "closed": state.store.closed_count,
    }


# -- naive oracle engine ----------------------------------------------------


class NaiveEngine:
    """Full-rescan reference engine, usable only at small n.

    The open set is recomputed from the edge list by brute force at every
    step and kept as a sorted list of flat pair indices; selection is by
    index into that list.
    """

    def __init__(self, n: int):
        self.n = n
        self.edges: list[tuple[int, int]] = []
        self.adj = [set() for _ in range(n)]
        self.i = 0

    def open_pairs_sorted(self) -> list[int]:
        from .pairstore import pair_index

        out = []
        for u in range(self.n - 1):
            au = self.adj[u]
            for v in range(u + 1, self.n):
                if v in au:
                    continue
                if au & self.adj[v]:
                    continue
                out.append(pair_index(u, v, self.n))
        return out

    def add_pair(self, u: int, v: int) -> None:
        self.adj[u].add(v)
        self.adj[v].add(u)
        self.edges.append((u, v) if u < v else (v, u))
        self.i += 1


def equivalence_run(n: int, seed: int, max_steps: int | None = None):
    """Drive the optimised engine and the naive oracle on one index stream.

    Both engines consume the same stream of uniform index draws: at each
    step the stream yields j in [0, open_count) and each engine selects
    the j-th open pair of *its own* open set in sorted flat-index order.
    Identical runs certify the optimised incremental bookkeeping (status
    transitions, counters) against full recomputation.  Returns None on
    success, else a dict with the first mismatch (seed, step, detail).
    """
    rng = pinned_rng(seed)
    state = ProcessState(n, seed=rng, record_history=True)
    oracle = NaiveEngine(n)
    step = 0
    while True:
        oracle_open = oracle.open_pairs_sorted()
        if 2 * len(oracle_open) != 2 * state.store.open_count:
            return {
                "seed": seed,
                "step": step,
                "detail": "open counts diverged: "
                f"oracle={len(oracle_open)} engine={state.store.open_count}",
            }
        # cross-check the engine's full status array against brute force
        if not np.array_equal(
            state.store.status, state.store.recompute_brute_force()
        ):
            return {"seed": seed, "step": step, "detail": "status array mismatch"}
        if not state.store.counters_consistent():
            return {"seed": seed, "step": step, "detail": "counter identity broken"}
        if state.store.open_count == 0:
            return None
        if max_steps is not None and step >= max_steps:
            return None
        j = int(rng.integers(len(oracle_open)))
        eng_pair = state.store.kth_open_pair(j)
        ora_pair = pair_from_index(oracle_open[j], n)
        if eng_pair != ora_pair:
            return {
                "seed": seed,
                "step": step,
                "detail": f"selected pairs diverged: {eng_pair} vs {ora_pair}",
            }
        k, _, _ = state.store.add_edge_arrays(*eng_pair)
        state.sampler.notify_closed(k + 1)
        state.i += 1
        oracle.add_pair(*ora_pair)
        step += 1


# -- Erdős–Rényi baseline and coupling ---------------------------------------


@dataclass
class ERResult:
    n: int
    edges: list[tuple[int, int]]
    triangle_count: int


def er_process(n: int, j: int, rng) -> ERResult:
    """Erdős–Rényi graph process state after j edges (triangles allowed)."""
    total = n * (n - 1) // 2
    if not 0 <= j <= total:
        raise ValueError(f"edge count j={j} outside [0, {total}]")
    rng = pinned_rng(rng)
    if j > total // 8:
        chosen = rng.permutation(total)[:j]
    else:
        seen = set()
        chosen = []
        while len(chosen) < j:
            k = int(rng.integers(total))
            if k not in seen:
                seen.add(k)
                chosen.append(k)
        chosen = np.array(chosen, dtype=np.int64)
    edges = [pair_from_index(int(k), n) for k in chosen]
    rows = bits.pack_adjacency(n, edges)
    tri3 = sum(bits.and_popcount(rows[u], rows[v]) for u, v in edges)
    return ERResult(n=n, edges=edges, triangle_count=tri3 // 3)


def coupled_run(n: int, rng, seed_label: int | None = None) -> TerminationReport:
    """Triangle-free process via rejection from the Erdős–Rényi process.

    Pairs are proposed uniformly among never-proposed pairs (equivalently,
    in one uniform random permutation of all pairs); a closed proposal is
    rejected and recorded.  The accepted sequence has exactly the law of
    the triangle-free process.
    """
    t0 = time.perf_counter()
    rng = pinned_rng(rng)
    store = PairStore(n)
    rejected = 0
    for k in rng.permutation(store.total_pairs):
        s = store.status[k]
        if s == OPEN:
            u, v = pair_from_index(int(k), n)
            store.add_edge_arrays(u, v)
        elif s == CLOSED:
            rejected += 1
    report = TerminationReport(
        n=n,
        seed=seed_label,
        steps=store.edge_count,
        final_edges=store.edge_count,
        runtime_ms=1000.0 * (time.perf_counter() - t0),
        rejected=rejected,
    )
    report.store = store  # type: ignore[attr-defined]
    return report


# -- final-graph verification -------------------------------------------------


def verify_final(store: PairStore) -> tuple[bool, str]:
    """Check the terminal-graph property by brute force on the edge list.

    Triangle-free: no edge's endpoints share a neighbour.  Maximal: every
    non-edge's endpoints share a neighbour.  Both checks read only the
    edge list (not the store's incremental status), so together they
    certify a maximal triangle-free graph.
    """
    n = store.n
    rows = bits.pack_adjacency(n, store.edges)
    for u, v in store.edges:
        if bits.and_popcount(rows[u], rows[v]):
            return False, f"triangle at edge ({u},{v})"
    # union over neighbours w of N(w): vertices with a common neighbour with u
    nb = bits.row_bytes(n)
    adj_sets = [[] for _ in range(n)]
    for u, v in store.edges:
        adj_sets[u].append(v)
        adj_sets[v].append(u)
    all_mask = bits.pack_bool(np.ones(n, dtype=bool))
    if len(all_mask) < nb:  # pad to full row width
        all_mask = np.concatenate([all_mask, np.zeros(nb - len(all_mask), np.uint8)])
    for u in range(n):
        nbrs = adj_sets[u]
        if nbrs:
            covered = np.bitwise_or.reduce(rows[nbrs], axis=0)
        else:
            covered = np.zeros(nb, dtype=np.uint8)
        # pairs {u,v} must be edges or have a common neighbour
        ok = covered | rows[u]
        ok[u >> 3] |= 1 << (u & 7)
        bad = all_mask & ~ok
        if bits.popcount(bad):
            v = int(np.flatnonzero(np.unpackbits(bad, bitorder="little")[:n])[0])
            return False, f"open non-edge survives: ({u},{v})"
    return True, "maximal triangle-free"
