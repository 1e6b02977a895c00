"""Stacking words: parsing, weights, boundedness, realization, counting.

A stacking word is a sequence over {O, E, Y^I, Y^O, X^I, X^O} encoding an
iterated one-vertex extension.  The automaton keeps an *active rung* (an
open pair) and a *last vertex*: O extends by an open-degree vertex whose
single open pair becomes the next rung; E attaches a pendant edge and
terminates; X adds a vertex open to both rung endpoints, Y adds a vertex
open to one endpoint and adjacent to the other.  The superscript picks
whether the next rung touches the last vertex (O, "outer") or the other
rung endpoint (I, "inner").  Realizations are extension patterns based
at the pair (u, v) = vertices (0, 1).

Canonical text form: symbols joined by spaces, e.g. ``"YO XO O E"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

from . import scaling
from .extensions import ExtensionPattern, count_embeddings, make_pattern
from .pairstore import PairStore
from .scaling import ScalingContext, VariableKind

__all__ = [
    "StackingWord",
    "WordError",
    "parse_word",
    "weights",
    "has_m_fan",
    "is_m_bounded",
    "Realization",
    "realize",
    "count",
    "tracking_value",
    "enumerate_m_bounded",
    "band_spec",
    "backward_extension",
]

O, E, YI, YO, XI, XO = "O", "E", "YI", "YO", "XI", "XO"
ALPHABET = (O, E, YI, YO, XI, XO)
FIRST_ALPHABET = (O, E, YO, XO)
WEIGHT1 = frozenset({O, E})
WEIGHT2 = frozenset({XO, YO})
INNER = frozenset({XI, YI})


class WordError(ValueError):
    pass


@dataclass(frozen=True)
class StackingWord:
    symbols: tuple[str, ...]

    @property
    def w1(self) -> int:
        return sum(1 for s in self.symbols if s in WEIGHT1)

    @property
    def w2(self) -> int:
        return sum(1 for s in self.symbols if s in WEIGHT2)

    @property
    def w(self) -> int:
        return self.w1 + self.w2

    def __len__(self) -> int:
        return len(self.symbols)

    def __str__(self) -> str:
        return " ".join(self.symbols)

    def prefix(self, length: int) -> "StackingWord":
        return StackingWord(self.symbols[:length])


def parse_word(text) -> StackingWord:
    """Validate a symbol sequence (string or iterable of symbols)."""
    if isinstance(text, StackingWord):
        return text
    symbols = tuple(text.split()) if isinstance(text, str) else tuple(text)
    if not symbols:
        raise WordError("empty stacking word")
    for s in symbols:
        if s not in ALPHABET:
            raise WordError(f"unknown symbol {s!r}")
    if symbols[0] not in FIRST_ALPHABET:
        raise WordError(f"first symbol must be one of {FIRST_ALPHABET}")
    if E in symbols[:-1]:
        raise WordError("E may only appear as the last symbol")
    return StackingWord(symbols)


def weights(word: StackingWord) -> tuple[int, int, int]:
    return word.w1, word.w2, word.w


def has_m_fan(word: StackingWord, m: int) -> bool:
    """A window of m+1 symbols in {XO,YO} x {XI,YI}^(m-1) x {XI,YI,XO}."""
    if m < 1:
        raise ValueError("fan parameter must be >= 1")
    s = word.symbols
    for start in range(len(s) - m):
        if s[start] not in WEIGHT2:
            continue
        if all(x in INNER for x in s[start + 1 : start + m]):
            if s[start + m] in (XI, YI, XO):
                return True
    return False


def is_m_bounded(word: StackingWord, m: int) -> tuple[bool, list[str]]:
    """Check conditions (i)-(v); returns (ok, violated condition tags).

    (i) E only last; (ii) OY^I / OX^I only in the final two positions;
    (iii) w <= 2M; (iv) w = 2M forces last symbol in {O, E, X^O, Y^O};
    (v) no M-fan.
    """
    s = word.symbols
    bad = []
    if E in s[:-1]:
        bad.append("i")
    for j in range(len(s) - 1):
        if s[j] == O and s[j + 1] in INNER and j != len(s) - 2:
            bad.append("ii")
            break
    if word.w > 2 * m:
        bad.append("iii")
    if word.w == 2 * m and s[-1] not in (O, E, XO, YO):
        bad.append("iv")
    if has_m_fan(word, m):
        bad.append("v")
    return not bad, bad


@dataclass(frozen=True)
class Realization:
    """A stacking word realized as an extension pattern based at (0, 1).

    Vertex 0 is u, vertex 1 is v, and symbol k (1-based) adds vertex
    k+1.  ``rungs`` lists every rung in creation order starting with the
    base rung (0, 1); non-rung open pairs are stringers.  When the word
    ends with O followed by an X/Y symbol, the two partner pairs and
    their shared vertex beta are marked.
    """

    word: StackingWord
    pattern: ExtensionPattern
    rungs: tuple[tuple[int, int], ...]
    stringer_opens: tuple[tuple[int, int], ...]
    stringer_edges: tuple[tuple[int, int], ...]
    partner_pairs: tuple[tuple[int, int], tuple[int, int]] | None
    beta: int | None
    edge_count: int

    @property
    def vertex_count(self) -> int:
        return len(self.word) + 2


def _pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def realize(word) -> Realization:
    word = parse_word(word)
    opens = [(0, 1)]  # base rung
    edges: list[tuple[int, int]] = []
    rungs = [(0, 1)]
    stringer_opens: list[tuple[int, int]] = []
    stringer_edges: list[tuple[int, int]] = []
    x, y = 0, 1  # active rung, last vertex y
    for k, sym in enumerate(word.symbols, start=1):
        m = k + 1
        if sym == O:
            opens.append(_pair(y, m))
            rungs.append(_pair(y, m))
            x, y = y, m
        elif sym == E:
            edges.append(_pair(y, m))
            stringer_edges.append(_pair(y, m))
        elif sym in (XO, XI):
            opens.append(_pair(x, m))
            opens.append(_pair(y, m))
            if sym == XO:
                rungs.append(_pair(y, m))
                stringer_opens.append(_pair(x, m))
                x, y = y, m
            else:
                rungs.append(_pair(x, m))
                stringer_opens.append(_pair(y, m))
                x, y = x, m
        else:  # YO / YI
            if sym == YO:
                opens.append(_pair(y, m))
                edges.append(_pair(x, m))
                stringer_edges.append(_pair(x, m))
                rungs.append(_pair(y, m))
                x, y = y, m
            else:
                opens.append(_pair(x, m))
                edges.append(_pair(y, m))
                stringer_edges.append(_pair(y, m))
                rungs.append(_pair(x, m))
                x, y = x, m
    partner = None
    beta = None
    L = len(word)
    if L >= 2 and word.symbols[L - 2] == O and word.symbols[L - 1] not in (O, E):
        beta = L - 1  # vertex added by symbol L-2 (or v when L = 2)
        partner = (_pair(beta, L), _pair(beta, L + 1))
    pattern = make_pattern(L + 2, (0, 1), edges, opens,
                           label=f"S[{word}]")
    return Realization(
        word=word,
        pattern=pattern,
        rungs=tuple(rungs),
        stringer_opens=tuple(stringer_opens),
        stringer_edges=tuple(stringer_edges),
        partner_pairs=partner,
        beta=beta,
        edge_count=len(edges),
    )


def count(store: PairStore, u: int, v: int, word) -> int:
    """S^pi_{uv}: embeddings of the realization with (0,1) -> (u,v)."""
    real = realize(word)
    return count_embeddings(store, real.pattern, {0: u, 1: v})


_ONE_VERTEX_KIND = {O: VariableKind.XU, E: VariableKind.YU,
                    XO: VariableKind.XUV, XI: VariableKind.XUV,
                    YO: VariableKind.YUV, YI: VariableKind.YUV}


def _unit_tracking(sym: str, q_obs: float, ctx: ScalingContext) -> float:
    """Tracking factor of the one-vertex extension a symbol appends."""
    return scaling.tracking_value(_ONE_VERTEX_KIND[sym], q_obs, ctx)


def _prefix_counts_by_last(store: PairStore, u: int, v: int,
                           word: StackingWord) -> dict[int, int]:
    """Embedding counts of the prefix realization, grouped by its last
    vertex's image (the base vertex v for the empty prefix)."""
    if len(word) == 0:
        base = make_pattern(2, (0, 1), [], [(0, 1)])
        n = count_embeddings(store, base, {0: u, 1: v})
        return {v: 1} if n else {}
    real = realize(word)
    return count_embeddings(store, real.pattern, {0: u, 1: v},
                            group_by=len(word) + 1)


def tracking_value(store: PairStore, u: int, v: int, word,
                   ctx: ScalingContext) -> float:
    """Recursive tracking value T S^pi_{uv}.

    For one-symbol words this is the corresponding one-vertex tracking
    value.  Otherwise pi = pi^- U tracks S^{pi^-} * TU, except when U
    rides on the rung just created by an O (partner pairs), where the
    open-degree of the shared vertex enters squared (or open-degree
    times degree for Y^O), scaled by Q n^-2 or 2t n^-1/2.
    """
    word = parse_word(word)
    q_obs = 2 * store.open_count
    L = len(word)
    if L == 1:
        return _unit_tracking(word.symbols[0], q_obs, ctx)
    last = word.symbols[-1]
    if word.symbols[L - 2] == O and last not in (O, E):
        counts = _prefix_counts_by_last(store, u, v, word.prefix(L - 2))
        n = ctx.n
        if last in (XI, XO):
            factor = q_obs / (n * n)
            return factor * sum(
                c * int(store.open_deg[b]) ** 2 for b, c in counts.items()
            )
        if last == YI:
            factor = 2.0 * ctx.t / math.sqrt(n)
            return factor * sum(
                c * int(store.open_deg[b]) ** 2 for b, c in counts.items()
            )
        # last == YO
        factor = q_obs / (n * n)
        return factor * sum(
            c * int(store.open_deg[b]) * store.degree(b)
            for b, c in counts.items()
        )
    prefix_count = count(store, u, v, word.prefix(L - 1))
    return prefix_count * _unit_tracking(last, q_obs, ctx)


def enumerate_m_bounded(m: int, max_len: int | None = None) -> Iterator[StackingWord]:
    """Lazily yield every M-bounded word up to max_len (default 2M^2).

    Pruning uses the monotone structure: weight never decreases, fans
    persist, an O-inner pair stops being final once extended, E
    terminates, and at weight 2M no extension stays bounded.
    """
    cap = 2 * m * m
    max_len = cap if max_len is None else min(max_len, cap)

    def extend(symbols: list[str]) -> Iterator[StackingWord]:
        word = StackingWord(tuple(symbols))
        ok, _ = is_m_bounded(word, m)
        if ok:
            yield word
        if len(symbols) >= max_len:
            return
        if symbols[-1] == E:
            return
        w = word.w
        if w >= 2 * m:  # any extension violates (iii) or (iv)
            return
        if has_m_fan(word, m):
            return
        if (len(symbols) >= 2 and symbols[-2] == O and symbols[-1] in INNER):
            return  # the O-inner pair would leave the final two positions
        for sym in ALPHABET:
            symbols.append(sym)
            yield from extend(symbols)
            symbols.pop()

    for first in FIRST_ALPHABET:
        yield from extend([first])


def band_spec(word) -> scaling.BandSpec:
    """Error-band spec of a stacking variable: c = L^15 9^(4M^2-|pi|-M w1)."""
    word = parse_word(word)
    real = realize(word)
    return scaling.stacking_band_spec(str(word), len(word), word.w1,
                                      real.edge_count)


def backward_extension(word, m: int | None = None) -> ExtensionPattern:
    """The backward extension: rebase onto {u, v} plus the last rung's
    endpoints and release the last rung itself.

    Defined for words with an active rung (no terminal E).  When ``m``
    is given the word's weight is checked to be exactly 2m, the case the
    theory needs."""
    word = parse_word(word)
    if word.symbols[-1] == E:
        raise WordError("terminal E leaves no active rung")
    if m is not None and word.w != 2 * m:
        raise WordError(f"weight {word.w} != 2m = {2 * m}")
    real = realize(word)
    x, y = real.rungs[-1]
    base = tuple(sorted({0, 1, x, y}))
    opens = tuple(p for p in real.pattern.open_pairs if p != (min(x, y), max(x, y)))
    return make_pattern(real.pattern.vertex_count, base,
                        real.pattern.j_edges, opens,
                        label=f"B[{word}]")
