"""Deterministic trajectory formulas for the triangle-free process.

Time is scaled as t = i * n^(-3/2); the edge density proxy is
p = 2t * n^(-1/2) = 2i/n^2 and the open-pair density proxy is
qhat = exp(-4 t^2).  Every variable V we track has a *scaling* v(t)
(the deterministic curve it should follow) and a *tracking value* TV
(a proxy built from the observed ordered open-pair count Q that isolates
V's own fluctuations).  ``log`` is the natural logarithm throughout,
which makes qhat(t_max) = n^(-1/2+eps) exact.

Error bands e_V = f_V + 2 g_V are implemented exactly as defined, but in
log-space: their polylogarithmic constants (c_Q = 4 L^40, stacking
constants like 9^(4M^2-...)) and the theta(t) <= 2 e^K factor overflow
doubles at any feasible n, so bands are *reporting-only* diagnostics,
never pass/fail gates.  Empirical deviation checks use plain relative
tolerances configured by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "ScalingContext",
    "context",
    "VariableKind",
    "scaling_of",
    "tracking_value",
    "t_max",
    "i_max",
    "q_hat_at_t_max",
    "ErrorParams",
    "BandSpec",
    "PhiClass",
    "band_spec_for",
    "stacking_band_spec",
    "controllable_band_spec",
    "ErrorBand",
    "error_band",
    "ln_theta",
    "tracking_start_index",
]

LN9 = math.log(9.0)


@dataclass(frozen=True)
class ScalingContext:
    """(n, i) plus the derived time scalings."""

    n: int
    i: int
    t: float
    p: float
    q_hat: float


def context(n: int, i: int) -> ScalingContext:
    if n < 2 or i < 0:
        raise ValueError(f"bad context (n={n}, i={i})")
    t = i * n ** -1.5
    return ScalingContext(n=n, i=i, t=t, p=2.0 * i / (n * n),
                          q_hat=math.exp(-4.0 * t * t))


def context_at_time(n: int, t: float) -> ScalingContext:
    """Context at an exact (not step-grid) time t."""
    return ScalingContext(n=n, i=int(round(t * n ** 1.5)), t=t,
                          p=2.0 * t / math.sqrt(n),
                          q_hat=math.exp(-4.0 * t * t))


class VariableKind(Enum):
    Q = "Q"          # ordered open pairs
    R = "R"          # ordered triples, 3 open pairs
    S = "S"          # ordered triples, 1 edge + 2 open pairs
    XUV = "Xuv"      # codegree: both pairs open
    YUV = "Yuv"      # codegree: open + edge
    XU = "Xu"        # open degree
    YU = "Yu"        # degree


def scaling_of(kind: VariableKind, ctx: ScalingContext) -> float:
    """The deterministic curve v(t) for each ensemble variable."""
    n, t, q = ctx.n, ctx.t, ctx.q_hat
    if kind is VariableKind.Q:
        return q * n * n
    if kind is VariableKind.R:
        return q ** 3 * n ** 3
    if kind is VariableKind.S:
        return 2.0 * t * q * q * n ** 2.5
    if kind is VariableKind.XUV:
        return q * q * n
    if kind is VariableKind.YUV:
        return 2.0 * t * q * math.sqrt(n)
    if kind is VariableKind.XU:
        return q * n
    if kind is VariableKind.YU:
        return 2.0 * t * math.sqrt(n)
    raise ValueError(f"unsupported kind {kind!r}")


def tracking_value(kind: VariableKind, q_observed: float,
                   ctx: ScalingContext) -> float:
    """Tracking value TV built from the observed ordered open count Q."""
    n, t = ctx.n, ctx.t
    Q = float(q_observed)
    if kind is VariableKind.Q:
        return ctx.q_hat * n * n
    if kind is VariableKind.R:
        return Q ** 3 * float(n) ** -3
    if kind is VariableKind.S:
        return 2.0 * t * n ** -1.5 * Q * Q
    if kind is VariableKind.XUV:
        return Q * Q * float(n) ** -3
    if kind is VariableKind.YUV:
        return 2.0 * t * n ** -1.5 * Q
    if kind is VariableKind.XU:
        return Q / n
    if kind is VariableKind.YU:
        return 2.0 * t * math.sqrt(n)
    raise ValueError(f"unsupported kind {kind!r}")


def t_max(n: int, epsilon: float) -> float:
    """Tracked horizon: the time where qhat = n^(-1/2+eps)."""
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must be in (0, 1/2), got {epsilon}")
    return 0.5 * math.sqrt((0.5 - epsilon) * math.log(n))


def i_max(n: int, epsilon: float) -> int:
    return int(t_max(n, epsilon) * n ** 1.5)


def q_hat_at_t_max(n: int, epsilon: float) -> float:
    """Cross-check identity: qhat(t_max) = n^(-1/2+eps)."""
    return float(n) ** (-0.5 + epsilon)


# -- error-band machinery -----------------------------------------------------


@dataclass(frozen=True)
class ErrorParams:
    """Global band parameters.

    M = 3/epsilon.  K defaults to M^6 + 1 (any K > M^6 is admissible) and
    is overridable: at the default, exp(K) dwarfs every other factor at
    desk scale, which is exactly why bands are reporting-only.
    """

    epsilon: float = 0.1
    delta: float = 0.01
    K: float | None = None

    @property
    def M(self) -> float:
        return 3.0 / self.epsilon

    @property
    def K_value(self) -> float:
        return self.M ** 6 + 1.0 if self.K is None else self.K

    def L(self, n: int) -> float:
        return math.sqrt(math.log(n))


class PhiClass(Enum):
    STACKING = "stacking"          # phi_V = e
    GLOBAL = "global"              # phi_V = e^2
    CONTROLLABLE = "controllable"  # phi_V = e^delta


@dataclass(frozen=True)
class BandSpec:
    """Everything the band formulas need to know about a variable."""

    label: str
    phi: PhiClass
    edge_count: int                 # e(V), the power of t in the g_V factor
    c_kind: str                     # "global" | "stacking" | "one"
    c_coeff: float = 1.0            # global: c = c_coeff * L^40
    length: int = 0                 # stacking: |pi|
    w1: int = 0                     # stacking: 1-weight

    def ln_c(self, n: int, params: ErrorParams) -> float:
        lnL = math.log(params.L(n))
        if self.c_kind == "global":
            return math.log(self.c_coeff) + 40.0 * lnL
        if self.c_kind == "stacking":
            exponent = 4.0 * params.M ** 2 - self.length - params.M * self.w1
            return 15.0 * lnL + exponent * LN9
        if self.c_kind == "one":
            return 0.0
        raise ValueError(f"unknown c_kind {self.c_kind!r}")


_GLOBAL_COEFF = {VariableKind.Q: 4.0, VariableKind.R: 1.0, VariableKind.S: 2.0}
# one-vertex extensions are the length-1 stacking variables
_ONE_VERTEX = {
    VariableKind.XUV: (0, 0),  # [X^O]: w1 = 0, no edge
    VariableKind.YUV: (0, 1),  # [Y^O]: w1 = 0, one edge
    VariableKind.XU: (1, 0),   # [O]:   w1 = 1, no edge
    VariableKind.YU: (1, 1),   # [E]:   w1 = 1, one edge
}


def band_spec_for(kind: VariableKind) -> BandSpec:
    if kind in _GLOBAL_COEFF:
        e_v = 1 if kind is VariableKind.S else 0
        return BandSpec(label=kind.value, phi=PhiClass.GLOBAL, edge_count=e_v,
                        c_kind="global", c_coeff=_GLOBAL_COEFF[kind])
    w1, e_v = _ONE_VERTEX[kind]
    return BandSpec(label=kind.value, phi=PhiClass.STACKING, edge_count=e_v,
                    c_kind="stacking", length=1, w1=w1)


def stacking_band_spec(label: str, length: int, w1: int,
                       edge_count: int) -> BandSpec:
    return BandSpec(label=label, phi=PhiClass.STACKING, edge_count=edge_count,
                    c_kind="stacking", length=length, w1=w1)


def controllable_band_spec(label: str, edge_count: int) -> BandSpec:
    return BandSpec(label=label, phi=PhiClass.CONTROLLABLE,
                    edge_count=edge_count, c_kind="one")


def ln_theta(t, K: float):
    """log of the smoothing factor: e^(K t) on [0,1], capped below 2 e^K."""
    t = np.asarray(t, dtype=float)
    early = K * np.minimum(t, 1.0)
    late = np.where(t > 1.0, np.log(2.0 - np.exp(-(np.maximum(t, 1.0) - 1.0))), 0.0)
    out = early + late
    return out if out.ndim else float(out)


def _ln_phi(spec: BandSpec, t, n: int, params: ErrorParams):
    # e = qhat^(-1/2) n^(-1/4)  =>  ln e = 2 t^2 - (1/4) ln n
    t = np.asarray(t, dtype=float)
    ln_e = 2.0 * t * t - 0.25 * math.log(n)
    power = {PhiClass.STACKING: 1.0, PhiClass.GLOBAL: 2.0,
             PhiClass.CONTROLLABLE: params.delta}[spec.phi]
    return power * ln_e


def _ln_g(spec: BandSpec, t, n: int, params: ErrorParams):
    t = np.asarray(t, dtype=float)
    lnL = math.log(params.L(n))
    with np.errstate(divide="ignore"):
        tpow = np.where(
            t > 0,
            np.log1p(np.power(t, -float(spec.edge_count),
                              where=t > 0, out=np.ones_like(t))),
            np.inf if spec.edge_count > 0 else math.log(2.0),
        )
    out = (spec.ln_c(n, params) + ln_theta(t, params.K_value) - lnL
           + tpow + _ln_phi(spec, t, n, params))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ErrorBand:
    """f_V, g_V, e_V = f_V + 2 g_V, carried as natural logs.

    The float properties overflow to inf when a band exceeds double
    range; the log10 fields are always finite and are what reports show.
    """

    ln_f: float
    ln_g: float

    @property
    def ln_e(self) -> float:
        return float(np.logaddexp(self.ln_f, math.log(2.0) + self.ln_g))

    @property
    def f(self) -> float:
        return math.exp(self.ln_f) if self.ln_f < 700 else math.inf

    @property
    def g(self) -> float:
        return math.exp(self.ln_g) if self.ln_g < 700 else math.inf

    @property
    def e(self) -> float:
        ln_e = self.ln_e
        return math.exp(ln_e) if ln_e < 700 else math.inf

    @property
    def log10_f(self) -> float:
        return self.ln_f / math.log(10.0)

    @property
    def log10_g(self) -> float:
        return self.ln_g / math.log(10.0)

    @property
    def log10_e(self) -> float:
        return self.ln_e / math.log(10.0)


def error_band(kind, ctx: ScalingContext,
               params: ErrorParams | None = None) -> ErrorBand:
    """Band for a VariableKind or an explicit BandSpec at context ctx."""
    params = params or ErrorParams()
    spec = band_spec_for(kind) if isinstance(kind, VariableKind) else kind
    ln_f = spec.ln_c(ctx.n, params) + _ln_phi(spec, ctx.t, ctx.n, params)
    ln_g = _ln_g(spec, ctx.t, ctx.n, params)
    return ErrorBand(ln_f=float(ln_f), ln_g=float(ln_g))


def tracking_start_index(kind, n: int, params: ErrorParams | None = None,
                         chunk: int = 1 << 20) -> int | None:
    """First i >= n^(5/4) with g_V(t) <= 1/L, or None ("never").

    Scans the integer step grid up to i_max(n, epsilon); the returned
    index never decreases as c_V increases (g is monotone in c_V).
    """
    params = params or ErrorParams()
    spec = band_spec_for(kind) if isinstance(kind, VariableKind) else kind
    lo = int(math.ceil(n ** 1.25))
    hi = i_max(n, params.epsilon)
    if hi < lo:
        return None
    target = -math.log(params.L(n))
    scale = n ** -1.5
    for start in range(lo, hi + 1, chunk):
        stop = min(start + chunk, hi + 1)
        i_grid = np.arange(start, stop, dtype=np.int64)
        g = _ln_g(spec, i_grid * scale, n, params)
        ok = np.flatnonzero(g <= target)
        if len(ok):
            return int(i_grid[ok[0]])
    return None
