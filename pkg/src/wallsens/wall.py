"""Dimensional wall description and its dimensionless counterpart."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import InputError

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Layer:
    k: float
    c: float
    thickness: float
    name: str = ""

    def __post_init__(self):
        for label, v in (("k", self.k), ("c", self.c), ("thickness", self.thickness)):
            if not (np.isfinite(v) and v > 0):
                raise InputError(f"layer {self.name or '?'}: {label} must be positive, got {v}")


@dataclass(frozen=True)
class WallSpec:
    layers: tuple[Layer, ...]
    h_L: float
    h_R: float
    alpha: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise InputError("a wall needs at least one layer")
        if self.h_L <= 0 or self.h_R <= 0:
            raise InputError("surface coefficients must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise InputError("absorptivity must lie in [0, 1]")

    @property
    def length(self) -> float:
        return float(sum(l.thickness for l in self.layers))

    @property
    def interfaces(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([l.thickness for l in self.layers])])


@dataclass(frozen=True)
class References:
    k_ref: float
    c_ref: float
    T_ref: float
    t_ref: float
    L: float

    def __post_init__(self):
        for name in ("k_ref", "c_ref", "T_ref", "t_ref", "L"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InputError(f"reference {name} must be strictly positive, got {v}")

    @property
    def Fo(self) -> float:
        return self.t_ref * self.k_ref / (self.L**2 * self.c_ref)

    @property
    def j_ref(self) -> float:
        """Flux scale, W/m2."""
        return self.T_ref * self.k_ref / self.L

    @property
    def E_ref(self) -> float:
        """Loads scale, J/m2."""
        return self.j_ref * self.t_ref


class Signal:
    """Scalar function of dimensionless time, vectorised over numpy arrays."""

    def __init__(self, fn: ArrayFn, horizon: float = math.inf, step: float | None = None, label: str = ""):
        self.fn = fn
        self.horizon = horizon
        self.step = step
        self.label = label

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))

    @classmethod
    def constant(cls, value: float) -> "Signal":
        return cls(lambda t: np.full(np.shape(t), float(value)), label=f"const({value})")

    @classmethod
    def sampled(cls, t: Sequence[float], values: Sequence[float], label: str = "") -> "Signal":
        """Piecewise-linear interpolant through samples; defined on [t0, t_last]."""
        t = np.asarray(t, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise InputError("sampled signal needs matching 1-D time/value arrays with >= 2 samples")
        if np.any(np.diff(t) <= 0):
            raise InputError("sample times must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise InputError("sampled signal contains non-finite values")
        step = float(np.median(np.diff(t)))
        sig = cls(lambda s: np.interp(s, t, v), horizon=float(t[-1]), step=step, label=label)
        sig.samples = (t, v)
        return sig


@dataclass(frozen=True)
class BoundarySignals:
    u_L: Signal
    u_R: Signal
    g_L: Signal = field(default_factory=lambda: Signal.constant(0.0))

    @property
    def horizon(self) -> float:
        return min(s.horizon for s in (self.u_L, self.u_R, self.g_L))

    def check(self, t_max: float):
        if t_max > self.horizon * (1 + 1e-12):
            raise InputError(f"boundary series end at t*={self.horizon}, shorter than horizon {t_max}")


def absorbed_fraction(rho, tau):
    """Share of incident shortwave absorbed by a single pane."""
    rho = np.asarray(rho, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(rho * tau >= 1):
        raise InputError("reflectivity * transmissivity must stay below 1")
    out = (1 - tau) * (1 - rho) / (1 - rho * tau)
    return float(out) if out.ndim == 0 else out


def absorbed_fraction_derivs(tau, rho):
    """A with its first and second partials, ordered (tau, rho)."""
    D = 1 - rho * tau
    A = (1 - tau) * (1 - rho) / D
    grad = np.array([-((1 - rho) ** 2) / D**2, -((1 - tau) ** 2) / D**2])
    hess = np.array([
        [-2 * rho * (1 - rho) ** 2 / D**3, 2 * (1 - rho) * (1 - tau) / D**3],
        [2 * (1 - rho) * (1 - tau) / D**3, -2 * tau * (1 - tau) ** 2 / D**3],
    ])
    return A, grad, hess


@dataclass(frozen=True)
class GlassSource:
    """Absorbed shortwave deposited as S* = A(tau, rho) * q(t) * x*."""

    tau: float
    rho: float
    q: Signal

    def __post_init__(self):
        if not (0 <= self.tau <= 1 and 0 <= self.rho < 1):
            raise InputError("need 0 <= tau <= 1 and 0 <= rho < 1")
        absorbed_fraction(self.rho, self.tau)


@dataclass(frozen=True)
class DimensionlessProblem:
    breakpoints: tuple[float, ...]
    k: tuple[float, ...]
    c: tuple[float, ...]
    Fo: float
    Bi_L: float
    Bi_R: float
    boundary: BoundarySignals
    u0: Callable[[np.ndarray], np.ndarray] | float = 0.0
    alpha: float = 1.0
    refs: References | None = None
    source: GlassSource | None = None
    names: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("breakpoints", "k", "c", "names"):
            object.__setattr__(self, name, tuple(float(v) if name != "names" else v for v in getattr(self, name)))
        n = len(self.k)
        if n == 0 or len(self.c) != n or len(self.breakpoints) != n - 1:
            raise InputError("need N conductivities, N capacities and N-1 breakpoints")
        b = np.asarray(self.breakpoints)
        if b.size and (np.any(b <= 0) or np.any(b >= 1) or np.any(np.diff(b) <= 0)):
            raise InputError("breakpoints must increase strictly inside (0, 1)")
        if min(self.k) <= 0 or min(self.c) <= 0:
            raise InputError("k* and c* must be positive")
        if not (self.Fo > 0 and self.Bi_L > 0 and self.Bi_R > 0):
            raise InputError("Fo and Biot numbers must be positive")

    @property
    def n_layers(self) -> int:
        return len(self.k)

    @property
    def n_params(self) -> int:
        return 2 * self.n_layers + (2 if self.source is not None else 0)

    def theta(self) -> np.ndarray:
        """Parameter vector [k_1..k_N, c_1..c_N(, tau, rho)]."""
        extra = [self.source.tau, self.source.rho] if self.source is not None else []
        return np.array([*self.k, *self.c, *extra])

    def layer_of(self, x) -> np.ndarray:
        """Index of the layer owning x*; interfaces belong to the right-hand layer."""
        return np.searchsorted(np.asarray(self.breakpoints), np.asarray(x, dtype=float), side="right")

    def initial(self, x: np.ndarray) -> np.ndarray:
        if callable(self.u0):
            return np.asarray(self.u0(x), dtype=float) * np.ones_like(x)
        return np.full_like(x, float(self.u0), dtype=float)

    def with_params(self, **values) -> "DimensionlessProblem":
        """Copy with parameters replaced, e.g. with_params(k2=0.4, tau=0.3)."""
        k, c = list(self.k), list(self.c)
        src = self.source
        for key, v in values.items():
            p = ParamId.parse(key)
            p.check(self)
            if p.kind == "k":
                k[p.layer] = v
            elif p.kind == "c":
                c[p.layer] = v
            else:
                src = replace(src, **{p.kind: v})
        return replace(self, k=tuple(k), c=tuple(c), source=src)


def evaluate_piecewise(problem: DimensionlessProblem, x):
    """(k*, c*) at x*; interfaces take the values of the layer to their right."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)) or not np.all(np.isfinite(x)):
        raise InputError("x* must lie in [0, 1]")
    i = problem.layer_of(x)
    k, c = np.asarray(problem.k)[i], np.asarray(problem.c)[i]
    if x.ndim == 0:
        return float(k), float(c)
    return k, c


_KINDS = {"k": "k", "c": "c", "tau": "tau", "rho": "rho"}


@dataclass(frozen=True, order=True)
class ParamId:
    """A sensitive parameter; layer is zero-based, text form is one-based ('k2')."""

    kind: str
    layer: int = 0

    @classmethod
    def parse(cls, text: "str | ParamId") -> "ParamId":
        if isinstance(text, ParamId):
            return text
        m = re.fullmatch(r"\s*(k|c)(\d+)\s*|\s*(tau|rho)\s*", str(text))
        if not m:
            raise InputError(f"unknown parameter {text!r}; use k<i>, c<i>, tau or rho")
        if m.group(3):
            return cls(m.group(3), 0)
        if int(m.group(2)) < 1:
            raise InputError("layer numbers start at 1")
        return cls(m.group(1), int(m.group(2)) - 1)

    def __str__(self):
        return self.kind if self.kind in ("tau", "rho") else f"{self.kind}{self.layer + 1}"

    def check(self, problem: DimensionlessProblem):
        if self.kind in ("tau", "rho"):
            if problem.source is None:
                raise InputError(f"{self} only exists for a glazing problem")
        elif not 0 <= self.layer < problem.n_layers:
            raise InputError(f"{self}: wall has {problem.n_layers} layer(s)")

    def index(self, problem: DimensionlessProblem) -> int:
        """Position in the theta vector."""
        self.check(problem)
        n = problem.n_layers
        return {"k": self.layer, "c": n + self.layer, "tau": 2 * n, "rho": 2 * n + 1}[self.kind]


def parse_params(items) -> list[ParamId]:
    if isinstance(items, (str, ParamId)):
        items = [s for s in str(items).split(",") if s.strip()] if isinstance(items, str) else [items]
    return [ParamId.parse(p) for p in items]


def nondimensionalize(spec: WallSpec, refs: References, T_L, T_R, q_L=None, u0=None) -> DimensionlessProblem:
    """Scale a dimensional wall and its boundary data.

    T_L, T_R, q_L are Signal objects over dimensional time (s, K, W/m2) or
    constants. u0 is a callable of x* or a number, already dimensionless; by
    default the wall starts on the straight line between the two air temperatures.
    """
    L = spec.length
    if not math.isclose(L, refs.L, rel_tol=1e-12):
        raise InputError(f"reference length {refs.L} differs from wall thickness {L}")

    def scaled(sig, factor):
        if sig is None:
            return Signal.constant(0.0)
        if not isinstance(sig, Signal):
            return Signal.constant(float(sig) * factor)
        return Signal(lambda t, f=sig.fn: f(t * refs.t_ref) * factor,
                      horizon=sig.horizon / refs.t_ref,
                      step=None if sig.step is None else sig.step / refs.t_ref,
                      label=sig.label)

    bs = BoundarySignals(scaled(T_L, 1 / refs.T_ref), scaled(T_R, 1 / refs.T_ref),
                         scaled(q_L, L / (refs.T_ref * refs.k_ref)))
    if u0 is None:
        a, b = float(bs.u_L(0.0)), float(bs.u_R(0.0))
        u0 = lambda x, a=a, b=b: a + (b - a) * np.asarray(x)
    return DimensionlessProblem(
        breakpoints=tuple(spec.interfaces[1:-1] / L),
        k=tuple(l.k / refs.k_ref for l in spec.layers),
        c=tuple(l.c / refs.c_ref for l in spec.layers),
        Fo=refs.Fo,
        Bi_L=spec.h_L * L / refs.k_ref,
        Bi_R=spec.h_R * L / refs.k_ref,
        boundary=bs,
        u0=u0,
        alpha=spec.alpha,
        refs=refs,
        names=tuple(l.name for l in spec.layers),
    )


def redimensionalize(problem: DimensionlessProblem) -> WallSpec:
    """Inverse of nondimensionalize for the wall data."""
    r = problem.refs
    if r is None:
        raise InputError("problem carries no reference values")
    edges = np.concatenate([[0.0], problem.breakpoints, [1.0]]) * r.L
    names = problem.names or ("",) * problem.n_layers
    layers = tuple(Layer(k * r.k_ref, c * r.c_ref, float(t), n)
                   for k, c, t, n in zip(problem.k, problem.c, np.diff(edges), names))
    return WallSpec(layers, problem.Bi_L * r.k_ref / r.L, problem.Bi_R * r.k_ref / r.L, problem.alpha)


def validation_case(alpha: float = 1.0) -> DimensionlessProblem:
    """Two-layer benchmark with closed-form boundary forcing."""
    bs = BoundarySignals(
        u_L=Signal(lambda t: 0.8 * np.sin(np.pi * t / 3), label="0.8 sin(pi t/3)"),
        u_R=Signal(lambda t: 0.5 * (1 - np.cos(np.pi * t / 4)), label="0.5 (1 - cos(pi t/4))"),
        g_L=Signal(lambda t: 0.6 * np.sin(np.pi * t / 5) ** 2, label="0.6 sin^2(pi t/5)"),
    )
    return DimensionlessProblem(
        breakpoints=(0.6,), k=(0.1, 0.3), c=(0.2, 0.5), Fo=0.02, Bi_L=0.1, Bi_R=0.2,
        boundary=bs, u0=0.0, alpha=alpha,
    )


BAYONNE_LAYERS = (
    Layer(1.75, 1.6e6, 0.20, "dressed stone"),
    Layer(2.30, 2.8e6, 0.28, "rubble stone"),
    Layer(0.80, 2.2e6, 0.02, "lime coating"),
)


def bayonne_wall(alpha: float = 0.6) -> tuple[WallSpec, References]:
    """Three-layer stone wall with its customary reference scales."""
    spec = WallSpec(BAYONNE_LAYERS, h_L=15.0, h_R=8.0, alpha=alpha)
    refs = References(k_ref=1.75, c_ref=1.6e6, T_ref=293.15, t_ref=3600.0, L=spec.length)
    return spec, refs
