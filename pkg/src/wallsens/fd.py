"""Finite-difference sensitivity estimates over the parameter axes."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .errors import InputError

# offsets in units of the step along (p,) or (p, q), weight, and the step power in the denominator
STENCILS: dict[str, tuple[list[tuple[tuple[int, ...], float]], float, int]] = {
    "forward": ([((1,), 1.0), ((0,), -1.0)], 1.0, 1),
    "backward": ([((0,), 1.0), ((-1,), -1.0)], 1.0, 1),
    "central": ([((1,), 1.0), ((-1,), -1.0)], 2.0, 1),
    "three_point_backward": ([((0,), 3.0), ((-1,), -4.0), ((-2,), 1.0)], 2.0, 1),
    "second_forward": ([((2,), 1.0), ((1,), -2.0), ((0,), 1.0)], 1.0, 2),
    "second_central": ([((1,), 1.0), ((0,), -2.0), ((-1,), 1.0)], 1.0, 2),
    "mixed_central": ([((1, 1), 1.0), ((1, -1), -1.0), ((-1, 1), -1.0), ((-1, -1), 1.0)], 4.0, 2),
}
ORDER = {"forward": 1, "backward": 1, "central": 2, "three_point_backward": 2,
         "second_forward": 1, "second_central": 2, "mixed_central": 2}


@dataclass(frozen=True)
class FdScheme:
    kind: str
    step: float | tuple[float, float] = 1e-3

    def __post_init__(self):
        if self.kind not in STENCILS:
            raise InputError(f"unknown scheme {self.kind!r}; choose from {sorted(STENCILS)}")
        steps = self.step if isinstance(self.step, tuple) else (self.step,)
        if any(not s > 0 for s in steps):
            raise InputError("finite-difference step must be positive")

    @property
    def axes(self) -> int:
        return 2 if self.kind == "mixed_central" else 1

    def steps(self) -> tuple[float, ...]:
        s = self.step if isinstance(self.step, tuple) else (self.step,)
        return s * self.axes if len(s) == 1 else s


@dataclass
class FdResult:
    value: np.ndarray
    evaluations: int
    points: np.ndarray


def stencil_points(scheme: FdScheme, p0: Sequence[float], which: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Parameter vectors and weights the scheme evaluates."""
    offsets, _, _ = STENCILS[scheme.kind]
    p0 = np.asarray(p0, dtype=float)
    which = list(which)
    if len(which) != scheme.axes:
        raise InputError(f"{scheme.kind} acts on {scheme.axes} parameter(s)")
    steps = scheme.steps()
    pts, w = [], []
    for off, weight in offsets:
        v = p0.copy()
        for ax, o, h in zip(which, off, steps):
            v[ax] += o * h
        pts.append(v)
        w.append(weight)
    return np.array(pts), np.array(w)


def fd_sensitivity(model: Callable, p0: Sequence[float], scheme: FdScheme, which: int | Sequence[int] = 0,
                   domain: Sequence[tuple[float, float]] | None = None, batched: bool = False) -> FdResult:
    """Apply one difference formula to a model.

    model maps a parameter vector to an output array; with batched=True it
    maps an (m, n_params) matrix to m stacked outputs in one call.
    """
    which = [which] if np.ndim(which) == 0 else list(which)
    pts, w = stencil_points(scheme, p0, which)
    if domain is not None:
        for v in pts:
            for ax in which:
                lo, hi = domain[ax]
                if not lo <= v[ax] <= hi:
                    raise InputError(f"stencil point {v.tolist()} leaves the admissible domain [{lo}, {hi}] "
                                     f"of parameter {ax}")
    outs = np.asarray(model(pts)) if batched else np.stack([np.asarray(model(v)) for v in pts])
    _, denom, power = STENCILS[scheme.kind]
    scale = denom * np.prod(scheme.steps()) if scheme.axes == 2 else denom * scheme.steps()[0] ** power
    value = np.tensordot(w, outs, axes=1) / scale
    return FdResult(value, len(pts), pts)


def evaluation_count(scheme: str, n_params: int) -> int:
    """Distinct model runs to obtain the scheme's coefficient for every parameter.

    Stencil points shared between parameters (the base point) are counted
    once. 'hessian' means the full second-order set: central second
    differences on the diagonal plus mixed differences for every pair.
    """
    if n_params < 1:
        raise InputError("need at least one parameter")
    pts: set[tuple[int, ...]] = set()

    def add(kind, axes):
        offsets, _, _ = STENCILS[kind]
        for off, _ in offsets:
            v = [0] * n_params
            for ax, o in zip(axes, off):
                v[ax] += o
            pts.add(tuple(v))

    if scheme == "hessian":
        for i in range(n_params):
            add("second_central", [i])
        for i, j in combinations(range(n_params), 2):
            add("mixed_central", [i, j])
    elif scheme == "mixed_central":
        for i, j in combinations(range(n_params), 2):
            add(scheme, [i, j])
    elif scheme in STENCILS:
        for i in range(n_params):
            add(scheme, [i])
    else:
        raise InputError(f"unknown scheme {scheme!r}")
    return len(pts)
