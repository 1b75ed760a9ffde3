"""Sensitivity fields and output derivatives from the differentiated march."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError
from .solver import Grid, run
from .wall import DimensionlessProblem, ParamId, parse_params


@dataclass
class SensitivityField:
    """u with its first and second parameter derivatives on the (t, x) lattice."""

    x: np.ndarray
    t: np.ndarray
    u: np.ndarray
    first: dict[ParamId, np.ndarray] = field(default_factory=dict)
    second: dict[tuple[ParamId, ParamId], np.ndarray] = field(default_factory=dict)

    def X(self, p, q=None) -> np.ndarray:
        p = ParamId.parse(p)
        if q is None:
            if p not in self.first:
                raise InputError(f"no first-order field for {p}")
            return self.first[p]
        q = ParamId.parse(q)
        for key in ((p, q), (q, p)):
            if key in self.second:
                return self.second[key]
        raise InputError(f"no second-order field for ({p}, {q})")


@dataclass
class OutputSensitivities:
    t: np.ndarray
    j: np.ndarray
    dj: dict[ParamId, np.ndarray]
    d2j: dict[tuple[ParamId, ParamId], np.ndarray]
    edges: np.ndarray
    E: np.ndarray
    dE: dict[ParamId, np.ndarray]
    d2E: dict[tuple[ParamId, ParamId], np.ndarray]


def _pair_list(params: list[ParamId], pairs) -> list[tuple[int, int]]:
    out = []
    for a, b in pairs:
        a, b = ParamId.parse(a), ParamId.parse(b)
        out.append((params.index(a), params.index(b)))
    return out


def propagate(problem: DimensionlessProblem, grid: Grid, params, pairs=(), save_every: int = 1,
              **opts) -> SensitivityField:
    """One joint march for the listed parameters and parameter pairs."""
    params = parse_params(params)
    for p in params:
        p.check(problem)
    pairs = [(ParamId.parse(a), ParamId.parse(b)) for a, b in pairs]
    for a, b in pairs:
        for r in (a, b):
            if r not in params:
                params.append(r)
    idx = _pair_list(params, pairs)
    sol = run(problem, grid, params=params, pairs=idx, save_every=save_every, keep_flux=False, **opts)
    first = {p: sol.X[0, i] for i, p in enumerate(params)}
    second = {pq: sol.Y[0, i] for i, pq in enumerate(pairs)}
    return SensitivityField(grid.x, sol.t_saved, sol.u[0], first, second)


def propagate_first_order(problem: DimensionlessProblem, grid: Grid, p, save_every: int = 1,
                          **opts) -> SensitivityField:
    """X_p = du/dp over the whole lattice."""
    return propagate(problem, grid, [p], save_every=save_every, **opts)


def propagate_second_order(problem: DimensionlessProblem, grid: Grid, p, q=None, save_every: int = 1,
                           **opts) -> SensitivityField:
    """d2u/dp dq (q defaults to p) together with the first-order fields it needs."""
    p = ParamId.parse(p)
    q = p if q is None else ParamId.parse(q)
    return propagate(problem, grid, [p, q] if q != p else [p], pairs=[(p, q)], save_every=save_every, **opts)


def output_sensitivities(fields: SensitivityField, problem: DimensionlessProblem, grid: Grid,
                         p, q=None, edges: Sequence[float] | None = None,
                         flux_stencil: str = "two_point") -> OutputSensitivities:
    """Flux and loads derivatives from stored fields (every level must be stored)."""
    if fields.t.size != grid.nt + 1 or not np.allclose(np.diff(fields.t), grid.dt):
        raise InputError("output sensitivities need fields stored at every time level")
    p = ParamId.parse(p)
    dx, x = grid.dx, grid.x
    if flux_stencil == "two_point":
        layer = int(problem.layer_of(0.5 * (x[-1] + x[-2])))
        grad = lambda f: (f[:, -1] - f[:, -2]) / dx
    else:
        layer = int(problem.layer_of(1.0))
        grad = lambda f: (3 * f[:, -1] - 4 * f[:, -2] + f[:, -3]) / (2 * dx)
    k = problem.k[layer]
    dk = lambda r: 1.0 if (r.kind == "k" and r.layer == layer) else 0.0
    gu = grad(fields.u)
    j = -k * gu
    dj = {p: -(dk(p) * gu + k * grad(fields.X(p)))}
    d2j = {}
    if q is not None:
        q = ParamId.parse(q)
        if q != p:
            dj[q] = -(dk(q) * gu + k * grad(fields.X(q)))
        d2j[(p, q)] = -(dk(p) * grad(fields.X(q)) + dk(q) * grad(fields.X(p)) + k * grad(fields.X(p, q)))
    edges = np.array([0.0, grid.t_max] if edges is None else edges, dtype=float)
    lv = [grid.level(e) for e in edges]
    cum = lambda s: np.concatenate([[0.0], np.cumsum(0.5 * grid.dt * (s[1:] + s[:-1]))])
    loads = lambda s: np.diff(cum(s)[lv])
    return OutputSensitivities(fields.t, j, dj, d2j, edges, loads(j),
                               {r: loads(v) for r, v in dj.items()}, {r: loads(v) for r, v in d2j.items()})


def sensitivity_outputs(problem: DimensionlessProblem, grid: Grid, params, pairs=(),
                        edges: Sequence[float] | None = None, **opts) -> OutputSensitivities:
    """Flux and loads derivatives accumulated during the march, without storing fields."""
    params = parse_params(params)
    pairs = [(ParamId.parse(a), ParamId.parse(b)) for a, b in pairs]
    for a, b in pairs:
        for r in (a, b):
            if r not in params:
                params.append(r)
    sol = run(problem, grid, params=params, pairs=_pair_list(params, pairs), edges=edges, **opts)
    return OutputSensitivities(
        sol.t, sol.j[0], {p: sol.dj[0, i] for i, p in enumerate(params)},
        {pq: sol.d2j[0, i] for i, pq in enumerate(pairs)}, sol.edges, sol.E[0],
        {p: sol.dE[0, i] for i, p in enumerate(params)}, {pq: sol.d2E[0, i] for i, pq in enumerate(pairs)})
