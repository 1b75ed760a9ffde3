"""Derivative-based importance measures and parameter ranking."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InputError
from .solver import Grid, run
from .wall import DimensionlessProblem, ParamId, parse_params

OUTPUTS = ("loads", "integrated", "field")
KIND_ORDER = {"k": 0, "c": 1, "tau": 2, "rho": 3}


def local_metric(norms: Mapping | Sequence[float], floor: float = 1e-30) -> dict | np.ndarray:
    """Normalise non-negative sensitivity norms so they sum to one.

    A total below floor is round-off from an insensitive output and is
    rejected rather than normalised into a spurious ranking.
    """
    keys = list(norms) if isinstance(norms, Mapping) else None
    v = np.asarray(list(norms.values()) if keys is not None else norms, dtype=float)
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise InputError("sensitivity norms must be finite and non-negative")
    total = v.sum()
    if total <= floor:
        raise InputError("no parameter has a non-zero sensitivity")
    eta = v / total
    return {k: float(e) for k, e in zip(keys, eta)} if keys is not None else eta


def default_domain(value: float, spread: float = 0.9) -> tuple[float, float]:
    if not 0 < spread < 1:
        raise InputError("spread must lie in (0, 1)")
    return value * (1 - spread), value * (1 + spread)


def sensitivity_norms(problem: DimensionlessProblem, grid: Grid, params, output: str = "loads",
                      theta=None, edges=None, save_every: int = 1, **opts) -> np.ndarray:
    """Squared-sensitivity integrals per row and parameter, shape (rows, P).

    'loads' integrates (dj/dp)^2 over the loads window, 'integrated' sums
    (dE/dp)^2 over the intervals between edges, 'field' integrates X_p^2
    over space and the stored time levels.
    """
    if output not in OUTPUTS:
        raise InputError(f"output must be one of {OUTPUTS}")
    params = parse_params(params)
    for p in params:
        p.check(problem)
    if output == "field":
        sol = run(problem, grid, theta, params, save_every=save_every, keep_flux=False, **opts)
        sq = np.trapezoid(sol.X**2, grid.x, axis=-1)
        return np.trapezoid(sq, sol.t_saved, axis=-1) if sol.t_saved.size > 1 else sq[..., 0]
    sol = run(problem, grid, theta, params, edges=edges, keep_flux=False, **opts)
    return sol.dj_sq.sum(-1) if output == "loads" else (sol.dE**2).sum(-1)


def layer_eta(norms: Mapping) -> dict:
    """Local metric normalised within each layer's (k, c) pair."""
    norms = {ParamId.parse(p): float(v) for p, v in norms.items()}
    out = {}
    for p, v in norms.items():
        if p.kind not in ("k", "c"):
            raise InputError(f"{p} has no layer partner")
        mate = ParamId("c" if p.kind == "k" else "k", p.layer)
        if mate not in norms:
            raise InputError(f"{p} needs {mate} for a per-layer metric")
        total = v + norms[mate]
        if total <= 0:
            raise InputError(f"layer {p.layer + 1} has no sensitivity")
        out[p] = v / total
    return out


def lattice(value: float, domain: tuple[float, float] | None, n: int) -> np.ndarray:
    if n < 2:
        raise InputError("a parameter lattice needs at least 2 points")
    lo, hi = default_domain(value) if domain is None else domain
    if not hi > lo:
        raise InputError(f"degenerate domain [{lo}, {hi}]")
    return np.linspace(lo, hi, n)


def global_integral(values, points) -> float:
    """Trapezoid integral of a sampled non-negative norm over a parameter lattice."""
    points = np.asarray(points, dtype=float)
    if points.size < 2:
        raise InputError("a parameter lattice needs at least 2 points")
    return float(np.trapezoid(np.asarray(values, dtype=float), points))


def crossed_integral(values, p_points, q_points) -> float:
    """Double trapezoid of a mixed derivative sampled on a (p, q) lattice."""
    v = np.asarray(values, dtype=float)
    p, q = np.asarray(p_points, dtype=float), np.asarray(q_points, dtype=float)
    if p.size < 2 or q.size < 2:
        raise InputError("a parameter lattice needs at least 2 points per axis")
    if v.shape != (p.size, q.size):
        raise InputError(f"values shape {v.shape} does not match lattice {(p.size, q.size)}")
    return float(np.trapezoid(np.trapezoid(v, q, axis=1), p))


@dataclass
class MetricReport:
    params: list[ParamId]
    eta: dict[ParamId, float] = field(default_factory=dict)
    nu: dict[ParamId, float] = field(default_factory=dict)
    gamma: dict[ParamId, float] = field(default_factory=dict)
    crossed: dict[tuple[ParamId, ParamId], float] = field(default_factory=dict)
    eta_layer: dict[ParamId, float] = field(default_factory=dict)
    lattice_size: int | None = None
    output: str = "loads"
    evaluations: int = 0
    marches: int = 0

    @property
    def bounds(self) -> dict[ParamId, dict[str, float]]:
        return {p: {"nu/pi2": v / np.pi**2, "nu/12": v / 12} for p, v in self.nu.items()}

    def ranking(self, metric: str | None = None, threshold: float = 0.05) -> "Ranking":
        return rank_parameters(self, metric, threshold)

    def rows(self) -> list[tuple[str, str, float]]:
        out = []
        for p in self.params:
            for name, table in (("eta", self.eta), ("eta_layer", self.eta_layer), ("nu", self.nu),
                                ("gamma", self.gamma)):
                if p in table:
                    out.append((str(p), name, float(table[p])))
            if p in self.nu:
                for name, v in self.bounds[p].items():
                    out.append((str(p), name, float(v)))
        for (p, q), v in self.crossed.items():
            out.append((f"{p}:{q}", "nu_crossed", float(v)))
        return out

    def to_json(self) -> dict:
        rk = self.ranking() if (self.gamma or self.eta) else None
        return {
            "output": self.output, "lattice_size": self.lattice_size,
            "params": [str(p) for p in self.params],
            "eta": {str(p): v for p, v in self.eta.items()},
            "eta_layer": {str(p): v for p, v in self.eta_layer.items()},
            "nu": {str(p): v for p, v in self.nu.items()},
            "gamma": {str(p): v for p, v in self.gamma.items()},
            "bounds": {str(p): b for p, b in self.bounds.items()},
            "crossed": {f"{p}:{q}": v for (p, q), v in self.crossed.items()},
            "ranking": None if rk is None else {"order": [str(p) for p in rk.order],
                                                "significant": [str(p) for p in rk.significant],
                                                "insignificant": [str(p) for p in rk.insignificant]},
            "evaluations": self.evaluations, "marches": self.marches,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["param", "metric", "value"])
        for r in self.rows():
            w.writerow([r[0], r[1], repr(r[2])])
        return buf.getvalue()

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def global_metric(problem: DimensionlessProblem, grid: Grid, params, domains=None, n: int = 20,
                  output: str = "loads", edges=None, **opts) -> MetricReport:
    """nu_p over a one-axis lattice per parameter (others held at their anchors), and gamma."""
    params = parse_params(params)
    theta0 = problem.theta()
    domains = domains or {}
    nu = {}
    for p in params:
        i = p.index(problem)
        pts = lattice(theta0[i], domains.get(p, domains.get(str(p))), n)
        rows = np.repeat(theta0[None], n, axis=0)
        rows[:, i] = pts
        nu[p] = global_integral(sensitivity_norms(problem, grid, [p], output, rows, edges, **opts)[:, 0], pts)
    gamma = local_metric(nu)
    return MetricReport(params, nu=nu, gamma=gamma, lattice_size=n, output=output,
                        evaluations=n * len(params), marches=len(params))


def metric_report(problem: DimensionlessProblem, grid: Grid, params, domains=None, n: int = 20,
                  output: str = "loads", edges=None, crossed=(), **opts) -> MetricReport:
    """Local and global measures plus any requested crossed measures."""
    params = parse_params(params)
    norms = sensitivity_norms(problem, grid, params, output, None, edges, **opts)[0]
    rep = global_metric(problem, grid, params, domains, n, output, edges, **opts)
    rep.eta = local_metric(dict(zip(params, norms)))
    try:
        rep.eta_layer = layer_eta(dict(zip(params, norms)))
    except InputError:
        pass
    rep.evaluations += 1
    rep.marches += 1
    for p, q in crossed:
        rep.crossed[(ParamId.parse(p), ParamId.parse(q))] = crossed_measure(problem, grid, p, q, domains, n, edges,
                                                                            **opts)
        rep.evaluations += n * n
        rep.marches += 1
    return rep


def crossed_measure(problem: DimensionlessProblem, grid: Grid, p, q, domains=None, n: int = 20,
                    edges=None, **opts) -> float:
    """Double integral of d2E/dp dq over the joint (p, q) lattice."""
    p, q = ParamId.parse(p), ParamId.parse(q)
    if p == q:
        raise InputError("crossed measure needs two distinct parameters")
    domains = domains or {}
    theta0 = problem.theta()
    ip, iq = p.index(problem), q.index(problem)
    pp = lattice(theta0[ip], domains.get(p, domains.get(str(p))), n)
    qq = lattice(theta0[iq], domains.get(q, domains.get(str(q))), n)
    P, Q = np.meshgrid(pp, qq, indexing="ij")
    rows = np.repeat(theta0[None], n * n, axis=0)
    rows[:, ip], rows[:, iq] = P.ravel(), Q.ravel()
    edges = [0.0, grid.t_max] if edges is None else [edges[0], edges[-1]]
    sol = run(problem, grid, rows, [p, q], [(0, 1)], edges=edges, keep_flux=False, **opts)
    return crossed_integral(sol.d2E[:, 0, 0].reshape(n, n), pp, qq)


@dataclass
class Ranking:
    order: list[ParamId]
    significant: list[ParamId]
    insignificant: list[ParamId]
    values: dict[ParamId, float]


def rank_parameters(report: MetricReport | Mapping, metric: str | None = None,
                    threshold: float = 0.05) -> Ranking:
    """Descending order; entries below threshold * max are flagged non-significant.

    Ties go to the lower layer index, then k before c.
    """
    if isinstance(report, MetricReport):
        metric = metric or ("gamma" if report.gamma else "eta")
        values = getattr(report, metric)
    else:
        values = report
    values = {ParamId.parse(p): float(v) for p, v in values.items()}
    if not values:
        raise InputError("nothing to rank")
    order = sorted(values, key=lambda p: (-values[p], p.layer, KIND_ORDER[p.kind]))
    top = values[order[0]]
    sig = [p for p in order if values[p] >= threshold * top]
    return Ranking(order, sig, [p for p in order if p not in sig], values)
