"""Single-glazed window with an absorbed-shortwave source, and wall + window loads."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError
from .metrics import MetricReport, global_integral, lattice, local_metric, rank_parameters
from .solver import Grid, Solution, run, steady_state
from .taylor import ExtrapolationWarning, build
from .wall import (DimensionlessProblem, GlassSource, Layer, ParamId, References, Signal, WallSpec,
                   absorbed_fraction, bayonne_wall, nondimensionalize, parse_params)
from .weather import Weather

SOURCE_FORMS = ("literal", "energy_conserving")


@dataclass(frozen=True)
class GlassSpec:
    density: float = 2200.0
    specific_heat: float = 835.0
    conductivity: float = 1.0
    reflectivity: float = 0.15
    transmissivity: float = 0.26
    thickness: float = 0.006
    h_L: float = 15.0
    h_R: float = 8.0

    def __post_init__(self):
        for name in ("density", "specific_heat", "conductivity", "thickness", "h_L", "h_R"):
            if not getattr(self, name) > 0:
                raise InputError(f"glass {name} must be positive")
        if not (0 <= self.transmissivity <= 1 and 0 <= self.reflectivity < 1):
            raise InputError("need 0 <= transmissivity <= 1 and 0 <= reflectivity < 1")
        absorbed_fraction(self.reflectivity, self.transmissivity)

    @property
    def capacity(self) -> float:
        """Volumetric heat capacity, J/(m3 K)."""
        return self.density * self.specific_heat

    @property
    def absorbed(self) -> float:
        return absorbed_fraction(self.reflectivity, self.transmissivity)


def glass_problem(glass: GlassSpec, T_out, T_in, q_sw, t_ref: float = 3600.0, T_ref: float = 293.15,
                  source_form: str = "literal", u0=None) -> DimensionlessProblem:
    """Dimensionless pane with x* = 0 on the outdoor face.

    'literal' deposits S = A q x / L_w per cubic metre, so the pane absorbs
    A q L_w / 2 per square metre; 'energy_conserving' uses 2 A q x / L_w^2,
    which absorbs exactly A q.
    """
    if source_form not in SOURCE_FORMS:
        raise InputError(f"source form must be one of {SOURCE_FORMS}")
    L = glass.thickness
    refs = References(k_ref=glass.conductivity, c_ref=glass.capacity, T_ref=T_ref, t_ref=t_ref, L=L)
    spec = WallSpec((Layer(glass.conductivity, glass.capacity, L, "glass"),), glass.h_L, glass.h_R, alpha=0.0)
    base = _steady_start(nondimensionalize(spec, refs, T_out, T_in, None, u0), u0)
    factor = t_ref / (glass.capacity * T_ref)
    if source_form == "energy_conserving":
        factor *= 2 / L
    if isinstance(q_sw, Signal):
        q = Signal(lambda t, f=q_sw.fn: f(t * t_ref) * factor, horizon=q_sw.horizon / t_ref,
                   step=None if q_sw.step is None else q_sw.step / t_ref, label=q_sw.label)
    else:
        q = Signal.constant(float(q_sw) * factor)
    return replace(base, source=GlassSource(glass.transmissivity, glass.reflectivity, q))


def _steady_start(problem: DimensionlessProblem, u0) -> DimensionlessProblem:
    """Start from the stationary profile of the initial air temperatures unless u0 is given."""
    if u0 is not None:
        return problem
    a, b = float(problem.boundary.u_L(0.0)), float(problem.boundary.u_R(0.0))
    return replace(problem, u0=lambda x, p=problem: steady_state(p, a, b, np.asarray(x, dtype=float))[0])


def glass_grid(horizon: float, dt: float, nodes: int = 13) -> Grid:
    if nodes < 3:
        raise InputError("the pane needs at least 3 nodes")
    return Grid(1.0 / (nodes - 1), dt, horizon)


def bayonne_problem(weather: Weather, alpha: float = 0.6) -> DimensionlessProblem:
    spec, refs = bayonne_wall(alpha)
    T_out, T_in, q = weather.signals()
    return _steady_start(nondimensionalize(spec, refs, T_out, T_in, q), None)


def window_problem(weather: Weather, glass: GlassSpec = GlassSpec(), source_form: str = "literal",
                   t_ref: float = 3600.0) -> DimensionlessProblem:
    T_out, T_in, q = weather.signals()
    return glass_problem(glass, T_out, T_in, q, t_ref=t_ref, source_form=source_form)


def to_joules(problem: DimensionlessProblem, E_star):
    """Dimensionless loads to J/m2."""
    if problem.refs is None:
        raise InputError("problem carries no reference values")
    return np.asarray(E_star) * problem.refs.E_ref


def solve_glass(problem: DimensionlessProblem, grid: Grid, params=(), pairs=(), edges=None, **opts) -> Solution:
    """March the pane; loads on the indoor face, derivatives for the listed parameters."""
    if problem.source is None:
        raise InputError("not a glazing problem")
    return run(problem, grid, params=params, pairs=pairs, edges=edges, **opts)


@dataclass
class EnvelopeLoads:
    edges: np.ndarray  # seconds
    E_glass: np.ndarray
    E_wall: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.E_glass + self.E_wall


def envelope_loads(E_wall, E_glass, wall_edges, glass_edges=None) -> EnvelopeLoads:
    """Combine per-interval loads (J/m2) sharing the same interval edges (s)."""
    we = np.asarray(wall_edges, dtype=float)
    ge = we if glass_edges is None else np.asarray(glass_edges, dtype=float)
    E_wall, E_glass = np.asarray(E_wall, dtype=float), np.asarray(E_glass, dtype=float)
    if we.shape != ge.shape or not np.allclose(we, ge, rtol=1e-12, atol=1e-9):
        raise InputError("wall and glass loads use different intervals")
    if E_wall.shape != E_glass.shape or E_wall.shape[-1] != we.size - 1:
        raise InputError("loads do not match the interval count")
    return EnvelopeLoads(we, E_glass, E_wall)


def relative_difference(base, perturbed) -> tuple[np.ndarray, np.ndarray]:
    """|E(p + dp) - E(p)| / |E(p)| per interval, with a mask of intervals left undefined."""
    base = np.asarray(base, dtype=float)
    perturbed = np.asarray(perturbed, dtype=float)
    if base.shape != perturbed.shape:
        raise InputError("loads series differ in shape")
    bad = base == 0
    out = np.full(base.shape, np.nan)
    out[~bad] = np.abs((perturbed[~bad] - base[~bad]) / base[~bad])
    return out, bad


@dataclass
class EnvelopeCase:
    wall: DimensionlessProblem
    wall_grid: Grid
    glass: DimensionlessProblem
    glass_grid: Grid
    edges: np.ndarray  # seconds

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        for prob, grid in ((self.wall, self.wall_grid), (self.glass, self.glass_grid)):
            if prob.refs is None:
                raise InputError("envelope problems need reference values")
            if not np.isclose(grid.t_max * prob.refs.t_ref, self.edges[-1]):
                raise InputError("grid horizon does not reach the last interval edge")

    def owner(self, p: ParamId) -> tuple[DimensionlessProblem, Grid]:
        return (self.glass, self.glass_grid) if p.kind in ("tau", "rho") else (self.wall, self.wall_grid)

    def star_edges(self, prob: DimensionlessProblem) -> np.ndarray:
        return self.edges / prob.refs.t_ref

    def loads(self, **opts) -> EnvelopeLoads:
        w = run(self.wall, self.wall_grid, edges=self.star_edges(self.wall), keep_flux=False, **opts)
        g = run(self.glass, self.glass_grid, edges=self.star_edges(self.glass), keep_flux=False, **opts)
        return envelope_loads(to_joules(self.wall, w.E[0]), to_joules(self.glass, g.E[0]), self.edges)


def envelope_metrics(case: EnvelopeCase, params=("k1", "k2", "tau", "rho"), n: int = 5, spread: float = 0.5,
                     **opts) -> MetricReport:
    """eta and gamma of the combined loads.

    The wall and the pane are decoupled, so each parameter is propagated
    through the component it belongs to. Norms integrate the squared
    sensitivity of the indoor flux (W/m2) over physical time, with respect
    to the dimensionless parameter (k*, c*, tau, rho).
    """
    params = parse_params(params)
    nu, local = {}, {}
    for p in params:
        prob, grid = case.owner(p)
        i = p.index(prob)
        th0 = prob.theta()
        lo, hi = th0[i] * (1 - spread), th0[i] * (1 + spread)
        if p.kind in ("tau", "rho"):
            hi = min(hi, 1.0 - 1e-9)
        pts = lattice(th0[i], (lo, hi), n)
        rows = np.vstack([th0[None], np.repeat(th0[None], n, axis=0)])
        rows[1:, i] = pts
        e = case.star_edges(prob)
        sol = run(prob, grid, rows, [p], edges=[e[0], e[-1]], keep_flux=False, **opts)
        scale = prob.refs.j_ref**2 * prob.refs.t_ref
        sq = sol.dj_sq[:, 0, 0] * scale
        local[p] = float(sq[0])
        nu[p] = global_integral(sq[1:], pts)
    rep = MetricReport(params, eta=local_metric(local), nu=nu, gamma=local_metric(nu), lattice_size=n,
                       output="loads", evaluations=len(params) * (n + 1), marches=len(params))
    return rep


def envelope_relative_differences(case: EnvelopeCase, params=("k1", "k2", "tau", "rho"), spread: float = 0.5,
                                  mode: str = "taylor", **opts) -> dict[ParamId, tuple[np.ndarray, np.ndarray]]:
    """Per-interval relative change of the combined loads for p * (1 +- spread).

    mode='taylor' uses a second-order loads surrogate per component;
    mode='direct' re-runs the perturbed components.
    """
    if mode not in ("taylor", "direct"):
        raise InputError("mode must be 'taylor' or 'direct'")
    params = parse_params(params)
    base = case.loads(**opts)
    out = {}
    for p in params:
        prob, grid = case.owner(p)
        i = p.index(prob)
        v0 = prob.theta()[i]
        vals = np.array([v0 * (1 + spread), v0 * (1 - spread)])
        e = case.star_edges(prob)
        if mode == "taylor":
            model = build(prob, grid, [p], order=2, kind="loads", edges=e, **opts)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ExtrapolationWarning)
                E = to_joules(prob, model.evaluate(vals[:, None]).value)
        else:
            rows = np.repeat(prob.theta()[None], 2, axis=0)
            rows[:, i] = vals
            E = to_joules(prob, run(prob, grid, rows, edges=e, keep_flux=False, **opts).E)
        own = base.E_glass if p.kind in ("tau", "rho") else base.E_wall
        pert = E + (base.total - own)
        out[p] = tuple(relative_difference(base.total, pert[r])[0] for r in range(2))
    return out


def month_edges(days: int, start_day: int = 0) -> np.ndarray:
    """Calendar-month interval edges (s) covering days, non-leap year."""
    lengths = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31]
    cuts = np.concatenate([[0], np.cumsum(lengths * 2)]) - start_day
    cuts = cuts[(cuts > 0) & (cuts < days)]
    return np.concatenate([[0.0], cuts, [days]]) * 86400.0


def envelope_ranking(report: MetricReport, threshold: float = 0.05):
    return rank_parameters(report.gamma, threshold=threshold)
