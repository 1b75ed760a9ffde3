"""Dufort-Frankel march with jointly propagated parameter derivatives.

Every row of a batch carries its own parameter vector theta; the march
advances all rows at once on (rows, nodes) arrays. Alongside u it can carry
first derivatives along a list of parameters and second derivatives along a
list of parameter pairs. Each stencil coefficient has the form N/Q with N and
Q linear in the local (k, c) values, so its derivatives are exact and cheap.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import DivergenceError, InputError
from .wall import DimensionlessProblem, ParamId, absorbed_fraction_derivs, parse_params

FLUX_STENCILS = ("two_point", "three_point")
BOUNDARY_SCHEMES = ("half_cell", "one_sided")


@dataclass(frozen=True)
class Grid:
    dx: float
    dt: float
    t_max: float

    def __post_init__(self):
        if not (self.dx > 0 and self.dt > 0 and self.t_max > 0):
            raise InputError("grid steps and horizon must be positive")
        if abs(1 / self.dx - round(1 / self.dx)) > 1e-6 * (1 / self.dx):
            raise InputError(f"dx={self.dx} does not divide [0, 1] evenly")
        if abs(self.t_max / self.dt - round(self.t_max / self.dt)) > 1e-6 * (self.t_max / self.dt):
            raise InputError(f"dt={self.dt} does not divide the horizon {self.t_max}")
        if self.nx < 4:
            raise InputError("need at least 4 nodes")

    @property
    def nx(self) -> int:
        return int(round(1 / self.dx)) + 1

    @property
    def nt(self) -> int:
        return int(round(self.t_max / self.dt))

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nx)

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.nt + 1) * self.dt

    def level(self, t: float) -> int:
        """Time level of an on-grid instant."""
        n = t / self.dt
        if abs(n - round(n)) > 1e-6 or round(n) < 0 or round(n) > self.nt:
            raise InputError(f"t*={t} is not a time level of this grid")
        return int(round(n))


@dataclass
class MarchState:
    """Two consecutive levels; enough to resume a march exactly."""

    n: int
    u_prev: np.ndarray
    u: np.ndarray
    X_prev: np.ndarray
    X: np.ndarray
    Y_prev: np.ndarray
    Y: np.ndarray


def _quot(N, Nd, Q, Qd, pi, qi):
    """Value, first and second derivatives of N/Q with N, Q linear."""
    f = N / Q
    fd = (Nd - f[:, None] * Qd) / Q[:, None]
    fde = -(fd[:, pi] * Qd[:, qi] + fd[:, qi] * Qd[:, pi]) / Q[:, None]
    return f, fd, fde


def _combine(terms, pi, qi, second: bool):
    """Sum of coefficient * operand terms with product-rule derivatives.

    Each term is ((f, fd, fde), (v, vd, vde)); vd and vde are None for an
    operand that does not depend on the parameters.
    """
    val = d = de = 0.0
    for (f, fd, fde), (v, vd, vde) in terms:
        val = val + f * v
        d = d + fd * v[:, None]
        if vd is not None:
            d = d + f[:, None] * vd
        if second:
            de = de + fde * v[:, None]
            if vd is not None:
                de = de + fd[:, pi] * vd[:, qi] + fd[:, qi] * vd[:, pi] + f[:, None] * vde
    return val, d, (de if second else None)


class Stencil:
    """Coefficient arrays and their derivatives for one batch of rows."""

    def __init__(self, problem: DimensionlessProblem, grid: Grid, theta: np.ndarray,
                 params: Sequence[ParamId], pairs: Sequence[tuple[int, int]], flux_stencil: str,
                 boundary: str = "half_cell"):
        if flux_stencil not in FLUX_STENCILS:
            raise InputError(f"flux stencil must be one of {FLUX_STENCILS}")
        if boundary not in BOUNDARY_SCHEMES:
            raise InputError(f"boundary scheme must be one of {BOUNDARY_SCHEMES}")
        self.problem, self.grid = problem, grid
        self.flux_stencil, self.boundary = flux_stencil, boundary
        nl = problem.n_layers
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        if theta.shape[1] != problem.n_params:
            raise InputError(f"theta rows need {problem.n_params} entries")
        if np.any(theta[:, : 2 * nl] <= 0):
            raise InputError("k* and c* must be positive in every row")
        self.B = B = theta.shape[0]
        x, dx, dt, Fo = grid.x, grid.dx, grid.dt, problem.Fo
        ln = problem.layer_of(x)
        lm = problem.layer_of(0.5 * (x[1:] + x[:-1]))
        for i in range(nl):
            if np.count_nonzero(ln == i) < 2:
                raise InputError(f"grid dx={dx} resolves layer {i + 1} with fewer than 2 nodes")
        K, C = theta[:, :nl], theta[:, nl: 2 * nl]
        P1 = len(params)
        self.second = len(pairs) > 0
        self.pi = pi = np.array([p for p, _ in pairs], dtype=int)
        self.qi = qi = np.array([q for _, q in pairs], dtype=int)

        def indicator(kind, layers):
            layers = np.atleast_1d(layers)
            out = np.zeros((P1, layers.size))
            for r, p in enumerate(params):
                if p.kind == kind:
                    out[r] = layers == p.layer
            return out[None]

        quot = lambda N, Nd, Q, Qd: _quot(N, Nd, Q, Qd, pi, qi)

        # interior nodes
        kp, km, cj = K[:, lm[1:]], K[:, lm[:-1]], C[:, ln[1:-1]]
        dkp, dkm, dc = indicator("k", lm[1:]), indicator("k", lm[:-1]), indicator("c", ln[1:-1])
        a = dt * Fo / dx**2
        s, ds = kp + km, dkp + dkm
        Q, Qd = cj + a * s, dc + a * ds
        zero = np.zeros((1, P1, 1))
        self.df = [quot(2 * a * kp, 2 * a * dkp, Q, Qd), quot(2 * a * km, 2 * a * dkm, Q, Qd),
                   quot(cj - a * s, dc - a * ds, Q, Qd), quot(np.full_like(Q, 2 * dt), zero, Q, Qd)]
        self.seed = [quot(a * kp, a * dkp, cj, dc), quot(a * km, a * dkm, cj, dc),
                     quot(cj - a * s, dc - a * ds, cj, dc), quot(np.full_like(cj, dt), zero, cj, dc)]

        # half-cell energy balances at the two surfaces
        def surface(face_layer, node_layer, Bi):
            kh, dkh = K[:, face_layer], indicator("k", face_layer)[..., 0]
            cb, dcb = C[:, node_layer], indicator("c", node_layer)[..., 0]
            b = dt * Fo
            beta, dbeta = b * (kh / dx + Bi), b * dkh / dx
            Qb, Qbd = 0.5 * dx * cb + beta, 0.5 * dx * dcb + dbeta
            Qe, Qed = 0.5 * dx * cb, 0.5 * dx * dcb
            z = np.zeros((1, P1))
            df = [quot(2 * b * kh / dx, 2 * b * dkh / dx, Qb, Qbd),
                  quot(0.5 * dx * cb - beta, 0.5 * dx * dcb - dbeta, Qb, Qbd),
                  quot(np.full(B, 2 * b), z, Qb, Qbd)]
            seed = [quot(b * kh / dx, b * dkh / dx, Qe, Qed),
                    quot(0.5 * dx * cb - beta, 0.5 * dx * dcb - dbeta, Qe, Qed),
                    quot(np.full(B, b), z, Qe, Qed)]
            return df, seed

        self.left = surface(lm[0], ln[0], problem.Bi_L)
        self.right = surface(lm[-1], ln[-1], problem.Bi_R)
        self.k0, self.dk0 = K[:, ln[0]], indicator("k", ln[0])[..., 0]
        self.kN, self.dkN = K[:, ln[-1]], indicator("k", ln[-1])[..., 0]
        fl = lm[-1] if flux_stencil == "two_point" else ln[-1]
        self.kf, self.dkf = K[:, fl], indicator("k", fl)[..., 0]

        self.has_source = problem.source is not None
        if self.has_source:
            tau, rho = theta[:, 2 * nl], theta[:, 2 * nl + 1]
            if np.any(tau < 0) or np.any(tau > 1) or np.any(rho < 0) or np.any(rho * tau >= 1):
                raise InputError("glass optical parameters out of range")
            A, g, h = absorbed_fraction_derivs(tau, rho)
            sel = {"tau": 0, "rho": 1}
            Ad = np.zeros((B, P1))
            for r, p in enumerate(params):
                if p.kind in sel:
                    Ad[:, r] = g[sel[p.kind]]
            Ade = np.zeros((B, len(pairs)))
            for r, (i, j) in enumerate(pairs):
                if params[i].kind in sel and params[j].kind in sel:
                    Ade[:, r] = h[sel[params[i].kind], sel[params[j].kind]]
            self.A = (A, Ad, Ade)
            # shape function sampled at interior nodes and averaged over the two half cells
            self.phi = x[1:-1]
            self.phi_b = (dx / 4, 1 - dx / 4)

    def _source(self, q, phi, scale=1.0):
        A, Ad, Ade = self.A
        if np.ndim(phi):
            return (A[:, None] * phi * q * scale, Ad[..., None] * phi * q * scale,
                    Ade[..., None] * phi * q * scale)
        return A * phi * q * scale, Ad * phi * q * scale, Ade * phi * q * scale

    def step(self, first: bool, u, X, Y, w, Xw, Yw, sig):
        """New level from (u, w) = (level n, level n-1); first uses the Euler seed."""
        pi, qi, second = self.pi, self.qi, self.second
        uL, uR, g, q, uL1, uR1, g1 = sig
        nb = lambda k: (u[:, k], X[..., k], Y[..., k] if second else None)
        wb = lambda k: (w[:, k], Xw[..., k], Yw[..., k] if second else None)
        sl = lambda arr, a, b: None if arr is None else arr[..., a:b]
        cf = self.seed if first else self.df
        terms = [(cf[0], (u[:, 2:], X[..., 2:], sl(Y, 2, None))),
                 (cf[1], (u[:, :-2], X[..., :-2], sl(Y, None, -2))),
                 (cf[2], (w[:, 1:-1], Xw[..., 1:-1], sl(Yw, 1, -1)))]
        if self.has_source and q != 0.0:
            terms.append((cf[3], self._source(q, self.phi)))
        un = np.empty_like(u)
        Xn = np.empty_like(X)
        Yn = np.empty_like(Y) if second else None
        un[:, 1:-1], Xn[..., 1:-1], c = _combine(terms, pi, qi, second)
        if second:
            Yn[..., 1:-1] = c
        p = self.problem
        if self.boundary == "half_cell":
            for side, k_nb, k_b, F in ((self.left, 1, 0, p.Bi_L * uL + p.alpha * g),
                                       (self.right, -2, -1, p.Bi_R * uR)):
                cb = side[1] if first else side[0]
                force = (np.full(self.B, F), None, None)
                if self.has_source and q != 0.0:
                    v, vd, vde = self._source(q, self.phi_b[0 if k_b == 0 else 1], 0.5 * self.grid.dx / p.Fo)
                    force = (force[0] + v, vd, vde)
                val, d, dd = _combine([(cb[0], nb(k_nb)), (cb[1], wb(k_b)), (cb[2], force)], pi, qi, second)
                un[:, k_b], Xn[..., k_b] = val, d
                if second:
                    Yn[..., k_b] = dd
        else:
            self._one_sided(un, Xn, Yn, uL1, uR1, g1)
        return un, Xn, Yn

    def _robin(self, k, dk, Bi, u1, u2, X1, X2, Y1, Y2, rhs):
        C = 1.5 / self.grid.dx
        A = (4 * u1 - u2) / (2 * self.grid.dx)
        Ad = (4 * X1 - X2) / (2 * self.grid.dx)
        D = k * C + Bi
        ub = (k * A + rhs) / D
        ubd = (dk * A[:, None] + k[:, None] * Ad - ub[:, None] * dk * C) / D[:, None]
        ubde = None
        if Y1 is not None:
            pi, qi = self.pi, self.qi
            Ade = (4 * Y1 - Y2) / (2 * self.grid.dx)
            ubde = (dk[:, pi] * Ad[:, qi] + dk[:, qi] * Ad[:, pi] + k[:, None] * Ade
                    - C * (ubd[:, pi] * dk[:, qi] + ubd[:, qi] * dk[:, pi])) / D[:, None]
        return ub, ubd, ubde

    def _one_sided(self, un, Xn, Yn, uL, uR, g):
        """Second-order one-sided Robin closure solved for the surface nodes at the new level."""
        p = self.problem
        Y1 = Y2 = Z1 = Z2 = None
        if Yn is not None:
            Y1, Y2, Z1, Z2 = Yn[..., 1], Yn[..., 2], Yn[..., -2], Yn[..., -3]
        u0, X0, Y0 = self._robin(self.k0, self.dk0, p.Bi_L, un[:, 1], un[:, 2], Xn[..., 1], Xn[..., 2],
                                 Y1, Y2, p.Bi_L * uL + p.alpha * g)
        uN, XN, YN = self._robin(self.kN, self.dkN, p.Bi_R, un[:, -2], un[:, -3], Xn[..., -2], Xn[..., -3],
                                 Z1, Z2, p.Bi_R * uR)
        un[:, 0], un[:, -1] = u0, uN
        Xn[..., 0], Xn[..., -1] = X0, XN
        if Yn is not None:
            Yn[..., 0], Yn[..., -1] = Y0, YN

    def flux(self, u, X, Y):
        """Interior-surface flux j* = -k du/dx at x*=1 and its derivatives."""
        dx, k, dk = self.grid.dx, self.kf, self.dkf
        if self.flux_stencil == "two_point":
            g, gd = (u[:, -1] - u[:, -2]) / dx, (X[..., -1] - X[..., -2]) / dx
            ge = None if Y is None else (Y[..., -1] - Y[..., -2]) / dx
        else:
            g = (3 * u[:, -1] - 4 * u[:, -2] + u[:, -3]) / (2 * dx)
            gd = (3 * X[..., -1] - 4 * X[..., -2] + X[..., -3]) / (2 * dx)
            ge = None if Y is None else (3 * Y[..., -1] - 4 * Y[..., -2] + Y[..., -3]) / (2 * dx)
        j = -k * g
        jd = -(dk * g[:, None] + k[:, None] * gd)
        jde = None
        if Y is not None:
            pi, qi = self.pi, self.qi
            jde = -(dk[:, pi] * gd[:, qi] + dk[:, qi] * gd[:, pi] + k[:, None] * ge)
        return j, jd, jde


def _signals(problem: DimensionlessProblem, grid: Grid):
    problem.boundary.check(grid.t_max)
    t = grid.t
    bs = problem.boundary
    out = [np.broadcast_to(np.asarray(s(t), dtype=float), t.shape) for s in (bs.u_L, bs.u_R, bs.g_L)]
    if problem.source is not None:
        if problem.source.q.horizon < grid.t_max * (1 - 1e-12):
            raise InputError("shortwave series shorter than the horizon")
        out.append(np.broadcast_to(np.asarray(problem.source.q(t), dtype=float), t.shape))
    else:
        out.append(np.zeros_like(t))
    for arr, name in zip(out, ("u_L", "u_R", "g_L", "q")):
        if not np.all(np.isfinite(arr)):
            raise InputError(f"boundary signal {name} is not finite on the horizon")
    return out


def _check(arr, n, what):
    if not np.isfinite(arr).all():
        bad = np.argwhere(~np.isfinite(arr))
        raise DivergenceError(int(bad[0][-1]), n, what)


def march(problem: DimensionlessProblem, grid: Grid, theta=None, params=(), pairs=(),
          flux_stencil: str = "two_point", state: MarchState | None = None,
          stop: int | None = None, boundary: str = "half_cell",
          ) -> Iterator[tuple[int, np.ndarray, np.ndarray, np.ndarray | None, tuple]]:
    """Yield (n, u, X, Y, flux) level by level.

    u is (rows, nx); X is (rows, len(params), nx); Y is (rows, len(pairs), nx)
    or None. flux is (j, dj, d2j) at that level. Pairs index into params.
    A state from a previous march re-yields level state.n, then continues.
    """
    params = parse_params(params)
    for p in params:
        p.check(problem)
    pairs = [tuple(int(i) for i in pq) for pq in pairs]
    for i, j in pairs:
        if not (0 <= i < len(params) and 0 <= j < len(params)):
            raise InputError("second-order pairs must index tracked first-order parameters")
    theta = problem.theta()[None] if theta is None else np.atleast_2d(np.asarray(theta, dtype=float))
    st = Stencil(problem, grid, theta, params, pairs, flux_stencil, boundary)
    uL, uR, g, q = _signals(problem, grid)
    B, P1, P2, nx = st.B, len(params), len(pairs), grid.nx
    want_Y = P2 > 0
    stop = grid.nt if stop is None else stop
    if state is None:
        u = np.repeat(problem.initial(grid.x)[None], B, axis=0)
        _check(u, 0, "u")
        X = np.zeros((B, P1, nx))
        Y = np.zeros((B, P2, nx)) if want_Y else None
        u_prev, X_prev, Y_prev = u, X, Y
        n0 = 0
        yield 0, u, X, Y, st.flux(u, X, Y)
    else:
        u_prev, u, X_prev, X, Y_prev, Y = state.u_prev, state.u, state.X_prev, state.X, state.Y_prev, state.Y
        n0 = state.n
        yield n0, u, X, Y, st.flux(u, X, Y)
    for n in range(n0, stop):
        sig = (uL[n], uR[n], g[n], q[n], uL[n + 1], uR[n + 1], g[n + 1])
        un, Xn, Yn = st.step(n == 0, u, X, Y, u_prev, X_prev, Y_prev, sig)
        _check(un, n + 1, "u")
        if (n + 1) % 64 == 0 or n + 1 == stop:
            _check(Xn, n + 1, "first-order sensitivity")
            if want_Y:
                _check(Yn, n + 1, "second-order sensitivity")
        u_prev, X_prev, Y_prev, u, X, Y = u, X, Y, un, Xn, Yn
        yield n + 1, u, X, Y, st.flux(u, X, Y)


@dataclass
class Solution:
    """Everything a batched march records."""

    grid: Grid
    params: list[ParamId]
    pairs: list[tuple[int, int]]
    theta: np.ndarray
    t_saved: np.ndarray
    u: np.ndarray | None
    X: np.ndarray | None
    Y: np.ndarray | None
    t: np.ndarray
    j: np.ndarray | None
    dj: np.ndarray | None
    d2j: np.ndarray | None
    edges: np.ndarray
    E: np.ndarray
    dE: np.ndarray
    d2E: np.ndarray
    dj_sq: np.ndarray
    evaluations: int
    state: MarchState | None = None
    flux_stencil: str = "two_point"
    extra: dict = field(default_factory=dict)


def run(problem: DimensionlessProblem, grid: Grid, theta=None, params=(), pairs=(), *,
        flux_stencil: str = "two_point", boundary: str = "half_cell",
        save_every: int | None = None, keep_flux: bool = True,
        edges: Sequence[float] | None = None, chunk_rows: int = 1024,
        state: MarchState | None = None, stop: int | None = None) -> Solution:
    """March a batch and collect fields, flux series and interval loads.

    save_every=None stores no fields; edges are the loads interval
    boundaries in t* (default: the whole horizon). Loads, their
    derivatives and the time integrals of squared flux derivatives are
    accumulated with the trapezoid rule over every time level.
    """
    params = parse_params(params)
    pairs = [tuple(pq) for pq in pairs]
    theta = problem.theta()[None] if theta is None else np.atleast_2d(np.asarray(theta, dtype=float))
    stop = grid.nt if stop is None else stop
    edges = np.array([0.0, stop * grid.dt] if edges is None else edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise InputError("interval edges must be increasing with at least two entries")
    edge_levels = [grid.level(e) for e in edges]
    if state is not None and theta.shape[0] > chunk_rows:
        raise InputError("resuming is only supported for a single chunk")
    parts = []
    for lo in range(0, theta.shape[0], chunk_rows):
        parts.append(_collect(problem, grid, theta[lo: lo + chunk_rows], params, pairs, flux_stencil,
                              boundary, save_every, keep_flux, edge_levels, state, stop))
    cat = lambda i: None if parts[0][i] is None else np.concatenate([p[i] for p in parts])
    t_saved = parts[0][-2]
    return Solution(grid, params, pairs, theta, t_saved, cat(0), cat(1), cat(2),
                    grid.t[: stop + 1] if state is None else grid.t[state.n: stop + 1],
                    cat(3), cat(4), cat(5), edges, cat(6), cat(7), cat(8), cat(9),
                    evaluations=theta.shape[0], state=parts[-1][-1], flux_stencil=flux_stencil)


def _collect(problem, grid, theta, params, pairs, flux_stencil, boundary, save_every, keep_flux,
             edge_levels, state, stop):
    B, P1, P2 = theta.shape[0], len(params), len(pairs)
    saved_u, saved_X, saved_Y, t_saved = [], [], [], []
    js, djs, d2js = [], [], []
    cum = [np.zeros(B), np.zeros((B, P1)), np.zeros((B, P2)), np.zeros((B, P1))]
    marks = {}
    prev = None
    dt = grid.dt
    edge_set = set(edge_levels)
    last = before = None
    for n, u, X, Y, (j, dj, d2j) in march(problem, grid, theta, params, pairs, flux_stencil, state, stop,
                                                 boundary):
        vals = (j, dj, d2j if d2j is not None else np.zeros((B, P2)), dj * dj)
        if prev is not None:
            for c, a, b in zip(cum, prev, vals):
                c += 0.5 * dt * (a + b)
        prev = vals
        if n in edge_set:
            marks[n] = [c.copy() for c in cum]
        if keep_flux:
            js.append(j)
            djs.append(dj)
            if P2:
                d2js.append(d2j)
        if save_every and (n % save_every == 0 or n == stop):
            saved_u.append(u)
            saved_X.append(X)
            if P2:
                saved_Y.append(Y)
            t_saved.append(n * dt)
        before, last = last, (n, u, X, Y)
    start = edge_levels[0]
    if start not in marks:
        raise InputError("first interval edge precedes the resumed march")
    missing = [e for e in edge_levels if e not in marks]
    if missing:
        raise InputError(f"interval edges beyond the march end: levels {missing}")
    diffs = [np.stack([marks[b][i] - marks[a][i] for a, b in zip(edge_levels[:-1], edge_levels[1:])], axis=-1)
             for i in range(4)]
    stk = lambda lst, ax: np.stack(lst, axis=ax) if lst else None
    st = None
    if before is not None:
        st = MarchState(last[0], before[1], last[1], before[2], last[2], before[3], last[3])
    return (stk(saved_u, 1), stk(saved_X, 2), stk(saved_Y, 2) if P2 else None,
            stk(js, 1), stk(djs, 2), stk(d2js, 2) if P2 else None,
            diffs[0], diffs[1], diffs[2], diffs[3], np.array(t_saved), st)


# -- single-trajectory conveniences --------------------------------------------

@dataclass
class FieldHistory:
    x: np.ndarray
    t: np.ndarray
    u: np.ndarray  # (levels, nodes)

    def at(self, x_probe: float) -> np.ndarray:
        """Series at a probe position, interpolated linearly between nodes."""
        if not 0 <= x_probe <= 1:
            raise InputError("probe must lie in [0, 1]")
        return np.array([np.interp(x_probe, self.x, row) for row in self.u])


@dataclass
class OutputBundle:
    t: np.ndarray
    probes: dict[float, np.ndarray]
    j: np.ndarray
    edges: np.ndarray
    E: np.ndarray
    field: FieldHistory | None = None


def solve(problem: DimensionlessProblem, grid: Grid, save_every: int = 1) -> FieldHistory:
    """Temperature field of one trajectory, stored every save_every levels."""
    sol = run(problem, grid, save_every=save_every, keep_flux=False)
    return FieldHistory(grid.x, sol.t_saved, sol.u[0])


def interior_flux(history: FieldHistory, problem: DimensionlessProblem, grid: Grid,
                  flux_stencil: str = "two_point") -> np.ndarray:
    """j*(t) at x*=1 from a stored field."""
    u = history.u
    x = grid.x
    if flux_stencil == "two_point":
        k = evaluate_k(problem, 0.5 * (x[-1] + x[-2]))
        return -k * (u[:, -1] - u[:, -2]) / grid.dx
    if flux_stencil == "three_point":
        k = evaluate_k(problem, 1.0)
        return -k * (3 * u[:, -1] - 4 * u[:, -2] + u[:, -3]) / (2 * grid.dx)
    raise InputError(f"flux stencil must be one of {FLUX_STENCILS}")


def evaluate_k(problem: DimensionlessProblem, x: float) -> float:
    return float(np.asarray(problem.k)[problem.layer_of(x)])


def thermal_loads(t: np.ndarray, j: np.ndarray, interval: tuple[float, float]) -> np.ndarray:
    """Integral of the piecewise-linear flux interpolant over [t0, t1]."""
    t0, t1 = map(float, interval)
    t = np.asarray(t, dtype=float)
    j = np.asarray(j, dtype=float)
    if not t1 > t0:
        raise InputError("loads interval must have positive length")
    if t0 < t[0] - 1e-12 or t1 > t[-1] + 1e-12:
        raise InputError("loads interval leaves the simulated horizon")
    inside = (t > t0) & (t < t1)
    tt = np.concatenate([[t0], t[inside], [t1]])
    interp = lambda s: np.interp(s, t, j) if j.ndim == 1 else np.stack(
        [np.interp(s, t, row) for row in j.reshape(-1, j.shape[-1])]).reshape(*j.shape[:-1], -1)
    jj = np.concatenate([interp(np.array([t0])), j[..., inside], interp(np.array([t1]))], axis=-1)
    return np.trapezoid(jj, tt, axis=-1)


def outputs(problem: DimensionlessProblem, grid: Grid, probes: Sequence[float] = (),
            edges: Sequence[float] | None = None, save_every: int | None = None,
            flux_stencil: str = "two_point") -> OutputBundle:
    """Probe series, flux and loads for the nominal parameters."""
    every = save_every or (1 if probes else None)
    sol = run(problem, grid, save_every=every, edges=edges, flux_stencil=flux_stencil)
    hist = FieldHistory(grid.x, sol.t_saved, sol.u[0]) if every else None
    pr = {float(p): hist.at(float(p)) for p in probes} if hist is not None else {}
    return OutputBundle(sol.t, pr, sol.j[0], sol.edges, sol.E[0], hist)


def steady_state(problem: DimensionlessProblem, uL: float, uR: float, x: np.ndarray | None = None):
    """Stationary profile and flux under constant air temperatures, g=0 and no source."""
    edges = np.concatenate([[0.0], problem.breakpoints, [1.0]])
    R = 1 / problem.Bi_L + np.sum(np.diff(edges) / np.asarray(problem.k)) + 1 / problem.Bi_R
    j = (uL - uR) / R
    if x is None:
        return j
    # temperature drops across the left film and each layer in series
    res = np.concatenate([[0.0], np.cumsum(np.diff(edges) / np.asarray(problem.k))])
    r_at = np.interp(x, edges, res)
    return uL - j * (1 / problem.Bi_L + r_at), j


__all__ = ["Grid", "MarchState", "Solution", "FieldHistory", "OutputBundle", "march", "run", "solve",
           "interior_flux", "thermal_loads", "outputs", "steady_state", "FLUX_STENCILS"]
