"""Fine-grid implicit reference solutions and error norms.

Finite volumes with harmonic face conductivities and cell-averaged
capacities, integrated by the trapezoidal rule in time (Crank-Nicolson).
Several parameter rows are solved as one block-diagonal tridiagonal system
factorised once with LAPACK.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import lapack

from .errors import InputError, OracleError
from .solver import Grid
from .wall import DimensionlessProblem, ParamId, absorbed_fraction


@dataclass(frozen=True)
class OracleConfig:
    refine_x: int = 4
    refine_t: int = 4
    tol: float = 1e-3
    verify: bool = False

    def __post_init__(self):
        if self.refine_x < 4 or self.refine_t < 4:
            raise InputError("oracle refinement must be at least 4x in space and time")
        if self.tol <= 0:
            raise InputError("oracle tolerance must be positive")


def _cell_geometry(problem: DimensionlessProblem, M: int, theta: np.ndarray):
    """Control-volume widths, averaged capacities and face conductivities."""
    nl = problem.n_layers
    K, C = theta[:nl], theta[nl: 2 * nl]
    edges = np.concatenate([[0.0], problem.breakpoints, [1.0]])
    x = np.linspace(0.0, 1.0, M + 1)
    h = 1.0 / M
    lo = np.clip(x - h / 2, 0, 1)
    hi = np.clip(x + h / 2, 0, 1)

    def integral(a, b, vals):
        """Integral over [a, b] of a piecewise-constant layer field."""
        out = np.zeros_like(a)
        for i in range(nl):
            out += vals[i] * np.clip(np.minimum(b, edges[i + 1]) - np.maximum(a, edges[i]), 0, None)
        return out

    V = hi - lo
    cap = integral(lo, hi, C)
    kface = h / integral(x[:-1], x[1:], 1.0 / K)
    return x, V, cap, kface


def _assemble(problem, M, theta, dt):
    x, V, cap, kf = _cell_geometry(problem, M, theta)
    h = 1.0 / M
    Fo = problem.Fo
    w = Fo * kf / h
    # A u = stiffness (positive semidefinite) incl. Robin terms
    diag = np.zeros(M + 1)
    diag[:-1] += w
    diag[1:] += w
    diag[0] += Fo * problem.Bi_L
    diag[-1] += Fo * problem.Bi_R
    off = -w
    return x, V, cap, diag, off


def _rhs_forcing(problem, x, V, t, theta, forcing):
    """Cell-integrated boundary and source forcing at time t; shape (nx,)."""
    Fo = problem.Fo
    b = np.zeros_like(x)
    bs = problem.boundary
    b[0] += Fo * (problem.Bi_L * float(bs.u_L(t)) + problem.alpha * float(bs.g_L(t)))
    b[-1] += Fo * problem.Bi_R * float(bs.u_R(t))
    if problem.source is not None:
        nl = problem.n_layers
        A = absorbed_fraction(theta[2 * nl + 1], theta[2 * nl])
        h = x[1] - x[0]
        lo, hi = np.clip(x - h / 2, 0, 1), np.clip(x + h / 2, 0, 1)
        b += A * float(problem.source.q(t)) * 0.5 * (hi**2 - lo**2)
    if forcing is not None:
        b += V * forcing(x, t)
    return b


def reference_rows(problem: DimensionlessProblem, grid: Grid, thetas: np.ndarray,
                   config: OracleConfig = OracleConfig(),
                   forcing: Callable | None = None, _rx: int | None = None, _rt: int | None = None) -> np.ndarray:
    """Reference fields for several parameter rows, on the production lattice.

    Returns (rows, nt+1, nx). forcing(x, t) adds a volumetric source.
    """
    rx = _rx or config.refine_x
    rt = _rt or config.refine_t
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    B = thetas.shape[0]
    M = (grid.nx - 1) * rx
    dt = grid.dt / rt
    nsteps = grid.nt * rt
    problem.boundary.check(grid.t_max)
    blocks = [_assemble(problem, M, th, dt) for th in thetas]
    x, V = blocks[0][0], blocks[0][1]
    n = M + 1
    # block-diagonal tridiagonal system: (diag(cap*V/dt) + A/2) u+ = (diag/dt - A/2) u + (b+ + b)/2
    mass = np.concatenate([b[2] / dt for b in blocks])
    Ad = np.concatenate([b[3] for b in blocks])
    # zero entries between blocks decouple the rows
    Ao = np.concatenate([np.append(b[4], 0.0) for b in blocks])[:-1]
    dl, d, du, du2, ipiv, info = lapack.dgttrf(0.5 * Ao, mass + 0.5 * Ad, 0.5 * Ao)
    if info != 0:
        raise OracleError(f"tridiagonal factorisation failed (info={info})")
    u = np.concatenate([problem.initial(x)] * B)
    out = np.empty((B, grid.nt + 1, grid.nx))
    out[:, 0] = u.reshape(B, n)[:, ::rx]
    same_rows = problem.source is None
    b_prev = _stack_rhs(problem, x, V, 0.0, thetas, forcing, same_rows)
    for s in range(1, nsteps + 1):
        t = s * dt
        b_new = _stack_rhs(problem, x, V, t, thetas, forcing, same_rows)
        Au = Ad * u
        Au[:-1] += Ao * u[1:]
        Au[1:] += Ao * u[:-1]
        rhs = mass * u - 0.5 * Au + 0.5 * (b_prev + b_new)
        u, info = lapack.dgttrs(dl, d, du, du2, ipiv, rhs)
        if info != 0 or not np.all(np.isfinite(u)):
            raise OracleError(f"reference march failed at fine step {s}")
        b_prev = b_new
        if s % rt == 0:
            out[:, s // rt] = u.reshape(B, n)[:, ::rx]
    if config.verify and _rx is None:
        coarse = reference_rows(problem, grid, thetas, config, forcing, _rx=max(rx // 2, 1), _rt=max(rt // 2, 1))
        gap = float(np.max(eps2(coarse, out)))
        # the coarse companion carries ~4x the error of the fine run
        if gap / 3 > config.tol:
            raise OracleError(f"reference not converged: estimated error {gap / 3:.2e} > {config.tol:.1e}")
    return out


def _stack_rhs(problem, x, V, t, thetas, forcing, same_rows):
    if same_rows:
        b = _rhs_forcing(problem, x, V, t, thetas[0], forcing)
        return np.tile(b, len(thetas))
    return np.concatenate([_rhs_forcing(problem, x, V, t, th, forcing) for th in thetas])


def reference_solve(problem: DimensionlessProblem, grid: Grid, config: OracleConfig = OracleConfig(),
                    forcing: Callable | None = None) -> np.ndarray:
    """Reference u on the production lattice, shape (nt+1, nx)."""
    return reference_rows(problem, grid, problem.theta()[None], config, forcing)[0]


def reference_sensitivity(problem: DimensionlessProblem, grid: Grid, p, config: OracleConfig = OracleConfig(),
                          q=None, delta: float = 1e-4) -> np.ndarray:
    """Finite-difference derivative of the reference field, Richardson-extrapolated.

    With q given, returns the second derivative d2u/dp dq (q == p for the
    pure second derivative).
    """
    p = ParamId.parse(p)
    ip = p.index(problem)
    th0 = problem.theta()
    if q is None:
        rows = []
        for h in (delta, delta / 2):
            for s in (1, -1):
                th = th0.copy()
                th[ip] += s * h
                rows.append(th)
        f = reference_rows(problem, grid, np.array(rows), config)
        D1 = (f[0] - f[1]) / (2 * delta)
        D2 = (f[2] - f[3]) / delta
        return (4 * D2 - D1) / 3
    q = ParamId.parse(q)
    iq = q.index(problem)
    # second derivatives amplify round-off; a larger base step keeps it below truncation
    delta = max(delta, 1e-3)
    if iq == ip:
        rows = [th0.copy()]
        for h in (delta, delta / 2):
            for s in (1, -1):
                th = th0.copy()
                th[ip] += s * h
                rows.append(th)
        f = reference_rows(problem, grid, np.array(rows), config)
        D1 = (f[1] - 2 * f[0] + f[2]) / delta**2
        D2 = (f[3] - 2 * f[0] + f[4]) / (delta / 2) ** 2
        return (4 * D2 - D1) / 3
    rows = []
    for h in (delta, delta / 2):
        for sp, sq in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            th = th0.copy()
            th[ip] += sp * h
            th[iq] += sq * h
            rows.append(th)
    f = reference_rows(problem, grid, np.array(rows), config)
    D1 = (f[0] - f[1] - f[2] + f[3]) / (4 * delta**2)
    D2 = (f[4] - f[5] - f[6] + f[7]) / delta**2
    return (4 * D2 - D1) / 3


def eps2(candidate, reference) -> np.ndarray:
    """Per-node RMS over time levels; arrays are (..., levels, nodes)."""
    a = np.asarray(candidate, dtype=float)
    b = np.asarray(reference, dtype=float)
    if a.shape != b.shape:
        raise InputError(f"misaligned series: {a.shape} vs {b.shape}")
    return np.sqrt(np.mean((a - b) ** 2, axis=-2))
