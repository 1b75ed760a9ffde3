"""Acceptance criteria, one check per criterion.

Each check returns (passed, detail). Under pytest every check is a test and
the terminal summary prints one PASS/FAIL line per criterion; run the file
directly to get the same lines without pytest.
"""
from __future__ import annotations

import time
from functools import cache

import numpy as np
import pytest

from wallsens import Grid, run, validation_case
from wallsens.baselines import (ISHIGAMI_DOMAINS, ishigami, ishigami_indices, lhs, rbd_fast, sobol_indices,
                                src_srrc)
from wallsens.envelope import (EnvelopeCase, GlassSpec, bayonne_problem, envelope_metrics, glass_grid,
                               month_edges, window_problem)
from wallsens.fd import FdScheme, fd_sensitivity
from wallsens.metrics import metric_report, rank_parameters, sensitivity_norms
from wallsens.oracle import eps2, reference_rows, reference_sensitivity
from wallsens.taylor import lattice_error, remainder_slope
from wallsens.wall import absorbed_fraction, parse_params
from wallsens.weather import synthetic_weather

RESULTS: dict[int, tuple[bool, str, float]] = {}
SEEDS = (0, 1, 2, 3, 4)
FIELD_GRID = Grid(1e-2, 1e-3, 30.0)
LOADS_GRID = Grid(1e-2, 1e-3, 5.0)
KC = parse_params("k2,c2")
ANCHOR = {"k2": 0.3, "c2": 0.5}
DOMAINS = {p: (0.1 * ANCHOR[str(p)], 1.9 * ANCHOR[str(p)]) for p in KC}


def record(number: int, fn):
    t0 = time.perf_counter()
    ok, detail = fn()
    RESULTS[number] = (bool(ok), detail, time.perf_counter() - t0)
    return ok, detail


@cache
def _problem():
    return validation_case()


@cache
def _reference_k1():
    return reference_sensitivity(_problem(), FIELD_GRID, "k1")


@cache
def _continuous_k1():
    sol = run(_problem(), FIELD_GRID, params=["k1"], pairs=[(0, 0)], save_every=1, keep_flux=False)
    return sol.X[0, 0], sol.Y[0, 0]


@cache
def _reports():
    return {n: metric_report(_problem(), LOADS_GRID, KC, DOMAINS, n) for n in (20, 5)}


def _loads_model(X):
    rows = np.repeat(_problem().theta()[None], len(X), axis=0)
    rows[:, [1, 3]] = X
    return run(_problem(), LOADS_GRID, rows, keep_flux=False).E[:, 0]


@cache
def _sobol():
    return [sobol_indices(_loads_model, 1024, list(DOMAINS.values()), seed) for seed in SEEDS]


@cache
def _weather():
    return synthetic_weather(30, seed=0)


def criterion_1():
    p = _problem()
    u = run(p, FIELD_GRID, save_every=1, keep_flux=False).u[0]
    e = eps2(u, reference_rows(p, FIELD_GRID, p.theta()[None])[0])
    return e.max() <= 5e-3, f"max eps2(u) = {e.max():.2e} (<= 5e-3)"


def criterion_2():
    X, Y = _continuous_k1()
    e1 = eps2(X, _reference_k1()).max()
    e2 = eps2(Y, reference_sensitivity(_problem(), FIELD_GRID, "k1", q="k1")).max()
    return e1 <= 1e-2 and e2 <= 1e-1, f"max eps2 X_k1 = {e1:.2e} (<= 1e-2), X_k1k1 = {e2:.2e} (<= 1e-1)"


def criterion_3():
    p = _problem()
    ref = _reference_k1()
    model = lambda pts: run(p, FIELD_GRID, np.asarray(pts), save_every=1, keep_flux=False).u
    central = fd_sensitivity(model, p.theta(), FdScheme("central", 1e-3), 0, batched=True).value
    forward = fd_sensitivity(model, p.theta(), FdScheme("forward", 1e-2), 0, batched=True).value
    e_cont, e_c, e_f = (eps2(v, ref).max() for v in (_continuous_k1()[0], central, forward))
    same_order = abs(np.log10(e_c / e_cont)) <= 1
    return same_order and e_f > e_c, (f"eps2 continuous {e_cont:.2e}, central(1e-3) {e_c:.2e}, "
                                      f"forward(1e-2) {e_f:.2e}")


@cache
def _taylor_lattice():
    fk = np.round(np.linspace(0.1, 1.9, 21), 12)
    K, C = np.meshgrid(0.3 * fk, 0.5 * fk, indexing="ij")
    pts = np.column_stack([K.ravel(), C.ravel()])
    err = lattice_error(_problem(), LOADS_GRID, KC, pts, kind="field").reshape(21, 21)
    return fk, err


def criterion_4():
    fk, err = _taylor_lattice()
    inside = (fk[:, None] >= 0.2) & (fk[None, :] >= 0.35)
    worst = err[inside].max()
    i, j = np.unravel_index(np.where(inside, err, -1).argmax(), err.shape)
    mid = 10
    near = np.abs(fk - 1) <= 0.45
    slope_k = remainder_slope(fk[near] - 1, err[near, mid])
    slope_c = remainder_slope(fk[near] - 1, err[mid, near])
    ok = worst <= 1e-2 and abs(slope_k - 3) <= 0.3 and abs(slope_c - 3) <= 0.3
    return ok, (f"max eps_tay inside = {worst:.3e} at (k2, c2) factors ({fk[i]:.2f}, {fk[j]:.2f}) (<= 1e-2); "
                f"slopes k2 {slope_k:.2f}, c2 {slope_c:.2f} (3 +- 0.3)")


def criterion_5():
    r = _reports()
    eta = np.array(list(r[20].eta.values()))
    g20 = np.array(list(r[20].gamma.values()))
    g5 = np.array(list(r[5].gamma.values()))
    ok = (np.all(np.abs(eta - [0.86, 0.14]) <= 0.02) and np.all(np.abs(g20 - [0.77, 0.23]) <= 0.03)
          and np.all(np.abs(g5 - [0.80, 0.20]) <= 0.03) and abs(g20.sum() - 1) <= 1e-10 and abs(g5.sum() - 1) <= 1e-10)
    return ok, f"eta {np.round(eta, 4)}, gamma N=20 {np.round(g20, 4)}, N=5 {np.round(g5, 4)}"


def criterion_6():
    d_tot = np.mean([r.d_total for r in _sobol()], axis=0)
    bound = np.array([_reports()[20].bounds[p]["nu/pi2"] for p in KC])
    return bool(np.all(d_tot <= bound)), f"D_tot {d_tot} <= nu/pi^2 {bound}"


def criterion_7():
    box = list(DOMAINS.values())
    src = np.mean([src_srrc(X, _loads_model(X)).src_normalized for X in (lhs(150, box, s) for s in SEEDS)], axis=0)
    s1 = np.mean([r.first for r in _sobol()], axis=0)
    st = np.mean([r.total for r in _sobol()], axis=0)
    fast = np.mean([rbd_fast(_loads_model, 500, box, seed=s).first for s in SEEDS], axis=0)
    close = lambda v, t: bool(np.all(np.abs(v - t) <= 0.05))
    ok = close(src, [0.69, 0.31]) and close(s1, [0.66, 0.33]) and close(st, [0.67, 0.34]) and close(fast, [0.66, 0.32])
    return ok, (f"SRC {np.round(src, 3)}, S1 {np.round(s1, 3)}, Stot {np.round(st, 3)}, "
                f"RBD-FAST {np.round(fast, 3)} over {len(SEEDS)} seeds")


def criterion_8():
    rep = _reports()[20]
    sobol_runs = _sobol()[0].evaluations
    ratio = sobol_runs / rep.evaluations
    ok = rep.evaluations <= len(KC) * 20 + 1 and sobol_runs == (len(KC) + 2) * 1024 and ratio >= 50
    return ok, f"derivative metrics {rep.evaluations} runs in {rep.marches} marches vs Sobol {sobol_runs}: ratio {ratio:.0f}"


def criterion_9():
    w = _weather()
    prob = bayonne_problem(w)
    grid = Grid(0.02, 0.05, 30 * 24.0)
    params = parse_params("k1,k2,k3,c1,c2,c3")
    rep = metric_report(prob, grid, params, n=5, output="integrated",
                        edges=month_edges(30) / prob.refs.t_ref,
                        domains={p: (0.5 * v, 1.5 * v) for p, v in zip(params, prob.theta())})
    eta = {str(p): v for p, v in rep.eta_layer.items()}
    ranked = rank_parameters(rep.eta)
    caps_out = {str(p) for p in ranked.insignificant} >= {"c1", "c2", "c3"}
    ok = all(eta[f"k{i}"] >= 0.99 for i in (1, 2, 3)) and all(eta[f"c{i}"] <= 1e-2 for i in (1, 2, 3)) and caps_out
    return ok, ("per-layer eta " + ", ".join(f"{k} {v:.3g}" for k, v in eta.items())
                + f"; non-significant {[str(p) for p in ranked.insignificant]}")


def criterion_10():
    w = _weather()
    H = 30 * 24.0
    case = EnvelopeCase(bayonne_problem(w), Grid(0.02, 0.05, H), window_problem(w), glass_grid(H, 5e-3),
                        month_edges(30))
    g = {str(p): v for p, v in envelope_metrics(case, n=5).gamma.items()}
    optics = max(g["tau"], g["rho"])
    A = absorbed_fraction(0.15, 0.26)
    exact = (1 - 0.26) * (1 - 0.15) / (1 - 0.15 * 0.26)
    ok = min(g["k1"], g["k2"]) >= 10 * optics and abs(A - exact) <= 1e-12 and GlassSpec().absorbed == A
    return ok, (f"gamma k1 {g['k1']:.3f}, k2 {g['k2']:.3f}, tau {g['tau']:.1e}, rho {g['rho']:.1e}; "
                f"A(0.15, 0.26) = {A:.15f}")


def criterion_11():
    p = _problem()
    g = Grid(0.02, 2e-3, 5.0)
    a = run(p, g, params=["k1", "c2"], pairs=[(0, 1)], save_every=1).Y[0, 0]
    b = run(p, g, params=["c2", "k1"], pairs=[(0, 1)], save_every=1).Y[0, 0]
    sym = np.abs(a - b).max()
    from wallsens.wall import BoundarySignals, Signal
    from dataclasses import replace
    eq = replace(p, boundary=BoundarySignals(Signal.constant(0.4), Signal.constant(0.4)), u0=0.4)
    zero = np.abs(sensitivity_norms(eq, g, ["k1", "k2", "c1", "c2"], "field")).max()
    det = all(np.array_equal(x, y) for x, y in zip(
        (sobol_indices(ishigami, 512, ISHIGAMI_DOMAINS, 11).first, lhs(64, ISHIGAMI_DOMAINS, 5)),
        (sobol_indices(ishigami, 512, ISHIGAMI_DOMAINS, 11).first, lhs(64, ISHIGAMI_DOMAINS, 5))))
    parts = run(p, g, edges=np.linspace(0, 5, 11), keep_flux=False).E[0].sum()
    whole = run(p, g, keep_flux=False).E[0, 0]
    add = abs(parts - whole)
    ish = sobol_indices(ishigami, 8192, ISHIGAMI_DOMAINS, 1)
    S1, ST = ishigami_indices()
    ish_err = max(np.abs(ish.first - S1).max(), np.abs(ish.total - ST).max())
    ok = sym <= 1e-12 and zero <= 1e-20 and det and add <= 1e-10 and ish_err <= 0.03
    return ok, (f"symmetry {sym:.1e}, equilibrium norm {zero:.1e}, deterministic {det}, "
                f"additivity {add:.1e}, Ishigami max error {ish_err:.3f}")


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 12)}
TITLES = {
    1: "solver accuracy on the validation case",
    2: "continuous sensitivity fidelity",
    3: "discrete versus continuous sensitivities",
    4: "Taylor trust region and remainder order",
    5: "derivative-based metrics",
    6: "total-variance bound",
    7: "sampling baselines",
    8: "evaluation count",
    9: "stone wall ranking",
    10: "envelope ordering and absorbed fraction",
    11: "property suite",
}


def summary_lines() -> list[str]:
    lines = []
    for i in sorted(RESULTS):
        ok, detail, sec = RESULTS[i]
        lines.append(f"{'PASS' if ok else 'FAIL'} criterion {i:2d} ({TITLES[i]}): {detail} [{sec:.0f} s]")
    return lines


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    ok, detail = record(number, CRITERIA[number])
    print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    assert ok, detail


if __name__ == "__main__":
    for i in sorted(CRITERIA):
        record(i, CRITERIA[i])
        print(summary_lines()[-1], flush=True)
