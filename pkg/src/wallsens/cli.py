"""Batch command line: `wallsens <task> [options]`."""
from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .baselines import lhs, rbd_fast, sobol_indices, src_srrc
from .envelope import (EnvelopeCase, bayonne_problem, envelope_metrics, envelope_relative_differences,
                       glass_grid, month_edges, window_problem)
from .errors import AcceptanceError, InputError, WallsensError
from .fd import FdScheme, fd_sensitivity
from .io import CSV_VERSION, load_config, read_series, read_weather, write_field, write_table
from .metrics import metric_report
from .oracle import OracleConfig, eps2, reference_rows, reference_sensitivity
from .solver import Grid, run, steady_state
from .taylor import build, lattice_error
from .wall import (DimensionlessProblem, Layer, References, WallSpec, nondimensionalize,
                   parse_params, validation_case)
from .weather import synthetic_weather

TASKS = ("simulate", "sens", "fd-sens", "taylor", "metrics", "src", "sobol", "rbd-fast", "validate", "envelope")
CASES = ("validation", "bayonne-synthetic", "envelope")
LOADS_TASKS = ("metrics", "src", "sobol", "rbd-fast")
FD_SCHEMES = ("forward", "backward", "central", "three_point_backward")


@dataclass
class Setup:
    problem: DimensionlessProblem
    grid: Grid
    params: list
    domains: dict
    lattice_n: int
    n_samples: int
    seed: int
    out: Path
    options: dict
    envelope: EnvelopeCase | None = None
    edges: np.ndarray | None = None  # loads intervals in t*
    files: list = field(default_factory=list)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wallsens", description="Transient wall conduction with parameter sensitivities.")
    ap.add_argument("task", choices=TASKS)
    ap.add_argument("--case", choices=CASES)
    ap.add_argument("--config", help="YAML run configuration")
    ap.add_argument("--grid-dx", type=float)
    ap.add_argument("--grid-dt", type=float)
    ap.add_argument("--t-max", type=float, help="horizon in t*")
    ap.add_argument("--days", type=int, help="length of the synthetic weather year")
    ap.add_argument("--weather", help="CSV with t,q_sw,T_out,T_in")
    ap.add_argument("--params", help="comma list such as k2,c2")
    ap.add_argument("--domain-pct", type=float, help="parameter spread around the anchor, percent")
    ap.add_argument("--lattice-n", type=int)
    ap.add_argument("--n-samples", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--replicates", type=int, default=None, help="seeds averaged by sampling tasks")
    ap.add_argument("--step", type=float, default=None, help="finite-difference parameter step")
    ap.add_argument("--out", default=None)
    ap.add_argument("--quick", action="store_true", help="validate: one replicate per sampling baseline")
    return ap


def _merge(args: argparse.Namespace) -> dict:
    cfg = load_config(args.config) if args.config else {}
    if cfg.get("task") and cfg["task"] != args.task:
        raise InputError(f"config is for task {cfg['task']!r}, command line asks for {args.task!r}")
    flags = {"case": args.case, "weather": args.weather, "days": args.days, "domain_pct": args.domain_pct,
             "lattice_n": args.lattice_n, "n_samples": args.n_samples, "seed": args.seed, "out": args.out}
    for k, v in flags.items():
        if v is not None:
            cfg[k] = str(Path(v).resolve()) if k == "weather" else v
    if args.params:
        cfg["params"] = [p.strip() for p in args.params.split(",") if p.strip()]
    grid = dict(cfg.get("grid", {}))
    for k, v in (("dx", args.grid_dx), ("dt", args.grid_dt), ("t_max", args.t_max)):
        if v is not None:
            grid[k] = v
    cfg["grid"] = grid
    opts = dict(cfg.get("options", {}))
    if args.replicates is not None:
        opts["replicates"] = args.replicates
    if args.step is not None:
        opts["step"] = args.step
    if args.quick:
        opts["quick"] = True
    cfg["options"] = opts
    cfg["task"] = args.task
    if "case" not in cfg and "wall" not in cfg:
        cfg["case"] = "envelope" if args.task == "envelope" else "validation"
    return cfg


def _custom_problem(cfg: dict) -> DimensionlessProblem:
    w = cfg["wall"]
    layers = tuple(Layer(l["k"], l["c"], l["thickness"], l.get("name", f"layer {i + 1}"))
                   for i, l in enumerate(w["layers"]))
    spec = WallSpec(layers, w["h_L"], w["h_R"], w.get("alpha", 1.0))
    r = w.get("references", {})
    refs = References(r.get("k_ref", layers[0].k), r.get("c_ref", layers[0].c), r.get("T_ref", 293.15),
                      r.get("t_ref", 3600.0), spec.length)
    bnd = w["boundary"]
    sig = lambda v: None if v is None else (read_series(v) if isinstance(v, str) else float(v))
    init = w.get("initial", "linear")
    u0 = float(init) if isinstance(init, (int, float)) else None
    prob = nondimensionalize(spec, refs, sig(bnd["T_L"]), sig(bnd["T_R"]), sig(bnd.get("q_L")), u0)
    if init == "steady":
        from dataclasses import replace
        a, b = float(prob.boundary.u_L(0.0)), float(prob.boundary.u_R(0.0))
        prob = replace(prob, u0=lambda x, p=prob: steady_state(p, a, b, np.asarray(x))[0])
    return prob


def _setup(cfg: dict) -> Setup:
    task, case = cfg["task"], cfg.get("case")
    g = cfg["grid"]
    opts = cfg["options"]
    seed = cfg.get("seed", 0)
    out = Path(cfg.get("out") or f"wallsens-{task}").resolve()
    env = edges = None
    if "wall" in cfg:
        prob = _custom_problem(cfg)
        horizon = g.get("t_max")
        if horizon is None:
            horizon = prob.boundary.horizon
            if not np.isfinite(horizon):
                raise InputError("constant boundary data: give grid.t_max")
        grid = Grid(g.get("dx", 0.01), g.get("dt", 0.01), horizon)
        params = cfg.get("params", ["k1"])
        pct, n = cfg.get("domain_pct", 50.0), cfg.get("lattice_n", 5)
    elif case == "validation":
        prob = validation_case()
        t_max = g.get("t_max", 5.0 if task in LOADS_TASKS else 30.0)
        grid = Grid(g.get("dx", 1e-2), g.get("dt", 1e-3), t_max)
        default = ["k2", "c2"] if task in LOADS_TASKS + ("taylor",) else ["k1"]
        params = cfg.get("params", default)
        pct, n = cfg.get("domain_pct", 90.0), cfg.get("lattice_n", 20 if task == "metrics" else 21)
    else:
        weather = read_weather(cfg["weather"]) if cfg.get("weather") else synthetic_weather(cfg.get("days", 365),
                                                                                           seed=seed)
        days = weather.horizon / 86400.0
        H = g.get("t_max", days * 24.0)
        prob = bayonne_problem(weather)
        grid = Grid(g.get("dx", 0.02), g.get("dt", 0.05), H)
        pct, n = cfg.get("domain_pct", 50.0), cfg.get("lattice_n", 5)
        if case == "envelope":
            glass = window_problem(weather, source_form=opts.get("source_form", "literal"))
            seconds = month_edges(int(round(H / 24))) if float(H / 24).is_integer() else np.array([0.0, H * 3600])
            env = EnvelopeCase(prob, grid, glass, glass_grid(H, opts.get("glass_dt", 5e-3)), seconds)
            params = cfg.get("params", ["k1", "k2", "tau", "rho"])
        else:
            params = cfg.get("params", ["k1", "k2", "k3", "c1", "c2", "c3"])
            if float(H / 24).is_integer():
                edges = month_edges(int(round(H / 24))) / prob.refs.t_ref
    params = parse_params(params)
    owner = lambda p: env.glass if env is not None and p.kind in ("tau", "rho") else prob
    for p in params:
        p.check(owner(p))
    frac = pct / 100.0
    domains = {}
    for p in params:
        v = owner(p).theta()[p.index(owner(p))]
        domains[p] = (v * (1 - frac), v * (1 + frac))
    return Setup(prob, grid, params, domains, n, cfg.get("n_samples", 0), seed, out, opts, env, edges)


def _loads_model(s: Setup):
    """Batched loads model over the setup's parameters (dimensionless E over the whole horizon)."""
    idx = [p.index(s.problem) for p in s.params]
    theta0 = s.problem.theta()

    def model(X):
        rows = np.repeat(theta0[None], len(X), axis=0)
        rows[:, idx] = X
        return run(s.problem, s.grid, rows, keep_flux=False).E[:, 0]

    return model


def _dump(s: Setup, name: str, obj) -> Path:
    path = s.out / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
    s.files.append(name)
    return path


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    return str(o)


def _table(s: Setup, name: str, header, cols):
    write_table(s.out / name, header, cols)
    s.files.append(name)


def task_simulate(s: Setup) -> dict:
    every = max(1, s.grid.nt // 200)
    sol = run(s.problem, s.grid, save_every=every)
    write_field(s.out / "field.csv", s.grid.x, sol.t_saved, sol.u[0])
    s.files.append("field.csv")
    _table(s, "flux.csv", ("t_star", "j_star"), (sol.t[::every], sol.j[0, ::every]))
    return {"E_star": float(sol.E[0, 0]), "nx": s.grid.nx, "nt": s.grid.nt, "u_min": float(sol.u[0].min()), "u_max": float(sol.u[0].max())}


def task_sens(s: Setup) -> dict:
    every = max(1, s.grid.nt // 200)
    sol = run(s.problem, s.grid, params=s.params, save_every=every)
    for i, p in enumerate(s.params):
        write_field(s.out / f"sens_{p}.csv", s.grid.x, sol.t_saved, sol.X[0, i], param=str(p))
        s.files.append(f"sens_{p}.csv")
    return {"E_star": float(sol.E[0, 0]), "dE_star": {str(p): float(sol.dE[0, i, 0]) for i, p in enumerate(s.params)}}


def task_fd_sens(s: Setup) -> dict:
    p = s.params[0]
    step = s.options.get("step", 1e-3)
    ip = p.index(s.problem)
    theta0 = s.problem.theta()
    cont = run(s.problem, s.grid, params=[p], save_every=1, keep_flux=False).X[0, 0]

    def model(pts):
        return run(s.problem, s.grid, np.asarray(pts), save_every=1, keep_flux=False).u

    ref = reference_sensitivity(s.problem, s.grid, p, OracleConfig())
    cols = {"continuous": eps2(cont, ref)}
    counts = {"continuous": 1}
    for scheme in FD_SCHEMES:
        r = fd_sensitivity(model, theta0, FdScheme(scheme, step), which=ip, batched=True)
        cols[scheme] = eps2(r.value, ref)
        counts[scheme] = r.evaluations
    _table(s, "fig7_eps2_vs_x.csv", ("x_star",) + tuple(cols), [s.grid.x, *cols.values()])
    return {"param": str(p), "step": step, "max_eps2": {k: float(v.max()) for k, v in cols.items()},
            "evaluations": counts}


def task_taylor(s: Setup) -> dict:
    kind = s.options.get("output", "loads")
    model = build(s.problem, s.grid, s.params, order=2, kind=kind,
                  domain=[s.domains[p] for p in s.params])
    model.save(s.out / "taylor.json")
    s.files.append("taylor.json")
    axes = [np.linspace(*s.domains[p], s.lattice_n) for p in s.params]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    err = lattice_error(s.problem, s.grid, s.params, pts, order=2, kind="field")
    _table(s, "fig11_eps_tay.csv", tuple(str(p) for p in s.params) + ("eps_tay",), [*pts.T, err])
    return {"kind": kind, "lattice_points": len(pts), "max_eps_tay": float(err.max())}


def task_metrics(s: Setup) -> dict:
    output = s.options.get("reading", "loads" if s.envelope is None and s.problem.refs is None else "integrated")
    crossed = [(s.params[0], s.params[1])] if len(s.params) == 2 else []
    rep = metric_report(s.problem, s.grid, s.params, s.domains, s.lattice_n, output, s.edges, crossed=crossed)
    _dump(s, "metrics.json", rep.to_json())
    (s.out / "metrics.csv").write_text(rep.to_csv())
    s.files.append("metrics.csv")
    n = s.n_samples or 1024
    return {"gamma": {str(p): v for p, v in rep.gamma.items()}, "eta": {str(p): v for p, v in rep.eta.items()},
            "marches": rep.marches, "evaluations": rep.evaluations,
            "sobol_evaluations": (len(s.params) + 2) * n}


def _replicates(s: Setup) -> list[int]:
    return [s.seed + r for r in range(int(s.options.get("replicates", 1)))]


def task_src(s: Setup) -> dict:
    n = s.n_samples or 150
    model = _loads_model(s)
    dom = [s.domains[p] for p in s.params]
    reps = []
    for seed in _replicates(s):
        X = lhs(n, dom, seed)
        y = model(X)
        reps.append(src_srrc(X, y))
        if seed == s.seed:
            _table(s, "samples.csv", tuple(str(p) for p in s.params) + ("E_star",), [*X.T, y])
    mean = lambda a: np.mean([getattr(r, a) for r in reps], axis=0)
    res = {"n_samples": n, "seeds": _replicates(s), "src": mean("src"), "srrc": mean("srrc"),
           "src_normalized": mean("src_normalized"), "srrc_normalized": mean("srrc_normalized"),
           "params": [str(p) for p in s.params]}
    _dump(s, "src.json", res)
    return res


def task_sobol(s: Setup) -> dict:
    n = s.n_samples or 1024
    model = _loads_model(s)
    dom = [s.domains[p] for p in s.params]
    reps = [sobol_indices(model, n, dom, seed) for seed in _replicates(s)]
    mean = lambda a: np.mean([getattr(r, a) for r in reps], axis=0)
    res = {"n_samples": n, "seeds": _replicates(s), "first": mean("first"), "total": mean("total"),
           "first_clamped": mean("first_clamped"), "total_clamped": mean("total_clamped"),
           "d_total": mean("d_total"), "variance": mean("variance"), "estimators": reps[0].estimators,
           "evaluations": sum(r.evaluations for r in reps), "params": [str(p) for p in s.params]}
    _dump(s, "sobol.json", res)
    return res


def task_rbd_fast(s: Setup) -> dict:
    n = s.n_samples or 500
    model = _loads_model(s)
    dom = [s.domains[p] for p in s.params]
    M = int(s.options.get("harmonics", 6))
    reps = [rbd_fast(model, n, dom, harmonics=M, seed=seed) for seed in _replicates(s)]
    res = {"n_samples": n, "seeds": _replicates(s), "harmonics": M, "frequency": 1,
           "first": np.mean([r.first for r in reps], axis=0), "params": [str(p) for p in s.params]}
    _dump(s, "rbd_fast.json", res)
    return res


def task_envelope(s: Setup) -> dict:
    if s.envelope is None:
        raise InputError("the envelope task needs --case envelope")
    env = s.envelope
    frac = float(s.options.get("spread", 0.5))
    rep = envelope_metrics(env, s.params, n=s.lattice_n, spread=frac)
    _dump(s, "envelope_metrics.json", rep.to_json())
    loads = env.loads()
    _table(s, "envelope_loads.csv", ("t_start", "t_end", "E_wall", "E_glass", "E_total"),
           (loads.edges[:-1], loads.edges[1:], loads.E_wall, loads.E_glass, loads.total))
    diffs = envelope_relative_differences(env, s.params, spread=frac, mode=s.options.get("mode", "taylor"))
    rows = [[], [], [], []]
    for p, (plus, minus) in diffs.items():
        for sign, series in (("+", plus), ("-", minus)):
            for m, v in enumerate(series):
                rows[0].append(m + 1)
                rows[1].append(str(p))
                rows[2].append(sign)
                rows[3].append(v)
    _table(s, "fig_eps_r_monthly.csv", ("interval", "param", "sign", "eps_r"),
           [np.array(rows[0]), np.array(rows[1], dtype=object), np.array(rows[2], dtype=object), np.array(rows[3])])
    return {"gamma": {str(p): v for p, v in rep.gamma.items()},
            "ranking": [str(p) for p in rep.ranking().order]}


def _check(label, value, target, tol, mode="abs"):
    value, target = np.atleast_1d(value).astype(float), np.atleast_1d(target).astype(float)
    if mode == "abs":
        ok = bool(np.all(np.abs(value - target) <= tol))
    elif mode == "rel":
        ok = bool(np.all(np.abs(value - target) <= tol * np.abs(target)))
    elif mode == "upper":
        ok = bool(np.all(value <= target))
    else:
        ok = bool(np.all(value >= target))
    return {"check": label, "value": value.tolist(), "target": target.tolist(), "tol": tol, "mode": mode, "pass": ok}


def task_validate(s: Setup) -> dict:
    prob = validation_case()
    reps = 1 if s.options.get("quick") else int(s.options.get("replicates", 5))
    seeds = [s.seed + r for r in range(reps)]
    checks = []
    g30 = Grid(1e-2, 1e-3, 30.0)
    u = run(prob, g30, save_every=1, keep_flux=False).u[0]
    ref = reference_rows(prob, g30, prob.theta()[None])[0]
    checks.append(_check("solver eps2 max over x", float(eps2(u, ref).max()), 5e-3, 0, "upper"))
    g5 = Grid(1e-2, 1e-3, 5.0)
    kc = parse_params("k2,c2")
    dom = {p: (v * 0.1, v * 1.9) for p, v in zip(kc, (0.3, 0.5))}
    r20 = metric_report(prob, g5, kc, dom, 20)
    r5 = metric_report(prob, g5, kc, dom, 5)
    checks.append(_check("eta (k2, c2)", list(r20.eta.values()), [0.86, 0.14], 0.02))
    checks.append(_check("gamma N=20", list(r20.gamma.values()), [0.77, 0.23], 0.03))
    checks.append(_check("gamma N=5", list(r5.gamma.values()), [0.80, 0.20], 0.03))
    setup = Setup(prob, g5, kc, dom, 20, 0, s.out, {}, None)
    model = _loads_model(setup)
    box = list(dom.values())
    srcs = [src_srrc(X, model(X)).src_normalized for X in (lhs(150, box, sd) for sd in seeds)]
    checks.append(_check("SRC normalized n=150", np.mean(srcs, 0), [0.69, 0.31], 0.05))
    sob = [sobol_indices(model, 1024, box, sd) for sd in seeds]
    checks.append(_check("Sobol S1 n=1024", np.mean([r.first for r in sob], 0), [0.66, 0.33], 0.05))
    checks.append(_check("Sobol Stot n=1024", np.mean([r.total for r in sob], 0), [0.67, 0.34], 0.05))
    d_tot = np.mean([r.d_total for r in sob], 0)
    checks.append(_check("D_tot <= nu/pi^2 (N=20)", d_tot, [r20.bounds[p]["nu/pi2"] for p in kc], 0, "upper"))
    fast = [rbd_fast(model, 500, box, seed=sd).first for sd in seeds]
    checks.append(_check("RBD-FAST n=500", np.mean(fast, 0), [0.66, 0.32], 0.05))
    checks.append(_check("sum of gamma", sum(r20.gamma.values()), 1.0, 1e-10))
    ratio = (len(kc) + 2) * 1024 / r20.evaluations
    checks.append(_check("Sobol runs per derivative-metric run", ratio, 50, 0, "lower"))
    _table(s, "validate.csv", ("check", "pass", "value", "target"),
           [np.array([c["check"] for c in checks], dtype=object),
            np.array(["pass" if c["pass"] else "FAIL" for c in checks], dtype=object),
            np.array([" ".join(f"{v:.4g}" for v in c["value"]) for c in checks], dtype=object),
            np.array([" ".join(f"{v:.4g}" for v in c["target"]) for c in checks], dtype=object)])
    width = max(len(c["check"]) for c in checks)
    for c in checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['check']:<{width}}  value={c['value']}  target={c['target']}")
    return {"checks": checks, "all_pass": all(c["pass"] for c in checks), "seeds": seeds}


HANDLERS = {"simulate": task_simulate, "sens": task_sens, "fd-sens": task_fd_sens, "taylor": task_taylor,
            "metrics": task_metrics, "src": task_src, "sobol": task_sobol, "rbd-fast": task_rbd_fast,
            "validate": task_validate, "envelope": task_envelope}


def _inputs_hash(cfg: dict) -> str:
    """sha256 of the effective settings (output folder excluded) and any referenced data files."""
    keyed = {k: v for k, v in cfg.items() if k != "out"}
    h = hashlib.sha256(json.dumps(keyed, sort_keys=True, default=str).encode())
    paths = [cfg.get("weather")] + list(cfg.get("wall", {}).get("boundary", {}).values())
    for p in paths:
        if isinstance(p, str) and Path(p).exists():
            h.update(Path(p).read_bytes())
    return h.hexdigest()


def execute(cfg: dict) -> dict:
    s = _setup(cfg)
    s.out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    summary = HANDLERS[cfg["task"]](s)
    manifest = {
        "task": cfg["task"], "config": cfg, "inputs_hash": _inputs_hash(cfg), "seed": s.seed,
        "versions": {"wallsens": __version__, "python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "csv_version": CSV_VERSION, "outputs": sorted(s.files), "summary": summary,
    }
    _dump(s, "manifest.json", manifest)
    print(f"{cfg['task']}: wrote {len(s.files)} file(s) to {s.out} in {time.perf_counter() - t0:.1f} s")
    if cfg["task"] == "validate" and not summary["all_pass"]:
        raise AcceptanceError("validation battery has failing checks")
    return manifest


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        execute(_merge(args))
    except WallsensError as exc:
        print(f"wallsens: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
