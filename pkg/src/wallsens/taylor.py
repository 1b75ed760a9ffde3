"""Second-order Taylor surrogates of temperature, flux and loads."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np

from .errors import InputError
from .solver import Grid, march, run
from .wall import DimensionlessProblem, ParamId, parse_params

FORMAT = "wallsens-taylor"
VERSION = 1
KINDS = ("field", "flux", "loads")


class ExtrapolationWarning(UserWarning):
    pass


@dataclass
class Prediction:
    value: np.ndarray
    displacement: np.ndarray  # max-norm of (p - p0) per query
    relative: np.ndarray  # max-norm of (p - p0)/p0
    extrapolated: np.ndarray


@dataclass
class TaylorModel:
    kind: str
    params: list[ParamId]
    anchor: np.ndarray
    base: np.ndarray
    grad: np.ndarray
    hess: np.ndarray | None = None
    domain: np.ndarray | None = None
    t: np.ndarray | None = None
    edges: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"kind must be one of {KINDS}")
        if self.hess is not None:
            P = len(self.params)
            h = self.hess.reshape(P, P, -1)
            if not np.array_equal(h, np.swapaxes(h, 0, 1)):
                raise InputError("Hessian must be symmetric")

    @property
    def order(self) -> int:
        return 1 if self.hess is None else 2

    def evaluate(self, values) -> Prediction:
        return evaluate(self, values)

    def to_json(self) -> dict:
        arr = lambda a: None if a is None else np.asarray(a).tolist()
        return {"format": FORMAT, "version": VERSION, "kind": self.kind,
                "params": [str(p) for p in self.params], "anchor": arr(self.anchor),
                "domain": arr(self.domain), "t": arr(self.t), "edges": arr(self.edges),
                "shape": list(np.shape(self.base)), "base": arr(self.base), "grad": arr(self.grad),
                "hess": arr(self.hess)}

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def from_json(cls, doc: dict) -> "TaylorModel":
        if doc.get("format") != FORMAT:
            raise InputError("not a Taylor surrogate document")
        if doc.get("version") != VERSION:
            raise InputError(f"unsupported surrogate version {doc.get('version')}")
        a = lambda k: None if doc.get(k) is None else np.asarray(doc[k], dtype=float)
        shape = tuple(doc["shape"])
        P = len(doc["params"])
        hess = a("hess")
        return cls(doc["kind"], parse_params(doc["params"]), a("anchor"), a("base").reshape(shape),
                   a("grad").reshape((P, *shape)), None if hess is None else hess.reshape((P, P, *shape)),
                   a("domain"), a("t"), a("edges"))

    @classmethod
    def load(cls, path) -> "TaylorModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def _pairs(P: int) -> list[tuple[int, int]]:
    return list(combinations_with_replacement(range(P), 2))


def build(problem: DimensionlessProblem, grid: Grid, params, order: int = 2, kind: str = "loads",
          edges=None, save_every: int = 1, domain=None, **opts) -> TaylorModel:
    """Expansion coefficients at the problem's current parameter values, from one march."""
    if order not in (1, 2):
        raise InputError("order must be 1 or 2")
    if kind not in KINDS:
        raise InputError(f"kind must be one of {KINDS}")
    params = parse_params(params)
    P = len(params)
    idx = [p.index(problem) for p in params]
    anchor = problem.theta()[idx]
    pairs = _pairs(P) if order == 2 else []
    sol = run(problem, grid, params=params, pairs=pairs, edges=edges,
              save_every=save_every if kind == "field" else None, keep_flux=kind == "flux", **opts)
    if kind == "field":
        base, grad, sec, t = sol.u[0], sol.X[0], (sol.Y[0] if pairs else None), sol.t_saved
    elif kind == "flux":
        base, grad, sec, t = sol.j[0], sol.dj[0], (sol.d2j[0] if pairs else None), sol.t
    else:
        base, grad, sec, t = sol.E[0], sol.dE[0], (sol.d2E[0] if pairs else None), None
    hess = None
    if sec is not None:
        hess = np.empty((P, P, *base.shape))
        for r, (i, j) in enumerate(pairs):
            hess[i, j] = hess[j, i] = sec[r]
    dom = None if domain is None else np.asarray(domain, dtype=float).reshape(P, 2)
    return TaylorModel(kind, params, anchor, base, grad, hess, dom, t, sol.edges if kind == "loads" else None)


def evaluate(model: TaylorModel, values) -> Prediction:
    """Expansion at one (P,) or several (m, P) parameter points."""
    v = np.asarray(values, dtype=float)
    single = v.ndim == 1
    v = np.atleast_2d(v)
    if v.shape[1] != len(model.params):
        raise InputError(f"expected {len(model.params)} parameter values per point")
    d = v - model.anchor
    lin = np.tensordot(d, model.grad, axes=1)
    if model.hess is not None:
        half = 0.5 * np.einsum("mi,ij...->mj...", d, model.hess)
        lin = lin + np.einsum("mj,mj...->m...", d, half)
    val = model.base + lin
    extra = np.zeros(len(v), dtype=bool)
    if model.domain is not None:
        extra = np.any((v < model.domain[:, 0] - 1e-12) | (v > model.domain[:, 1] + 1e-12), axis=1)
        if extra.any():
            warnings.warn("Taylor surrogate evaluated outside its trust region", ExtrapolationWarning,
                          stacklevel=2)
    disp = np.abs(d).max(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(d / model.anchor).max(axis=1)  # inf for a zero anchor
    if single:
        return Prediction(val[0], disp[:1], rel[:1], extra[:1])
    return Prediction(val, disp, rel, extra)


def surrogate_error(model: TaylorModel, reference, points) -> np.ndarray:
    """RMS gap between surrogate and direct evaluations, one value per lattice point.

    reference has shape (m, *model.base.shape); the RMS runs over every
    time and space sample of each point.
    """
    ref = np.asarray(reference, dtype=float)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if ref.shape != (len(pts), *np.shape(model.base)):
        raise InputError(f"reference shape {ref.shape} does not match {len(pts)} points of "
                         f"{np.shape(model.base)}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExtrapolationWarning)
        pred = evaluate(model, pts).value
    err = (pred - ref).reshape(len(pts), -1)
    return np.sqrt(np.mean(err**2, axis=1))


def lattice_error(problem: DimensionlessProblem, grid: Grid, params, points, order: int = 2,
                  kind: str = "field", chunk_rows: int = 512, **opts) -> np.ndarray:
    """Surrogate error over a parameter lattice without storing any trajectory.

    The anchor march (carrying derivatives) and the direct marches at every
    lattice point advance in lock-step; squared gaps are summed on the fly.
    For 'field' the mean runs over all nodes and levels, for 'flux' over all
    levels, and 'loads' is the absolute gap of the horizon integral.
    """
    params = parse_params(params)
    P = len(params)
    idx = [p.index(problem) for p in params]
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = pts - problem.theta()[idx]
    pairs = _pairs(P) if order == 2 else []
    out = []
    for lo in range(0, len(pts), chunk_rows):
        dd = d[lo: lo + chunk_rows]
        theta = np.repeat(problem.theta()[None], len(dd), axis=0)
        theta[:, idx] = pts[lo: lo + chunk_rows]
        anchor = march(problem, grid, None, params, pairs, **opts)
        direct = march(problem, grid, theta, (), (), **opts)
        acc = np.zeros(len(dd))
        E_tay = np.zeros(len(dd))
        E_ref = np.zeros(len(dd))
        prev = None
        count = 0
        for (n, u0, X, Y, fl0), (_, u, _, _, fl) in zip(anchor, direct):
            if kind == "field":
                tay = u0 + np.einsum("mp,px->mx", dd, X[0])
                ref = u
            else:
                tay = fl0[0] + dd @ fl0[1][0]
                ref = fl[0]
            if pairs:
                sec = Y[0] if kind == "field" else fl0[2][0]
                for r, (i, j) in enumerate(pairs):
                    w = (0.5 if i == j else 1.0) * dd[:, i] * dd[:, j]
                    tay = tay + (w[:, None] * sec[r] if kind == "field" else w * sec[r])
            if kind == "loads":
                if prev is not None:
                    E_tay += 0.5 * grid.dt * (prev[0] + tay)
                    E_ref += 0.5 * grid.dt * (prev[1] + ref)
                prev = (tay, ref)
            else:
                gap = (tay - ref) ** 2
                acc += gap.sum(axis=1) if gap.ndim == 2 else gap
                count += gap.shape[1] if gap.ndim == 2 else 1
        out.append(np.abs(E_tay - E_ref) if kind == "loads" else np.sqrt(acc / count))
    return np.concatenate(out)


def remainder_slope(displacement, error, floor: float = 0.0) -> float:
    """Least-squares slope of log(error) against log|displacement|."""
    dx = np.abs(np.asarray(displacement, dtype=float))
    e = np.asarray(error, dtype=float)
    keep = (dx > 1e-9 * dx.max()) & (e > floor)
    if keep.sum() < 2:
        raise InputError("need at least two non-zero points to fit a slope")
    return float(np.polyfit(np.log(dx[keep]), np.log(e[keep]), 1)[0])
