"""Sampling designs and the regression, variance and spectral baselines."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc, rankdata

from .errors import InputError

Model = Callable[[np.ndarray], np.ndarray]


def _domains(domains) -> np.ndarray:
    d = np.asarray(domains, dtype=float)
    if d.ndim != 2 or d.shape[1] != 2:
        raise InputError("domains must be a sequence of (low, high) pairs")
    if np.any(~(d[:, 1] > d[:, 0])):
        raise InputError("degenerate parameter domain")
    return d


def _scale(unit: np.ndarray, d: np.ndarray) -> np.ndarray:
    return d[:, 0] + unit * (d[:, 1] - d[:, 0])


@dataclass(frozen=True)
class SampleDesign:
    kind: str
    n_samples: int
    domains: tuple[tuple[float, float], ...]
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("latin_hypercube", "sobol_sequence"):
            raise InputError(f"unknown design {self.kind!r}")
        if self.n_samples < 1:
            raise InputError("need at least one sample")
        _domains(self.domains)

    def sample(self) -> np.ndarray:
        if self.kind == "latin_hypercube":
            return lhs(self.n_samples, self.domains, self.seed)
        return sobol_points(self.n_samples, self.domains, self.seed)


def lhs(n: int, domains, seed: int = 0) -> np.ndarray:
    """Latin hypercube sample, one point per stratum on every axis."""
    d = _domains(domains)
    if n < 1:
        raise InputError("need at least one sample")
    return _scale(qmc.LatinHypercube(d=len(d), seed=np.random.default_rng(seed)).random(n), d)


def sobol_points(n: int, domains, seed: int | None = 0, scramble: bool = True) -> np.ndarray:
    """First n points of a Sobol sequence (scrambled with the seed unless scramble=False)."""
    d = _domains(domains)
    if n < 1:
        raise InputError("need at least one sample")
    eng = qmc.Sobol(d=len(d), scramble=scramble, seed=np.random.default_rng(seed))
    m = int(np.ceil(np.log2(n)))
    return _scale(eng.random_base2(m)[:n], d)


@dataclass
class RegressionReport:
    src: np.ndarray
    srrc: np.ndarray
    src_normalized: np.ndarray
    srrc_normalized: np.ndarray
    r2: float
    r2_rank: float


def _standardized_ols(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    sx, sy = X.std(axis=0), y.std()
    if sy == 0 or np.any(sx == 0):
        raise InputError("constant input column or output; regression is singular")
    Z = (X - X.mean(axis=0)) / sx
    z = (y - y.mean()) / sy
    if np.linalg.matrix_rank(Z) < Z.shape[1]:
        raise InputError("singular design matrix")
    beta, *_ = np.linalg.lstsq(Z, z, rcond=None)
    resid = z - Z @ beta
    return beta, float(1 - resid @ resid / (z @ z))


def src_srrc(X, y) -> RegressionReport:
    """Standardised (rank) regression coefficients and their squared shares."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or len(X) != len(y):
        raise InputError("X must be (n, p) with one output per row")
    if len(y) < X.shape[1] + 2:
        raise InputError(f"need at least {X.shape[1] + 2} samples for {X.shape[1]} parameters")
    if not np.all(np.isfinite(y)):
        raise InputError("outputs must be finite")
    b, r2 = _standardized_ols(X, y)
    br, r2r = _standardized_ols(np.apply_along_axis(rankdata, 0, X), rankdata(y))
    return RegressionReport(b, br, b**2 / np.sum(b**2), br**2 / np.sum(br**2), r2, r2r)


@dataclass
class VarianceReport:
    first: np.ndarray
    total: np.ndarray
    d_total: np.ndarray
    variance: float
    n_samples: int
    evaluations: int
    estimators: dict = field(default_factory=lambda: {"first": "Janon", "total": "Jansen"})

    @property
    def first_clamped(self) -> np.ndarray:
        return np.clip(self.first, 0, None)

    @property
    def total_clamped(self) -> np.ndarray:
        return np.clip(self.total, 0, None)


def saltelli_matrices(n: int, domains, seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """A, B and the stacked A_B^(i) matrices from a 2p-dimensional Sobol draw."""
    d = _domains(domains)
    p = len(d)
    eng = qmc.Sobol(d=2 * p, scramble=True, seed=np.random.default_rng(seed))
    m = int(np.ceil(np.log2(n)))
    base = eng.random_base2(m)[:n]
    A, B = _scale(base[:, :p], d), _scale(base[:, p:], d)
    AB = np.repeat(A[None], p, axis=0)
    for i in range(p):
        AB[i, :, i] = B[:, i]
    return A, B, AB


def sobol_indices(model: Model, n: int, domains, seed: int = 0) -> VarianceReport:
    """First-order (Janon) and total (Jansen) Sobol indices; (p+2)n model calls.

    model maps an (m, p) matrix of parameter rows to m outputs.
    """
    d = _domains(domains)
    p = len(d)
    A, B, AB = saltelli_matrices(n, d, seed)
    y = np.asarray(model(np.concatenate([A, B, AB.reshape(-1, p)])), dtype=float).ravel()
    if y.size != (p + 2) * n or not np.all(np.isfinite(y)):
        raise InputError("model must return one finite output per row")
    fA, fB, fAB = y[:n], y[n: 2 * n], y[2 * n:].reshape(p, n)
    var = np.var(np.concatenate([fA, fB]))
    if var <= 0:
        raise InputError("output variance is zero")
    first = np.empty(p)
    total = np.empty(p)
    for i in range(p):
        # Janon: correlation-type estimator between f(B) and f(A_B^i), which share column i
        pair = np.concatenate([fB, fAB[i]])
        mu = pair.mean()
        v_i = np.mean(fB * fAB[i]) - mu**2
        first[i] = v_i / (np.mean(pair**2) - mu**2)
        total[i] = 0.5 * np.mean((fA - fAB[i]) ** 2) / var
    return VarianceReport(first, total, total * var, float(var), n, (p + 2) * n)


@dataclass
class FastReport:
    first: np.ndarray
    n_samples: int
    harmonics: int
    frequency: int


def rbd_design(n: int, domains, frequency: int = 1, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Scaled samples and the per-parameter permutations of the search curve."""
    d = _domains(domains)
    rng = np.random.default_rng(seed)
    s = np.linspace(-np.pi, np.pi, n, endpoint=False)
    perms = np.stack([rng.permutation(n) for _ in range(len(d))], axis=1)
    unit = 0.5 + np.arcsin(np.sin(frequency * s[perms])) / np.pi
    return _scale(unit, d), perms


def rbd_fast(model: Model, n: int, domains, harmonics: int = 6, frequency: int = 1,
             seed: int = 0) -> FastReport:
    """First-order indices by random-balance-design FAST with the usual bias correction."""
    d = _domains(domains)
    if harmonics < 1 or frequency < 1:
        raise InputError("harmonics and frequency must be positive")
    floor = 4 * harmonics * frequency + 1
    if n < floor:
        raise InputError(f"RBD-FAST needs n >= {floor} for M={harmonics}, omega={frequency}")
    X, perms = rbd_design(n, d, frequency, seed)
    y = np.asarray(model(X), dtype=float).ravel()
    if y.size != n or not np.all(np.isfinite(y)):
        raise InputError("model must return one finite output per row")
    lam = 2 * harmonics / n
    first = np.empty(len(d))
    for i in range(len(d)):
        order = np.argsort(perms[:, i])
        spec = np.abs(np.fft.rfft(y[order])) ** 2 / n
        # every positive frequency appears twice in the two-sided spectrum; Nyquist once
        total = 2 * spec[1:].sum() - (spec[-1] if n % 2 == 0 else 0.0)
        raw = 2 * spec[frequency * np.arange(1, harmonics + 1)].sum() / total
        first[i] = raw - lam / (1 - lam) * (1 - raw)
    return FastReport(first, n, harmonics, frequency)


def ishigami(X, a: float = 7.0, b: float = 0.1) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.sin(X[:, 0]) + a * np.sin(X[:, 1]) ** 2 + b * X[:, 2] ** 4 * np.sin(X[:, 0])


def ishigami_indices(a: float = 7.0, b: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form first and total indices on [-pi, pi]^3."""
    v1 = 0.5 * (1 + b * np.pi**4 / 5) ** 2
    v2 = a**2 / 8
    v13 = b**2 * np.pi**8 * (1 / 18 - 1 / 50)
    V = v1 + v2 + v13
    return np.array([v1, v2, 0.0]) / V, np.array([v1 + v13, v2, v13]) / V


ISHIGAMI_DOMAINS = ((-np.pi, np.pi),) * 3


def evaluate_rows(model: Callable[[np.ndarray], float], X: Sequence) -> np.ndarray:
    """Vectorise a scalar model over sample rows."""
    return np.array([model(np.asarray(x, dtype=float)) for x in X])
