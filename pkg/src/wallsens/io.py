"""CSV series, weather files, field dumps and the YAML run configuration."""
from __future__ import annotations

import csv
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .errors import InputError
from .wall import Signal
from .weather import Weather

CSV_VERSION = 1
SERIES_HEADER = ("t", "value")
WEATHER_HEADER = ("t", "q_sw", "T_out", "T_in")
FIELD_HEADER = ("x_star", "t_star", "u")


def _read_table(path, header: tuple[str, ...]) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            raise InputError(f"{path}: empty file")
        if tuple(h.strip() for h in first) != header:
            raise InputError(f"{path}:1: expected header {','.join(header)}, got {','.join(first)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise InputError(f"{path}:{line}: non-numeric field in {row}") from None
            if not all(np.isfinite(vals)):
                raise InputError(f"{path}:{line}: non-finite value")
            rows.append((line, vals))
    if len(rows) < 2:
        raise InputError(f"{path}: need at least two data rows")
    lines = [r[0] for r in rows]
    data = np.array([r[1] for r in rows])
    t = data[:, 0]
    dt = np.diff(t)
    bad = np.flatnonzero(dt <= 0)
    if bad.size:
        raise InputError(f"{path}:{lines[bad[0] + 1]}: time column must increase")
    step = float(np.median(dt))
    gap = np.flatnonzero(dt > step * (1 + 1e-6))
    if gap.size:
        i = gap[0]
        raise InputError(f"{path}:{lines[i + 1]}: gap of {dt[i]:g} s exceeds the sampling step {step:g} s")
    return data


def read_series(path) -> Signal:
    """A `t,value` file (seconds, SI units) as an interpolating signal."""
    data = _read_table(path, SERIES_HEADER)
    return Signal.sampled(data[:, 0], data[:, 1], label=Path(path).name)


def write_series(path, t, values):
    _write(path, SERIES_HEADER, np.column_stack([t, values]))


def read_weather(path) -> Weather:
    data = _read_table(path, WEATHER_HEADER)
    return Weather(*data.T)


def write_weather(path, weather: Weather):
    _write(path, WEATHER_HEADER, np.column_stack([weather.t, weather.q_sw, weather.T_out, weather.T_in]))


def _write(path, header, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in np.atleast_2d(data):
            w.writerow([repr(float(v)) for v in row])


def write_table(path, header, columns):
    """Columns of equal length under a fixed header."""
    cols = [np.asarray(c) for c in columns]
    if len(cols) != len(header) or len({c.size for c in cols}) != 1:
        raise InputError("table columns must match the header and share one length")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([v if isinstance(v, str) else repr(float(v)) for v in row])


def write_field(path, x, t, u, param: str | None = None):
    """Long-format dump `x_star,t_star,u[,param]` of a (levels, nodes) array."""
    u = np.asarray(u, dtype=float)
    if u.shape != (len(t), len(x)):
        raise InputError(f"field shape {u.shape} does not match ({len(t)}, {len(x)})")
    T, X = np.meshgrid(t, x, indexing="ij")
    cols = [X.ravel(), T.ravel(), u.ravel()]
    header = FIELD_HEADER
    if param is not None:
        header = FIELD_HEADER + ("param",)
        cols.append(np.full(u.size, param, dtype=object))
    write_table(path, header, cols)


CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "case": {"enum": ["validation", "bayonne-synthetic", "envelope"]},
        "task": {"enum": ["simulate", "sens", "fd-sens", "taylor", "metrics", "src", "sobol", "rbd-fast",
                          "validate", "envelope"]},
        "wall": {
            "type": "object",
            "additionalProperties": False,
            "required": ["layers", "h_L", "h_R"],
            "properties": {
                "layers": {"type": "array", "minItems": 1, "items": {
                    "type": "object", "additionalProperties": False,
                    "required": ["k", "c", "thickness"],
                    "properties": {"name": {"type": "string"}, "k": {"type": "number", "exclusiveMinimum": 0},
                                   "c": {"type": "number", "exclusiveMinimum": 0},
                                   "thickness": {"type": "number", "exclusiveMinimum": 0}}}},
                "h_L": {"type": "number", "exclusiveMinimum": 0},
                "h_R": {"type": "number", "exclusiveMinimum": 0},
                "alpha": {"type": "number", "minimum": 0, "maximum": 1},
                "references": {"type": "object", "additionalProperties": False,
                               "properties": {k: {"type": "number", "exclusiveMinimum": 0}
                                              for k in ("k_ref", "c_ref", "T_ref", "t_ref")}},
                "boundary": {"type": "object", "additionalProperties": False,
                             "required": ["T_L", "T_R"],
                             "properties": {k: {"type": ["number", "string"]} for k in ("T_L", "T_R", "q_L")}},
                "initial": {"oneOf": [{"type": "number"}, {"enum": ["linear", "steady"]}]},
            },
        },
        "weather": {"type": "string"},
        "days": {"type": "integer", "minimum": 1},
        "grid": {"type": "object", "additionalProperties": False,
                 "properties": {"dx": {"type": "number", "exclusiveMinimum": 0},
                                "dt": {"type": "number", "exclusiveMinimum": 0},
                                "t_max": {"type": "number", "exclusiveMinimum": 0}}},
        "params": {"type": "array", "items": {"type": "string"}},
        "domain_pct": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 100},
        "lattice_n": {"type": "integer", "minimum": 2},
        "n_samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "out": {"type": "string"},
        "options": {"type": "object"},
    },
}


def load_config(path) -> dict:
    """Parse and validate a YAML run configuration; relative paths resolve against its folder."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise InputError(f"{path}: {exc}") from None
    if doc is None:
        raise InputError(f"{path}: empty configuration")
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InputError(f"{path}: {where}: {exc.message}") from None
    base = path.parent
    if "weather" in doc:
        doc["weather"] = str((base / doc["weather"]).resolve())
    bnd = doc.get("wall", {}).get("boundary", {})
    for k, v in bnd.items():
        if isinstance(v, str):
            bnd[k] = str((base / v).resolve())
    return doc
