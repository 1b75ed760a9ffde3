"""Hourly boundary data: a container and a deterministic synthetic year."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .wall import Signal

DAY = 86400.0
YEAR_DAYS = 365


@dataclass
class Weather:
    """Samples on a common time axis (s): shortwave W/m2, outdoor and indoor air in K."""

    t: np.ndarray
    q_sw: np.ndarray
    T_out: np.ndarray
    T_in: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        for name in ("q_sw", "T_out", "T_in"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != self.t.shape:
                raise InputError(f"{name} has {v.size} samples, time axis has {self.t.size}")
            if not np.all(np.isfinite(v)):
                raise InputError(f"{name} contains non-finite values")
            setattr(self, name, v)
        if self.t.size < 2 or np.any(np.diff(self.t) <= 0):
            raise InputError("weather time axis must increase with at least two samples")
        if np.any(self.T_out <= 0) or np.any(self.T_in <= 0):
            raise InputError("temperatures must be absolute (K) and positive")

    @property
    def horizon(self) -> float:
        return float(self.t[-1])

    def signals(self) -> tuple[Signal, Signal, Signal]:
        """(T_out, T_in, q_sw) as signals over dimensional seconds."""
        return (Signal.sampled(self.t, self.T_out, "T_out"), Signal.sampled(self.t, self.T_in, "T_in"),
                Signal.sampled(self.t, self.q_sw, "q_sw"))

    def window(self, start: float, stop: float) -> "Weather":
        """Samples in [start, stop], time re-zeroed at start."""
        m = (self.t >= start - 1e-9) & (self.t <= stop + 1e-9)
        if m.sum() < 2:
            raise InputError(f"window [{start}, {stop}] holds fewer than two samples")
        return Weather(self.t[m] - self.t[m][0], self.q_sw[m], self.T_out[m], self.T_in[m])


def synthetic_weather(days: int = YEAR_DAYS, step: float = 3600.0, seed: int = 0,
                      start_day: int = 0) -> Weather:
    """Daily plus seasonal sinusoids with fixed-seed noise.

    Outdoor air peaks mid-afternoon and in late July; shortwave on a west
    facade follows an afternoon bell scaled by a seasonal amplitude and a
    per-day cloud factor. Indoor air stays near 20 C with a small daily swing.
    """
    if days < 1 or step <= 0:
        raise InputError("need at least one day and a positive step")
    rng = np.random.default_rng(seed)
    t = np.arange(0.0, days * DAY + 0.5 * step, step)
    doy = start_day + t / DAY
    hour = (t % DAY) / 3600.0
    season = np.cos(2 * np.pi * (doy - 200) / YEAR_DAYS)
    T_out = 285.65 + 7.0 * season + 4.0 * np.cos(2 * np.pi * (hour - 15) / 24) + rng.normal(0, 0.6, t.size)
    cloud = rng.uniform(0.35, 1.0, days + 2)[np.floor(doy - start_day).astype(int)]
    bell = np.clip(np.sin(np.pi * (hour - 11) / 9), 0, None) * ((hour > 11) & (hour < 20))
    q_sw = (330 + 220 * np.cos(2 * np.pi * (doy - 172) / YEAR_DAYS)) * bell * cloud
    T_in = 293.15 + 0.5 * np.sin(2 * np.pi * (hour - 9) / 24)
    return Weather(t, q_sw, T_out, T_in)
