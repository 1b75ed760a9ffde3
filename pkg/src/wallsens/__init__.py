"""Transient conduction through layered walls with parameter sensitivities."""
from .baselines import rbd_fast, sobol_indices, src_srrc
from .envelope import EnvelopeCase, GlassSpec, envelope_metrics
from .errors import AcceptanceError, DivergenceError, InputError, OracleError, WallsensError
from .metrics import MetricReport, metric_report, rank_parameters
from .solver import Grid, interior_flux, outputs, run, solve, thermal_loads
from .taylor import TaylorModel
from .wall import (DimensionlessProblem, Layer, ParamId, References, Signal, WallSpec,
                   evaluate_piecewise, nondimensionalize, validation_case)

__version__ = "0.1.0"

__all__ = [
    "AcceptanceError", "DimensionlessProblem", "DivergenceError", "EnvelopeCase", "GlassSpec", "Grid",
    "InputError", "Layer", "MetricReport", "OracleError", "ParamId", "References", "Signal", "TaylorModel",
    "WallSpec", "WallsensError", "envelope_metrics", "evaluate_piecewise", "interior_flux", "metric_report",
    "nondimensionalize", "outputs", "rank_parameters", "rbd_fast", "run", "sobol_indices", "solve", "src_srrc",
    "thermal_loads", "validation_case",
]
