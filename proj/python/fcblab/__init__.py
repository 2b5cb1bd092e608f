"""Relative heat traces and zeta-regularized determinants on surfaces with cusps and funnels."""

import json

import numpy as np

from . import _core
from ._core import ConfigError, Eigensystem, FitError, Profile, finite_matrix_relative_det, spectral_gap

__all__ = [
    "ConfigError",
    "Eigensystem",
    "FitError",
    "Profile",
    "build_profile",
    "default_config",
    "finite_matrix_relative_det",
    "finite_spectrum_determinant",
    "log_time_grid",
    "relative_area",
    "relative_determinant",
    "relative_trace",
    "run_scenario",
    "solve",
    "spectral_gap",
]


def build_profile(spec=None, truncation=None):
    """Conformal weight of a surface described by a dict (missing fields take defaults)."""
    return _core.build_profile(json.dumps(spec or {}), json.dumps(truncation) if truncation else "")


def relative_area(a, b):
    return _core.relative_area(a, b)


def solve(profile, reference=None, nodes=4000, lambda_cut=1000.0, grid="graded", workers=0):
    """Eigensystem below lambda_cut. Pairs compared later must share `reference` and `nodes`."""
    return _core.solve(profile, reference or profile, nodes, lambda_cut, grid, workers)


def log_time_grid(t0, t1, n):
    return np.asarray(_core.log_time_grid(t0, t1, n))


def relative_trace(a, b, times):
    """Returns (values, tail_bound) arrays for Tr(e^{-tA} - e^{-tB})."""
    values, bound = _core.relative_trace(a, b, list(np.asarray(times, dtype=float)))
    return np.asarray(values), np.asarray(bound)


def relative_determinant(a, b, times=None, order=3, window=(0.02, 0.3), threshold=1e-4, split=1.0):
    times = [] if times is None else list(np.asarray(times, dtype=float))
    return json.loads(_core.relative_determinant(a, b, times, order, window[0], window[1], threshold, split))


def finite_spectrum_determinant(a, b, times, order=4, window=(1e-4, 1e-2), threshold=1e-6, split=1e-2):
    out = _core.finite_spectrum_determinant(
        list(map(float, a)), list(map(float, b)), list(np.asarray(times, dtype=float)),
        order, window[0], window[1], threshold, split)
    return json.loads(out)


def default_config(kind):
    return json.loads(_core.default_config(kind))


def run_scenario(config, out_dir=None):
    """Run a scenario config dict; returns the summary dict (checks, numbers, resolved config)."""
    return json.loads(_core.run_scenario(json.dumps(config), str(out_dir) if out_dir else ""))
