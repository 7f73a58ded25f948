"""Intensity evaluation, reciprocal invariants and class comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core.models import DEFAULT_WINDOW, IntensityModel
from .core.errors import DomainError, NumericError

__all__ = [
    "InvariantGrid",
    "eval_intensity",
    "eval_time_log_derivative",
    "invariant_grid",
    "reciprocal_invariant",
    "same_reciprocal_class",
    "shared_window",
]

DEFAULT_GRID_POINTS = 1001
ANALYTIC_TOL = 1e-8
TABULATED_TOL = 1e-4


def eval_intensity(model: IntensityModel, t, z):
    _check_time(t)
    return model.rate(t, z)


def eval_time_log_derivative(model: IntensityModel, t, z):
    _check_time(t)
    return model.log_rate_derivative(t, z)


def reciprocal_invariant(model: IntensityModel, t, z):
    """``d/dt log l(t, z) + l(t, z + 1) - l(t, z)``."""
    _check_time(t)
    z = np.asarray(z, dtype=np.int64)
    return model.log_rate_derivative(t, z) + model.rate(t, z + 1) - model.rate(t, z)


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if t.size and (t.min() < 0.0 or t.max() > 1.0):
        raise DomainError("time outside [0, 1]")


@dataclass(frozen=True)
class InvariantGrid:
    """Reciprocal invariant tabulated on ``time_grid x [z_min, z_max - 1]``.

    The top state of the window is left out because the invariant there
    needs the rate one state above it.
    """

    time_grid: np.ndarray
    space_window: tuple[int, int]
    values: np.ndarray  # shape (len(time_grid), n_states)

    @property
    def states(self) -> np.ndarray:
        return np.arange(self.space_window[0], self.space_window[1])


def shared_window(*models: IntensityModel) -> tuple[int, int]:
    windows = {m.window for m in models if m.window is not None}
    if len(windows) > 1:
        raise DomainError(f"models have incompatible space windows {sorted(windows)}")
    return windows.pop() if windows else DEFAULT_WINDOW


def invariant_grid(model: IntensityModel, n_times: int = DEFAULT_GRID_POINTS, window=None) -> InvariantGrid:
    window = tuple(window) if window is not None else shared_window(model)
    times = np.linspace(0.0, 1.0, n_times)
    states = np.arange(window[0], window[1])
    tt, zz = np.meshgrid(times, states, indexing="ij")
    values = np.asarray(reciprocal_invariant(model, tt, zz))
    if not np.all(np.isfinite(values)):
        raise NumericError("non-finite reciprocal invariant on the grid")
    return InvariantGrid(times, window, values)


def same_reciprocal_class(
    model1: IntensityModel,
    model2: IntensityModel,
    n_times: int = DEFAULT_GRID_POINTS,
    tol: float | None = None,
) -> tuple[bool, float]:
    """Compare invariants on a shared grid; returns ``(same, max |difference|)``."""
    window = shared_window(model1, model2)
    if tol is None:
        tol = TABULATED_TOL if (model1.tabulated or model2.tabulated) else ANALYTIC_TOL
    g1 = invariant_grid(model1, n_times, window)
    g2 = invariant_grid(model2, n_times, window)
    dev = float(np.max(np.abs(g1.values - g2.values)))
    return dev <= tol, dev
