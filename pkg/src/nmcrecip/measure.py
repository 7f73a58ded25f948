"""Girsanov densities between NMC laws and h-transformed intensity fields.

Densities are carried in log space; ``DensityValue.density`` exponentiates
on request.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core.errors import DegenerateConditioningError, DomainError
from .core.models import Constant, IntensityModel
from .core.paths import Path, PathBatch
from .sampling.harmonic import DEFAULT_STEPS, HarmonicTable, solve_terminal

__all__ = [
    "DensityValue",
    "HTransformField",
    "density_vs_std_poisson",
    "girsanov_density",
    "girsanov_log_density",
    "htransform_intensity_field",
]

STANDARD_POISSON = Constant(1.0)


@dataclass(frozen=True)
class DensityValue:
    log_density: float

    @property
    def density(self) -> float:
        return float(np.exp(self.log_density))


def _as_batch(paths) -> PathBatch:
    if isinstance(paths, PathBatch):
        return paths
    if isinstance(paths, Path):
        return PathBatch.from_paths([paths])
    return PathBatch.from_paths(list(paths))


def _segments(batch: PathBatch):
    """Start, end and state of every inter-jump segment.

    Segments past the last jump collapse to ``[1, 1]``; their state is
    clamped to ``x0`` so windowed models are never asked about states the
    path does not visit.
    """
    n = len(batch)
    starts = np.hstack([np.zeros((n, 1)), batch.times])
    ends = np.hstack([batch.times, np.ones((n, 1))])
    slot = np.arange(batch.width + 1)[None, :]
    states = np.where(slot <= batch.counts[:, None], batch.x0[:, None] + slot, batch.x0[:, None])
    return starts, ends, states


def girsanov_log_density(model_num: IntensityModel, model_den: IntensityModel, paths) -> np.ndarray:
    """``log dP_num / dP_den`` for every path of a batch."""
    batch = _as_batch(paths)
    if len(batch) == 0:
        return np.zeros(0)
    if model_num == model_den:
        return np.zeros(len(batch))
    starts, ends, states = _segments(batch)
    drift = np.asarray(model_num.integral(starts, ends, states)) - np.asarray(
        model_den.integral(starts, ends, states)
    )
    log_jump = np.zeros(len(batch))
    if batch.width:
        mask = batch.jump_mask
        t = batch.times[mask]
        z = batch.pre_jump_states[mask]
        ratio = np.log(np.asarray(model_num.rate(t, z))) - np.log(np.asarray(model_den.rate(t, z)))
        per_slot = np.zeros(batch.times.shape)
        per_slot[mask] = ratio
        log_jump = per_slot.sum(axis=1)
    return log_jump - drift.sum(axis=1)


def girsanov_density(model_num: IntensityModel, model_den: IntensityModel, path):
    """Density of ``P_num`` against ``P_den``.

    A single ``Path`` gives a ``DensityValue``; a batch gives an array of
    log-densities.
    """
    logs = girsanov_log_density(model_num, model_den, path)
    if isinstance(path, Path):
        return DensityValue(float(logs[0]))
    return logs


def density_vs_std_poisson(model: IntensityModel, path):
    return girsanov_density(model, STANDARD_POISSON, path)


class HTransformField:
    """Intensity ``k(t, z) = l(t, z) h(t, z + 1) / h(t, z)`` of an h-transform.

    ``table`` is the underlying harmonic table and can be handed to
    ``sample_htransform_batch``. ``k`` is zero at the top of the window,
    where the terminal data is treated as zero beyond it.
    """

    def __init__(self, table: HarmonicTable):
        self.table = table
        self.model = table.model

    @property
    def window(self) -> tuple[int, int]:
        return self.table.z_lo, self.table.z_hi

    def h(self, t, z):
        return self.table.value(t, z)

    def rate(self, t, z):
        z_arr = np.asarray(z, dtype=np.int64)
        idx = self.table._index(z_arr)
        dead = ~self.table.alive[idx]
        if np.any(dead):
            bad = np.unique(np.broadcast_to(z_arr, dead.shape)[dead])
            raise DegenerateConditioningError(f"h vanishes on visited states {bad.tolist()}")
        return self.table.rate(t, z)

    __call__ = rate


def htransform_intensity_field(
    model: IntensityModel, h_terminal, window=None, n_steps: int = DEFAULT_STEPS
) -> HTransformField:
    """Intensity field of the h-transform of ``model`` by ``h(X_1)``."""
    if window is not None and window[1] <= window[0]:
        raise DomainError(f"degenerate window {window}")
    return HTransformField(solve_terminal(model, h_terminal, window, n_steps))
