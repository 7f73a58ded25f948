"""Forward simulation by thinning, plus thinning and superposition of paths."""

from __future__ import annotations

import numpy as np

from ..core.errors import SimulationError, TieError
from ..core.models import IntensityModel
from ..core.paths import Path, PathBatch
from ..core.rng import as_generator

__all__ = [
    "JumpRecorder",
    "sample_nmc",
    "sample_nmc_batch",
    "superpose_batches",
    "superpose_paths",
    "thin_batch",
    "thin_path",
]


class JumpRecorder:
    """Appends jump instants row-wise into a growing padded matrix."""

    def __init__(self, n: int, capacity: int = 8):
        self.times = np.ones((n, capacity))
        self.counts = np.zeros(n, dtype=np.int64)

    def record(self, rows: np.ndarray, when: np.ndarray) -> None:
        if rows.size == 0:
            return
        need = int(self.counts[rows].max()) + 1
        if need > self.times.shape[1]:
            grow = max(need, 2 * self.times.shape[1])
            pad = np.ones((self.times.shape[0], grow - self.times.shape[1]))
            self.times = np.hstack([self.times, pad])
        self.times[rows, self.counts[rows]] = when
        self.counts[rows] += 1

    def batch(self, x0) -> PathBatch:
        width = int(self.counts.max()) if self.counts.size else 0
        return PathBatch(x0, self.times[:, :width].copy(), self.counts)


def _exponentials(gen: np.random.Generator, size: int) -> np.ndarray:
    e = gen.standard_exponential(size)
    zero = e == 0.0
    while np.any(zero):  # an exact zero would duplicate a jump instant
        e[zero] = gen.standard_exponential(int(zero.sum()))
        zero = e == 0.0
    return e


def sample_nmc_batch(model: IntensityModel, x0, n: int, rng) -> PathBatch:
    """``n`` independent paths of the process with intensity ``model``.

    Candidates come from a rate-``upper_bound`` Poisson clock and are kept
    with probability ``l(t, X_{t-}) / upper_bound``.
    """
    gen = as_generator(rng)
    x0 = np.broadcast_to(np.asarray(x0, dtype=np.int64), (n,)).copy()
    lam = float(model.upper_bound)
    win = model.window
    if win is not None and n and (x0.min() < win[0] or x0.max() > win[1]):
        raise SimulationError(f"initial state outside the model window {win}")
    t = np.zeros(n)
    z = x0.copy()
    rec = JumpRecorder(n)
    active = np.arange(n)
    while active.size:
        cand = t[active] + _exponentials(gen, active.size) / lam
        inside = cand < 1.0
        active = active[inside]
        cand = cand[inside]
        if not active.size:
            break
        t[active] = cand
        u = gen.random(active.size)
        states = z[active]
        if win is not None and states.max() > win[1]:
            raise SimulationError(
                f"path reached state {int(states.max())} beyond the model window {win}; widen the window"
            )
        accept = u * lam < np.asarray(model.rate(cand, states))
        rows = active[accept]
        rec.record(rows, cand[accept])
        z[rows] += 1
    return rec.batch(x0)


def sample_nmc(model: IntensityModel, x0: int, rng) -> Path:
    return sample_nmc_batch(model, x0, 1, rng)[0]


def thin_batch(batch: PathBatch, c: float, rng) -> PathBatch:
    """Keep each jump independently with probability ``c``."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"thinning probability {c} outside [0, 1]")
    gen = as_generator(rng)
    keep = (gen.random(batch.times.shape) < c) & batch.jump_mask
    times = np.where(keep, batch.times, 1.0)
    times.sort(axis=1)
    counts = keep.sum(axis=1)
    width = int(counts.max()) if counts.size else 0
    return PathBatch(batch.x0.copy(), times[:, :width], counts)


def thin_path(path: Path, c: float, rng) -> Path:
    return thin_batch(PathBatch.from_paths([path]), c, rng)[0]


def superpose_batches(b1: PathBatch, b2: PathBatch) -> PathBatch:
    """Merge jump streams row by row; the result starts from ``b1.x0``."""
    if len(b1) != len(b2):
        raise ValueError("batches differ in size")
    times = np.hstack([b1.times, b2.times])
    times.sort(axis=1)
    counts = b1.counts + b2.counts
    mask = np.arange(times.shape[1])[None, :] < counts[:, None]
    dup = (np.diff(times, axis=1) == 0.0) & mask[:, 1:]
    if np.any(dup):
        rows = np.nonzero(dup.any(axis=1))[0]
        raise TieError(f"shared jump instants in rows {rows[:5].tolist()}")
    width = int(counts.max()) if counts.size else 0
    return PathBatch(b1.x0.copy(), times[:, :width], counts)


def superpose_paths(p1: Path, p2: Path) -> Path:
    return superpose_batches(PathBatch.from_paths([p1]), PathBatch.from_paths([p2]))[0]
