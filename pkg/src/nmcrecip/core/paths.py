"""Counting paths on [0, 1] with unit jumps.

A path is an initial integer state plus the sorted jump instants in (0, 1).
``PathBatch`` stores many paths as a padded matrix; padding slots hold 1.0,
which is the usual convention ``t_i = 1`` for ``i > n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "DomainError",
    "Path",
    "PathBatch",
    "path_value",
    "path_left_value",
    "read_paths_csv",
    "write_paths_csv",
]


@dataclass(frozen=True)
class Path:
    x0: int
    jump_times: tuple[float, ...] = ()

    def __post_init__(self):
        times = tuple(float(t) for t in self.jump_times)
        object.__setattr__(self, "x0", int(self.x0))
        object.__setattr__(self, "jump_times", times)
        prev = 0.0
        for t in times:
            if not (prev < t < 1.0):
                raise DomainError(
                    f"jump times must be strictly increasing in (0, 1); got {times!r}"
                )
            prev = t

    @property
    def n_jumps(self) -> int:
        return len(self.jump_times)

    @property
    def x1(self) -> int:
        return self.x0 + len(self.jump_times)

    def value(self, t: float) -> int:
        return path_value(self, t)

    def left_value(self, t: float) -> int:
        return path_left_value(self, t)

    def to_csv_line(self) -> str:
        return ",".join([str(self.x0)] + [f"{t:.17g}" for t in self.jump_times])

    @classmethod
    def from_csv_line(cls, line: str) -> "Path":
        fields = [f for f in line.strip().split(",") if f.strip() != ""]
        if not fields:
            raise ValueError("empty path line")
        return cls(int(fields[0]), tuple(float(f) for f in fields[1:]))


def path_value(path: Path, t: float) -> int:
    """State at time ``t`` (right-continuous)."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t={t} outside [0, 1]")
    return path.x0 + int(np.searchsorted(path.jump_times, t, side="right"))


def path_left_value(path: Path, t: float) -> int:
    """Left limit ``X_{t-}``."""
    if not 0.0 < t <= 1.0:
        raise DomainError(f"t={t} outside (0, 1]")
    return path.x0 + int(np.searchsorted(path.jump_times, t, side="left"))


class PathBatch:
    """Column-major store for ``N`` paths.

    ``times`` has shape ``(N, K)`` where ``K`` is at least the largest jump
    count; row ``i`` holds the ``counts[i]`` jump times of path ``i`` followed
    by 1.0 padding.
    """

    __slots__ = ("x0", "times", "counts")

    def __init__(self, x0, times, counts):
        x0 = np.asarray(x0, dtype=np.int64).reshape(-1)
        times = np.asarray(times, dtype=float)
        if times.ndim == 1:
            times = times.reshape(len(x0), -1)
        counts = np.asarray(counts, dtype=np.int64).reshape(-1)
        if not (len(x0) == len(counts) == times.shape[0]):
            raise ValueError("x0, times and counts disagree on the number of paths")
        if counts.size and times.shape[1] < counts.max():
            raise ValueError("times matrix narrower than the largest jump count")
        self.x0 = x0
        self.times = times
        self.counts = counts

    def __len__(self) -> int:
        return len(self.x0)

    @property
    def width(self) -> int:
        return self.times.shape[1]

    @property
    def x1(self) -> np.ndarray:
        return self.x0 + self.counts

    @property
    def jump_mask(self) -> np.ndarray:
        """Boolean ``(N, K)`` mask of real (non-padding) jump slots."""
        return np.arange(self.width)[None, :] < self.counts[:, None]

    @property
    def pre_jump_states(self) -> np.ndarray:
        """``X_{T_i-}`` for every slot (padding slots are meaningless)."""
        return self.x0[:, None] + np.arange(self.width)[None, :]

    def padded_times(self, m: int) -> np.ndarray:
        """Times matrix with at least ``m`` columns, padded with 1.0."""
        if self.width >= m:
            return self.times
        pad = np.ones((len(self), m - self.width))
        return np.hstack([self.times, pad])

    def value_at(self, t: float) -> np.ndarray:
        return self.x0 + np.sum(self.jump_mask & (self.times <= t), axis=1)

    def left_value_at(self, t: float) -> np.ndarray:
        return self.x0 + np.sum(self.jump_mask & (self.times < t), axis=1)

    def __getitem__(self, i: int) -> Path:
        n = int(self.counts[i])
        return Path(int(self.x0[i]), tuple(self.times[i, :n].tolist()))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def to_paths(self) -> list[Path]:
        return list(self)

    @classmethod
    def from_paths(cls, paths: Iterable[Path]) -> "PathBatch":
        paths = list(paths)
        width = max((p.n_jumps for p in paths), default=0)
        times = np.ones((len(paths), width))
        for i, p in enumerate(paths):
            times[i, : p.n_jumps] = p.jump_times
        return cls([p.x0 for p in paths], times, [p.n_jumps for p in paths])

    @classmethod
    def concat(cls, batches: Sequence["PathBatch"]) -> "PathBatch":
        if not batches:
            return cls(np.zeros(0, np.int64), np.ones((0, 0)), np.zeros(0, np.int64))
        width = max(b.width for b in batches)
        return cls(
            np.concatenate([b.x0 for b in batches]),
            np.vstack([b.padded_times(width) for b in batches]),
            np.concatenate([b.counts for b in batches]),
        )

    def subset(self, index) -> "PathBatch":
        counts = self.counts[index]
        width = int(counts.max()) if counts.size else 0
        return PathBatch(self.x0[index], self.times[index][:, :width], counts)


def write_paths_csv(paths, fh) -> None:
    if isinstance(paths, PathBatch):
        paths = iter(paths)
    for p in paths:
        fh.write(p.to_csv_line() + "\n")


def read_paths_csv(fh) -> PathBatch:
    paths = [Path.from_csv_line(line) for line in fh if line.strip()]
    return PathBatch.from_paths(paths)
