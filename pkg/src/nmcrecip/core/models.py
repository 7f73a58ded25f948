"""Intensity models ``l(t, z)``: positive, bounded, C1 in time.

Every model evaluates vectorised over broadcastable ``(t, z)`` arrays and
exposes its time log-derivative and its time integral over ``[a, b]`` at a
fixed state, which is all the samplers and densities need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, ModelError

__all__ = [
    "DEFAULT_WINDOW",
    "FD_STEP",
    "ModelError",
    "IntensityModel",
    "Constant",
    "ExponentialTime",
    "TimeOnly",
    "SpaceOnly",
    "Tabulated",
    "model_from_config",
]

DEFAULT_WINDOW = (-5, 60)
FD_STEP = 1e-5


def _fd_log_derivative(fn, t, h=FD_STEP):
    """d/dt log fn(t): central differences, second-order one-sided at the ends."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    lo = t - h < 0.0
    hi = t + h > 1.0
    mid = ~(lo | hi)
    if np.any(mid):
        tm = t[mid]
        out[mid] = (np.log(fn(tm + h)) - np.log(fn(tm - h))) / (2 * h)
    if np.any(lo):
        tl = t[lo]
        out[lo] = (-3 * np.log(fn(tl)) + 4 * np.log(fn(tl + h)) - np.log(fn(tl + 2 * h))) / (2 * h)
    if np.any(hi):
        th = t[hi]
        out[hi] = (3 * np.log(fn(th)) - 4 * np.log(fn(th - h)) + np.log(fn(th - 2 * h))) / (2 * h)
    return out


def _spline_extrema(spline: CubicSpline, knots: np.ndarray):
    """Exact min and max of a cubic spline (per column) on [0, 1]."""
    pts = [knots]
    deriv = spline.derivative()
    roots = deriv.roots(extrapolate=False)
    if isinstance(roots, np.ndarray) and roots.dtype != object:
        pts.append(np.asarray(roots, dtype=float).ravel())
    else:
        pts.extend(np.asarray(r, dtype=float).ravel() for r in np.ravel(roots))
    grid = np.concatenate(pts)
    grid = grid[(grid >= 0.0) & (grid <= 1.0)]
    vals = spline(grid)
    return float(np.min(vals)), float(np.max(vals))


class IntensityModel:
    """Common interface of the intensity families."""

    kind: str = "abstract"
    tabulated: bool = False

    @property
    def window(self) -> tuple[int, int] | None:
        return None

    @property
    def upper_bound(self) -> float:
        raise NotImplementedError

    def _rate(self, t, z):
        raise NotImplementedError

    def _dlog(self, t, z):
        raise NotImplementedError

    def _integral(self, a, b, z):
        raise NotImplementedError

    def check_states(self, z) -> None:
        win = self.window
        if win is None:
            return
        z = np.asarray(z)
        if z.size and (z.min() < win[0] or z.max() > win[1]):
            raise DomainError(
                f"state outside the window [{win[0]}, {win[1]}] of {self.kind} model"
            )

    def rate(self, t, z):
        t, z = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(z, dtype=np.int64))
        self.check_states(z)
        out = np.asarray(self._rate(t, z), dtype=float)
        return out if out.ndim else float(out)

    def log_rate_derivative(self, t, z):
        t, z = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(z, dtype=np.int64))
        self.check_states(z)
        out = np.asarray(self._dlog(t, z), dtype=float)
        return out if out.ndim else float(out)

    def integral(self, a, b, z):
        """``int_a^b l(s, z) ds`` for fixed ``z`` (vectorised)."""
        a, b, z = np.broadcast_arrays(
            np.asarray(a, dtype=float), np.asarray(b, dtype=float), np.asarray(z, dtype=np.int64)
        )
        self.check_states(z)
        out = np.asarray(self._integral(a, b, z), dtype=float)
        return out if out.ndim else float(out)

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(IntensityModel):
    alpha: float
    kind = "constant"

    def __post_init__(self):
        if not self.alpha > 0 or not math.isfinite(self.alpha):
            raise ModelError(f"constant intensity must be positive, got {self.alpha}")

    @property
    def upper_bound(self) -> float:
        return float(self.alpha)

    def _rate(self, t, z):
        return np.full(t.shape, float(self.alpha))

    def _dlog(self, t, z):
        return np.zeros(t.shape)

    def _integral(self, a, b, z):
        return self.alpha * (b - a)

    def to_config(self):
        return {"kind": self.kind, "alpha": float(self.alpha)}


@dataclass(frozen=True)
class ExponentialTime(IntensityModel):
    """``l(t) = exp(lam * t)``."""

    lam: float
    kind = "exponential_time"

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise ModelError("lam must be finite")

    @property
    def upper_bound(self) -> float:
        return float(max(1.0, math.exp(self.lam)))

    def _rate(self, t, z):
        return np.exp(self.lam * t)

    def _dlog(self, t, z):
        return np.full(t.shape, float(self.lam))

    def _integral(self, a, b, z):
        if self.lam == 0.0:
            return b - a
        return np.exp(self.lam * a) * np.expm1(self.lam * (b - a)) / self.lam

    def to_config(self):
        return {"kind": self.kind, "lam": float(self.lam)}


@dataclass(frozen=True)
class TimeOnly(IntensityModel):
    """``l(t)`` given on a time grid, cubic-spline interpolated."""

    times: tuple[float, ...]
    values: tuple[float, ...]
    kind = "time_only"
    tabulated = True

    def __post_init__(self):
        times = tuple(float(v) for v in self.times)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if len(times) != len(values) or len(times) < 4:
            raise ModelError("time table needs matching times/values with at least 4 nodes")
        if times[0] != 0.0 or times[-1] != 1.0 or np.any(np.diff(times) <= 0):
            raise ModelError("time grid must increase strictly from 0 to 1")
        lo, _ = self._extrema
        if lo <= 0:
            raise ModelError("time table (or its interpolant) is not strictly positive")

    @classmethod
    def from_function(cls, fn, n: int = 101) -> "TimeOnly":
        grid = np.linspace(0.0, 1.0, n)
        return cls(tuple(grid), tuple(np.asarray(fn(grid), dtype=float)))

    def scaled(self, c: float) -> "TimeOnly":
        return TimeOnly(self.times, tuple(c * v for v in self.values))

    @cached_property
    def _spline(self):
        return CubicSpline(np.array(self.times), np.array(self.values))

    @cached_property
    def _antiderivative(self):
        return self._spline.antiderivative()

    @cached_property
    def _extrema(self):
        return _spline_extrema(self._spline, np.array(self.times))

    @property
    def upper_bound(self) -> float:
        return self._extrema[1]

    def _rate(self, t, z):
        return self._spline(t)

    def _dlog(self, t, z):
        return _fd_log_derivative(self._spline, t)

    def _integral(self, a, b, z):
        return self._antiderivative(b) - self._antiderivative(a)

    def to_config(self):
        return {"kind": self.kind, "times": list(self.times), "values": list(self.values)}


@dataclass(frozen=True)
class SpaceOnly(IntensityModel):
    """``l(z)`` tabulated on the window ``[z_min, z_min + len(values) - 1]``."""

    values: tuple[float, ...]
    z_min: int = DEFAULT_WINDOW[0]
    kind = "space_only"
    tabulated = True

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "z_min", int(self.z_min))
        if not values:
            raise ModelError("empty space table")
        if min(values) <= 0 or not all(math.isfinite(v) for v in values):
            raise ModelError("space table entries must be positive and finite")

    @classmethod
    def from_function(cls, fn, window=DEFAULT_WINDOW) -> "SpaceOnly":
        states = np.arange(window[0], window[1] + 1)
        return cls(tuple(float(fn(int(z))) for z in states), window[0])

    def shifted(self, c: float) -> "SpaceOnly":
        return SpaceOnly(tuple(v + c for v in self.values), self.z_min)

    @property
    def window(self):
        return (self.z_min, self.z_min + len(self.values) - 1)

    @property
    def upper_bound(self) -> float:
        return max(self.values)

    @cached_property
    def _table(self):
        return np.array(self.values)

    def _rate(self, t, z):
        return self._table[z - self.z_min]

    def _dlog(self, t, z):
        return np.zeros(t.shape)

    def _integral(self, a, b, z):
        return self._table[z - self.z_min] * (b - a)

    def to_config(self):
        return {"kind": self.kind, "z_min": self.z_min, "values": list(self.values)}


@dataclass(frozen=True)
class Tabulated(IntensityModel):
    """``l(t, z)`` on a (time grid) x (state window) table, cubic in time."""

    times: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]  # values[i][j] = l(times[i], z_min + j)
    z_min: int = DEFAULT_WINDOW[0]
    kind = "tabulated"
    tabulated = True

    def __post_init__(self):
        times = tuple(float(v) for v in self.times)
        values = tuple(tuple(float(v) for v in row) for row in self.values)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "z_min", int(self.z_min))
        if len(times) < 4 or len(values) != len(times):
            raise ModelError("table needs one row per time node and at least 4 nodes")
        if len({len(r) for r in values}) != 1 or not values[0]:
            raise ModelError("ragged or empty table rows")
        if times[0] != 0.0 or times[-1] != 1.0 or np.any(np.diff(times) <= 0):
            raise ModelError("time grid must increase strictly from 0 to 1")
        lo, _ = self._extrema
        if lo <= 0:
            raise ModelError("table (or its interpolant) is not strictly positive")

    @classmethod
    def from_function(cls, fn, window=DEFAULT_WINDOW, n_times: int = 101) -> "Tabulated":
        grid = np.linspace(0.0, 1.0, n_times)
        states = np.arange(window[0], window[1] + 1)
        table = np.asarray(fn(grid[:, None], states[None, :]), dtype=float)
        table = np.broadcast_to(table, (len(grid), len(states)))
        return cls(tuple(grid), tuple(tuple(r) for r in table), window[0])

    @property
    def window(self):
        return (self.z_min, self.z_min + len(self.values[0]) - 1)

    @cached_property
    def _spline(self):
        return CubicSpline(np.array(self.times), np.array(self.values), axis=0)

    @cached_property
    def _antiderivative(self):
        return self._spline.antiderivative()

    @cached_property
    def _extrema(self):
        return _spline_extrema(self._spline, np.array(self.times))

    @property
    def upper_bound(self) -> float:
        return self._extrema[1]

    def _column_eval(self, spline, t, z):
        t_flat = t.ravel()
        z_flat = z.ravel() - self.z_min
        out = np.empty(t_flat.shape)
        for col in np.unique(z_flat):
            sel = z_flat == col
            out[sel] = spline(t_flat[sel])[:, col]
        return out.reshape(t.shape)

    def _rate(self, t, z):
        return self._column_eval(self._spline, t, z)

    def _dlog(self, t, z):
        t_flat = t.ravel()
        z_flat = z.ravel()
        out = np.empty(t_flat.shape)
        for col in np.unique(z_flat):
            sel = z_flat == col
            fn = lambda s, c=col: self._column_eval(self._spline, s, np.full(s.shape, c))
            out[sel] = _fd_log_derivative(fn, t_flat[sel])
        return out.reshape(t.shape)

    def _integral(self, a, b, z):
        return self._column_eval(self._antiderivative, b, z) - self._column_eval(
            self._antiderivative, a, z
        )

    def to_config(self):
        return {
            "kind": self.kind,
            "z_min": self.z_min,
            "times": list(self.times),
            "values": [list(r) for r in self.values],
        }


def model_from_config(cfg: dict) -> IntensityModel:
    """Build a model from a ``{"kind": ..., <params>}`` mapping."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ModelError("model config needs a 'kind' key")
    kind = str(cfg["kind"]).lower().replace("-", "_")
    try:
        if kind == "constant":
            return Constant(float(cfg["alpha"]))
        if kind in ("exponential_time", "exponential"):
            return ExponentialTime(float(cfg["lam"]))
        if kind == "time_only":
            if "values" in cfg:
                return TimeOnly(tuple(cfg["times"]), tuple(cfg["values"]))
            coeffs = [float(c) for c in cfg["poly"]]
            return TimeOnly.from_function(
                lambda t: np.polyval(coeffs[::-1], t), int(cfg.get("n", 101))
            )
        if kind == "space_only":
            if "values" in cfg:
                return SpaceOnly(tuple(cfg["values"]), int(cfg.get("z_min", DEFAULT_WINDOW[0])))
            window = tuple(cfg.get("window", DEFAULT_WINDOW))
            base, slope = float(cfg.get("base", 1.0)), float(cfg.get("abs_slope", 1.0))
            return SpaceOnly.from_function(lambda z: base + slope * abs(z), window)
        if kind == "tabulated":
            return Tabulated(
                tuple(cfg["times"]),
                tuple(tuple(r) for r in cfg["values"]),
                int(cfg.get("z_min", DEFAULT_WINDOW[0])),
            )
    except KeyError as exc:
        raise ModelError(f"model kind {kind!r} is missing parameter {exc}") from None
    raise ModelError(f"unknown model kind {cfg['kind']!r}")
