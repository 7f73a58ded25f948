"""Space-time harmonic functions and the h-transformed intensity.

For terminal data ``f`` on a state window, ``h(t, z) = E[f(X_1) | X_t = z]``
solves the backward system

    dh/dt (t, z) = l(t, z) * (h(t, z) - h(t, z + 1)),    h(1, .) = f,

which is upper triangular in ``z``. It is integrated backward from ``t = 1``
with classical RK4. Terminal data above the window counts as zero.

Near ``t = 1`` a state ``z`` whose first reachable support point of ``f`` is
``m`` levels up behaves like ``(1 - t)**m``. The table therefore stores
``log g = log h - m log(1 - t)``, which stays smooth up to ``t = 1`` and has
the closed-form limit ``log f(z + m) + sum log l(1, .) - log m!``. The
interpolated ``log h`` and the h-transform rate are rebuilt from it. The
grid is 4096 uniform steps plus a geometric refinement of the last cell,
so that the polynomial decay is resolved for every ``m``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from ..core.errors import DomainError, NumericError
from ..core.models import DEFAULT_WINDOW, IntensityModel

__all__ = [
    "HarmonicTable",
    "DEFAULT_ODE_TOL",
    "DEFAULT_STEPS",
    "solve_harmonic",
    "solve_terminal",
]

DEFAULT_STEPS = 4096
DEFAULT_ODE_TOL = 1e-8
TAIL_RATIO = 1.01
TAIL_MIN = 1e-13
# below this, or when h is this small, tail nodes fall back to the t = 1 limit of log g
TRUST_TAU = 1e-9
TRUST_H = 1e-200


def _time_grid(n_steps: int) -> tuple[np.ndarray, int]:
    """Uniform head ``i / n_steps`` plus a geometric tail towards ``t = 1``.

    The tail starts where a geometric step equals the uniform step, so the
    step size never jumps. Returns the grid and the number of head nodes.
    """
    dt = 1.0 / n_steps
    cells = int(math.ceil(1.0 / (TAIL_RATIO - 1.0)))
    n_head = n_steps - cells + 1
    head = np.arange(n_head) * dt
    taus = []
    tau = cells * dt / TAIL_RATIO
    while tau > TAIL_MIN:
        taus.append(tau)
        tau /= TAIL_RATIO
    tail = 1.0 - np.array(taus)
    return np.concatenate([head, tail, [1.0]]), n_head


class HarmonicTable:
    """Tabulated ``h(t, z)`` for ``z`` in ``[z_lo, z_hi]`` on a fixed time grid."""

    def __init__(self, model: IntensityModel, terminal, z_lo: int, z_hi: int, n_steps: int = DEFAULT_STEPS):
        if z_hi < z_lo:
            raise DomainError("empty state range")
        self.model = model
        self.z_lo = int(z_lo)
        self.z_hi = int(z_hi)
        self.n_steps = int(n_steps)
        self.states = np.arange(self.z_lo, self.z_hi + 1)
        terminal = np.asarray(terminal, dtype=float)
        if terminal.shape != self.states.shape:
            raise ValueError("terminal data must have one value per state")
        if np.any(terminal < 0) or not np.all(np.isfinite(terminal)):
            raise ValueError("terminal data must be finite and nonnegative")
        if not np.any(terminal > 0):
            raise NumericError("terminal data vanishes on the whole window")
        self.terminal = terminal
        model.check_states(self.states)

        # levels to the nearest support point of the terminal data; -1 = dead state
        levels = np.full(len(self.states), -1, dtype=np.int64)
        nxt = -1
        for j in range(len(self.states) - 1, -1, -1):
            if terminal[j] > 0:
                nxt = j
            levels[j] = nxt - j if nxt >= 0 else -1
        self.levels = levels
        self.alive = levels >= 0

        self.times, self.n_head = _time_grid(self.n_steps)
        self._solve()
        self._build_interpolants()

    # -- solver -----------------------------------------------------------
    def _rhs(self, rates, h):
        up = np.empty_like(h)
        up[:-1] = h[1:]
        up[-1] = 0.0
        return rates * (h - up)

    def _solve(self):
        times = self.times
        n = len(times)
        mids = 0.5 * (times[:-1] + times[1:])
        rate_nodes = np.asarray(self.model.rate(times[:, None], self.states[None, :]))
        rate_mids = np.asarray(self.model.rate(mids[:, None], self.states[None, :]))
        h = np.empty((n, len(self.states)))
        dh = np.empty_like(h)
        h[-1] = self.terminal
        dh[-1] = self._rhs(rate_nodes[-1], h[-1])
        for i in range(n - 2, -1, -1):
            step = times[i] - times[i + 1]  # negative: integrating backward
            y = h[i + 1]
            k1 = dh[i + 1]
            k2 = self._rhs(rate_mids[i], y + 0.5 * step * k1)
            k3 = self._rhs(rate_mids[i], y + 0.5 * step * k2)
            y_new = y + step * k3
            k4 = self._rhs(rate_nodes[i], y_new)
            h[i] = y + step * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
            dh[i] = self._rhs(rate_nodes[i], h[i])
        self.h = h
        self.dh = dh
        self.rates = rate_nodes

    def _build_interpolants(self):
        tau = 1.0 - self.times
        with np.errstate(divide="ignore"):
            log_tau = np.log(tau)
        rate_at_one = self.rates[-1]
        self._log_g = []
        self.log_g_limit = np.full(len(self.states), -np.inf)
        for j in range(len(self.states)):
            m = int(self.levels[j])
            if m < 0:
                self._log_g.append(None)
                continue
            col = self.h[:, j]
            limit = (
                math.log(self.terminal[j + m])
                + float(np.sum(np.log(rate_at_one[j : j + m])))
                - math.lgamma(m + 1)
            )
            self.log_g_limit[j] = limit
            head = col[: self.n_head]
            if np.any(~np.isfinite(head)) or np.any(head <= 0):
                bad = self.times[: self.n_head][~(head > 0)]
                raise NumericError(
                    f"h(t, {self.states[j]}) underflowed to 0 at t={bad.min():.6g} before t=1"
                )
            inner = col[:-1]
            trusted = (inner > TRUST_H) & (tau[:-1] > TRUST_TAU)
            vals = np.full(len(self.times), limit)
            vals[:-1][trusted] = np.log(inner[trusted]) - m * log_tau[:-1][trusted]
            if np.any(trusted) and not np.all(trusted):
                # bridge the untrusted stretch linearly in (1 - t) towards the limit
                k = int(np.nonzero(trusted)[0][-1])
                gap = ~trusted & (np.arange(len(inner)) > k)
                vals[:-1][gap] = limit + (vals[k] - limit) * tau[:-1][gap] / tau[k]
            self._log_g.append(CubicSpline(self.times, vals))

    # -- evaluation -------------------------------------------------------
    def _index(self, z):
        z = np.asarray(z, dtype=np.int64)
        if z.size and (z.min() < self.z_lo or z.max() > self.z_hi):
            raise DomainError(f"state outside the table window [{self.z_lo}, {self.z_hi}]")
        return z - self.z_lo

    def log_g(self, t, j):
        spline = self._log_g[j]
        if spline is None:
            return np.full(np.shape(t), -np.inf)
        return spline(t)

    def log_h(self, t, z):
        """``log h(t, z)``, vectorised; ``-inf`` on dead states and at t = 1 below support."""
        t, z = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(z, dtype=np.int64))
        idx = self._index(z)
        out = np.empty(t.shape)
        for j in np.unique(idx):
            sel = idx == j
            m = self.levels[j]
            ts = t[sel]
            if m < 0:
                out[sel] = -np.inf
                continue
            with np.errstate(divide="ignore"):
                out[sel] = self.log_g(ts, j) + m * np.log1p(-ts)
        return out if out.ndim else float(out)

    def value(self, t, z):
        return np.exp(self.log_h(t, z))

    def log_ratio(self, t, z):
        """``log h(t, z + 1) - log h(t, z)``; ``-inf`` when ``z + 1`` is dead or above the table."""
        t, z = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(z, dtype=np.int64))
        idx = self._index(z)
        out = np.empty(t.shape)
        for j in np.unique(idx):
            sel = idx == j
            ts = t[sel]
            m = self.levels[j]
            if m < 0:
                raise NumericError(f"h vanishes identically at state {self.states[j]}")
            if j + 1 >= len(self.states) or self.levels[j + 1] < 0:
                out[sel] = -np.inf
                continue
            m_up = self.levels[j + 1]
            with np.errstate(divide="ignore"):
                out[sel] = (
                    self.log_g(ts, j + 1) - self.log_g(ts, j) + (m_up - m) * np.log1p(-ts)
                )
        return out if out.ndim else float(out)

    def rate(self, t, z):
        """h-transformed intensity ``l(t, z) h(t, z + 1) / h(t, z)``."""
        t, z = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(z, dtype=np.int64))
        if t.size and (t.min() < 0.0 or t.max() >= 1.0):
            raise DomainError("h-transform rate is defined for t in [0, 1)")
        ratio = np.exp(self.log_ratio(t, z))
        out = np.asarray(self.model.rate(t, z)) * ratio
        return out if np.ndim(out) else float(out)

    def cumulative_hazard(self, t, s, z):
        """``int_t^s rate(r, z) dr = int_t^s l + log h(t, z) - log h(s, z)``."""
        t, s, z = np.broadcast_arrays(
            np.asarray(t, dtype=float), np.asarray(s, dtype=float), np.asarray(z, dtype=np.int64)
        )
        with np.errstate(invalid="ignore"):
            out = np.asarray(self.model.integral(t, s, z)) + self.log_h(t, z) - self.log_h(s, z)
        return out

    def residual(self) -> float:
        """Max ODE residual over interior nodes of the uniform head.

        The time derivative is taken by 5-point central differences of the
        table, independent of the right-hand side used by the integrator.
        """
        dt = 1.0 / self.n_steps
        h = self.h
        idx = np.arange(2, self.n_head - 2)
        deriv = (-h[idx + 2] + 8 * h[idx + 1] - 8 * h[idx - 1] + h[idx - 2]) / (12 * dt)
        up = np.zeros((len(idx), h.shape[1]))
        up[:, :-1] = h[idx, 1:]
        ode = self.rates[idx] * (h[idx] - up)
        scale = max(1.0, float(np.max(np.abs(h))))
        return float(np.max(np.abs(deriv - ode))) / scale


@lru_cache(maxsize=64)
def _cached_bridge_table(model, y, x_min, n_steps):
    terminal = np.zeros(y - x_min + 1)
    terminal[-1] = 1.0
    return HarmonicTable(model, terminal, x_min, y, n_steps)


def solve_harmonic(
    model: IntensityModel,
    y: int,
    x_min: int,
    ode_tol: float = DEFAULT_ODE_TOL,
    n_steps: int = DEFAULT_STEPS,
) -> HarmonicTable:
    """``h(t, z) = P(X_1 = y | X_t = z)`` for ``z`` in ``[x_min, y]``."""
    if x_min > y:
        raise DomainError(f"x_min={x_min} exceeds target y={y}")
    table = _cached_bridge_table(model, int(y), int(x_min), int(n_steps))
    res = table.residual()
    if res > ode_tol:
        raise NumericError(
            f"harmonic ODE residual {res:.3e} exceeds tolerance {ode_tol:.1e} "
            f"(model={model.kind}, y={y}, x_min={x_min}, steps={n_steps})"
        )
    return table


def solve_terminal(
    model: IntensityModel,
    terminal_fn,
    window=None,
    n_steps: int = DEFAULT_STEPS,
) -> HarmonicTable:
    """``h(t, z) = E[f(X_1) | X_t = z]`` on a window, ``f`` zero above it."""
    window = tuple(window) if window is not None else (model.window or DEFAULT_WINDOW)
    states = np.arange(window[0], window[1] + 1)
    terminal = np.array([float(terminal_fn(int(z))) for z in states])
    return HarmonicTable(model, terminal, window[0], window[1], n_steps)
