"""Bridge samplers.

* ``sample_poisson_bridge``: order statistics of uniforms (exact for the
  standard Poisson bridge).
* ``sample_bridge``: h-transform dynamics. From state ``z`` at time ``t`` the
  next jump ``s`` solves ``Lambda(t, s) = E`` with ``E ~ Exp(1)``, where
  ``Lambda(t, s) = int_t^s l(r, z) dr + log h(t, z) - log h(s, z)`` is the
  integrated h-transform rate. ``Lambda`` blows up as ``s -> 1`` whenever a
  jump is still owed, so the root is bracketed; it is found by bisection,
  and past ``1 - TAIL_TAU`` the tail is solved in closed form against the
  ``m / (1 - s)`` envelope.
* ``sample_bridge_rejection``: forward paths conditioned on ``X_1 = y``.
"""

from __future__ import annotations

import numpy as np

from ..core.errors import AcceptanceError, DomainError, NumericError
from ..core.models import IntensityModel
from ..core.paths import Path, PathBatch
from ..core.rng import as_generator
from .forward import JumpRecorder, _exponentials, sample_nmc_batch
from .harmonic import DEFAULT_ODE_TOL, HarmonicTable, solve_harmonic

__all__ = [
    "bridge_intensity",
    "sample_bridge",
    "sample_bridge_batch",
    "sample_bridge_rejection",
    "sample_bridge_rejection_batch",
    "sample_htransform_batch",
    "sample_poisson_bridge",
    "sample_poisson_bridge_batch",
]

TAIL_TAU = 1e-12
BISECTION_STEPS = 60


def sample_poisson_bridge_batch(x: int, y: int, n: int, rng) -> PathBatch:
    if y < x:
        raise DomainError(f"bridge needs y >= x, got x={x}, y={y}")
    gen = as_generator(rng)
    k = y - x
    u = gen.random((n, k))
    while k:
        bad = np.any(u == 0.0, axis=1)
        srt = np.sort(u, axis=1)
        bad |= np.any(np.diff(srt, axis=1) == 0.0, axis=1)
        if not np.any(bad):
            u = srt
            break
        u[bad] = gen.random((int(bad.sum()), k))
    return PathBatch(np.full(n, x), u, np.full(n, k))


def sample_poisson_bridge(x: int, y: int, rng) -> Path:
    return sample_poisson_bridge_batch(x, y, 1, rng)[0]


def bridge_intensity(model: IntensityModel, table: HarmonicTable, t, z):
    """``l(t, z) h(t, z + 1) / h(t, z)``; zero once the target is reached."""
    if table.model != model:
        raise ValueError("harmonic table was built for a different model")
    t_arr = np.asarray(t, dtype=float)
    if t_arr.size and (t_arr.min() < 0.0 or t_arr.max() >= 1.0):
        raise DomainError("bridge intensity is defined for t in [0, 1)")
    lh = np.asarray(table.log_h(t, z))
    if np.any(np.isneginf(lh)):
        raise NumericError(f"h(t, z) vanished before t = 1 at (t, z) = ({t}, {z})")
    return table.rate(t, z)


def _bisect(fn, lo, hi, target):
    """Vectorised bisection for increasing ``fn`` with ``fn(lo) < target <= fn(hi)``."""
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        above = fn(mid) >= target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.all(hi - lo <= 1e-15):
            break
    return hi


def _next_jump(table: HarmonicTable, t: np.ndarray, z: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Next jump instants (``inf`` where the path never jumps again)."""
    out = np.full(t.shape, np.inf)
    idx = z - table.z_lo
    for j in np.unique(idx):
        sel = np.nonzero(idx == j)[0]
        zj = int(table.states[j])
        m = int(table.levels[j])
        if m < 0:
            raise NumericError(f"path sits on state {zj} where h vanishes")
        if j + 1 >= len(table.states) or table.levels[j + 1] < 0:
            continue  # nothing to jump to
        ts, es = t[sel], e[sel]
        zs = np.full(ts.shape, zj)
        base = np.asarray(table.log_h(ts, zs))

        def hazard(s, ts=ts, zs=zs, base=base):
            return np.asarray(table.model.integral(ts, s, zs)) + base - np.asarray(table.log_h(s, zs))

        if m == 0:
            s_hi = np.ones_like(ts)
            total = hazard(s_hi)
            jump = es < total
            res = np.full(ts.shape, np.inf)
            if np.any(jump):
                res[jump] = _bisect(
                    lambda s: hazard(s, ts[jump], zs[jump], base[jump]), ts[jump], s_hi[jump], es[jump]
                )
        else:
            s_hi = np.full(ts.shape, 1.0 - TAIL_TAU)
            s_hi = np.maximum(s_hi, ts)
            total = hazard(s_hi)
            res = np.empty(ts.shape)
            inner = es < total
            if np.any(inner):
                res[inner] = _bisect(
                    lambda s: hazard(s, ts[inner], zs[inner], base[inner]), ts[inner], s_hi[inner], es[inner]
                )
            tail = ~inner
            if np.any(tail):
                tau = (1.0 - s_hi[tail]) * np.exp(-(es[tail] - total[tail]) / m)
                res[tail] = 1.0 - tau
        out[sel] = res
    return out


def sample_htransform_batch(table: HarmonicTable, x0, n: int, rng) -> PathBatch:
    """Paths of the h-transformed process encoded by ``table``."""
    gen = as_generator(rng)
    x0 = np.broadcast_to(np.asarray(x0, dtype=np.int64), (n,)).copy()
    t = np.zeros(n)
    z = x0.copy()
    rec = JumpRecorder(n)
    active = np.arange(n)
    while active.size:
        e = _exponentials(gen, active.size)
        s = _next_jump(table, t[active], z[active], e)
        bad = np.isfinite(s) & ((s <= t[active]) | (s >= 1.0))
        while np.any(bad):  # would tie with the previous jump or land on t = 1: redraw
            rows = np.nonzero(bad)[0]
            e[rows] = _exponentials(gen, rows.size)
            s[rows] = _next_jump(table, t[active[rows]], z[active[rows]], e[rows])
            bad = np.isfinite(s) & ((s <= t[active]) | (s >= 1.0))
        jumped = np.isfinite(s)
        active = active[jumped]
        s = s[jumped]
        rec.record(active, s)
        t[active] = s
        z[active] += 1
    return rec.batch(x0)


def sample_bridge_batch(
    model: IntensityModel, x: int, y: int, n: int, rng, ode_tol: float = DEFAULT_ODE_TOL
) -> PathBatch:
    if y < x:
        raise DomainError(f"bridge needs y >= x, got x={x}, y={y}")
    if y == x:
        return PathBatch(np.full(n, x), np.ones((n, 0)), np.zeros(n, dtype=np.int64))
    table = solve_harmonic(model, y, x, ode_tol)
    batch = sample_htransform_batch(table, x, n, rng)
    if np.any(batch.x1 != y):
        raise NumericError("bridge sampler failed to pin the terminal state")
    return batch


def sample_bridge(model: IntensityModel, x: int, y: int, rng, ode_tol: float = DEFAULT_ODE_TOL) -> Path:
    return sample_bridge_batch(model, x, y, 1, rng, ode_tol)[0]


def sample_bridge_rejection_batch(
    model: IntensityModel, x: int, y: int, n: int, rng, max_tries: int = 10_000
) -> tuple[PathBatch, float]:
    """Forward paths kept when ``X_1 = y``; returns the batch and the hit rate.

    ``max_tries`` bounds the forward draws per requested path.
    """
    if y < x:
        raise DomainError(f"bridge needs y >= x, got x={x}, y={y}")
    if max_tries < 1:
        raise ValueError("max_tries must be at least 1")
    gen = as_generator(rng)
    kept = []
    n_kept = 0
    hits = 0
    tried = 0
    budget = max_tries * n
    rate_guess = 0.05
    while n_kept < n:
        if tried >= budget:
            raise AcceptanceError(
                f"rejection sampler exhausted {tried} tries with hit rate {hits / max(tried, 1):.3g}"
            )
        chunk = int(min(budget - tried, max(256, 1.2 * (n - n_kept) / rate_guess)))
        batch = sample_nmc_batch(model, x, chunk, gen)
        tried += chunk
        hit = np.nonzero(batch.x1 == y)[0]
        hits += hit.size
        if hit.size:
            kept.append(batch.subset(hit[: n - n_kept]))
            n_kept += min(hit.size, n - n_kept)
        rate_guess = max(hits / tried, 1e-4)
    return PathBatch.concat(kept), hits / tried


def sample_bridge_rejection(model: IntensityModel, x: int, y: int, rng, max_tries: int = 10_000) -> Path:
    return sample_bridge_rejection_batch(model, x, y, 1, rng, max_tries)[0][0]
