"""Time perturbations, the derivative ``D_u``, and duality-formula tests.

The duality formula for an NMC law with invariant ``Xi`` reads

    E[D_u Phi] = E[Phi * sum_i (u'(T_i) + Xi(T_i, X_{T_i-}) u(T_i))]

``duality_check`` estimates both sides on the same paths and z-tests the
paired difference. A finite dictionary can only falsify membership of a
reciprocal class, never prove it; ``membership_test`` reports ACCEPT as
"not falsified".
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr

from .core.errors import DomainError, InputError, InsufficientDataError
from .core.functionals import SimpleFunctional
from .core.models import IntensityModel
from .core.paths import Path, PathBatch
from .core.perturbations import Bump, Perturbation, Sine
from .intensity import invariant_grid, reciprocal_invariant

__all__ = [
    "DEFAULT_DICTIONARY",
    "FORMS",
    "DualityReport",
    "MembershipResult",
    "NelsonEstimate",
    "PairResult",
    "compensated_integral",
    "default_dictionary",
    "derivative",
    "duality_check",
    "duality_weights",
    "membership_test",
    "nelson_intensity_estimate",
    "perturb_batch",
    "perturb_path",
    "stochastic_integral_dX",
    "time_integral",
]

PERTURB_TOL = 1e-14
MIN_PATHS = 100
CLT_PATHS = 10_000
GAUSS_NODES = 16
QUAD_CHUNK = 8192
FORMS = ("invariant", "compensated", "decay")

_DICT_FUNCTIONALS = ("t1", "t1*t2", "exp(-t1)", "(x0 % 2)*t1")
_DICT_PERTURBATIONS = (Sine(1), Sine(2), Bump(0))


def default_dictionary() -> list[tuple[SimpleFunctional, Perturbation]]:
    return [(SimpleFunctional.parse(f), u) for f in _DICT_FUNCTIONALS for u in _DICT_PERTURBATIONS]


DEFAULT_DICTIONARY = default_dictionary()


def _as_batch(paths) -> PathBatch:
    if isinstance(paths, PathBatch):
        return paths
    if isinstance(paths, Path):
        return PathBatch.from_paths([paths])
    return PathBatch.from_paths(list(paths))


# -- perturbation ----------------------------------------------------------


def perturb_batch(batch: PathBatch, u: Perturbation, eps: float) -> PathBatch:
    """Jump times mapped through the inverse of ``theta(s) = s + eps u(s)``."""
    eps = float(eps)
    if abs(eps) * u.sup_abs_derivative >= 1.0:
        raise DomainError(f"eps={eps} too large: theta must stay strictly increasing (sup|u'|={u.sup_abs_derivative:.4g})")
    if eps == 0.0 or batch.width == 0:
        return PathBatch(batch.x0.copy(), batch.times.copy(), batch.counts.copy())
    mask = batch.jump_mask
    target = batch.times[mask]
    lo = np.zeros_like(target)
    hi = np.ones_like(target)
    while True:
        mid = 0.5 * (lo + hi)
        above = mid + eps * u(mid) >= target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.max(hi - lo) <= PERTURB_TOL:
            break
    s = 0.5 * (lo + hi)
    for _ in range(2):  # Newton polish inside the bracket
        step = (s + eps * u(s) - target) / (1.0 + eps * u.derivative(s))
        s = np.clip(s - step, lo, hi)
    times = batch.times.copy()
    times[mask] = s
    return PathBatch(batch.x0.copy(), times, batch.counts.copy())


def perturb_path(path: Path, u: Perturbation, eps: float) -> Path:
    return perturb_batch(PathBatch.from_paths([path]), u, eps)[0]


def derivative(functional: SimpleFunctional, paths, u: Perturbation):
    """``D_u Phi = -sum_j d_j phi(X0; T) u(T_j)`` with ``T_j = 1`` past the last jump."""
    batch = _as_batch(paths)
    out = np.zeros(len(batch))
    if functional.arity:
        T = batch.padded_times(functional.arity)
        real = np.arange(T.shape[1])[None, :] < batch.counts[:, None]
        u_T = np.where(real, u(T), 0.0)  # u(1) = 0; drop round-off from phantom slots
        for j in range(1, functional.arity + 1):
            out -= functional.partial(j, batch) * u_T[:, j - 1]
    return float(out[0]) if isinstance(paths, Path) else out


# -- stochastic and time integrals ------------------------------------------


def stochastic_integral_dX(paths, g: Callable):
    """``sum_i g(T_i, X_{T_i-})`` over the jumps of each path."""
    batch = _as_batch(paths)
    out = np.zeros(len(batch))
    if batch.width:
        mask = batch.jump_mask
        vals = np.zeros(batch.times.shape)
        vals[mask] = np.asarray(g(batch.times[mask], batch.pre_jump_states[mask]), dtype=float)
        out = vals.sum(axis=1)
    return float(out[0]) if isinstance(paths, Path) else out


def time_integral(paths, f: Callable, n_nodes: int = GAUSS_NODES):
    """``int_0^1 f(s, X_{s-}) ds`` by Gauss-Legendre on every inter-jump segment."""
    batch = _as_batch(paths)
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    out = np.empty(len(batch))
    for lo in range(0, len(batch), QUAD_CHUNK):
        sub = batch.subset(slice(lo, lo + QUAD_CHUNK))
        n = len(sub)
        starts = np.hstack([np.zeros((n, 1)), sub.times])
        ends = np.hstack([sub.times, np.ones((n, 1))])
        slot = np.arange(sub.width + 1)[None, :]
        states = np.where(slot <= sub.counts[:, None], sub.x0[:, None] + slot, sub.x0[:, None])
        length = ends - starts
        live = length > 0
        s = starts[live][:, None] + length[live][:, None] * x[None, :]
        z = np.broadcast_to(states[live][:, None], s.shape)
        vals = np.asarray(f(s.ravel(), z.ravel()), dtype=float).reshape(s.shape)
        seg = np.zeros(length.shape)
        seg[live] = length[live] * (vals @ w)
        out[lo : lo + n] = seg.sum(axis=1)
    return float(out[0]) if isinstance(paths, Path) else out


def compensated_integral(paths, g: Callable, model: IntensityModel):
    """``int g(t, X_{t-}) (dX_t - l(t, X_{t-}) dt)``."""
    jumps = stochastic_integral_dX(paths, g)
    drift = time_integral(paths, lambda s, z: np.asarray(g(s, z)) * np.asarray(model.rate(s, z)))
    return jumps - drift


# -- duality ----------------------------------------------------------------


def _invariant_fn(invariant) -> Callable:
    if isinstance(invariant, IntensityModel):
        return lambda t, z: reciprocal_invariant(invariant, t, z)
    if callable(invariant):
        return invariant
    c = float(invariant)
    return lambda t, z: np.full(np.shape(t), c)


def _constant_invariant(invariant) -> float:
    if isinstance(invariant, IntensityModel):
        grid = invariant_grid(invariant, n_times=201)
        vals = grid.values
        if np.ptp(vals) > 1e-9 * max(1.0, float(np.max(np.abs(vals)))):
            raise DomainError("decay form needs a constant reciprocal invariant")
        return float(vals.flat[0])
    if callable(invariant):
        raise DomainError("decay form needs a constant invariant or a model")
    return float(invariant)


def duality_weights(batch: PathBatch, invariant, u: Perturbation, form: str = "invariant") -> np.ndarray:
    """Per-path multiplier of ``Phi`` on the right-hand side of the duality formula.

    ``invariant``: sum_i u'(T_i) + Xi(T_i, X_{T_i-}) u(T_i); ``Xi`` from a
    model, a callable ``(t, z)`` or a constant.
    ``compensated``: int (d_t(l u) / l)(dX - l dt); needs a model.
    ``decay``: int u'(dX - c X_t dt) for a constant invariant ``c``.
    """
    if form == "invariant":
        xi = _invariant_fn(invariant)
        return stochastic_integral_dX(batch, lambda t, z: u.derivative(t) + np.asarray(xi(t, z)) * u(t))
    if form == "compensated":
        if not isinstance(invariant, IntensityModel):
            raise DomainError("compensated form needs the intensity model itself")
        model = invariant

        def g(t, z):
            return u.derivative(t) + u(t) * np.asarray(model.log_rate_derivative(t, z))

        return compensated_integral(batch, g, model)
    if form == "decay":
        c = _constant_invariant(invariant)
        jumps = stochastic_integral_dX(batch, lambda t, z: u.derivative(t))
        drift = time_integral(batch, lambda s, z: u.derivative(s) * z)
        return jumps - c * drift
    raise ValueError(f"unknown duality form {form!r}; choose from {FORMS}")


@dataclass
class PairResult:
    functional: str
    perturbation: str
    lhs_estimate: float
    rhs_estimate: float
    paired_diff_mean: float
    paired_diff_stderr: float
    z_score: float
    p_value: float
    verdict: str


@dataclass
class DualityReport:
    n_paths: int
    alpha_level: float
    adjusted_level: float
    form: str
    verdict: str
    max_abs_z: float
    pairs: list[PairResult] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _z_test(diff: np.ndarray) -> tuple[float, float, float, float]:
    n = diff.size
    mean = float(np.mean(diff))
    stderr = float(np.std(diff, ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    if stderr > 0:
        z = mean / stderr
    elif mean == 0.0:
        z = 0.0
    else:
        z = float(np.copysign(np.inf, mean))
    p = float(2.0 * ndtr(-abs(z)))
    return mean, stderr, z, p


def duality_check(
    paths,
    invariant,
    dictionary: Sequence[tuple[SimpleFunctional, Perturbation]] | None = None,
    alpha_level: float = 0.01,
    form: str = "invariant",
) -> DualityReport:
    """Paired z-tests of the duality formula over a dictionary of ``(Phi, u)``.

    Each pair passes when its two-sided p-value is at least the Bonferroni
    level ``alpha_level / len(dictionary)``; the global verdict is ``pass``
    iff every pair passes. Below ``CLT_PATHS`` paths every verdict is
    ``inconclusive``.
    """
    batch = _as_batch(paths)
    n = len(batch)
    if n == 0:
        raise InputError("empty path source")
    if n < MIN_PATHS:
        raise InputError(f"duality check needs at least {MIN_PATHS} paths, got {n}")
    dictionary = list(DEFAULT_DICTIONARY if dictionary is None else dictionary)
    if not dictionary:
        raise InputError("empty dictionary")
    if not 0.0 < alpha_level < 1.0:
        raise InputError(f"alpha_level {alpha_level} outside (0, 1)")
    level = alpha_level / len(dictionary)
    conclusive = n >= CLT_PATHS

    weights = {}
    pairs = []
    for phi, u in dictionary:
        key = str(u)
        if key not in weights:
            weights[key] = duality_weights(batch, invariant, u, form)
        lhs = derivative(phi, batch, u)
        rhs = phi(batch) * weights[key]
        mean, stderr, z, p = _z_test(lhs - rhs)
        if not conclusive:
            verdict = "inconclusive"
        else:
            verdict = "pass" if p >= level else "fail"
        pairs.append(
            PairResult(str(phi), str(u), float(np.mean(lhs)), float(np.mean(rhs)), mean, stderr, z, p, verdict)
        )
    if not conclusive:
        overall = "inconclusive"
    else:
        overall = "pass" if all(r.verdict == "pass" for r in pairs) else "fail"
    return DualityReport(
        n_paths=n,
        alpha_level=alpha_level,
        adjusted_level=level,
        form=form,
        verdict=overall,
        max_abs_z=max(abs(r.z_score) for r in pairs),
        pairs=pairs,
    )


@dataclass
class MembershipResult:
    """ACCEPT means "not falsified" by the dictionary, not proven membership."""

    verdict: str
    label: str
    report: DualityReport

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "label": self.label, "report": self.report.to_dict()}


_LABELS = {"ACCEPT": "not falsified", "REJECT": "falsified", "INCONCLUSIVE": "too few paths"}


def membership_test(
    paths,
    model: IntensityModel,
    dictionary: Sequence[tuple[SimpleFunctional, Perturbation]] | None = None,
    alpha_level: float = 0.01,
) -> MembershipResult:
    """Falsification test of ``Q`` in the reciprocal class of ``model``."""
    batch = _as_batch(paths)
    if len(batch) and not np.isfinite(np.mean(batch.counts.astype(float))):
        raise InputError("empirical mean of X1 - X0 is not finite")
    report = duality_check(batch, model, dictionary, alpha_level)
    verdict = {"pass": "ACCEPT", "fail": "REJECT", "inconclusive": "INCONCLUSIVE"}[report.verdict]
    return MembershipResult(verdict, _LABELS[verdict], report)


# -- Nelson estimator ---------------------------------------------------------


@dataclass(frozen=True)
class NelsonEstimate:
    rate: float
    stderr: float
    n_matching: int


def nelson_intensity_estimate(paths, t: float, eps: float, z: int) -> NelsonEstimate:
    """``(1/eps) E[X_{t+eps} - X_t | X_{t-} = z]`` from a sample."""
    if not (0.0 <= t < t + eps <= 1.0):
        raise DomainError(f"need 0 <= t < t + eps <= 1, got t={t}, eps={eps}")
    batch = _as_batch(paths)
    before = batch.x0 if t == 0.0 else batch.left_value_at(t)
    sel = before == z
    k = int(sel.sum())
    if k < 2:
        raise InsufficientDataError(f"{k} paths with X_(t-) = {z} at t = {t}")
    incr = (batch.value_at(t + eps) - batch.value_at(t))[sel].astype(float)
    return NelsonEstimate(float(incr.mean() / eps), float(incr.std(ddof=1) / np.sqrt(k) / eps), k)
