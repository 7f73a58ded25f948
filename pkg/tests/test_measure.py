import math

import numpy as np
import pytest
from scipy import stats

from nmcrecip import (
    Constant,
    DegenerateConditioningError,
    DensityValue,
    ExponentialTime,
    Path,
    RngStream,
    SpaceOnly,
    Tabulated,
    TimeOnly,
    density_vs_std_poisson,
    girsanov_density,
    girsanov_log_density,
    htransform_intensity_field,
    perturb_batch,
    reciprocal_invariant,
    Sine,
    Bump,
    sample_bridge_rejection_batch,
    sample_htransform_batch,
    sample_nmc_batch,
    solve_harmonic,
    stochastic_integral_dX,
)

from conftest import random_batch

MODELS = [
    ExponentialTime(1.0),
    Constant(2.5),
    TimeOnly.from_function(lambda t: 1 + t * t),
    SpaceOnly.from_function(lambda z: 1 + 0.1 * abs(z)),
    Tabulated.from_function(lambda t, z: 1 + t + 0.05 * abs(z)),
]


def test_identical_models_give_density_one():
    p = Path(0, (0.2, 0.7))
    assert girsanov_density(ExponentialTime(1.0), ExponentialTime(1.0), p) == DensityValue(0.0)
    assert density_vs_std_poisson(Constant(1.0), p).density == 1.0


@pytest.mark.parametrize("alpha", [0.3, 2.0, 5.0])
def test_constant_rates(alpha):
    for n in range(4):
        p = Path(0, tuple(np.linspace(0.1, 0.9, n)))
        d = girsanov_density(Constant(alpha), Constant(1.0), p)
        assert d.density == pytest.approx(math.exp(1 - alpha) * alpha**n, rel=1e-14)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_exponential_time_empty_path(lam):
    for x in (0, 4):
        d = density_vs_std_poisson(ExponentialTime(lam), Path(x, ()))
        assert d.density == pytest.approx(math.exp(-(math.exp(lam) - 1) / lam + 1), rel=1e-14)


def test_log_density_by_hand():
    l, k = ExponentialTime(0.8), TimeOnly.from_function(lambda t: 2 + t)
    p = Path(1, (0.25, 0.6))
    from scipy.integrate import quad

    drift = quad(lambda s: float(l.rate(s, 0) - k.rate(s, 0)), 0, 1, epsabs=1e-13, limit=200)[0]
    jumps = sum(math.log(float(l.rate(t, 0)) / float(k.rate(t, 0))) for t in p.jump_times)
    assert girsanov_density(l, k, p).log_density == pytest.approx(jumps - drift, abs=1e-11)


def test_chain_rule_and_reciprocity(rng):
    batch = random_batch(rng, 1000)
    a, b, c = MODELS[0], MODELS[2], MODELS[4]
    ab, bc, ac = (girsanov_log_density(*m, batch) for m in [(a, b), (b, c), (a, c)])
    np.testing.assert_allclose(np.exp(ab + bc), np.exp(ac), rtol=1e-10)
    np.testing.assert_allclose(np.exp(ab + girsanov_log_density(b, a, batch)), 1.0, rtol=1e-10)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_normalization(model):
    batch = sample_nmc_batch(Constant(1.0), 0, 100_000, RngStream(3, 0))
    g = np.exp(density_vs_std_poisson(model, batch))
    assert abs(g.mean() - 1) <= 3 * g.std(ddof=1) / math.sqrt(len(g))


def test_importance_sampling_of_the_mean():
    model = ExponentialTime(1.0)
    batch = sample_nmc_batch(Constant(1.0), 0, 100_000, RngStream(4, 0))
    w = np.exp(density_vs_std_poisson(model, batch)) * batch.counts
    direct = sample_nmc_batch(model, 0, 100_000, RngStream(4, 1)).counts
    se = math.hypot(w.std() / math.sqrt(len(w)), direct.std() / math.sqrt(len(direct)))
    assert abs(w.mean() - direct.mean()) <= 4 * se
    assert abs(w.mean() - (math.e - 1)) <= 4 * w.std() / math.sqrt(len(w))


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_derivative_identity(model, rng):
    batch = random_batch(rng, 100)
    h = 1e-4

    def G(b):
        return np.exp(density_vs_std_poisson(model, b))

    for u in (Sine(1), Sine(2), Bump(0)):
        # five-point stencil along the perturbation
        f = {e: G(perturb_batch(batch, u, e * h)) for e in (-2, -1, 1, 2)}
        fd = (8 * (f[1] - f[-1]) - (f[2] - f[-2])) / (12 * h)
        exact = -G(batch) * stochastic_integral_dX(batch, lambda t, z: reciprocal_invariant(model, t, z) * u(t))
        # relative to G itself where the derivative vanishes
        scale = np.maximum(np.abs(exact), G(batch))
        assert np.max(np.abs(fd - exact) / scale) <= 1e-8


def test_htransform_constant_terminal_returns_model():
    model = ExponentialTime(0.9)
    field = htransform_intensity_field(model, lambda z: 1.0, (0, 30))
    t = np.array([0.0, 0.4, 0.95])
    np.testing.assert_allclose(field.rate(t, 3), model.rate(t, 3), rtol=1e-10)


def test_htransform_exponential_terminal():
    alpha, beta = 2.0, 1.5
    field = htransform_intensity_field(Constant(alpha), lambda z: beta**z, (-5, 60))
    for t in (0.0, 0.5, 0.9):
        assert field.rate(t, 2) == pytest.approx(alpha * beta, rel=1e-9)
        h_ref = beta**2 * math.exp(alpha * (beta - 1) * (1 - t))
        assert field.h(t, 2) == pytest.approx(h_ref, rel=1e-9)


def test_htransform_indicator_is_the_bridge():
    model = ExponentialTime(1.0)
    field = htransform_intensity_field(model, lambda z: float(z == 3), (0, 3))
    table = solve_harmonic(model, 3, 0)
    for t, z in [(0.1, 0), (0.5, 2), (0.97, 1)]:
        assert field.rate(t, z) == pytest.approx(float(table.rate(t, z)), rel=1e-12)


def test_htransform_sampling_reproduces_bridge():
    model = ExponentialTime(1.0)
    field = htransform_intensity_field(model, lambda z: float(z == 2), (0, 2))
    a = sample_htransform_batch(field.table, 0, 10_000, RngStream(11, 0))
    b, _ = sample_bridge_rejection_batch(model, 0, 2, 10_000, RngStream(11, 1))
    assert np.all(a.x1 == 2)
    assert stats.ks_2samp(a.times[:, 0], b.times[:, 0]).pvalue > 0.01


def test_degenerate_conditioning():
    field = htransform_intensity_field(Constant(1.0), lambda z: float(z == 2), (0, 5))
    with pytest.raises(DegenerateConditioningError):
        field.rate(0.5, 3)
