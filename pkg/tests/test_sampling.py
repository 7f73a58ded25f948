import numpy as np
import pytest
from scipy import stats

from nmcrecip import (
    AcceptanceError,
    Constant,
    DomainError,
    ExponentialTime,
    Path,
    PathBatch,
    RngStream,
    SimulationError,
    SpaceOnly,
    TieError,
    TimeOnly,
    sample_bridge,
    sample_bridge_batch,
    sample_bridge_rejection,
    sample_bridge_rejection_batch,
    sample_nmc,
    sample_nmc_batch,
    sample_poisson_bridge,
    sample_poisson_bridge_batch,
    superpose_batches,
    superpose_paths,
    thin_batch,
    thin_path,
)


def _poisson_chi2(counts, mean):
    """Chi-square p-value of integer counts against Poisson(mean), tail pooled."""
    k_max = int(stats.poisson.ppf(1 - 1e-4, mean))
    obs = np.bincount(np.minimum(counts, k_max), minlength=k_max + 1)
    probs = stats.poisson.pmf(np.arange(k_max + 1), mean)
    probs[-1] = stats.poisson.sf(k_max - 1, mean)
    return stats.chisquare(obs, probs * len(counts)).pvalue


@pytest.mark.parametrize(
    "model",
    [Constant(1.5), ExponentialTime(1.0), TimeOnly.from_function(lambda t: 1 + np.sin(np.pi * t))],
    ids=lambda m: m.kind,
)
def test_forward_counts_are_poisson_for_time_only_rates(model):
    batch = sample_nmc_batch(model, 0, 40_000, RngStream(1, 0))
    mean = float(model.integral(0.0, 1.0, 0))
    assert _poisson_chi2(batch.counts, mean) > 1e-3


def test_forward_space_dependent_mean(rng):
    model = SpaceOnly.from_function(lambda z: 1 + 0.5 * (z % 2), window=(0, 40))
    # rate alternates with parity of the state; compare with a direct Gillespie run
    batch = sample_nmc_batch(model, 0, 20_000, rng)
    ref = []
    g = np.random.default_rng(5)
    for _ in range(20_000):
        t, z = 0.0, 0
        while True:
            t += g.exponential(1 / float(model.rate(0.0, z)))
            if t >= 1:
                break
            z += 1
        ref.append(z)
    obs = np.bincount(batch.counts, minlength=12)[:12]
    exp = np.bincount(ref, minlength=12)[:12]
    assert stats.chi2_contingency(np.vstack([obs, exp])[:, (obs + exp) > 20]).pvalue > 1e-3


def test_forward_paths_are_valid(rng):
    batch = sample_nmc_batch(ExponentialTime(2.0), 3, 500, rng)
    for p in batch:
        assert p.x0 == 3
        assert all(0 < t < 1 for t in p.jump_times)
    assert isinstance(sample_nmc(Constant(1.0), 0, rng), Path)


def test_window_overflow_is_reported(rng):
    model = SpaceOnly.from_function(lambda z: 20.0, window=(0, 5))
    with pytest.raises(SimulationError):
        sample_nmc_batch(model, 0, 100, rng)


def test_same_stream_same_paths():
    a = sample_nmc_batch(Constant(2.0), 0, 100, RngStream(9, 2))
    b = sample_nmc_batch(Constant(2.0), 0, 100, RngStream(9, 2))
    assert a.to_paths() == b.to_paths()


def test_poisson_bridge_first_jump_is_beta(rng):
    for k in (1, 2, 4):
        batch = sample_poisson_bridge_batch(0, k, 20_000, rng)
        assert np.all(batch.x1 == k)
        assert stats.kstest(batch.times[:, 0], stats.beta(1, k).cdf).pvalue > 1e-3
    assert sample_poisson_bridge(2, 2, rng) == Path(2, ())
    with pytest.raises(DomainError):
        sample_poisson_bridge(3, 1, rng)


@pytest.mark.parametrize("alpha", [0.5, 3.0])
def test_htransform_bridge_of_constant_rate_is_order_statistics(alpha, rng):
    batch = sample_bridge_batch(Constant(alpha), 0, 3, 10_000, rng)
    assert np.all(batch.x1 == 3)
    assert stats.kstest(batch.times[:, 0], stats.beta(1, 3).cdf).pvalue > 1e-3
    assert stats.kstest(batch.times[:, 2], stats.beta(3, 1).cdf).pvalue > 1e-3


def test_htransform_bridge_against_rejection(rng):
    model = ExponentialTime(1.5)
    a = sample_bridge_batch(model, 0, 2, 8000, rng)
    b, hit = sample_bridge_rejection_batch(model, 0, 2, 8000, rng)
    assert 0 < hit < 1
    assert stats.ks_2samp(a.times[:, 0], b.times[:, 0]).pvalue > 1e-3
    assert stats.ks_2samp(a.times[:, 1], b.times[:, 1]).pvalue > 1e-3


def test_long_bridge_pins_endpoint(rng):
    batch = sample_bridge_batch(Constant(1.0), 2, 14, 200, rng)
    assert np.all(batch.x1 == 14)
    assert np.all(np.diff(batch.times, axis=1) > 0)
    assert sample_bridge(Constant(1.0), 0, 0, rng) == Path(0, ())
    assert sample_bridge(Constant(1.0), 0, 1, rng).x1 == 1
    assert sample_bridge_rejection(Constant(1.0), 0, 1, rng).x1 == 1


def test_rejection_budget(rng):
    with pytest.raises(AcceptanceError):
        sample_bridge_rejection_batch(Constant(0.01), 0, 6, 5, rng, max_tries=10)


def test_thinning_and_superposition_laws(rng):
    thin = thin_batch(sample_nmc_batch(Constant(2.0), 0, 40_000, rng), 0.5, rng)
    assert _poisson_chi2(thin.counts, 1.0) > 1e-3
    sup = superpose_batches(sample_nmc_batch(Constant(1.0), 0, 40_000, rng), sample_nmc_batch(Constant(1.0), 0, 40_000, rng))
    assert _poisson_chi2(sup.counts, 2.0) > 1e-3
    for p in sup.subset(np.arange(50)):
        assert list(p.jump_times) == sorted(p.jump_times)


def test_thin_and_superpose_edge_cases(rng):
    p = Path(1, (0.2, 0.4))
    assert thin_path(p, 1.0, rng) == p
    assert thin_path(p, 0.0, rng) == Path(1, ())
    with pytest.raises(ValueError):
        thin_path(p, 1.5, rng)
    assert superpose_paths(p, Path(7, (0.3,))) == Path(1, (0.2, 0.3, 0.4))
    with pytest.raises(TieError):
        superpose_paths(p, Path(0, (0.4,)))
    with pytest.raises(ValueError):
        superpose_batches(PathBatch.from_paths([p]), PathBatch.from_paths([p, p]))
