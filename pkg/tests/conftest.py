import numpy as np
import pytest
from hypothesis import strategies as st

from nmcrecip import Path, PathBatch


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@st.composite
def paths(draw, max_jumps=6, x_range=(-3, 3)):
    x0 = draw(st.integers(*x_range))
    raw = draw(
        st.lists(
            st.floats(1e-6, 1 - 1e-6, allow_nan=False),
            max_size=max_jumps,
            unique=True,
        )
    )
    return Path(x0, tuple(sorted(raw)))


def random_batch(rng, n=100, max_jumps=5, x_range=(0, 4)):
    """Paths with uniform jump counts and uniform jump times; not from any model."""
    counts = rng.integers(0, max_jumps + 1, size=n)
    times = np.ones((n, max_jumps))
    for i, k in enumerate(counts):
        times[i, :k] = np.sort(rng.random(k))
    x0 = rng.integers(x_range[0], x_range[1] + 1, size=n)
    return PathBatch(x0, times, counts)
