import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nmcrecip import DomainError, Path, PathBatch, path_left_value, path_value, read_paths_csv, write_paths_csv

from conftest import paths


def test_path_rejects_unsorted_and_boundary_times():
    with pytest.raises(DomainError):
        Path(0, (0.5, 0.2))
    with pytest.raises(DomainError):
        Path(0, (0.0,))
    with pytest.raises(DomainError):
        Path(0, (1.0,))
    with pytest.raises(DomainError):
        Path(0, (0.3, 0.3))


def test_values_are_cadlag():
    p = Path(2, (0.25, 0.5))
    assert p.value(0.0) == 2
    assert p.value(0.25) == 3
    assert p.left_value(0.25) == 2
    assert p.value(1.0) == p.x1 == 4
    with pytest.raises(DomainError):
        path_value(p, 1.5)
    with pytest.raises(DomainError):
        path_left_value(p, 0.0)


@given(paths())
def test_csv_round_trip_is_exact(p):
    assert Path.from_csv_line(p.to_csv_line()) == p


@given(st.lists(paths(), min_size=1, max_size=8))
def test_batch_round_trip(ps):
    batch = PathBatch.from_paths(ps)
    assert batch.to_paths() == ps
    buf = io.StringIO()
    write_paths_csv(batch, buf)
    buf.seek(0)
    assert read_paths_csv(buf).to_paths() == ps


@given(st.lists(paths(), min_size=1, max_size=8), st.floats(0.0, 1.0))
def test_batch_values_match_scalar(ps, t):
    batch = PathBatch.from_paths(ps)
    assert batch.value_at(t).tolist() == [p.value(t) for p in ps]
    if t > 0:
        assert batch.left_value_at(t).tolist() == [p.left_value(t) for p in ps]


@settings(max_examples=30)
@given(st.lists(paths(), min_size=1, max_size=5), st.lists(paths(), min_size=1, max_size=5))
def test_concat_and_subset(a, b):
    both = PathBatch.concat([PathBatch.from_paths(a), PathBatch.from_paths(b)])
    assert both.to_paths() == a + b
    idx = np.arange(len(a), len(a) + len(b))
    assert both.subset(idx).to_paths() == b


def test_padding_convention():
    batch = PathBatch.from_paths([Path(0, (0.1, 0.2)), Path(1, ())])
    T = batch.padded_times(4)
    assert T.shape == (2, 4)
    assert np.all(T[0, 2:] == 1.0) and np.all(T[1] == 1.0)
    assert batch.jump_mask.tolist() == [[True, True], [False, False]]
