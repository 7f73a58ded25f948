import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nmcrecip import Bump, FunctionalSyntaxError, Path, Sine, SimpleFunctional, perturbation_from_config

from conftest import paths

SOURCES = ["t1", "t1*t2", "exp(-t1)", "(x0 % 2)*t1", "t1**3 - 2*t2 + 0.5", "x1*exp(t3)*t1", "(t1 + t2)/4", "x0**2*t2"]


@pytest.mark.parametrize("src", SOURCES)
def test_partials_match_finite_differences(src, rng):
    f = SimpleFunctional.parse(src)
    m = max(f.arity, 1)
    x0 = rng.integers(-2, 3, size=50)
    T = np.sort(rng.random((50, m)), axis=1)
    h = 1e-6
    for j in range(1, f.arity + 1):
        up, dn = T.copy(), T.copy()
        up[:, j - 1] += h
        dn[:, j - 1] -= h
        # x1 is held fixed: it does not move under time perturbations
        env = {"n": 50, "x0": x0, "x1": x0 + 7}
        fd = (f.expr.eval({**env, "T": up}) - f.expr.eval({**env, "T": dn})) / (2 * h)
        exact = f.partials[j - 1].eval({**env, "T": T})
        np.testing.assert_allclose(exact, fd, rtol=1e-6, atol=1e-7)


def test_arity_and_padding():
    f = SimpleFunctional.parse("t1*t2")
    assert f.arity == 2
    assert f(Path(0, (0.4,))) == pytest.approx(0.4)  # t2 = 1
    assert f(Path(0, ())) == 1.0
    assert SimpleFunctional.parse("x0 % 2")(Path(3, ())) == 1.0
    assert SimpleFunctional.parse("x1")(Path(3, (0.5,))) == 4.0


@pytest.mark.parametrize("bad", ["t0", "sin(t1)", "t1 % 2", "t1**0.5", "y", "t1/t2", "t1 +"])
def test_syntax_errors(bad):
    with pytest.raises(FunctionalSyntaxError):
        SimpleFunctional.parse(bad)


def test_product_has_symbolic_partials():
    a, b = SimpleFunctional.parse("exp(-t1)"), SimpleFunctional.parse("t2")
    p = Path(0, (0.3, 0.6))
    prod = a * b
    assert prod.arity == 2
    assert prod.partial(1, p) == pytest.approx(a.partial(1, p) * b(p), rel=1e-15)
    assert prod.partial(2, p) == pytest.approx(a(p) * b.partial(2, p), rel=1e-15)


def test_equality_is_structural():
    assert SimpleFunctional.parse("t1*t2") == SimpleFunctional.parse("t1 * t2")
    assert len({SimpleFunctional.parse("t1"), SimpleFunctional.parse(" t1 ")}) == 1


@settings(max_examples=50)
@given(paths(), st.sampled_from(SOURCES))
def test_batch_and_single_agree(p, src):
    from nmcrecip import PathBatch

    f = SimpleFunctional.parse(src)
    assert f(PathBatch.from_paths([p]))[0] == f(p)


@pytest.mark.parametrize("u", [Sine(1), Sine(2), Sine(3, 0.5), Bump(0), Bump(2, 2.0)], ids=str)
def test_perturbations(u):
    t = np.linspace(0, 1, 20001)
    assert abs(u(0.0)) < 1e-15 and abs(u(1.0)) < 1e-15
    h = 1e-6
    tt = t[1:-1]
    np.testing.assert_allclose(u.derivative(tt), (u(tt + h) - u(tt - h)) / (2 * h), atol=1e-6)
    assert u.sup_abs_derivative == pytest.approx(np.max(np.abs(u.derivative(t))), rel=1e-6)
    assert perturbation_from_config(u.to_config()) == u


def test_perturbation_strings():
    assert perturbation_from_config("Sine(2)") == Sine(2)
    assert perturbation_from_config("Bump(0)") == Bump(0)
    with pytest.raises(ValueError):
        perturbation_from_config("Cosine(1)")
