import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewbm.errors import ConvergenceError, DomainError
from skewbm.quadrature import integrate_adaptive, integrate_semi_infinite


def test_smooth_integrand():
    res = integrate_adaptive(np.sin, 0.0, math.pi, abs_tol=1e-13)
    assert res.value == pytest.approx(2.0, abs=1e-13)
    assert res.evaluations % 15 == 0


def test_endpoint_singularity():
    res = integrate_adaptive(lambda x: 1 / np.sqrt(x), 0.0, 1.0, abs_tol=1e-10)
    assert res.value == pytest.approx(2.0, abs=1e-9)


def test_semi_infinite():
    assert integrate_semi_infinite(lambda t: np.exp(-t), abs_tol=1e-12).value == pytest.approx(1.0, abs=1e-12)
    res = integrate_semi_infinite(lambda t: 1 / (1 + t * t), abs_tol=1e-12)
    assert res.value == pytest.approx(math.pi / 2, abs=1e-11)


def test_truncated_range():
    res = integrate_semi_infinite(lambda t: np.exp(-t), upper=2.0, abs_tol=1e-12)
    assert res.value == pytest.approx(1 - math.exp(-2.0), abs=1e-12)


def test_empty_interval():
    assert integrate_adaptive(np.cos, 1.0, 1.0).value == 0.0


def test_budget_exhausted_reports_estimate():
    with pytest.raises(ConvergenceError) as err:
        integrate_adaptive(lambda x: 1 / x, 0.0, 1.0, abs_tol=1e-10, max_evals=600)
    assert err.value.value > 0
    assert err.value.error_bound > 1e-10


def test_bad_arguments():
    with pytest.raises(DomainError):
        integrate_adaptive(np.cos, 1.0, 0.0)
    with pytest.raises(DomainError):
        integrate_adaptive(np.cos, 0.0, math.inf)
    with pytest.raises(DomainError):
        integrate_adaptive(lambda x: np.full_like(x, np.nan), 0.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(coeffs=st.lists(st.floats(-5, 5), min_size=1, max_size=22), b=st.floats(0.1, 3.0))
def test_polynomials_exact(coeffs, b):
    p = np.polynomial.Polynomial(coeffs)
    exact = p.integ()(b) - p.integ()(0.0)
    res = integrate_adaptive(p, 0.0, b, abs_tol=1e-9)
    assert res.value == pytest.approx(exact, abs=1e-8 * max(1.0, abs(exact)))
