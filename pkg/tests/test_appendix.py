import math
import time

import numpy as np
import pytest

from phdae.appendix import (
    TOLERANCES,
    binomial_crosscheck_error,
    det_closed_form,
    format_report,
    integration_recurrence_error,
    legendre_integral_error,
    matrix_G,
    matrix_XG,
    quadrature_exactness_error,
    verify_appendix,
    xi,
)
from phdae.tableau import UnsupportedStagesError, gauss_tableau


@pytest.mark.parametrize("s", range(1, 9))
def test_all_checks_pass(s):
    rep = verify_appendix(s)
    assert rep.passed, rep.failures()


@pytest.mark.parametrize("s, value", [(1, 0.5), (2, 1 / 12), (3, 1 / 120), (4, 1 / 1680)])
def test_det_closed_form(s, value):
    assert det_closed_form(s) == pytest.approx(value, rel=1e-15)
    assert np.linalg.det(gauss_tableau(s).A) == pytest.approx(value, rel=1e-12)


@pytest.mark.parametrize("s", [1, 3, 5, 7])
def test_odd_stage_invariant(s):
    assert verify_appendix(s).bAinv_e == pytest.approx(2.0, abs=1e-10)


@pytest.mark.parametrize("s", [2, 4, 6, 8])
def test_even_stage_invariant(s):
    assert abs(verify_appendix(s).bAinv_e) < 1e-10


def test_xi_values():
    assert xi(1) == pytest.approx(1 / (2 * math.sqrt(3)))
    assert xi(2) == pytest.approx(1 / (2 * math.sqrt(15)))


@pytest.mark.parametrize("s", range(1, 7))
def test_tridiagonal_form(s):
    X = matrix_XG(s)
    assert np.allclose(np.triu(X, 2), 0) and np.allclose(np.tril(X, -2), 0)
    G = matrix_G(s)
    np.testing.assert_allclose(np.linalg.solve(G, gauss_tableau(s).A @ G), X, atol=1e-11)


@pytest.mark.parametrize("k", range(0, 9))
def test_polynomial_identities(k):
    assert integration_recurrence_error(k) < 1e-13
    assert legendre_integral_error(k) < 1e-13


@pytest.mark.parametrize("s", range(1, 9))
def test_quadrature_exactness(s):
    assert quadrature_exactness_error(s) < 1e-12


@pytest.mark.parametrize("k", range(0, 5))
def test_binomial_crosscheck(k):
    assert binomial_crosscheck_error(k) < 1e-12


def test_out_of_range():
    with pytest.raises(UnsupportedStagesError):
        verify_appendix(9)
    with pytest.raises(UnsupportedStagesError):
        matrix_G(0)


def test_report_format_and_speed():
    t0 = time.perf_counter()
    reports = [verify_appendix(s) for s in range(1, 7)]
    assert time.perf_counter() - t0 < 1.0
    text = format_report(reports)
    assert len(text.splitlines()) == 7
    assert "FAIL" not in text


def test_tolerance_table_is_complete():
    assert set(TOLERANCES) == {"det_rel", "rho", "bAinv_e", "gbg", "similarity"}
