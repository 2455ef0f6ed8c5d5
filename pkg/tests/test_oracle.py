import math

import numpy as np
import pytest

from toric_homotopy.errors import LeadingZero, OracleUnavailable, ZeroEquation
from toric_homotopy.expsum import ExpSumSystem, SupportTuple, residual
from toric_homotopy.oracle import (
    MIN_SAMPLES,
    McReport,
    _finish,
    _sylvester_det,
    bivariate_roots,
    frobenius_bound,
    mc_exclusion,
    mc_moment_frobenius,
    mc_moment_mu,
    oracle_roots,
    resultant_coefficients,
    univariate_roots,
)
from toric_homotopy.polytope import bkk_count
from toric_homotopy.solver import sample_gaussian

from .conftest import SQUARES3, random_support

EM2 = SupportTuple([[(0,), (1,), (2,), (3,)]])


def test_exponential_minus_one():
    s = SupportTuple([[(0,), (1,)]])
    r = univariate_roots(ExpSumSystem(s, [np.array([-1.0, 1.0])]))
    assert len(r.roots) == 1 and abs(r.roots[0][0]) < 1e-14


def test_roots_on_a_coarser_lattice():
    # exp(2x) = 1 has a single root on the torus C / (pi i Z)
    s = SupportTuple([[(0,), (2,)]])
    r = univariate_roots(ExpSumSystem(s, [np.array([1.0, -1.0])]))
    assert len(r.roots) == 1


def test_univariate_degenerate_inputs():
    s = SupportTuple([[(0,), (1,), (2,)]])
    with pytest.raises(ZeroEquation):
        univariate_roots(ExpSumSystem(s, [np.zeros(3)]))
    with pytest.raises(LeadingZero):
        univariate_roots(ExpSumSystem(s, [np.array([0.0, 1.0, 0.0])]))
    r = univariate_roots(ExpSumSystem(s, [np.array([1.0, 1.0, 0.0])]))
    assert r.dropped_terms == 1 and len(r.roots) == 1


def test_sylvester_determinant_of_linear_factors():
    # Res(Y - 2, Y - 3) = 3 - 2 up to sign conventions of the Sylvester layout
    assert abs(_sylvester_det(np.array([-2.0, 1.0]), np.array([-3.0, 1.0]))) == pytest.approx(1.0)


def test_resultant_interpolation_matches_direct_evaluation(rng):
    P = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    Q = rng.normal(size=(2, 4)) + 1j * rng.normal(size=(2, 4))
    coeffs = resultant_coefficients(P, Q)
    X = 0.7 - 0.4j
    direct = _sylvester_det(np.polynomial.polynomial.polyval(X, P), np.polynomial.polynomial.polyval(X, Q))
    assert np.polynomial.polynomial.polyval(X, coeffs) == pytest.approx(direct, rel=1e-9)


def test_product_system_has_all_six_roots(rng):
    s = SupportTuple([[(0, 0), (1, 0), (2, 0)], [(0, 0), (0, 1), (0, 3)]])
    r = bivariate_roots(sample_gaussian(s, rng))
    assert len(r.roots) == 6 == bkk_count(s)
    assert max(r.residuals) <= 1e-10


def test_random_bivariate_counts_match_bkk(rng):
    agree = 0
    for _ in range(30):
        s = random_support(rng, 2, 0, 3)
        r = oracle_roots(sample_gaussian(s, rng))
        assert len(r.roots) <= bkk_count(s)
        agree += len(r.roots) == bkk_count(s)
        assert max(r.residuals, default=0.0) <= 1e-10
    assert agree >= 29


def test_no_oracle_in_three_variables():
    s = SupportTuple(SQUARES3)
    with pytest.raises(OracleUnavailable):
        oracle_roots(sample_gaussian(s, 0))


def test_coincident_candidates_merge_with_multiplicity():
    s = SupportTuple([[(0,), (1,)]])
    f = ExpSumSystem(s, [np.array([-1.0, 1.0])])
    r = _finish(f, [np.array([1e-3 + 0j]), np.array([-1e-3 + 2j * np.pi])], "test")
    assert len(r.roots) == 1 and r.multiplicities == [2]


def test_report_pass_rule():
    rep = McReport.from_values("x", np.array([1.0, 2.0, 3.0]), 10.0)
    assert rep.mean == 2.0 and rep.passed
    assert not McReport.from_values("x", np.array([1.0, 2.0, 3.0]), 2.5).passed
    assert rep.to_json()["version"] == "1"


def test_minimum_sample_count():
    with pytest.raises(ValueError):
        mc_moment_frobenius(EM2, N=MIN_SAMPLES - 1, seed=0)


def test_frobenius_bound_value():
    assert frobenius_bound(EM2, 2.0, 1.0) == pytest.approx(8.0)


def test_frobenius_moment_matches_exact_expectation():
    # for n = 1 and unit Gaussians the expectation equals 4H/det exactly (8 here)
    rep = mc_moment_frobenius(EM2, H=2.0, N=3000, seed=21)
    assert abs(rep.mean - 8.0) <= 4 * rep.stderr


def test_threads_do_not_change_samples():
    a = mc_moment_frobenius(EM2, N=1000, seed=4, threads=1)
    b = mc_moment_frobenius(EM2, N=1000, seed=4, threads=3)
    assert np.array_equal(a.values, b.values)


def test_mu_moment_below_bound():
    rep = mc_moment_mu(EM2, H=2.0, N=1000, seed=2)
    assert rep.passed and rep.params["roots_in_box"] > 0


def test_exclusion_frequencies_match_exact_probability():
    s = SupportTuple(SQUARES3)
    f = sample_gaussian(s, np.random.default_rng(0))
    lam, yk = mc_exclusion(s, f, N=4000, seed=8)
    eps = lam.params["eps"]
    exact = 1 - (1 - eps / math.pi) ** s.S
    assert abs(lam.mean - exact) <= 4 * lam.stderr
    assert yk.passed
    zero_eps, _ = mc_exclusion(s, f, N=1000, seed=8, eps=0.0)
    assert zero_eps.mean == 0.0
