import math

import numpy as np
import pytest

from toric_homotopy.errors import OutOfRange, SingularJacobian
from toric_homotopy.expsum import ExpSumSystem, SupportTuple, multiproj_distance, norm0
from toric_homotopy.newton import (
    ALPHA_STAR,
    CONSTANTS,
    Certificate,
    alpha_contraction,
    beta,
    certify,
    gamma_lower_estimate,
    jacobian_M,
    local_invariants,
    mu,
    mu_renormalized,
    newton_step,
    refine,
    smale_radii,
)
from toric_homotopy.solver import sample_gaussian

from .conftest import random_support

SEGMENT = SupportTuple([[(0,), (1,)]])
EXP_MINUS_ONE = ExpSumSystem(SEGMENT, [np.array([-1.0, 1.0])])


def test_constants():
    assert CONSTANTS.alpha0 == pytest.approx((13 - 3 * math.sqrt(17)) / 4, rel=1e-15)
    assert ALPHA_STAR < CONSTANTS.alpha_starstar < CONSTANTS.alpha0


def test_smale_radii_and_contraction():
    r0, r1 = smale_radii(ALPHA_STAR)
    assert r0 == pytest.approx(1.0979710731, rel=1e-9)
    assert r1 == pytest.approx(0.0979710731, rel=1e-9)
    assert alpha_contraction(ALPHA_STAR) < ALPHA_STAR
    with pytest.raises(OutOfRange):
        smale_radii(0.2)


def test_centred_newton_step_on_exponential():
    # the centred form of exp(x) - 1 is 2 sinh(x/2); Newton moves by -2 tanh(x/2)
    x1 = newton_step(EXP_MINUS_ONE, np.array([0.1 + 0j]), canonical=False)
    assert x1[0] == pytest.approx(0.1 - 2 * math.tanh(0.05), abs=1e-15)
    assert beta(EXP_MINUS_ONE, np.array([0.1 + 0j])) == pytest.approx(math.tanh(0.05), rel=1e-14)


def test_newton_fixes_roots():
    z = np.array([0j])
    assert np.allclose(newton_step(EXP_MINUS_ONE, z), z)


def test_condition_matrix_and_mu_on_segment():
    f = ExpSumSystem(SEGMENT, [np.array([1.0, -1.0])])
    assert jacobian_M(f, np.zeros(1))[0] == pytest.approx(-1 / math.sqrt(2))
    assert mu(f, np.zeros(1)) == pytest.approx(1.0)
    assert mu_renormalized(f, np.zeros(1)) == pytest.approx(1.0)


def test_condition_matrix_is_linear_per_row(rng, squares3):
    f = sample_gaussian(squares3, rng)
    z = rng.normal(size=3) + 1j * rng.normal(size=3)
    g = f.with_coeffs([f.coeffs[0] * 3, f.coeffs[1], f.coeffs[2]])
    assert np.allclose(jacobian_M(g, z)[0], 3 * jacobian_M(f, z)[0])
    assert np.allclose(jacobian_M(g, z)[1:], jacobian_M(f, z)[1:])


def test_singular_jacobian_is_a_value_for_mu():
    f = ExpSumSystem(SupportTuple([[(0,), (2,)]]), [np.array([1.0, 1.0])])
    assert mu(f, np.zeros(1)) == math.inf
    with pytest.raises(SingularJacobian):
        newton_step(f, np.zeros(1))
    assert not certify(f, np.zeros(1)).passed


def test_classical_newton_agrees(rng):
    for _ in range(100):
        n = int(rng.integers(1, 4))
        s = random_support(rng, n)
        f = sample_gaussian(s, rng)
        x = 0.5 * rng.normal(size=n) + 1j * rng.normal(size=n)
        F = np.array([c @ (s.rho[i] * np.exp(s.points[i] @ x)) for i, c in enumerate(f.coeffs)])
        DF = np.array([(c * s.rho[i] * np.exp(s.points[i] @ x)) @ s.points[i] for i, c in enumerate(f.coeffs)])
        d = -np.linalg.solve(DF, F)
        loc = local_invariants(s, [c[None, :] for c in f.coeffs], x)
        assert np.linalg.norm(loc.delta[0] - d) <= 1e-12 * np.linalg.norm(d)
        assert abs(loc.beta[0] - norm0(s, d)) <= 1e-12 * norm0(s, d)


def test_mu_lower_bound_and_lipschitz(rng):
    used = 0
    for _ in range(100):
        n = int(rng.integers(1, 4))
        s = random_support(rng, n)
        f = sample_gaussian(s, rng)
        z = 0.5 * rng.normal(size=n) + 1j * rng.normal(size=n)
        m = mu(f, z)
        assert m >= 1 - 1e-12
        for scale in (1e-3, 1e-2, 1e-1):
            g = f.with_coeffs([c + scale * (rng.normal(size=c.shape) + 1j * rng.normal(size=c.shape)) for c in f.coeffs])
            d = multiproj_distance(f, g)
            if d * m < 0.5:
                used += 1
                mg = mu(g, z)
                assert m / (1 + d * m) <= mg * (1 + 1e-12)
                assert mg <= m / (1 - d * m) * (1 + 1e-12)
    assert used > 50


def test_certificate_contracts_under_newton(rng, squares3):
    hits = 0
    for _ in range(200):
        f = sample_gaussian(squares3, rng)
        x = 0.3 * (rng.normal(size=3) + 1j * rng.normal(size=3))
        try:
            z = refine(f, x)
        except Exception:
            continue
        y = z + 0.01 * (rng.normal(size=3) + 1j * rng.normal(size=3))
        c0 = certify(f, y)
        if not c0.passed:
            continue
        hits += 1
        c1 = certify(f, newton_step(f, y, canonical=False))
        assert c1.alpha_hat <= c0.alpha_hat
        assert c1.alpha_hat <= alpha_contraction(c0.alpha_hat) * (1 + 1e-9) or c1.alpha_hat < 1e-10
    assert hits > 20


def test_exact_root_certifies_with_zero_alpha():
    c = certify(EXP_MINUS_ONE, np.zeros(1, complex))
    assert c.passed and c.alpha_hat == 0.0
    assert Certificate.from_json(c.to_json()) == c


def test_gamma_estimate_below_certificate_bound(rng, square_tri):
    f = sample_gaussian(square_tri, rng)
    x = 0.2 * (rng.normal(size=2) + 1j * rng.normal(size=2))
    low = gamma_lower_estimate(f, x, rng=1)
    assert 0 < low <= 0.5 * mu_renormalized(f, x) * square_tri.nu


def test_refine_converges_to_root(rng, square_tri):
    f = sample_gaussian(square_tri, rng)
    from toric_homotopy.oracle import oracle_roots

    z = oracle_roots(f).roots[0]
    w = refine(f, z + 1e-4)
    assert np.linalg.norm(square_tri.canonical(w) - z) < 1e-10
