import math

import numpy as np
import pytest

from toric_homotopy.errors import ZeroCoefficient
from toric_homotopy.expsum import ExpSumSystem, SupportTuple, residual
from toric_homotopy.lattice import torus_distance
from toric_homotopy.newton import certify
from toric_homotopy.oracle import oracle_roots
from toric_homotopy.solver import (
    SolveConfig,
    bkk_count,
    exclusion_check,
    k_constant,
    one_root_solve,
    planted_start,
    sample_gaussian,
    solve,
    solve_small,
)

from .conftest import SQUARES3


def squares3_elimination_roots(f: ExpSumSystem) -> list[np.ndarray]:
    """Roots of a three-squares system by substitution.

    Equation 1 is bilinear in (Y, Z), equation 2 in (X, Z), equation 3 in
    (X, Y) with X = exp(x) etc.  Solving the first two for Y and X and
    substituting leaves a quadratic in Z.
    """
    a, b, c = f.true_coeffs()  # monomial order as in SQUARES3
    a0, a1, a2, a3 = a  # 1, Y, Z, YZ
    b0, b1, b2, b3 = b  # 1, X, Z, XZ
    c0, c1, c2, c3 = c  # 1, X, Y, XY
    P = np.polynomial.Polynomial
    ya, yb = P([a1, a3]), P([a0, a2])  # Y = -yb / ya
    xa, xb = P([b1, b3]), P([b0, b2])  # X = -xb / xa
    quad = c0 * ya * xa - c1 * xb * ya - c2 * yb * xa + c3 * xb * yb
    out = []
    for Z in quad.roots():
        X = -xb(Z) / xa(Z)
        Y = -yb(Z) / ya(Z)
        out.append(np.log(np.array([X, Y, Z], dtype=complex)))
    return out


def hausdorff(A, B, sup) -> float:
    d1 = max(min(torus_distance(a, b, sup.lattice, sup.dual) for b in B) for a in A)
    d2 = max(min(torus_distance(a, b, sup.lattice, sup.dual) for a in A) for b in B)
    return max(d1, d2)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_squares3_solve_matches_elimination(squares3, seed):
    f = sample_gaussian(squares3, np.random.default_rng(500 + seed))
    res = solve(f, SolveConfig(rng_seed=seed, compute_length=False))
    ref = squares3_elimination_roots(f)
    assert len(res.roots) == 2 == len(ref)
    assert hausdorff(res.points, ref, squares3) < 1e-8
    assert all(c.passed for _, c in res.roots)


def test_univariate_solve_matches_companion_roots():
    s = SupportTuple([[(0,), (1,), (4,), (5,)]])
    f = sample_gaussian(s, np.random.default_rng(3))
    res = solve_small(f, SolveConfig(rng_seed=9, compute_length=False))
    ref = oracle_roots(f).roots
    assert len(res.roots) == bkk_count(s) == len(ref) == 5
    assert hausdorff(res.points, ref, s) < 1e-8


def test_same_seed_same_output(square_tri):
    f = sample_gaussian(square_tri, np.random.default_rng(4))
    a = solve(f, SolveConfig(rng_seed=11, compute_length=False))
    b = solve(f, SolveConfig(rng_seed=11, compute_length=False))
    assert a.stats["newton_steps"] == b.stats["newton_steps"]
    assert all(np.allclose(x, y, atol=1e-12) for x, y in zip(a.points, b.points))


def test_roots_invariant_under_equation_scaling(square_tri):
    f = sample_gaussian(square_tri, np.random.default_rng(5))
    g = f.with_coeffs([f.coeffs[0] * 1e3, f.coeffs[1] * (0.01 - 2j)])
    a = solve(f, SolveConfig(rng_seed=1, compute_length=False))
    b = solve(g, SolveConfig(rng_seed=1, compute_length=False))
    assert hausdorff(a.points, b.points, square_tri) < 1e-10


def test_returned_roots_recertify_independently(squares3):
    f = sample_gaussian(squares3, np.random.default_rng(6))
    res = solve(f, SolveConfig(rng_seed=2))
    for z, _ in res.roots:
        assert certify(f, z).passed
        assert residual(f, z) <= 1e-10
    assert len(res.stats["L_hat"]) == len(res.traces)


def test_planted_start_gives_full_root_set(squares3):
    h, xs = planted_start(squares3, np.random.default_rng(8))
    assert len(xs) == bkk_count(squares3) == 2
    ref = squares3_elimination_roots(h)
    assert hausdorff(xs, ref, squares3) < 1e-9


def test_exclusion_flags(square_tri):
    f = sample_gaussian(square_tri, np.random.default_rng(1))
    assert exclusion_check(f.with_coeffs([-c for c in f.coeffs]), f)["in_Lambda_eps"]
    assert not exclusion_check(f, f)["in_Lambda_eps"]
    big = f.with_coeffs([c * 100 for c in f.coeffs])
    assert exclusion_check(big, f)["in_Y_K"]
    zero = f.with_coeffs([np.r_[0.0, f.coeffs[0][1:]], f.coeffs[1]])
    with pytest.raises(ZeroCoefficient):
        exclusion_check(f, zero)


def test_k_constant():
    s = SupportTuple(SQUARES3)
    assert k_constant(s) == pytest.approx(1 + math.sqrt((math.log(3) + math.log(10)) / 4))


def test_gaussian_second_moment():
    s = SupportTuple([[(0,), (1,), (2,), (3,)]])
    rng = np.random.default_rng(0)
    vals = np.concatenate([np.abs(sample_gaussian(s, rng).coeffs[0]) ** 2 for _ in range(4000)])
    assert vals.mean() == pytest.approx(1.0, abs=0.05)


def test_one_root_solve(square_tri):
    f = sample_gaussian(square_tri, np.random.default_rng(2))
    g = sample_gaussian(square_tri, np.random.default_rng(3))
    x0 = oracle_roots(g).roots[0]
    z, cert, stats = one_root_solve(f, (g, x0), SolveConfig(rng_seed=0, compute_length=False))
    assert cert.passed
    assert min(torus_distance(z, w, square_tri.lattice, square_tri.dual) for w in oracle_roots(f).roots) < 1e-8
