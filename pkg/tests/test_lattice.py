from fractions import Fraction

import numpy as np
import pytest

from toric_homotopy.errors import RankDeficient
from toric_homotopy.lattice import (
    canonicalize_point,
    dual_basis,
    exact_inverse,
    hermite_normal_form,
    integer_kernel_vector,
    integer_rank,
    lattice_det,
    lattice_from_supports,
    lattice_from_vectors,
    primitive,
    torus_distance,
    unimodular_completion,
)

from .conftest import SQUARES3, SQUARE_TRI


def test_hnf_is_canonical_for_the_module():
    a = hermite_normal_form([[2, 0], [0, 2], [2, 2]])
    b = hermite_normal_form([[2, 2], [4, 2], [0, 2]])
    assert a == b == [[2, 0], [0, 2]]


def test_hnf_drops_dependent_rows():
    assert integer_rank([[1, 2, 3], [2, 4, 6], [0, 0, 0]]) == 1


def test_exact_inverse_roundtrip():
    m = [[2, 1], [7, 4]]
    inv = exact_inverse(m)
    assert inv == [[4, -1], [-7, 2]]
    with pytest.raises(ZeroDivisionError):
        exact_inverse([[1, 2], [2, 4]])


def test_primitive_and_kernel():
    assert primitive([4, -6, 8]) == (2, -3, 4)
    xi = integer_kernel_vector([[1, 1, 0], [0, 1, 1]], 3)
    assert xi in {(1, -1, 1), (-1, 1, -1)}


def test_unimodular_completion_maps_xi_to_e1():
    xi = (3, -5, 7)
    u, uinv = unimodular_completion(xi)
    first = [sum(xi[i] * u[i][j] for i in range(3)) for j in range(3)]
    assert first == [1, 0, 0]
    prod = [[sum(u[i][k] * uinv[k][j] for k in range(3)) for j in range(3)] for i in range(3)]
    assert prod == [[int(i == j) for j in range(3)] for i in range(3)]


def test_lattice_determinants():
    assert lattice_det(lattice_from_supports(SQUARES3)) == 1
    assert lattice_det(lattice_from_supports(SQUARE_TRI)) == 4
    assert lattice_det(lattice_from_supports([[(0,), (2,), (6,)]])) == 2


def test_rank_deficient_supports_are_rejected():
    with pytest.raises(RankDeficient):
        lattice_from_vectors([(1, 1), (2, 2)], 2)


def test_dual_basis_is_inverse_transpose():
    lat = lattice_from_supports(SQUARE_TRI)
    dual = dual_basis(lat)
    prod = lat.as_array() @ dual.as_array()
    assert np.allclose(prod, np.eye(2))
    assert all(isinstance(x, Fraction) for row in dual.columns for x in row)


def test_canonicalization_identifies_lattice_translates(rng):
    lat = lattice_from_supports(SQUARE_TRI)
    dual = dual_basis(lat)
    z = rng.normal(size=2) + 1j * rng.normal(size=2)
    shift = 2j * np.pi * dual.as_array() @ np.array([3, -2])
    a = canonicalize_point(z, lat, dual)
    b = canonicalize_point(z + shift, lat, dual)
    assert np.allclose(a, b, atol=1e-12)
    assert torus_distance(z, z + shift, lat, dual) < 1e-12
    # imaginary dual coordinates land in [0, 1)
    c = lat.as_array() @ a.imag / (2 * np.pi)
    assert np.all((c >= 0) & (c < 1))
