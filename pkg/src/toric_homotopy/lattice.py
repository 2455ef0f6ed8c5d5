"""Exact integer lattice operations.

The lattice of interest is the Z-span of all support differences.  Everything
here is integer or ``Fraction`` arithmetic except the final mapping of complex
points, which necessarily goes through floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

import numpy as np

from .errors import RankDeficient

IntVec = tuple[int, ...]


# ---------------------------------------------------------------- integer helpers

def hermite_normal_form(rows: Iterable[Sequence[int]], ncols: int | None = None) -> list[list[int]]:
    """Row-style HNF of the Z-module generated by ``rows``.

    Returns the nonzero rows only: upper echelon, positive pivots, entries
    above each pivot reduced into ``[0, pivot)``.  The result is canonical for
    the module, so two generating sets of one lattice give identical output.
    """
    mat = [list(map(int, r)) for r in rows]
    if ncols is None:
        ncols = len(mat[0]) if mat else 0
    mat = [r for r in mat if any(r)]
    out_row = 0
    for col in range(ncols):
        # gcd-eliminate column `col` among rows out_row..end
        while True:
            nz = [r for r in range(out_row, len(mat)) if mat[r][col] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda r: abs(mat[r][col]))
            mat[out_row], mat[piv] = mat[piv], mat[out_row]
            p = mat[out_row][col]
            done = True
            for r in range(out_row + 1, len(mat)):
                q = mat[r][col] // p
                if q:
                    mat[r] = [x - q * y for x, y in zip(mat[r], mat[out_row])]
                if mat[r][col] != 0:
                    done = False
            if done:
                break
        if out_row < len(mat) and mat[out_row][col] != 0:
            if mat[out_row][col] < 0:
                mat[out_row] = [-x for x in mat[out_row]]
            p = mat[out_row][col]
            for r in range(out_row):
                q = mat[r][col] // p
                if q:
                    mat[r] = [x - q * y for x, y in zip(mat[r], mat[out_row])]
            out_row += 1
        mat = mat[:out_row] + [r for r in mat[out_row:] if any(r)]
    return mat[:out_row]


def integer_rank(rows: Iterable[Sequence[int]], ncols: int | None = None) -> int:
    return len(hermite_normal_form(rows, ncols))


def exact_inverse(mat: Sequence[Sequence[int | Fraction]]) -> list[list[Fraction]]:
    """Gauss-Jordan inverse over the rationals. Raises ZeroDivisionError if singular."""
    n = len(mat)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        a[c], a[piv] = a[piv], a[c]
        p = a[c][c]
        a[c] = [x / p for x in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return [row[n:] for row in a]


def primitive(vec: Sequence[int]) -> IntVec:
    g = 0
    for x in vec:
        g = gcd(g, int(x))
    if g == 0:
        raise ValueError("zero vector has no primitive representative")
    return tuple(int(x) // g for x in vec)


def integer_kernel_vector(rows: Sequence[Sequence[int]], n: int) -> IntVec:
    """Primitive generator of the kernel of an integer matrix with rank n-1."""
    hnf = hermite_normal_form(rows, n)
    if len(hnf) != n - 1:
        raise ValueError(f"kernel is not one-dimensional (rank {len(hnf)})")
    pivots = [next(c for c in range(n) if r[c] != 0) for r in hnf]
    free = next(c for c in range(n) if c not in pivots)
    sol = [Fraction(0)] * n
    sol[free] = Fraction(1)
    for r, pc in reversed(list(zip(hnf, pivots))):
        s = sum((Fraction(r[c]) * sol[c] for c in range(pc + 1, n)), Fraction(0))
        sol[pc] = -s / r[pc]
    den = 1
    for x in sol:
        den = den * x.denominator // gcd(den, x.denominator)
    return primitive([int(x * den) for x in sol])


def unimodular_completion(xi: Sequence[int]) -> tuple[list[list[int]], list[list[int]]]:
    """Unimodular ``U`` with ``xi @ U = e_1`` for primitive ``xi``; returns (U, U^-1)."""
    n = len(xi)
    r = [int(x) for x in xi]
    u = [[int(i == j) for j in range(n)] for i in range(n)]

    def col_axpy(dst: int, src: int, q: int) -> None:
        for row in u:
            row[dst] -= q * row[src]

    while sum(1 for x in r if x) > 1:
        k = min((j for j in range(n) if r[j]), key=lambda j: abs(r[j]))
        for j in range(n):
            if j != k and r[j]:
                q = r[j] // r[k]
                r[j] -= q * r[k]
                col_axpy(j, k, q)
    k = next(j for j in range(n) if r[j])
    if abs(r[k]) != 1:
        raise ValueError("vector is not primitive")
    for row in u:
        row[0], row[k] = row[k], row[0]
    r[0], r[k] = r[k], r[0]
    if r[0] == -1:
        for row in u:
            row[0] = -row[0]
    inv = [[int(x) for x in row] for row in exact_inverse(u)]
    return u, inv


# ---------------------------------------------------------------- lattice types

@dataclass(frozen=True)
class LatticeBasis:
    rank: int
    basis_rows: tuple[IntVec, ...]

    @property
    def n(self) -> int:
        return len(self.basis_rows[0]) if self.basis_rows else 0

    def as_array(self) -> np.ndarray:
        return np.array(self.basis_rows, dtype=float)


@dataclass(frozen=True)
class DualBasis:
    columns: tuple[tuple[Fraction, ...], ...]  # stored row-major: columns[i][j] is entry (i, j)

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.columns], dtype=float)


def lattice_from_vectors(vectors: Iterable[Sequence[int]], n: int) -> LatticeBasis:
    hnf = hermite_normal_form(vectors, n)
    if len(hnf) < n:
        raise RankDeficient(len(hnf), n)
    return LatticeBasis(rank=n, basis_rows=tuple(tuple(r) for r in hnf))


def difference_vectors(point_sets: Iterable[Sequence[Sequence[int]]]) -> list[IntVec]:
    out = []
    for pts in point_sets:
        p0 = pts[0]
        out.extend(tuple(int(a) - int(b) for a, b in zip(p, p0)) for p in pts[1:])
    return out


def lattice_from_supports(supports) -> LatticeBasis:
    """HNF basis of the span of all ``A_i - A_i``.

    Accepts a ``SupportTuple`` or a plain sequence of integer point lists.
    """
    sets = getattr(supports, "A", supports)
    n = len(sets[0][0])
    return lattice_from_vectors(difference_vectors(sets), n)


def lattice_det(lat: LatticeBasis) -> int:
    d = 1
    for i, row in enumerate(lat.basis_rows):
        d *= row[i]
    return abs(d)


def dual_basis(lat: LatticeBasis) -> DualBasis:
    inv = exact_inverse(lat.basis_rows)
    return DualBasis(columns=tuple(tuple(r) for r in inv))


# ---------------------------------------------------------------- torus points

_SNAP = 1e-12


def _coords(lat: LatticeBasis, imag: np.ndarray) -> np.ndarray:
    return lat.as_array() @ imag / (2 * np.pi)


def canonicalize_point(z, lat: LatticeBasis, dual: DualBasis | None = None) -> np.ndarray:
    """Canonical representative of ``z`` modulo ``2*pi*i`` times the dual lattice.

    Real part is untouched.  The imaginary part is written in dual-basis
    coordinates, each reduced into ``[0, 1)``.
    """
    z = np.asarray(z, dtype=complex)
    dual = dual or dual_basis(lat)
    c = _coords(lat, z.imag)
    c = c - np.floor(c)
    c[c > 1 - _SNAP] = 0.0
    return z.real + 1j * (2 * np.pi * dual.as_array() @ c)


def torus_difference(z, w, lat: LatticeBasis, dual: DualBasis | None = None) -> np.ndarray:
    """``z - w`` with imaginary dual coordinates centred into ``[-1/2, 1/2)``."""
    d = np.asarray(z, dtype=complex) - np.asarray(w, dtype=complex)
    dual = dual or dual_basis(lat)
    c = _coords(lat, d.imag)
    c = c - np.floor(c + 0.5)
    return d.real + 1j * (2 * np.pi * dual.as_array() @ c)


def torus_distance(z, w, lat: LatticeBasis, dual: DualBasis | None = None, gram: np.ndarray | None = None) -> float:
    """Distance on the quotient; Euclidean by default or in the metric ``gram``."""
    d = torus_difference(z, w, lat, dual)
    if gram is None:
        return float(np.linalg.norm(d))
    return float(np.sqrt(max(np.real(np.conj(d) @ gram @ d), 0.0)))
