"""Exponential sums over weighted, centred integer supports.

A system is a tuple of coefficient vectors ``f_i``; equation ``i`` evaluates to
``sum_a f_ia rho_ia exp(a . z)`` with ``a`` running over the *centred*
support (raw points minus the rho^2-weighted barycentre).  All evaluations
return the ``exp(-ell_i(z))``-scaled representative, which never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ZeroEquation
from .lattice import DualBasis, LatticeBasis, canonicalize_point, dual_basis, lattice_from_supports
from .polytope import hull_vertices


def _pinv_psd(c: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    w, v = np.linalg.eigh(c)
    cut = rtol * max(float(w.max()), 1e-300)
    winv = np.where(w > cut, 1.0 / np.where(w > cut, w, 1.0), 0.0)
    return (v * winv) @ v.T


class SupportTuple:
    """Integer supports ``A_1..A_n`` with positive weights and exact centres."""

    def __init__(self, A: Sequence[Sequence[Sequence[int]]], rho: Sequence[Sequence[float]] | None = None):
        sets = tuple(tuple(tuple(int(c) for c in p) for p in s) for s in A)
        if not sets:
            raise ValueError("empty support tuple")
        n = len(sets[0][0])
        if len(sets) != n:
            raise ValueError(f"{len(sets)} supports given for dimension {n}")
        for i, s in enumerate(sets):
            if len(s) < 2:
                raise ValueError(f"support {i} has fewer than 2 points")
            if any(len(p) != n for p in s):
                raise ValueError(f"support {i} has points of the wrong dimension")
            if len(set(s)) != len(s):
                raise ValueError(f"support {i} has repeated points")
        if rho is None:
            rho = [[1.0] * len(s) for s in sets]
        weights = tuple(np.asarray(r, dtype=float) for r in rho)
        for i, (s, r) in enumerate(zip(sets, weights)):
            if r.shape != (len(s),) or not np.all(r > 0) or not np.all(np.isfinite(r)):
                raise ValueError(f"weights of support {i} must be {len(s)} positive reals")
        self.n = n
        self.A = sets
        self.rho = weights
        self.S_i = tuple(len(s) for s in sets)
        self.S = sum(self.S_i)
        centers = []
        for s, r in zip(sets, weights):
            w2 = [Fraction(float(x)) ** 2 for x in r]
            tot = sum(w2)
            centers.append(tuple(sum(w * p[k] for w, p in zip(w2, s)) / tot for k in range(n)))
        self.center = tuple(centers)
        self.points = tuple(
            np.array([[float(Fraction(p[k]) - c[k]) for k in range(n)] for p in s]) for s, c in zip(sets, centers)
        )

    def __repr__(self) -> str:
        return f"SupportTuple(n={self.n}, S_i={self.S_i})"

    # exact/combinatorial pieces
    @cached_property
    def lattice(self) -> LatticeBasis:
        return lattice_from_supports(self.A)

    @cached_property
    def dual(self) -> DualBasis:
        return dual_basis(self.lattice)

    @cached_property
    def vertex_mask(self) -> tuple[np.ndarray, ...]:
        out = []
        for s in self.A:
            vs = set(hull_vertices(s))
            out.append(np.array([p in vs for p in s]))
        return tuple(out)

    # quantities at the origin
    @cached_property
    def rho_norm(self) -> np.ndarray:
        return np.array([np.linalg.norm(r) for r in self.rho])

    @cached_property
    def gram0_parts(self) -> tuple[np.ndarray, ...]:
        return tuple(_covariance(a, r.astype(complex), np.zeros(self.n)) for a, r in zip(self.points, self.rho))

    @cached_property
    def gram0(self) -> np.ndarray:
        return sum(self.gram0_parts)

    @cached_property
    def gram0_factor(self) -> np.ndarray:
        """Upper factor ``R`` with ``R^T R = G(0)``."""
        return np.linalg.cholesky(self.gram0).T

    @cached_property
    def nu_i(self) -> np.ndarray:
        return np.array([_dual_radius(a, c, np.zeros(self.n)) for a, c in zip(self.points, self.gram0_parts)])

    @cached_property
    def nu(self) -> float:
        return float(self.nu_i.max())

    @cached_property
    def deltas0(self) -> tuple[float, ...]:
        return tuple(float(np.linalg.norm(a, axis=1).max()) for a in self.points)

    def canonical(self, z) -> np.ndarray:
        return canonicalize_point(z, self.lattice, self.dual)

    def to_json(self) -> dict:
        return {"n": self.n, "supports": [[list(p) for p in s] for s in self.A], "weights": [r.tolist() for r in self.rho]}


def _covariance(points: np.ndarray, v: np.ndarray, m: np.ndarray) -> np.ndarray:
    w = np.abs(v) ** 2
    w = w / w.sum()
    d = points - m
    return (d * w[:, None]).T @ d


def _dual_radius(points: np.ndarray, cov: np.ndarray, m: np.ndarray) -> float:
    d = points - m
    pinv = _pinv_psd(cov)
    return float(np.sqrt(np.max(np.einsum("ij,jk,ik->i", d, pinv, d))))


@dataclass(frozen=True, eq=False)
class ExpSumSystem:
    """Coefficients ``f_i`` (times ``exp(log_scale_i)``) over a SupportTuple."""

    supports: SupportTuple
    coeffs: tuple[np.ndarray, ...]
    log_scale: np.ndarray

    def __init__(self, supports: SupportTuple, coeffs, log_scale=None):
        cs = tuple(np.asarray(c, dtype=complex).copy() for c in coeffs)
        if len(cs) != supports.n or any(c.shape != (s,) for c, s in zip(cs, supports.S_i)):
            raise ValueError("coefficient shapes do not match the supports")
        ls = np.zeros(supports.n) if log_scale is None else np.asarray(log_scale, dtype=float).copy()
        object.__setattr__(self, "supports", supports)
        object.__setattr__(self, "coeffs", cs)
        object.__setattr__(self, "log_scale", ls)

    @property
    def n(self) -> int:
        return self.supports.n

    def norms(self) -> np.ndarray:
        """True norms ``|f_i|`` including the stored scale."""
        return np.array([np.linalg.norm(c) for c in self.coeffs]) * np.exp(self.log_scale)

    def true_coeffs(self) -> tuple[np.ndarray, ...]:
        return tuple(c * math.exp(s) for c, s in zip(self.coeffs, self.log_scale))

    def normalized(self) -> "ExpSumSystem":
        """Same projective system with ``|f_i| = sqrt(S_i)`` and zero scale."""
        out = []
        for i, c in enumerate(self.coeffs):
            nrm = np.linalg.norm(c)
            if nrm == 0:
                raise ZeroEquation(i)
            out.append(c * (math.sqrt(self.supports.S_i[i]) / nrm))
        return ExpSumSystem(self.supports, out)

    def with_coeffs(self, coeffs) -> "ExpSumSystem":
        return ExpSumSystem(self.supports, coeffs)

    def __add__(self, other: "ExpSumSystem") -> "ExpSumSystem":
        a, b = self.true_coeffs(), other.true_coeffs()
        return ExpSumSystem(self.supports, [x + y for x, y in zip(a, b)])

    def scale(self, t: float) -> "ExpSumSystem":
        return ExpSumSystem(self.supports, [c * t for c in self.coeffs], self.log_scale)


# ---------------------------------------------------------------- evaluation

def veronese(supports: SupportTuple, i: int, z) -> tuple[np.ndarray, np.ndarray, float]:
    """Scaled Veronese vector, its derivative, and ``ell_i(z) = max_a a . Re z``."""
    a = supports.points[i]
    z = np.asarray(z, dtype=complex)
    expo = a @ z
    ell = float(expo.real.max())
    v = supports.rho[i] * np.exp(expo - ell)
    return v, v[:, None] * a, ell


def evaluate_with_scale(system: ExpSumSystem, z) -> tuple[np.ndarray, np.ndarray]:
    """(scaled values, log scales): the true value is ``values * exp(log_scales)``."""
    vals, scales = [], []
    for i, c in enumerate(system.coeffs):
        v, _, ell = veronese(system.supports, i, z)
        vals.append(c @ v)
        scales.append(ell + system.log_scale[i])
    return np.array(vals), np.array(scales)


def evaluate(system: ExpSumSystem, z) -> np.ndarray:
    return evaluate_with_scale(system, z)[0]


def residual(system: ExpSumSystem, z) -> float:
    """Scale-free residual: ``max_i |f_i . V_i(z)| / (|f_i| |V_i(z)|)``."""
    out = 0.0
    for i, c in enumerate(system.coeffs):
        v, _, _ = veronese(system.supports, i, z)
        out = max(out, abs(c @ v) / (np.linalg.norm(c) * np.linalg.norm(v)))
    return float(out)


def momentum(supports: SupportTuple, i: int, z) -> np.ndarray:
    v, _, _ = veronese(supports, i, z)
    w = np.abs(v) ** 2
    return (w / w.sum()) @ supports.points[i]


def gram_part(supports: SupportTuple, i: int, z) -> np.ndarray:
    v, _, _ = veronese(supports, i, z)
    return _covariance(supports.points[i], v, momentum(supports, i, z))


def gram(supports: SupportTuple, z) -> np.ndarray:
    return sum(gram_part(supports, i, z) for i in range(supports.n))


def toric_norm(supports: SupportTuple, z, u) -> tuple[list[float], float]:
    u = np.asarray(u, dtype=complex)
    per = [float(np.sqrt(max(np.real(np.conj(u) @ gram_part(supports, i, z) @ u), 0.0))) for i in range(supports.n)]
    return per, float(np.sqrt(sum(p * p for p in per)))


def norm0(supports: SupportTuple, u) -> float:
    """``|u|_0`` via the cached Gram matrix at the origin."""
    u = np.asarray(u, dtype=complex)
    return float(np.linalg.norm(supports.gram0_factor @ u))


def radius_delta(supports: SupportTuple, i: int, z) -> float:
    m = momentum(supports, i, z)
    return float(np.linalg.norm(supports.points[i] - m, axis=1).max())


def distortion_nu(supports: SupportTuple, z) -> float:
    """``max_i nu_i(z)`` using the pseudo-inverse of each equation's covariance."""
    out = 0.0
    for i in range(supports.n):
        m = momentum(supports, i, z)
        out = max(out, _dual_radius(supports.points[i], gram_part(supports, i, z), m))
    return out


def distortion_nu0(supports: SupportTuple) -> float:
    return supports.nu


def kappa_rho(supports: SupportTuple, i: int) -> float:
    r = supports.rho[i]
    return float(np.linalg.norm(r) / r[supports.vertex_mask[i]].min())


def kappa_f(system: ExpSumSystem) -> float:
    out = 0.0
    for c in system.coeffs:
        mags = np.abs(c)
        if np.any(mags == 0):
            return math.inf
        out = max(out, float(np.linalg.norm(c) / mags.min()))
    return out


def renormalize(system: ExpSumSystem, u) -> ExpSumSystem:
    """Coefficientwise ``f_ia exp(a . u)``, with ``exp(ell_i(u))`` moved into log_scale."""
    u = np.asarray(u, dtype=complex)
    coeffs, scales = [], []
    for i, c in enumerate(system.coeffs):
        expo = system.supports.points[i] @ u
        ell = float(expo.real.max())
        coeffs.append(c * np.exp(expo - ell))
        scales.append(system.log_scale[i] + ell)
    return ExpSumSystem(system.supports, coeffs, scales)


def _sine(f: np.ndarray, g: np.ndarray) -> float:
    nf, ng = np.linalg.norm(f), np.linalg.norm(g)
    fu, gu = f / nf, g / ng
    resid = fu - (np.vdot(gu, fu)) * gu
    return float(min(np.linalg.norm(resid), 1.0))


def multiproj_distance(f: ExpSumSystem | Sequence[np.ndarray], g: ExpSumSystem | Sequence[np.ndarray]) -> float:
    fc = f.coeffs if isinstance(f, ExpSumSystem) else f
    gc = g.coeffs if isinstance(g, ExpSumSystem) else g
    tot = 0.0
    for i, (a, b) in enumerate(zip(fc, gc)):
        if not np.any(a):
            raise ZeroEquation(i)
        if not np.any(b):
            raise ZeroEquation(i)
        tot += _sine(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)) ** 2
    return math.sqrt(tot)
