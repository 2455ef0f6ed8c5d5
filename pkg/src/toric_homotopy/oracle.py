"""Brute-force root oracles for n <= 2 and Monte Carlo estimators built on them.

The oracles do not share code with the homotopy: univariate systems go
through a companion matrix in ``w = exp(d x)``, bivariate ones through a
numerically interpolated Sylvester resultant.  Both finish with Newton
polishing and merge roots that coincide on the quotient torus.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import LeadingZero, OracleUnavailable, ResultantDegenerate, ToricError, ZeroEquation
from .expsum import ExpSumSystem, SupportTuple, residual
from .lattice import lattice_det, torus_distance
from .newton import mu_renormalized, jacobian_M, refine
from .polytope import mixed_area

MERGE_TOL = 1e-9
ACCEPT_RESIDUAL = 1e-10


@dataclass
class OracleRootSet:
    roots: list[np.ndarray]
    method: str
    residuals: list[float]
    multiplicities: list[int] = field(default_factory=list)
    dropped_terms: int = 0

    def to_json(self) -> dict:
        return {
            "version": "1",
            "method": self.method,
            "roots": [{"re": z.real.tolist(), "im": z.imag.tolist()} for z in self.roots],
            "residuals": self.residuals,
            "multiplicities": self.multiplicities,
            "dropped_terms": self.dropped_terms,
        }


def _merge(system: ExpSumSystem, points: Sequence[np.ndarray]) -> tuple[list[np.ndarray], list[int]]:
    sup = system.supports
    roots: list[np.ndarray] = []
    mult: list[int] = []
    for z in points:
        for k, w in enumerate(roots):
            if torus_distance(z, w, sup.lattice, sup.dual) <= MERGE_TOL:
                mult[k] += 1
                break
        else:
            roots.append(z)
            mult.append(1)
    order = sorted(range(len(roots)), key=lambda k: tuple(np.round(np.concatenate([roots[k].real, roots[k].imag]), 9)))
    return [roots[k] for k in order], [mult[k] for k in order]


def _polish(system: ExpSumSystem, candidates: Sequence[np.ndarray]) -> list[np.ndarray]:
    out = []
    for z in candidates:
        if not np.all(np.isfinite(z)):
            continue
        try:
            z = refine(system, z)
        except ToricError:
            continue
        if residual(system, z) <= ACCEPT_RESIDUAL:
            out.append(z)
    return out


def _finish(system: ExpSumSystem, candidates, method: str, dropped: int = 0) -> OracleRootSet:
    roots, mult = _merge(system, _polish(system, candidates))
    return OracleRootSet(roots, method, [residual(system, z) for z in roots], mult, dropped)


def _trim(c: np.ndarray, rtol: float = 1e-12) -> tuple[np.ndarray, int, int]:
    """Drop negligible coefficients at both ends of an ascending coefficient vector."""
    big = np.max(np.abs(c)) if len(c) else 0.0
    keep = np.nonzero(np.abs(c) > rtol * big)[0]
    if big == 0 or not len(keep):
        return c[:0], len(c), 0
    lo, hi = keep[0], keep[-1]
    return c[lo : hi + 1], lo, len(c) - 1 - hi


# ---------------------------------------------------------------- n = 1

def univariate_roots(system: ExpSumSystem) -> OracleRootSet:
    """All roots of a univariate exponential sum on the quotient torus.

    With ``d`` the lattice determinant, the sum is ``exp(a_min x)`` times a
    polynomial in ``w = exp(d x)``; its nonzero roots give ``x = log(w)/d``.
    Vanishing extreme coefficients are dropped and counted in
    ``dropped_terms``.
    """
    sup = system.supports
    if sup.n != 1:
        raise OracleUnavailable("univariate oracle needs n = 1")
    d = lattice_det(sup.lattice)
    raw = np.array([p[0] for p in sup.A[0]])
    lo = raw.min()
    deg = (raw.max() - lo) // d
    coef = np.zeros(deg + 1, dtype=complex)
    c = system.true_coeffs()[0] * sup.rho[0]
    for a, v in zip(raw, c):
        coef[(a - lo) // d] += v
    trimmed, low, high = _trim(coef)
    if len(trimmed) == 0:
        raise ZeroEquation(0)
    if len(trimmed) == 1:
        if low + high:
            raise LeadingZero("only one nonzero term remains; no roots", dropped=low + high)
        return OracleRootSet([], "companion", [], [], 0)
    w = np.roots(trimmed[::-1])
    w = w[w != 0]
    cands = [np.array([np.log(complex(v)) / d]) for v in w]
    return _finish(system, cands, "companion", low + high)


# ---------------------------------------------------------------- n = 2

def _poly2(system: ExpSumSystem, i: int) -> np.ndarray:
    """Dense coefficient grid ``C[j, k]`` of ``sum C[j,k] X^j Y^k`` with nonnegative shifted exponents."""
    sup = system.supports
    pts = np.array(sup.A[i])
    shift = pts - pts.min(axis=0)
    grid = np.zeros(tuple(shift.max(axis=0) + 1), dtype=complex)
    for (j, k), v in zip(shift, system.true_coeffs()[i] * sup.rho[i]):
        grid[j, k] += v
    return grid


def _sylvester_det(p: np.ndarray, q: np.ndarray) -> complex:
    """Resultant of two polynomials in Y given by ascending coefficient vectors."""
    m, l = len(p) - 1, len(q) - 1
    if m == 0 and l == 0:
        return complex(1.0)
    size = m + l
    S = np.zeros((size, size), dtype=complex)
    for r in range(l):
        S[r, r : r + m + 1] = p[::-1]
    for r in range(m):
        S[l + r, r : r + l + 1] = q[::-1]
    return complex(np.linalg.det(S))


def resultant_coefficients(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Ascending coefficients in X of ``Res_Y(P, Q)``, by FFT interpolation on the unit circle."""
    m, l = P.shape[1] - 1, Q.shape[1] - 1
    D = m * (Q.shape[0] - 1) + l * (P.shape[0] - 1)
    N = D + 1
    xs = np.exp(2j * np.pi * np.arange(N) / N)
    vals = np.empty(N, dtype=complex)
    for k, X in enumerate(xs):
        pX = np.polynomial.polynomial.polyval(X, P)  # coefficient vector in Y
        qX = np.polynomial.polynomial.polyval(X, Q)
        vals[k] = _sylvester_det(pX, qX)
    return np.fft.fft(vals) / N


def bivariate_roots(system: ExpSumSystem) -> OracleRootSet:
    """All roots of a bivariate exponential sum on the quotient torus, via a resultant in ``Y = exp(x_2)``."""
    sup = system.supports
    if sup.n != 2:
        raise OracleUnavailable("bivariate oracle needs n = 2")
    P, Q = _poly2(system, 0), _poly2(system, 1)
    res = resultant_coefficients(P, Q)
    trimmed, _, _ = _trim(res, 1e-11)
    if len(trimmed) == 0:
        raise ResultantDegenerate("resultant vanishes identically")
    xs = np.roots(trimmed[::-1]) if len(trimmed) > 1 else np.array([])
    cands = []
    for X in xs:
        if X == 0 or not np.isfinite(X):
            continue
        pY = np.polynomial.polynomial.polyval(X, P)
        qY = np.polynomial.polynomial.polyval(X, Q)
        best = None
        for poly in (pY, qY):
            t, _, _ = _trim(poly, 1e-12)
            if len(t) > 1:
                best = t
                break
        if best is None:
            continue
        for Y in np.roots(best[::-1]):
            if Y == 0 or not np.isfinite(Y):
                continue
            # every pair is polished; non-roots fail the residual test there
            cands.append(np.array([np.log(complex(X)), np.log(complex(Y))]))
    return _finish(system, cands, "resultant")


def oracle_roots(system: ExpSumSystem) -> OracleRootSet:
    n = system.supports.n
    if n == 1:
        return univariate_roots(system)
    if n == 2:
        return bivariate_roots(system)
    raise OracleUnavailable("brute-force oracles cover n <= 2 only")


# ---------------------------------------------------------------- Monte Carlo

@dataclass
class McReport:
    name: str
    mean: float
    stderr: float
    samples: int
    bound: float
    passed: bool
    values: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))
    params: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, name: str, values: np.ndarray, bound: float, params: dict | None = None) -> "McReport":
        values = np.asarray(values, dtype=float)
        n = len(values)
        mean = float(values.mean())
        se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        return cls(name, mean, se, n, float(bound), bool(mean + 3 * se <= bound), values, params or {})

    def to_json(self) -> dict:
        return {
            "version": "1",
            "name": self.name,
            "mean": self.mean,
            "stderr": self.stderr,
            "samples": self.samples,
            "bound": self.bound,
            "passed": self.passed,
            "params": self.params,
        }


MIN_SAMPLES = 1000


def _sample_streams(N: int, seed) -> list[np.random.Generator]:
    if N < MIN_SAMPLES:
        raise ValueError(f"Monte Carlo estimates need at least {MIN_SAMPLES} samples")
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(N)]


def _map(fn: Callable, items: list, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _gaussian(supports: SupportTuple, rng, sigma, f_bar) -> ExpSumSystem:
    coeffs = []
    for i, s in enumerate(supports.S_i):
        g = (rng.normal(size=s) + 1j * rng.normal(size=s)) / math.sqrt(2)
        sig = sigma[i] if isinstance(sigma, (list, tuple)) else sigma
        mean = 0 if f_bar is None else np.asarray(f_bar[i], dtype=complex)
        coeffs.append(mean + np.asarray(sig) * g)
    return ExpSumSystem(supports, coeffs)


def _in_box(z: np.ndarray, H: float) -> bool:
    return float(np.max(np.abs(z.real))) <= H


def frobenius_bound(supports: SupportTuple, H: float, min_sigma: float) -> float:
    """Analytic bound on the expected sum of squared Frobenius norms of ``M^-1`` over roots in the box."""
    det = lattice_det(supports.lattice)
    return 2 * H * math.sqrt(supports.n) / det / min_sigma**2 * math.factorial(supports.n) * mixed_area(supports)


def mc_moment_frobenius(
    supports: SupportTuple,
    sigma: float | Sequence = 1.0,
    f_bar: Sequence | None = None,
    H: float = 2.0,
    N: int = 10_000,
    seed=None,
    threads: int = 1,
) -> McReport:
    """Mean over Gaussian systems of ``sum |M(q,z)^-1|_F^2`` over roots with ``|Re z|_inf <= H``."""
    if supports.n > 2:
        raise OracleUnavailable("Monte Carlo estimators rely on the n <= 2 oracles")
    sig_arr = np.concatenate([np.broadcast_to(np.asarray(sigma[i] if isinstance(sigma, (list, tuple)) else sigma, dtype=float), (s,)) for i, s in enumerate(supports.S_i)])
    bound = frobenius_bound(supports, H, float(sig_arr.min()))

    def one(rng) -> float:
        q = _gaussian(supports, rng, sigma, f_bar)
        total = 0.0
        for z in oracle_roots(q).roots:
            if _in_box(z, H):
                minv = np.linalg.inv(jacobian_M(q, z))
                total += float(np.sum(np.abs(minv) ** 2))
        return total

    vals = _map(one, _sample_streams(N, seed), threads)
    return McReport.from_values("frobenius_moment", np.array(vals), bound, {"H": H, "N": N})


def mu_bound(supports: SupportTuple, H: float) -> float:
    """Analytic bound on the expected sum of renormalised squared condition numbers over roots in the box."""
    n = supports.n
    det = lattice_det(supports.lattice)
    inner = (4 + math.sqrt(math.log(n) / min(supports.S_i) + 2 * math.log(1.5))) ** 2
    deltas2 = sum(d * d for d in supports.deltas0)
    return (2.5 * math.e * H * math.sqrt(n) / det) * inner * max(supports.S_i) ** 2 * deltas2 * math.factorial(n) * mixed_area(supports)


def mc_moment_mu(supports: SupportTuple, H: float = 2.0, N: int = 10_000, seed=None, threads: int = 1) -> McReport:
    """Mean over Gaussian systems of ``sum mu(g . R(z))^2`` over roots with ``|Re z|_inf <= H``."""
    if supports.n > 2:
        raise OracleUnavailable("Monte Carlo estimators rely on the n <= 2 oracles")
    bound = mu_bound(supports, H)

    def one(rng) -> tuple[float, int]:
        g = _gaussian(supports, rng, 1.0, None)
        total, count = 0.0, 0
        for z in oracle_roots(g).roots:
            if _in_box(z, H):
                total += mu_renormalized(g, z) ** 2
                count += 1
        return total, count

    out = _map(one, _sample_streams(N, seed), threads)
    rep = McReport.from_values("mu_moment", np.array([v for v, _ in out]), bound, {"H": H, "N": N})
    rep.params["roots_in_box"] = int(sum(c for _, c in out))
    return rep


def mc_exclusion(
    supports: SupportTuple,
    f: ExpSumSystem,
    N: int = 10_000,
    seed=None,
    eps: float | None = None,
    K: float | None = None,
) -> tuple[McReport, McReport]:
    """Empirical frequencies of the thin-slice set and the large-norm set against their bounds."""
    from .solver import exclusion_check, k_constant

    eps = math.pi / (72 * supports.S) if eps is None else eps
    K = k_constant(supports) if K is None else K
    lam, yk = [], []
    for rng in _sample_streams(N, seed):
        g = _gaussian(supports, rng, 1.0, None)
        flags = exclusion_check(g, f, eps, K)
        lam.append(float(flags["in_Lambda_eps"]))
        yk.append(float(flags["in_Y_K"]))
    params = {"eps": eps, "K": K, "N": N}
    return (
        McReport.from_values("Lambda_eps", np.array(lam), supports.S * eps / math.pi, params),
        McReport.from_values("Y_K", np.array(yk), 0.1, params),
    )
