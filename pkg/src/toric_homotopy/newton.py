"""Condition numbers, renormalised Newton steps and alpha-certificates.

Every quantity that the tracker needs is computed from the same local data
at a point ``x``: the value ``F`` and Jacobian ``J`` of the scaled
exponential sum and the norms of the renormalised coefficient vectors.  The
batched kernel ``local_invariants`` evaluates many coefficient vectors at a
single point, which is what a step search needs.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import NoConvergence, OutOfRange, SingularJacobian
from .expsum import ExpSumSystem, SupportTuple, gram, momentum, norm0, renormalize, veronese


@dataclass(frozen=True)
class SmaleConstants:
    alpha0: float = (13 - 3 * math.sqrt(17)) / 4
    alpha_star: float = 0.074609958
    alpha_starstar: float = 0.096917682
    delta_star: float = 0.085180825
    u_star: float = 0.129283177
    u_starstar: float = 0.007556641
    u_starstarstar: float = 0.059668617
    theta0: float = 13.977369
    k1: float = 6.988684
    k2: float = 2.901827
    k3: float = 0.903836


CONSTANTS = SmaleConstants()
ALPHA_STAR = CONSTANTS.alpha_star


@dataclass(frozen=True)
class Certificate:
    beta: float
    mu: float
    nu: float
    alpha_hat: float
    passed: bool
    target_alpha: float

    @classmethod
    def build(cls, beta: float, mu: float, nu: float, target_alpha: float) -> "Certificate":
        a = 0.5 * beta * mu * nu
        if not math.isfinite(a):
            a = math.inf
        return cls(float(beta), float(mu), float(nu), float(a), bool(a <= target_alpha), float(target_alpha))

    def to_json(self) -> dict:
        return {k: (None if isinstance(v, float) and math.isinf(v) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_json(cls, d: dict) -> "Certificate":
        g = lambda k: math.inf if d.get(k) is None else float(d[k])  # noqa: E731
        return cls(g("beta"), g("mu"), g("nu"), g("alpha_hat"), bool(d["passed"]), float(d["target_alpha"]))


# ---------------------------------------------------------------- batched kernel

@dataclass
class LocalBatch:
    """Local invariants of a batch of systems at one point (renormalised at x)."""

    delta: np.ndarray  # (K, n) Newton displacement
    beta: np.ndarray  # (K,)
    mu: np.ndarray  # (K,)

    def alpha(self, nu: float) -> np.ndarray:
        return 0.5 * self.beta * self.mu * nu


def exp_data(supports: SupportTuple, x) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Per equation: (centred points, scaled exponentials, weighted scaled exponentials).

    ``x`` may be a single point ``(n,)`` or a batch ``(K, n)``.
    """
    x = np.asarray(x, dtype=complex)
    out = []
    for i in range(supports.n):
        a = supports.points[i]
        expo = x @ a.T
        ell = expo.real.max(axis=-1, keepdims=True)
        e = np.exp(expo - ell)
        out.append((a, e, supports.rho[i] * e))
    return out


def local_invariants(supports: SupportTuple, coeff_batch: Sequence[np.ndarray], x, data=None) -> LocalBatch:
    """Newton displacement, beta and mu of ``q . R(x)`` at the origin, for a batch of ``q``.

    ``coeff_batch[i]`` has shape ``(K, S_i)``; ``x`` is one point or one point
    per batch entry.  Singular Jacobians yield ``inf`` rather than errors.
    """
    n = supports.n
    data = data if data is not None else exp_data(supports, x)
    k = coeff_batch[0].shape[0]
    F = np.empty((k, n), dtype=complex)
    J = np.empty((k, n, n), dtype=complex)
    pn = np.empty((k, n))
    for i, (a, e, re) in enumerate(data):
        c = coeff_batch[i]
        cre = c * re
        F[:, i] = cre.sum(axis=1)
        J[:, i, :] = cre @ a
        ce = c * e
        pn[:, i] = np.sqrt((ce.real**2 + ce.imag**2).sum(axis=1))
    return invariants_from_parts(supports, F, J, pn)


def invariants_from_parts(supports: SupportTuple, F: np.ndarray, J: np.ndarray, pn: np.ndarray) -> LocalBatch:
    """Solve step shared by all batched evaluators.

    ``F`` (K, n) values, ``J`` (K, n, n) Jacobians, ``pn`` (K, n) norms of the
    renormalised coefficient vectors, all in the same per-equation scaling.
    """
    k, n = F.shape
    rhs = np.zeros((k, n, n + 1), dtype=complex)
    rhs[:, :, 0] = F
    rhs[:, np.arange(n), 1 + np.arange(n)] = supports.rho_norm[None, :] * pn
    with np.errstate(all="ignore"):
        try:
            sol = np.linalg.solve(J, rhs)
            bad = ~np.isfinite(sol).all(axis=(1, 2))
        except np.linalg.LinAlgError:
            sol = np.zeros((k, n, n + 1), dtype=complex)
            bad = np.ones(k, dtype=bool)
            for j in range(k):
                try:
                    sol[j] = np.linalg.solve(J[j], rhs[j])
                    bad[j] = not np.isfinite(sol[j]).all()
                except np.linalg.LinAlgError:
                    pass
    if bad.any():
        sol[bad] = 0
    w = supports.gram0_factor @ sol  # (K, n, n+1)
    delta = -sol[:, :, 0]
    b = w[:, :, 0]
    beta = np.sqrt((b.real**2 + b.imag**2).sum(axis=1))
    wm = w[:, :, 1:]
    gram_w = np.conj(np.swapaxes(wm, 1, 2)) @ wm
    mu = np.sqrt(np.maximum(np.linalg.eigvalsh(gram_w)[:, -1], 0.0))
    if bad.any():
        beta[bad] = np.inf
        mu[bad] = np.inf
        delta[bad] = np.nan
    return LocalBatch(delta=delta, beta=beta, mu=mu)


def _single(system: ExpSumSystem, x) -> LocalBatch:
    return local_invariants(system.supports, [c[None, :] for c in system.coeffs], x)


# ---------------------------------------------------------------- condition matrix and mu

def jacobian_M(system: ExpSumSystem, z) -> np.ndarray:
    """Row ``i``: ``f_i (DV_i - V_i m_i(z)) / |V_i(z)|`` with the true coefficients."""
    sup = system.supports
    rows = []
    for i, c in enumerate(system.true_coeffs()):
        v, dv, _ = veronese(sup, i, z)
        m = momentum(sup, i, z)
        rows.append(c @ (dv - np.outer(v, m)) / np.linalg.norm(v))
    return np.array(rows)


def mu(system: ExpSumSystem, z) -> float:
    """Condition number at the pair ``(f, z)`` (not renormalised)."""
    m = jacobian_M(system, z)
    try:
        minv = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        return math.inf
    g = gram(system.supports, z)
    w, v = np.linalg.eigh(g)
    root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    val = float(np.linalg.norm(root @ minv @ np.diag(system.norms()), 2))
    return val if math.isfinite(val) else math.inf


def mu_renormalized(system: ExpSumSystem, x) -> float:
    """``mu(f . R(x), 0)``, the convention used by certificates."""
    return float(_single(system, x).mu[0])


def newton_step(system: ExpSumSystem, x, canonical: bool = True) -> np.ndarray:
    loc = _single(system, x)
    if not np.isfinite(loc.beta[0]):
        raise SingularJacobian("Jacobian is singular at the current point", x=np.asarray(x).tolist())
    out = np.asarray(x, dtype=complex) + loc.delta[0]
    return system.supports.canonical(out) if canonical else out


def beta(system: ExpSumSystem, x) -> float:
    loc = _single(system, x)
    if not np.isfinite(loc.beta[0]):
        raise SingularJacobian("Jacobian is singular at the current point")
    return float(loc.beta[0])


def gamma_bound(system: ExpSumSystem, x) -> float:
    return 0.5 * mu_renormalized(system, x) * system.supports.nu


def certify(system: ExpSumSystem, x, target_alpha: float = ALPHA_STAR) -> Certificate:
    if target_alpha > CONSTANTS.alpha0:
        raise OutOfRange(f"target alpha {target_alpha} exceeds alpha0")
    loc = _single(system, x)
    return Certificate.build(loc.beta[0], loc.mu[0], system.supports.nu, target_alpha)


def refine(system: ExpSumSystem, x, tol: float = 1e-13, max_iter: int = 60) -> np.ndarray:
    """Newton iteration until the displacement is below ``tol`` in the origin metric."""
    x = np.asarray(x, dtype=complex)
    for _ in range(max_iter):
        loc = _single(system, x)
        if not np.isfinite(loc.beta[0]):
            raise SingularJacobian("Jacobian is singular during refinement")
        x = x + loc.delta[0]
        if loc.beta[0] <= tol:
            return system.supports.canonical(x)
    raise NoConvergence(f"no convergence within {max_iter} Newton steps", beta=float(loc.beta[0]))


def smale_radii(alpha: float) -> tuple[float, float]:
    if not (0 < alpha <= CONSTANTS.alpha0):
        raise OutOfRange(f"alpha {alpha} outside (0, alpha0]")
    root = math.sqrt(1 - 6 * alpha + alpha * alpha)
    return (1 + alpha - root) / (4 * alpha), (1 - 3 * alpha - root) / (4 * alpha)


def alpha_contraction(alpha: float) -> float:
    """Upper bound for the next certificate value after one Newton step."""
    psi = 1 - 4 * alpha + 2 * alpha * alpha
    return alpha * alpha * (1 - alpha) / (psi * (1 - 2 * math.sqrt(5) * alpha))


def gamma_lower_estimate(system: ExpSumSystem, x, kmax: int = 6, samples: int = 64, rng=None) -> float:
    """Lower estimate of the renormalised gamma invariant at ``x``.

    Evaluates ``|J^-1 D^k F(u,...,u)|_0 / k!`` on random unit directions for
    ``k = 2..kmax``; every term is a lower bound for the true supremum.
    """
    rng = np.random.default_rng(rng)
    sup = system.supports
    p = renormalize(system, x)
    n = sup.n
    J = np.array([(c * sup.rho[i]) @ sup.points[i] for i, c in enumerate(p.coeffs)])
    jinv = np.linalg.inv(J)
    best = 0.0
    for _ in range(samples):
        u = rng.normal(size=n) + 1j * rng.normal(size=n)
        u /= norm0(sup, u)
        for k in range(2, kmax + 1):
            dk = np.array([(c * sup.rho[i]) @ (sup.points[i] @ u) ** k for i, c in enumerate(p.coeffs)])
            val = norm0(sup, jinv @ dk) / math.factorial(k)
            best = max(best, val ** (1.0 / (k - 1)))
    return best
