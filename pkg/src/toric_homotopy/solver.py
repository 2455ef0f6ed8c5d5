"""Randomised cheater's homotopy with a doubling Newton budget.

``cheater_solve`` follows every start root ``h -> g -> f`` through a random
Gaussian ``g``; a failed attempt (budget, stall, divergence, or a collision of
end points) is discarded as a whole and retried with a fresh ``g`` and a
budget larger by ``sqrt(2)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import OracleUnavailable, ToricError, ZeroCoefficient
from .expsum import ExpSumSystem, SupportTuple, kappa_f, residual
from .lattice import torus_distance
from .newton import ALPHA_STAR, Certificate, certify, refine
from .polytope import bkk_count as _bkk_count, dr_bound, facet_gap, fan_rays, point_sets
from .tracker import LinearPath, NewtonCounter, PathTrace, TrackerConfig, h_threshold, tail_threshold, track


class SolveFailed(ToricError):
    kind = "SolveFailed"


@dataclass
class SolveConfig:
    rng_seed: int | None = None
    N0: float = 200.0
    growth: float = math.sqrt(2)
    alpha_star: float = ALPHA_STAR
    max_attempts: int = 40
    max_wall: float = math.inf
    H: float | None = None
    distinct_tol: float = 1e-6
    compute_length: bool = True

    def __post_init__(self):
        if self.growth <= 1:
            raise ValueError("growth must exceed 1")


@dataclass
class CertifiedSolutionSet:
    system: ExpSumSystem
    roots: list[tuple[np.ndarray, Certificate]]
    expected_count: int
    stats: dict = field(default_factory=dict)
    traces: list[PathTrace] = field(default_factory=list, repr=False)

    @property
    def points(self) -> list[np.ndarray]:
        return [z for z, _ in self.roots]


# ---------------------------------------------------------------- sampling and exclusion

def sample_gaussian(supports: SupportTuple, rng) -> ExpSumSystem:
    """Coefficients iid complex normal with ``E|g_ia|^2 = 1``."""
    rng = np.random.default_rng(rng)
    coeffs = [(rng.normal(size=s) + 1j * rng.normal(size=s)) / math.sqrt(2) for s in supports.S_i]
    return ExpSumSystem(supports, coeffs)


def k_constant(supports: SupportTuple) -> float:
    return 1 + math.sqrt((math.log(supports.n) + math.log(10)) / min(supports.S_i))


def exclusion_check(g: ExpSumSystem, f: ExpSumSystem, eps: float | None = None, K: float | None = None) -> dict:
    """Flags for the thin-slice set (``g_ia/f_ia`` near the negative axis) and the large-norm set."""
    sup = g.supports
    eps = math.pi / (72 * sup.S) if eps is None else eps
    K = k_constant(sup) if K is None else K
    in_lambda = False
    for i, (gi, fi) in enumerate(zip(g.coeffs, f.coeffs)):
        zero = np.nonzero(fi == 0)[0]
        if len(zero):
            raise ZeroCoefficient(i, int(zero[0]))
        if np.any(np.abs(np.angle(gi / fi)) >= math.pi - eps):
            in_lambda = True
    in_yk = bool(np.any(g.norms() >= K * np.sqrt(sup.S_i)))
    return {"in_Lambda_eps": bool(in_lambda), "in_Y_K": in_yk}


# ---------------------------------------------------------------- support invariants (cached)

def _key(supports) -> tuple:
    return tuple(tuple(s) for s in point_sets(supports))


@lru_cache(maxsize=64)
def _support_invariants(key: tuple) -> tuple[int, float, float]:
    """(BKK count, eta, d_r) of a support tuple; exact and therefore safe to memoise."""
    sets = [list(s) for s in key]
    rays = fan_rays(sets)
    _, eta = facet_gap(sets, strict=False, rays=rays)
    return _bkk_count(sets), eta, dr_bound(sets, rays)


def bkk_count(supports) -> int:
    return _support_invariants(_key(supports))[0]


# ---------------------------------------------------------------- start systems

def planted_start(supports: SupportTuple, rng, count: int | None = None, spread: float = 0.5) -> tuple[ExpSumSystem, list[np.ndarray]]:
    """A start system built around prescribed roots.

    Picks ``count`` (default: the BKK count) random points and, per equation,
    a random coefficient vector vanishing at all of them.  A generic system
    through those points has no further roots, so they form its full root
    set.  Needs ``S_i > count`` for every ``i``.
    """
    rng = np.random.default_rng(rng)
    n = supports.n
    count = bkk_count(supports) if count is None else count
    if min(supports.S_i) <= count:
        raise OracleUnavailable(f"planted start needs more than {count} monomials per equation")
    dual = supports.dual.as_array()
    pts = []
    while len(pts) < count:
        re = rng.normal(scale=spread, size=n)
        c = rng.uniform(size=n)
        z = supports.canonical(re + 1j * 2 * np.pi * dual @ c)
        if all(torus_distance(z, w, supports.lattice, supports.dual) > 0.1 for w in pts):
            pts.append(z)
    coeffs = []
    for i in range(n):
        rows = []
        for z in pts:
            a = supports.points[i]
            v = supports.rho[i] * np.exp(a @ z)
            rows.append(v / np.linalg.norm(v))
        _, s, vh = np.linalg.svd(np.array(rows))
        null = vh[len(pts):].conj().T
        w = rng.normal(size=null.shape[1]) + 1j * rng.normal(size=null.shape[1])
        coeffs.append(null @ w)
    h = ExpSumSystem(supports, coeffs).normalized()
    return h, [refine(h, z) for z in pts]


def oracle_start(supports: SupportTuple, rng) -> tuple[ExpSumSystem, list[np.ndarray]]:
    """A Gaussian start system solved by the brute-force oracles (``n <= 2``)."""
    from .oracle import oracle_roots

    if supports.n > 2:
        raise OracleUnavailable("brute-force oracles cover n <= 2 only")
    rng = np.random.default_rng(rng)
    expected = bkk_count(supports)
    for _ in range(20):
        g = sample_gaussian(supports, rng).normalized()
        try:
            roots = oracle_roots(g).roots
        except ToricError:
            continue
        if len(roots) == expected:
            return g, roots
    raise SolveFailed("could not build an oracle start system with the full root count")


def default_start(supports: SupportTuple, rng) -> tuple[ExpSumSystem, list[np.ndarray]]:
    if supports.n <= 2:
        try:
            return oracle_start(supports, rng)
        except ToricError:
            pass
    return planted_start(supports, rng)


# ---------------------------------------------------------------- helpers

def _infinity_threshold(f: ExpSumSystem, tail_T: float) -> float:
    sup = f.supports
    _, eta, dr = _support_invariants(_key(sup))
    return h_threshold(dr, sup.S, tail_T, None, math.sqrt(sup.S), n=sup.n, eta=eta, max_Si=max(sup.S_i))


def _leg_config(config: SolveConfig, target: ExpSumSystem, start: ExpSumSystem, H: float) -> TrackerConfig:
    sup = target.supports
    kf = kappa_f(target)
    factor = None
    if math.isfinite(kf):
        factor = tail_threshold(target, start, 1.0, k_constant(sup))
    return TrackerConfig(alpha_star=config.alpha_star, H=H, tail_factor=factor, compute_length=config.compute_length)


def _distinct(points: Sequence[np.ndarray], sup: SupportTuple, tol: float) -> bool:
    for a in range(len(points)):
        for b in range(a):
            if torus_distance(points[a], points[b], sup.lattice, sup.dual) <= tol:
                return False
    return True


def _finalize(f: ExpSumSystem, xs: list[np.ndarray], alpha: float) -> list[tuple[np.ndarray, Certificate]]:
    out = []
    for x in xs:
        z = refine(f, x)
        out.append((z, certify(f, z, alpha)))
    out.sort(key=lambda r: tuple(np.round(np.concatenate([r[0].real, r[0].imag]), 9)))
    return out


# ---------------------------------------------------------------- algorithms

def cheater_solve(
    f: ExpSumSystem,
    h: ExpSumSystem,
    X_h: Sequence[np.ndarray],
    config: SolveConfig | None = None,
) -> CertifiedSolutionSet:
    """Certified solution set of ``f`` from a solved start system ``(h, X_h)``."""
    config = config or SolveConfig()
    rng = np.random.default_rng(config.rng_seed)
    sup = f.supports
    f = f.normalized()
    h = h.normalized()
    expected = bkk_count(sup)
    starts = [refine(h, x) for x in X_h]
    if math.isinf(kappa_f(f)):
        raise ZeroCoefficient(-1, -1)
    t_start = time.monotonic()
    budget = float(config.N0)
    stats = {"attempts": 0, "resamples": 0, "newton_steps": 0, "budgets": [], "failures": []}
    for _ in range(config.max_attempts):
        if time.monotonic() - t_start > config.max_wall:
            break
        stats["attempts"] += 1
        stats["budgets"].append(budget)
        counter = NewtonCounter(budget=budget)
        while True:
            g = sample_gaussian(sup, rng)
            flags_f = exclusion_check(g, f)
            flags_h = exclusion_check(g, h)
            if not (flags_f["in_Lambda_eps"] or flags_f["in_Y_K"] or flags_h["in_Lambda_eps"]):
                break
            stats["resamples"] += 1
            counter.tick()
        mu_est = max(certify(h, x).mu for x in starts)
        H = config.H if config.H is not None else _infinity_threshold(f, tail_threshold(f, g, mu_est))
        traces: list[PathTrace] = []
        failure = None
        mid = []
        leg1 = LinearPath(h, g)
        cfg1 = _leg_config(config, g, h, H)
        for x in starts:
            tr = track(leg1, x, cfg1, counter)
            traces.append(tr)
            if not tr.success:
                failure = tr.outcome
                break
            mid.append(tr.end_point)
        if failure is None and not _distinct(mid, sup, config.distinct_tol):
            failure = "Collision"
        ends = []
        if failure is None:
            leg2 = LinearPath(g, f)
            cfg2 = _leg_config(config, f, g, H)
            for x in mid:
                tr = track(leg2, x, cfg2, counter)
                traces.append(tr)
                if not tr.success:
                    failure = tr.outcome
                    break
                ends.append(tr.end_point)
        stats["newton_steps"] += counter.used
        if failure is None:
            try:
                roots = _finalize(f, ends, config.alpha_star)
            except ToricError as exc:
                failure = exc.kind
            else:
                pts = [z for z, _ in roots]
                if len(pts) != expected or not _distinct(pts, sup, config.distinct_tol):
                    failure = "Collision"
                elif not all(c.passed for _, c in roots):
                    failure = "Uncertified"
        if failure is None:
            stats["L_hat"] = [tr.L_hat for tr in traces]
            stats["max_residual"] = max(residual(f, z) for z, _ in roots)
            stats["wall_time"] = time.monotonic() - t_start
            return CertifiedSolutionSet(f, roots, expected, stats, traces)
        stats["failures"].append(failure)
        budget *= config.growth
    raise SolveFailed("no attempt succeeded", **{k: v for k, v in stats.items() if k != "budgets"})


def solve_small(f: ExpSumSystem, config: SolveConfig | None = None) -> CertifiedSolutionSet:
    """Oracle-started solve for ``n <= 2``."""
    if f.supports.n > 2:
        raise OracleUnavailable("brute-force oracles cover n <= 2 only")
    config = config or SolveConfig()
    rng = np.random.default_rng(config.rng_seed)
    h, X_h = oracle_start(f.supports, rng)
    sub = SolveConfig(**{**config.__dict__, "rng_seed": int(rng.integers(2**63))})
    return cheater_solve(f, h, X_h, sub)


def solve(f: ExpSumSystem, config: SolveConfig | None = None, start: tuple[ExpSumSystem, Sequence[np.ndarray]] | None = None) -> CertifiedSolutionSet:
    """Full solve: user start if given, else oracle start (``n <= 2``) or a planted start."""
    config = config or SolveConfig()
    rng = np.random.default_rng(config.rng_seed)
    if start is None:
        start = default_start(f.supports, rng)
    sub = SolveConfig(**{**config.__dict__, "rng_seed": int(rng.integers(2**63))})
    return cheater_solve(f, start[0], start[1], sub)


def one_root_solve(
    f: ExpSumSystem,
    start: tuple[ExpSumSystem, np.ndarray] | None,
    config: SolveConfig | None = None,
    start_sampler: Callable[[np.random.Generator], tuple[ExpSumSystem, np.ndarray]] | None = None,
) -> tuple[np.ndarray, Certificate, dict]:
    """Track one certified start root of ``g`` to a certified root of ``f``.

    A budget failure is retried with a budget larger by ``growth``; other
    failures draw a new start from ``start_sampler`` when one is supplied.
    """
    config = config or SolveConfig()
    rng = np.random.default_rng(config.rng_seed)
    f = f.normalized()
    if start is None:
        if start_sampler is None:
            raise ValueError("need a start pair or a start sampler")
        start = start_sampler(rng)
    budget = float(config.N0)
    stats = {"attempts": 0, "budgets": [], "newton_steps": 0, "failures": []}
    for _ in range(config.max_attempts):
        g, x0 = start
        g = g.normalized()
        stats["attempts"] += 1
        stats["budgets"].append(budget)
        counter = NewtonCounter(budget=budget)
        path = LinearPath(g, f)
        cfg = _leg_config(config, f, g, config.H if config.H is not None else math.inf)
        tr = track(path, refine(g, x0), cfg, counter)
        stats["newton_steps"] += counter.used
        if tr.success:
            z = refine(f, tr.end_point)
            return z, certify(f, z, config.alpha_star), stats
        stats["failures"].append(tr.outcome)
        budget *= config.growth
        if tr.outcome != "BudgetExceeded":
            if start_sampler is None:
                break
            start = start_sampler(rng)
    raise SolveFailed("one-root homotopy did not succeed", attempts=stats["attempts"], failures=stats["failures"])
