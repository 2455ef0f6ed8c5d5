"""Corrector-only certified path tracking.

Starting from a certified pair ``(q_{t_0}, x_0)`` the tracker alternates one
Newton step at the current parameter with a search for the next parameter:
the largest ``t`` for which the new point still certifies for ``q_t`` at the
target alpha.  Linear segments ``q_t = g + t f`` on ``[t_0, inf]`` are handled
in the projective coordinate ``s = t/(1+t)`` so the endpoint ``t = inf`` is
simply ``s = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import nnls

from ._kernels import POLISH_BETA
from .errors import DeltaTooLarge, InfiniteKappa, ToricError
from .expsum import ExpSumSystem, SupportTuple, kappa_f, kappa_rho, veronese
from .newton import ALPHA_STAR, CONSTANTS, Certificate, LocalBatch, exp_data, invariants_from_parts, local_invariants, refine
from .polytope import fan_rays, minkowski_vertices, point_sets, support_value, facet_gap


class UncertifiedStart(ToricError):
    kind = "UncertifiedStart"


# ---------------------------------------------------------------- paths

class LinearPath:
    """``q_t = g + t f`` for ``t`` in ``[t0, t1]`` (``t1`` may be ``inf``).

    Internally parameterised by ``s = t/(1+t)``, under which the path is the
    segment ``(1-s) g + s f`` up to a positive scalar.  Both endpoints are
    divided per equation by ``|f_i|``, which does not change the path.
    """

    def __init__(self, start: ExpSumSystem, target: ExpSumSystem, t0: float = 0.0, t1: float = math.inf):
        if start.supports is not target.supports:
            raise ValueError("start and target must share one SupportTuple")
        self.supports = start.supports
        self.start, self.target = start, target
        g, f = [], []
        for i in range(self.supports.n):
            m = max(start.log_scale[i], target.log_scale[i])
            gi = start.coeffs[i] * math.exp(start.log_scale[i] - m)
            fi = target.coeffs[i] * math.exp(target.log_scale[i] - m)
            nf = np.linalg.norm(fi)
            g.append(gi / nf)
            f.append(fi / nf)
        self.g, self.f = g, f
        self.u0, self.u1 = self.s_of(t0), self.s_of(t1)
        self._packed = None

    def _pack(self):
        if self._packed is None:
            sup = self.supports
            n, smax = sup.n, max(sup.S_i)
            pts = np.zeros((n, smax, n))
            rho = np.zeros((n, smax))
            gp = np.zeros((n, smax), complex)
            fp = np.zeros((n, smax), complex)
            for i in range(n):
                k = sup.S_i[i]
                pts[i, :k] = sup.points[i]
                pts[i, k:] = sup.points[i][0]
                rho[i, :k] = sup.rho[i]
                gp[i, :k], fp[i, :k] = self.g[i], self.f[i]
            npts = np.array(sup.S_i, dtype=np.int64)
            R = np.ascontiguousarray(np.real_if_close(sup.gram0_factor), dtype=float)
            self._packed = (pts, npts, gp, fp, rho, R, np.asarray(sup.rho_norm, dtype=float))
        return self._packed

    def fast_advance(self, x, u: float, delta, h_prev, chunk: int, ticks_left: float, config, tail_factor: float):
        """Batch of ordinary tracking iterations in compiled code (see ``_kernels.advance``)."""
        from . import _kernels

        pts, npts, gp, fp, rho, R, rn = self._pack()
        return _kernels.advance(
            np.asarray(x, dtype=complex), float(u), np.asarray(delta, dtype=complex),
            -1.0 if h_prev is None else float(h_prev), float(self.u1), max(int(chunk), 0),
            float(ticks_left), float(config.H), float(tail_factor), int(config.probes),
            float(config.step_growth), float(config.bisection_tol), float(config.alpha_star),
            float(self.supports.nu), pts, npts, gp, fp, rho, R, rn,
        )

    def fast_search(self, x_next, u_j: float, config, h0: float | None):
        """Compiled equivalent of the generic step search; same return shape as ``_search``."""
        from . import _kernels

        pts, npts, gp, fp, rho, R, rn = self._pack()
        data = _kernels.probe_data(np.asarray(x_next, dtype=complex), pts, npts, gp, fp, rho)
        u, found, delta, b, m = _kernels.search(
            float(u_j), float(self.u1), -1.0 if h0 is None else float(h0), int(config.probes),
            float(config.step_growth), float(config.bisection_tol), float(config.alpha_star),
            float(self.supports.nu), *data, R, rn,
        )
        return float(u), ((float(u), delta, float(b), float(m)) if found else None)

    @staticmethod
    def s_of(t: float) -> float:
        return 1.0 if math.isinf(t) else t / (1.0 + t)

    @staticmethod
    def t_of(u: float) -> float:
        return math.inf if u >= 1.0 else u / (1.0 - u)

    def coeffs(self, u: np.ndarray) -> list[np.ndarray]:
        u = np.atleast_1d(np.asarray(u, dtype=float))[:, None]
        return [(1 - u) * g + u * f for g, f in zip(self.g, self.f)]

    def dcoeffs(self, u: np.ndarray) -> list[np.ndarray]:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return [np.broadcast_to(f - g, (len(u), len(g))) for g, f in zip(self.g, self.f)]

    def system_at(self, u: float) -> ExpSumSystem:
        return ExpSumSystem(self.supports, [c[0] for c in self.coeffs([u])])

    def prober(self, x) -> Callable[[np.ndarray], LocalBatch]:
        """Fast evaluator of local invariants at fixed ``x`` for many parameters.

        Values, Jacobians and coefficient norms are affine (respectively
        quadratic under the square root) in ``s``, so the support-sized work
        is done once per point.
        """
        sup = self.supports
        data = exp_data(sup, x)
        n = sup.n
        Fg, Ff = np.empty(n, complex), np.empty(n, complex)
        Jg, Jf = np.empty((n, n), complex), np.empty((n, n), complex)
        gg, ff, gf = np.empty(n), np.empty(n), np.empty(n)
        for i, (a, e, re) in enumerate(data):
            g, f = self.g[i], self.f[i]
            Fg[i], Ff[i] = g @ re, f @ re
            Jg[i], Jf[i] = (g * re) @ a, (f * re) @ a
            ge, fe = g * e, f * e
            gg[i] = np.vdot(ge, ge).real
            ff[i] = np.vdot(fe, fe).real
            gf[i] = np.vdot(ge, fe).real

        def probe(us: np.ndarray) -> LocalBatch:
            s = np.asarray(us, dtype=float)
            r = 1 - s
            F = r[:, None] * Fg + s[:, None] * Ff
            J = r[:, None, None] * Jg + s[:, None, None] * Jf
            pn2 = (r * r)[:, None] * gg + (s * s)[:, None] * ff + (2 * r * s)[:, None] * gf
            return invariants_from_parts(sup, F, J, np.sqrt(np.maximum(pn2, 0.0)))

        return probe


class FunctionPath:
    """General path given by callables ``coeff_fn(t)`` and ``dcoeff_fn(t)`` on a finite interval."""

    def __init__(self, supports: SupportTuple, coeff_fn: Callable, dcoeff_fn: Callable, t0: float, t1: float):
        self.supports = supports
        self.coeff_fn, self.dcoeff_fn = coeff_fn, dcoeff_fn
        self.u0, self.u1 = float(t0), float(t1)

    @staticmethod
    def t_of(u: float) -> float:
        return u

    def _stack(self, fn, u) -> list[np.ndarray]:
        rows = [fn(float(x)) for x in np.atleast_1d(u)]
        return [np.array([np.asarray(r[i], dtype=complex) for r in rows]) for i in range(self.supports.n)]

    def coeffs(self, u) -> list[np.ndarray]:
        return self._stack(self.coeff_fn, u)

    def dcoeffs(self, u) -> list[np.ndarray]:
        return self._stack(self.dcoeff_fn, u)

    def system_at(self, u: float) -> ExpSumSystem:
        return ExpSumSystem(self.supports, [c[0] for c in self.coeffs([u])])

    def prober(self, x) -> Callable[[np.ndarray], LocalBatch]:
        data = exp_data(self.supports, x)
        return lambda us: local_invariants(self.supports, self.coeffs(us), x, data)


# ---------------------------------------------------------------- config and trace

@dataclass
class NewtonCounter:
    """Shared Newton-step counter with an optional budget."""

    budget: float = math.inf
    used: int = 0

    def tick(self) -> bool:
        self.used += 1
        return self.used <= self.budget


@dataclass
class TrackerConfig:
    alpha_star: float = ALPHA_STAR
    step_growth: float = 2.0
    bisection_tol: float = 1e-3
    max_steps: int = 100_000
    H: float = math.inf
    quadrature_refine: int = 4
    probes: int = 8
    tail_factor: float | None = None  # T = tail_factor * mu^2
    compute_length: bool = True
    compiled: bool = True

    def __post_init__(self):
        if self.alpha_star > CONSTANTS.alpha_starstar:
            raise ValueError("alpha_star must not exceed alpha_starstar")
        if self.step_growth <= 1:
            raise ValueError("step_growth must exceed 1")


@dataclass
class MeshPoint:
    t: float
    u: float
    x: np.ndarray
    beta: float
    mu: float


@dataclass
class InfinityCertificate:
    ray: tuple[int, ...]
    h: list[np.ndarray]
    relative_norms: list[float]
    bounds: list[float]
    bound_ok: bool


@dataclass
class PathTrace:
    mesh: list[MeshPoint] = field(default_factory=list)
    outcome: str = "Running"
    end_point: np.ndarray | None = None
    certificate: Certificate | None = None
    newton_steps: int = 0
    L_hat: float = math.nan
    L1_hat: float = math.nan
    L2_hat: float = math.nan
    stalled_at: float | None = None
    infinity: InfinityCertificate | None = None
    tail_jump: bool = False

    @property
    def success(self) -> bool:
        return self.outcome == "Success"

    @property
    def steps(self) -> int:
        """Number of parameter intervals ``N`` (with ``t_N = T``)."""
        return max(len(self.mesh) - 1, 0)

    def to_json(self, summary: bool = False) -> dict:
        def c(z):
            return None if z is None else {"re": np.real(z).tolist(), "im": np.imag(z).tolist()}

        def num(v):
            return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else v

        out = {
            "version": "1",
            "outcome": self.outcome,
            "steps": self.steps,
            "newton_steps": self.newton_steps,
            "L_hat": num(self.L_hat),
            "L1_hat": num(self.L1_hat),
            "L2_hat": num(self.L2_hat),
            "tail_jump": self.tail_jump,
            "end_point": c(self.end_point),
            "certificate": self.certificate.to_json() if self.certificate else None,
        }
        if self.stalled_at is not None:
            out["stalled_at"] = num(self.stalled_at)
        if self.infinity is not None:
            out["infinity"] = {
                "ray": list(self.infinity.ray),
                "relative_norms": self.infinity.relative_norms,
                "bounds": self.infinity.bounds,
                "bound_ok": self.infinity.bound_ok,
            }
        if not summary:
            out["mesh"] = [
                {"t": num(m.t), "x": c(m.x), "beta": num(m.beta), "mu": num(m.mu)} for m in self.mesh
            ]
        return out


# ---------------------------------------------------------------- step search

def _search(path, x_next, u_j: float, config: TrackerConfig, h0: float | None):
    """Core of ``step_search``; also returns the local data at the accepted parameter."""
    nu = path.supports.nu
    probe = path.prober(x_next)
    span = path.u1 - u_j
    best = None

    def run(us):
        nonlocal best
        loc = probe(us)
        a = loc.alpha(nu)
        bad = np.nonzero(~(a < config.alpha_star))[0]
        last = (bad[0] if len(bad) else len(us)) - 1
        if last >= 0:
            best = (float(us[last]), loc.delta[last], float(loc.beta[last]), float(loc.mu[last]))
        return bad

    if span <= 0:
        run(np.array([path.u1]))
        return path.u1, best
    h = span if h0 is None else min(h0, span)
    lo = u_j
    k = config.probes
    frac = np.arange(1, k + 1) / k
    while True:
        probes = np.minimum(lo + h * frac, path.u1)
        bad = run(probes)
        if len(bad) == 0:
            lo = float(probes[-1])
            if lo >= path.u1:
                return path.u1, best
            h *= config.step_growth
            continue
        hi = float(probes[bad[0]])
        lo = float(probes[bad[0] - 1]) if bad[0] > 0 else lo
        break
    inner = np.arange(1, k) / k
    while hi - lo > config.bisection_tol * max(lo - u_j, 0.0):
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
        probes = lo + (hi - lo) * inner
        bad = run(probes)
        if len(bad) == 0:
            lo = float(probes[-1])
        else:
            hi = float(probes[bad[0]])
            lo = float(probes[bad[0] - 1]) if bad[0] > 0 else lo
    return lo, (best if best is not None and best[0] == lo else None)


def step_search(path, x_next, u_j: float, config: TrackerConfig, h0: float | None = None) -> float:
    """Next parameter: the last probe before the certificate quantity reaches alpha_star.

    Geometric growth from ``u_j`` with ``config.probes`` probes per bracket,
    then bracket refinement until its width is below ``bisection_tol`` times
    the step length.  Returns ``u_j`` itself when no progress is possible.
    """
    return _search(path, x_next, u_j, config, h0)[0]


# ---------------------------------------------------------------- tail and infinity

def tail_threshold(f: ExpSumSystem, g: ExpSumSystem, mu_f_estimate: float, K: float | None = None) -> float:
    """Parameter beyond which the linear homotopy ``g + t f`` may jump to ``f``.

    The path is rescaled per equation so that ``|f_i| = sqrt(S_i)``; ``K`` is
    raised to the actual ratio ``|g_i|/|f_i|`` if that is larger.
    """
    sup = f.supports
    kf = kappa_f(f)
    if math.isinf(kf):
        raise InfiniteKappa("target has a zero coefficient")
    if K is None:
        K = 1 + math.sqrt((math.log(sup.n) + math.log(10)) / min(sup.S_i))
    ratio = max(float(gn / fn) for gn, fn in zip(g.norms(), f.norms()))
    k_eff = max(K, ratio)
    return 14.0 * kf * k_eff * math.sqrt(sup.n) * math.sqrt(sup.S) * mu_f_estimate**2 * sup.nu


def h_threshold(dr: float, S: int, T: float, delta: float | None, norm_f: float, *, n: int, eta: float, max_Si: int) -> float:
    """Infinity threshold ``H`` for ``|Re x|_inf`` along a tracked path."""
    default = 1.0 / (2 * (2 * dr * dr + 1) * S)
    if delta is None:
        delta = default
    if delta > default * (1 + 1e-12):
        raise DeltaTooLarge(f"delta {delta} exceeds {default}")
    inner = 1 + T * norm_f * math.sqrt(math.e) / (delta ** (1.0 / (2 * S)) * math.sqrt(S))
    return (n / eta) * math.log(16 * math.e / delta * dr * dr * S * math.sqrt(max_Si) * inner)


def _cone_rays(supports: SupportTuple, omega: np.ndarray, rays) -> list:
    sets = point_sets(supports)
    verts = np.array(minkowski_vertices(sets), dtype=float)
    vals = verts @ omega
    top = vals.max()
    face = verts[vals >= top - 1e-9 * max(1.0, abs(top))]
    out = []
    for r in rays:
        xi = np.array(r.xi, dtype=float)
        fv = face @ xi
        lam = float((verts @ xi).max())
        if np.all(np.abs(fv - lam) <= 1e-9 * max(1.0, abs(lam))):
            out.append(r)
    return out


def infinity_monitor(system: ExpSumSystem, z, H: float, rays=None) -> InfinityCertificate | None:
    """Certificate of a nearby system with a root at toric infinity, or None.

    The dominant ray is the one with the largest coefficient when ``Re z`` is
    written as a nonnegative combination of the unit rays spanning its cone.
    """
    z = np.asarray(z, dtype=complex)
    omega = z.real
    if np.linalg.norm(omega) < H or not np.any(omega):
        return None
    sup = system.supports
    rays = rays if rays is not None else fan_rays(sup)
    cone = _cone_rays(sup, omega, rays) or list(rays)
    basis = np.array([np.array(r.xi) / r.norm for r in cone]).T
    coef, _ = nnls(basis, omega)
    ray = cone[int(np.argmax(coef))]
    eta_i, _ = facet_gap(sup, strict=False, rays=rays)
    h, rel, bounds = [], [], []
    for i, c in enumerate(system.coeffs):
        v, _, _ = veronese(sup, i, z)
        _, face = support_value(sup.A[i], ray.xi)
        mask = np.array([p in face for p in sup.A[i]])
        w = np.where(mask, v, 0)
        g = c @ w
        hi = -g * np.conj(w) / np.vdot(w, w).real
        h.append(hi)
        rel.append(float(np.linalg.norm(hi) / np.linalg.norm(c)))
        bounds.append(float(kappa_rho(sup, i) * math.exp(-eta_i[i] * H / sup.n)))
    ok = all(r <= b * (1 + 1e-9) for r, b in zip(rel, bounds))
    return InfinityCertificate(ray=ray.xi, h=h, relative_norms=rel, bounds=bounds, bound_ok=ok)


# ---------------------------------------------------------------- tracking

def track(path, x0, config: TrackerConfig | None = None, counter: NewtonCounter | None = None) -> PathTrace:
    """Follow the root through ``path`` starting from the certified point ``x0``."""
    config = config or TrackerConfig()
    counter = counter or NewtonCounter()
    sup = path.supports
    nu = sup.nu
    trace = PathTrace()
    x = np.asarray(x0, dtype=complex).copy()
    u = path.u0
    loc = local_invariants(sup, path.coeffs([u]), x)
    if not (loc.alpha(nu)[0] <= config.alpha_star):
        raise UncertifiedStart(f"start point does not certify (alpha_hat={loc.alpha(nu)[0]})")
    trace.mesh.append(MeshPoint(path.t_of(u), u, x.copy(), float(loc.beta[0]), float(loc.mu[0])))
    h_prev = None
    fast = isinstance(path, LinearPath) and config.compiled
    tail_on = config.tail_factor is not None and math.isinf(path.t_of(path.u1))
    while True:
        if fast and np.isfinite(loc.beta[0]):
            chunk = min(4096, config.max_steps + 1 - len(trace.mesh))
            k, us, xs, bs, ms, d, hp, tail = path.fast_advance(
                x, u, loc.delta[0], h_prev, chunk, counter.budget - counter.used, config,
                config.tail_factor if tail_on else -1.0,
            )
            if k:
                t_of = path.t_of
                trace.mesh.extend(MeshPoint(t_of(us[j]), float(us[j]), xs[j], float(bs[j]), float(ms[j])) for j in range(k))
                trace.newton_steps += k
                counter.used += k
                u, x, h_prev = float(us[k - 1]), xs[k - 1].copy(), float(hp)
                loc = LocalBatch(delta=d[None, :], beta=bs[k - 1 : k].copy(), mu=ms[k - 1 : k].copy())
                if tail and _try_tail(path, x, config, trace, counter):
                    break
                if k == chunk:
                    continue
        x_next = x + loc.delta[0]
        trace.newton_steps += 1
        if not counter.tick():
            trace.outcome = "BudgetExceeded"
            return trace
        if u >= path.u1:
            break
        if np.max(np.abs(x_next.real)) >= config.H:
            trace.outcome = "InfinityDiverged"
            trace.infinity = infinity_monitor(path.system_at(u), x_next, min(config.H, np.linalg.norm(x_next.real)))
            trace.end_point = x_next
            return trace
        if len(trace.mesh) > config.max_steps:
            trace.outcome = "BudgetExceeded"
            return trace
        h0 = None if h_prev is None else config.step_growth * h_prev
        if isinstance(path, LinearPath) and config.compiled:
            u_new, found = path.fast_search(x_next, u, config, h0)
        else:
            u_new, found = _search(path, x_next, u, config, h0)
        if u_new - u <= 1e-14 * max(1.0, abs(u)) and u_new < path.u1:
            trace.outcome = "StepStalled"
            trace.stalled_at = path.t_of(u)
            trace.end_point = x_next
            return trace
        h_prev = u_new - u
        u, x = u_new, x_next
        if found is not None:
            loc = LocalBatch(delta=found[1][None, :], beta=np.array([found[2]]), mu=np.array([found[3]]))
        else:
            loc = local_invariants(sup, path.coeffs([u]), x)
        trace.mesh.append(MeshPoint(path.t_of(u), u, x.copy(), float(loc.beta[0]), float(loc.mu[0])))
        if config.tail_factor is not None and u < path.u1 and math.isinf(path.t_of(path.u1)):
            if path.t_of(u) >= config.tail_factor * float(loc.mu[0]) ** 2 and _try_tail(path, x, config, trace, counter):
                break
    if trace.outcome == "Running":
        x_end = x_next if not trace.tail_jump else trace.end_point
        final = local_invariants(sup, path.coeffs([path.u1]), x_end)
        cert = Certificate.build(final.beta[0], final.mu[0], nu, config.alpha_star)
        trace.end_point = x_end
        trace.certificate = cert
        trace.outcome = "Success" if cert.passed else "StepStalled"
        if not cert.passed:
            trace.stalled_at = path.t_of(path.u1)
    if config.compute_length and trace.success:
        trace.L_hat, trace.L1_hat, trace.L2_hat = condition_length(trace, path, config.quadrature_refine, config.compiled)
    return trace


def _try_tail(path, x, config: TrackerConfig, trace: PathTrace, counter: NewtonCounter) -> bool:
    sup = path.supports
    end = path.coeffs([path.u1])
    loc = local_invariants(sup, end, x)
    if not np.isfinite(loc.beta[0]):
        return False
    x_f = x + loc.delta[0]
    trace.newton_steps += 1
    counter.tick()
    after = local_invariants(sup, end, x_f)
    if not (after.alpha(sup.nu)[0] <= config.alpha_star):
        return False
    trace.tail_jump = True
    trace.end_point = x_f
    trace.mesh.append(MeshPoint(math.inf, path.u1, x_f.copy(), float(after.beta[0]), float(after.mu[0])))
    return True


# ---------------------------------------------------------------- condition length

def _polish(sup: SupportTuple, coeffs: list[np.ndarray], x: np.ndarray, iters: int = 6) -> np.ndarray:
    x = np.broadcast_to(np.asarray(x, dtype=complex), (coeffs[0].shape[0], sup.n)).copy()
    active = np.arange(len(x))
    for _ in range(iters):
        loc = local_invariants(sup, [c[active] for c in coeffs], x[active])
        x[active] += np.where(np.isfinite(loc.delta), loc.delta, 0)
        active = active[~(loc.beta < POLISH_BETA)]
        if not len(active):
            break
    return x


def _integrand(path, us: np.ndarray, zs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(|dp/du|_p * mu, |dq/du . R(z)|_p * mu, |dz/du|_0 * mu) at each node."""
    sup = path.supports
    q = path.coeffs(us)
    dq = path.dcoeffs(us)
    data = exp_data(sup, zs)
    loc = local_invariants(sup, q, zs, data)
    n, k = sup.n, len(us)
    J = np.empty((k, n, n), dtype=complex)
    dF = np.empty((k, n), dtype=complex)
    for i, (a, e, re) in enumerate(data):
        J[:, i, :] = (q[i] * re) @ a
        dF[:, i] = (dq[i] * re).sum(axis=1)
    with np.errstate(all="ignore"):
        zdot = -np.linalg.solve(J, dF[:, :, None])[:, :, 0]
    zspeed = np.linalg.norm(np.einsum("ij,kj->ki", sup.gram0_factor, zdot), axis=1)
    full = np.zeros(k)
    part = np.zeros(k)
    for i, (a, e, _) in enumerate(data):
        p = q[i] * e
        pdot_q = dq[i] * e
        pdot = pdot_q + p * (zdot @ a.T)
        pn2 = np.sum(np.abs(p) ** 2, axis=1)

        def perp_sq(w):
            proj = np.sum(np.conj(p) * w, axis=1) / pn2
            r = w - proj[:, None] * p
            return np.sum(np.abs(r) ** 2, axis=1) / pn2

        full += perp_sq(pdot)
        part += perp_sq(pdot_q)
    mu_ = loc.mu
    return np.sqrt(full) * mu_, np.sqrt(part) * mu_, zspeed * mu_


def condition_length(trace: PathTrace, path, refine: int = 4, compiled: bool = True) -> tuple[float, float, float]:
    """Trapezoid estimates of the renormalised condition length and its two bounding parts.

    Every mesh interval gets ``refine + 1`` nodes; node roots are obtained by
    Newton polishing from the neighbouring mesh roots, all intervals at once.
    """
    nu = path.supports.nu
    mesh = trace.mesh
    idx = [j for j in range(len(mesh) - 1) if mesh[j + 1].u > mesh[j].u]
    if not idx:
        return 0.0, 0.0, 0.0
    m = refine + 1
    w = np.linspace(0.0, 1.0, m)
    lo = np.array([mesh[j].u for j in idx])
    hi = np.array([mesh[j + 1].u for j in idx])
    us = (lo[:, None] + (hi - lo)[:, None] * w[None, :]).ravel()
    starts = np.empty((len(idx), m, path.supports.n), dtype=complex)
    for r, j in enumerate(idx):
        nxt = mesh[j + 1].x if not math.isinf(mesh[j + 1].t) else mesh[j].x
        starts[r, 0] = mesh[j].x
        starts[r, 1:] = nxt
    starts = starts.reshape(-1, path.supports.n)
    if isinstance(path, LinearPath) and compiled:
        from . import _kernels

        pts, npts, gp, fp, rho, R, rn = path._pack()
        vals = _kernels.length_nodes(us, starts, pts, npts, gp, fp, rho, R, rn)
    else:
        vals = _integrand(path, us, _polish(path.supports, path.coeffs(us), starts))
    full, part, zsp = (v.reshape(len(idx), m) for v in vals)
    uu = us.reshape(len(idx), m)
    L = np.trapezoid(full + nu * zsp, uu, axis=1).sum()
    L1 = np.trapezoid(part, uu, axis=1).sum()
    L2 = 2 * nu * np.trapezoid(zsp, uu, axis=1).sum()
    return float(L), float(L1), float(L2)


def warmup() -> None:
    """Compile (or load from cache) the tracking kernels on a tiny problem."""
    sup = SupportTuple([[(0,), (1,), (2,)]])
    g = ExpSumSystem(sup, [np.array([-1.0, 0.0, 1.0 + 0j])])
    f = ExpSumSystem(sup, [np.array([-2.0, 0.5, 1.0 + 0j])])
    track(LinearPath(g, f), refine(g, np.zeros(1, complex)), TrackerConfig())
