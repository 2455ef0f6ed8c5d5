"""Acceptance criteria, one test each.

Every test prints a ``PASS``/``FAIL`` line with the measured quantity and the
threshold it is held to, then asserts exactly that threshold.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from toric_homotopy.expsum import SupportTuple, kappa_rho, multiproj_distance, norm0, renormalize, residual
from toric_homotopy.lattice import lattice_det, lattice_from_supports, torus_distance
from toric_homotopy.newton import CONSTANTS, local_invariants, mu
from toric_homotopy.oracle import mc_exclusion, mc_moment_frobenius, oracle_roots
from toric_homotopy.polytope import bkk_count, facet_gap_sq, fan_rays, mixed_area, mixed_area_exact, mixed_volume
from toric_homotopy.solver import SolveConfig, sample_gaussian, solve

from .conftest import DENSE3, SQUARES3, SQUARE_TRI, random_support


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")

    return emit


@pytest.fixture(scope="module")
def squares3_runs():
    """Twenty three-squares solves (seeds 0..19) with their wall time."""
    s = SupportTuple(SQUARES3)
    out = []
    t0 = time.perf_counter()
    for seed in range(20):
        f = sample_gaussian(s, np.random.default_rng(1000 + seed))
        try:
            out.append((f, solve(f, SolveConfig(rng_seed=seed))))
        except Exception as exc:  # recorded, judged by the test
            out.append((f, exc))
    return out, time.perf_counter() - t0


def test_criterion_01_squares3_exact_invariants(report):
    t0 = time.perf_counter()
    nv = mixed_volume(SQUARES3)
    det = lattice_det(lattice_from_supports(SQUARES3))
    count = bkk_count(SQUARES3)
    area = mixed_area_exact(SQUARES3)
    dt = time.perf_counter() - t0
    ok = nv == 2 and det == 1 and count == 2 and area == {1: 3} and dt < 1.0
    report(1, ok, f"n!V={nv} det={det} bkk={count} V'={dict(area)} in {dt:.3f}s (want 2,1,2,3 in < 1 s)")
    assert ok


def test_criterion_02_square_tri_facet_gaps(report):
    t0 = time.perf_counter()
    rays = fan_rays(SQUARE_TRI)
    per, eta = facet_gap_sq(SQUARE_TRI, rays)
    dt = time.perf_counter() - t0
    # (2 sqrt5 / 5)^2 = 4/5 and 2^2 = 4
    ok = per == [Fraction(4, 5), Fraction(4)] and eta == Fraction(4, 5) and len(rays) == 7 and dt < 1.0
    report(2, ok, f"eta_i^2={[str(p) for p in per]} eta^2={eta} rays={len(rays)} in {dt:.3f}s (want 4/5, 4, 4/5, 7 in < 1 s)")
    assert ok


def test_criterion_03_dense_cubic(report):
    nv = mixed_volume(DENSE3)
    area = mixed_area(DENSE3)
    err = abs(area - 3 * (2 + math.sqrt(2)))
    ok = nv == 9 and err <= 1e-12
    report(3, ok, f"n!V={nv} |V' - 3(2+sqrt2)|={err:.2e} (want 9 and <= 1e-12)")
    assert ok


def test_criterion_04_squares3_root_recovery(report, squares3_runs):
    runs, wall = squares3_runs
    bad = []
    worst = 0.0
    for seed, (f, res) in enumerate(runs):
        if isinstance(res, Exception):
            bad.append((seed, type(res).__name__))
            continue
        r = max(residual(f, z) for z in res.points)
        worst = max(worst, r)
        if len(res.roots) != 2 or not all(c.passed for _, c in res.roots) or r > 1e-10:
            bad.append((seed, len(res.roots), r))
    ok = not bad and wall < 30.0
    report(4, ok, f"20 seeds, failures={bad}, worst residual={worst:.1e}, total {wall:.1f}s (want 2 certified roots, <= 1e-10, < 30 s)")
    assert ok


def _criterion5_supports(rng, n):
    hi = 6 if n == 1 else 3
    while True:
        sets = []
        for _ in range(n):
            k = int(rng.integers(2, 7))
            pts = set()
            while len(pts) < k:
                pts.add(tuple(int(v) for v in rng.integers(0, hi + 1, size=n)))
            sets.append(sorted(pts))
        try:
            s = SupportTuple(sets)
            bkk_count(s)
            return s
        except Exception:
            continue


def test_criterion_05_oracle_equivalence(report):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst, bad = 0.0, []
    for n in (1, 2):
        for k in range(50):
            s = _criterion5_supports(rng, n)
            f = sample_gaussian(s, rng)
            ref = oracle_roots(f).roots
            try:
                got = solve(f, SolveConfig(rng_seed=k, compute_length=False)).points
            except Exception as exc:
                bad.append((n, k, type(exc).__name__))
                continue
            if len(got) != len(ref):
                bad.append((n, k, len(got), len(ref)))
                continue
            lat, dual = s.lattice, s.dual
            d = max(
                max(min(torus_distance(a, b, lat, dual) for b in ref) for a in got),
                max(min(torus_distance(a, b, lat, dual) for a in got) for b in ref),
            )
            worst = max(worst, d)
    dt = time.perf_counter() - t0
    ok = not bad and worst <= 1e-8 and dt < 300
    report(5, ok, f"100 systems, mismatches={bad}, worst Hausdorff={worst:.1e}, {dt:.0f}s (want counts equal, <= 1e-8, < 300 s)")
    assert ok


def test_criterion_06_toric_to_classical(report):
    rng = np.random.default_rng(6)
    worst_step = worst_beta = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 4))
        s = random_support(rng, n)
        f = sample_gaussian(s, rng)
        x = 0.5 * rng.normal(size=n) + 1j * rng.normal(size=n)
        F = np.array([c @ (s.rho[i] * np.exp(s.points[i] @ x)) for i, c in enumerate(f.coeffs)])
        DF = np.array([(c * s.rho[i] * np.exp(s.points[i] @ x)) @ s.points[i] for i, c in enumerate(f.coeffs)])
        d = -np.linalg.solve(DF, F)
        loc = local_invariants(s, [c[None, :] for c in f.coeffs], x)
        worst_step = max(worst_step, np.linalg.norm(loc.delta[0] - d) / np.linalg.norm(d))
        worst_beta = max(worst_beta, abs(loc.beta[0] - norm0(s, d)) / norm0(s, d))
    ok = worst_step <= 1e-12 and worst_beta <= 1e-12
    report(6, ok, f"1000 samples, worst rel. step error={worst_step:.1e}, beta error={worst_beta:.1e} (want <= 1e-12)")
    assert ok


def test_criterion_07_isometry_and_sandwich(report):
    rng = np.random.default_rng(70)
    worst_iso = 0.0
    violations = 0
    for _ in range(1000):
        n = int(rng.integers(1, 4))
        s = random_support(rng, n)
        f = sample_gaussian(s, rng)
        iso = renormalize(f, 1j * rng.normal(size=n)).norms()
        worst_iso = max(worst_iso, float(np.max(np.abs(iso / f.norms() - 1))))
        u = rng.normal(size=n) + 1j * rng.normal(size=n)
        r = renormalize(f, u).norms()
        for i in range(n):
            up = float((s.points[i] @ u.real).max())
            down = float((s.points[i] @ -u.real).max())
            lo, hi = math.exp(-down) * f.norms()[i], math.exp(up) * f.norms()[i]
            violations += not (lo <= r[i] * (1 + 1e-12) and r[i] <= hi * (1 + 1e-12))
    ok = worst_iso <= 1e-12 and violations == 0
    report(7, ok, f"1000 samples, worst isometry error={worst_iso:.1e}, sandwich violations={violations} (want <= 1e-12, 0)")
    assert ok


def test_criterion_08_step_count_bound(report, squares3_runs):
    runs, _ = squares3_runs
    traces = [tr for _, res in runs if not isinstance(res, Exception) for tr in res.traces if tr.success]
    rng = np.random.default_rng(8)
    for k in range(10):
        s = random_support(rng, 2, 0, 3)
        try:
            res = solve(sample_gaussian(s, rng), SolveConfig(rng_seed=k))
        except Exception:
            continue
        traces.extend(tr for tr in res.traces if tr.success)
    ratio = max((tr.steps - 1) / (tr.L_hat / CONSTANTS.delta_star) for tr in traces)
    viol = sum(tr.steps > 1 + 1.1 * tr.L_hat / CONSTANTS.delta_star for tr in traces)
    ok = viol == 0 and len(traces) > 0
    report(8, ok, f"{len(traces)} traces, violations={viol}, max (N-1)/(L/delta*)={ratio:.3f} (want N <= 1 + 1.1 L/delta*)")
    assert ok


def test_criterion_09_mu_properties(report):
    rng = np.random.default_rng(9)
    min_mu = math.inf
    pairs = violations = 0
    while pairs < 1000:
        n = int(rng.integers(1, 4))
        s = random_support(rng, n)
        f = sample_gaussian(s, rng)
        z = 0.5 * rng.normal(size=n) + 1j * rng.normal(size=n)
        m = mu(f, z)
        min_mu = min(min_mu, m)
        scale = 10 ** rng.uniform(-4, -1)
        g = f.with_coeffs([c + scale * (rng.normal(size=c.shape) + 1j * rng.normal(size=c.shape)) for c in f.coeffs])
        d = multiproj_distance(f, g)
        if d * m >= 0.5:
            continue
        pairs += 1
        mg = mu(g, z)
        violations += not (m / (1 + d * m) <= mg * (1 + 1e-12) and mg <= m / (1 - d * m) * (1 + 1e-12))
    ok = min_mu >= 1 - 1e-12 and violations == 0
    report(9, ok, f"min mu={min_mu:.4f}, {pairs} pairs with d*mu < 1/2, sandwich violations={violations} (want >= 1, 0)")
    assert ok


def test_criterion_10_distance_to_renormalized(report):
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 4))
        s = random_support(rng, n)
        f = sample_gaussian(s, rng)
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        x *= rng.uniform(0, 0.3) / norm0(s, x)
        worst = max(worst, multiproj_distance(f, renormalize(f, x)) / (math.sqrt(5) * norm0(s, x) * s.nu))
    ok = worst <= 1 + 1e-12
    report(10, ok, f"1000 samples, max d_P / (sqrt5 |x|_0 nu)={worst:.3f} (want <= 1)")
    assert ok


def test_criterion_11_frobenius_moment(report):
    s = SupportTuple([[(0,), (1,), (2,), (3,)]])
    t0 = time.perf_counter()
    rep = mc_moment_frobenius(s, sigma=1.0, f_bar=None, H=2.0, N=10_000, seed=11)
    dt = time.perf_counter() - t0
    ok = rep.passed and rep.bound == 8.0 and dt < 120
    report(
        11, ok,
        f"mean={rep.mean:.3f} stderr={rep.stderr:.3f} mean+3se={rep.mean + 3 * rep.stderr:.3f} bound={rep.bound} in {dt:.0f}s "
        "(want mean+3se <= 8, < 120 s)",
    )
    assert ok


def test_criterion_12_exclusion_probabilities(report):
    s = SupportTuple(SQUARES3)
    f = sample_gaussian(s, np.random.default_rng(12))
    lam, yk = mc_exclusion(s, f, N=10_000, seed=12)
    ok = lam.passed and yk.passed and lam.bound == pytest.approx(1 / 72)
    report(
        12, ok,
        f"P[Lambda_eps]={lam.mean:.4f}+3*{lam.stderr:.4f} vs {lam.bound:.5f} ({'ok' if lam.passed else 'over'}); "
        f"P[Y_K]={yk.mean:.4f}+3*{yk.stderr:.4f} vs {yk.bound} ({'ok' if yk.passed else 'over'})",
    )
    assert ok


def test_criterion_13_distortion_bounds(report):
    rng = np.random.default_rng(13)
    bad = 0
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 4))
        s = random_support(rng, n)
        w = SupportTuple(s.A, [rng.uniform(0.2, 3.0, size=len(a)) for a in s.A])
        for i in range(n):
            worst = max(worst, w.nu_i[i] / kappa_rho(w, i))
            bad += not (1 - 1e-12 <= w.nu_i[i] <= kappa_rho(w, i) * (1 + 1e-12))
            bad += not (1 - 1e-12 <= s.nu_i[i] <= math.sqrt(s.S_i[i]) * (1 + 1e-12))
    ok = bad == 0
    report(13, ok, f"200 supports, violations={bad}, max nu/kappa_rho={worst:.3f} (want 0)")
    assert ok
