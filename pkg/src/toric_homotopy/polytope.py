"""Combinatorial invariants of a tuple of integer supports.

Convex hulls are found with Qhull in floating point, but every facet normal
is recomputed from integer vertices and verified exactly, so all returned
quantities (vertices, rays, mixed volumes, face gaps) are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial import QhullError

from .errors import DegenerateSupport, InternalInconsistency, RankDeficient, ZeroEta
from .lattice import (
    IntVec,
    hermite_normal_form,
    integer_kernel_vector,
    lattice_det,
    lattice_from_supports,
    primitive,
    unimodular_completion,
)

PointSet = list[IntVec]


def _dot(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(int(x) * int(y) for x, y in zip(a, b))


def _sub(a, b) -> IntVec:
    return tuple(int(x) - int(y) for x, y in zip(a, b))


def _add(a, b) -> IntVec:
    return tuple(int(x) + int(y) for x, y in zip(a, b))


def point_sets(supports) -> list[PointSet]:
    """Raw integer point sets from a SupportTuple or nested sequences."""
    sets = getattr(supports, "A", supports)
    return [[tuple(int(c) for c in p) for p in s] for s in sets]


def _dedup(points) -> PointSet:
    return sorted(set(tuple(int(c) for c in p) for p in points))


# ---------------------------------------------------------------- hulls

def _affine_frame(points: PointSet) -> tuple[IntVec, list[list[int]]]:
    p0 = points[0]
    n = len(p0)
    return p0, hermite_normal_form([_sub(p, p0) for p in points[1:]], n)


def _local_coords(points: PointSet, p0: IntVec, basis: list[list[int]]) -> PointSet:
    """Integer coordinates of ``p - p0`` in the echelon basis ``basis``."""
    pivots = [next(c for c, x in enumerate(r) if x) for r in basis]
    out = []
    for p in points:
        v = list(_sub(p, p0))
        y = []
        for row, pc in zip(basis, pivots):
            q, rem = divmod(v[pc], row[pc])
            if rem:
                raise InternalInconsistency("point outside the affine lattice of its own set")
            y.append(q)
            v = [a - q * b for a, b in zip(v, row)]
        if any(v):
            raise InternalInconsistency("point outside the affine span of its own set")
        out.append(tuple(y))
    return out


def _facets_full(points: PointSet) -> list[tuple[IntVec, int]]:
    """Exact (primitive outer normal, support value) pairs of a full-dimensional set."""
    d = len(points[0])
    if d == 1:
        return [((-1,), -min(p[0] for p in points)), ((1,), max(p[0] for p in points))]
    try:
        hull = ConvexHull(np.array(points, dtype=float))
        simplices = hull.simplices
    except QhullError:
        simplices = None
    found: dict[IntVec, int] = {}
    bad = simplices is None
    if simplices is not None:
        for simplex in simplices:
            pts = [points[k] for k in simplex]
            try:
                xi = integer_kernel_vector([_sub(p, pts[0]) for p in pts[1:]], d)
            except ValueError:
                bad = True
                continue
            vals = [_dot(p, xi) for p in points]
            h = _dot(pts[0], xi)
            if max(vals) == h:
                found[xi] = h
            elif min(vals) == h:
                found[tuple(-x for x in xi)] = -h
            else:
                bad = True
    if bad or not _facets_complete(points, found):
        found = _facets_brute(points)
    return sorted(found.items())


def _facets_complete(points: PointSet, facets: dict[IntVec, int]) -> bool:
    """Cheap exact sanity check: every facet spans a hyperplane and normals positively span."""
    d = len(points[0])
    if len(facets) < d + 1:
        return False
    for xi, lam in facets.items():
        face = [p for p in points if _dot(p, xi) == lam]
        if len(hermite_normal_form([_sub(p, face[0]) for p in face[1:]], d)) != d - 1:
            return False
    return True


def _facets_brute(points: PointSet) -> dict[IntVec, int]:
    d = len(points[0])
    found: dict[IntVec, int] = {}
    for combo in combinations(points, d):
        try:
            xi = integer_kernel_vector([_sub(p, combo[0]) for p in combo[1:]], d)
        except ValueError:
            continue
        vals = [_dot(p, xi) for p in points]
        h = _dot(combo[0], xi)
        if max(vals) == h:
            found[xi] = h
        if min(vals) == h:
            found[tuple(-x for x in xi)] = -h
    return found


def _vertices_full(points: PointSet, facets) -> PointSet:
    d = len(points[0])
    verts = []
    for p in points:
        normals = [xi for xi, lam in facets if _dot(p, xi) == lam]
        if normals and len(hermite_normal_form(normals, d)) == d:
            verts.append(p)
    return verts


def hull_vertices(points) -> PointSet:
    """Extreme points of the convex hull of an integer point set (any affine dimension)."""
    pts = _dedup(points)
    if len(pts) <= 1:
        return pts
    p0, basis = _affine_frame(pts)
    d = len(basis)
    local = _local_coords(pts, p0, basis)
    if d == 1:
        lo = min(range(len(pts)), key=lambda k: local[k][0])
        hi = max(range(len(pts)), key=lambda k: local[k][0])
        return sorted({pts[lo], pts[hi]})
    index = {q: p for q, p in zip(local, pts)}
    return sorted(index[q] for q in _vertices_full(local, _facets_full(local)))


def support_value(points, xi) -> tuple[int, PointSet]:
    """Max of ``a . xi`` over the set and the face where it is attained."""
    pts = [tuple(int(c) for c in p) for p in points]
    vals = [_dot(p, xi) for p in pts]
    lam = max(vals)
    return lam, [p for p, v in zip(pts, vals) if v == lam]


def minkowski_vertices(sets: Sequence[PointSet]) -> PointSet:
    n = len(sets[0][0]) if sets and sets[0] else 0
    acc: PointSet = [tuple([0] * n)]
    for s in sets:
        vs = hull_vertices(s)
        acc = hull_vertices([_add(a, b) for a in acc for b in vs])
    return acc


def _sum_rank(sets: Sequence[PointSet], n: int) -> int:
    diffs = [_sub(p, s[0]) for s in sets for p in s[1:]]
    return len(hermite_normal_form(diffs, n))


def _facet_normals(sets: Sequence[PointSet], n: int) -> list[IntVec]:
    """Facet normals of the Minkowski sum when it has dimension n or n-1, else []."""
    r = _sum_rank(sets, n)
    if r < n - 1:
        return []
    if r == n - 1:
        diffs = [_sub(p, s[0]) for s in sets for p in s[1:]]
        xi = integer_kernel_vector(diffs, n)
        return [xi, tuple(-x for x in xi)]
    return [xi for xi, _ in _facets_full(minkowski_vertices(sets))]


# ---------------------------------------------------------------- fan

@dataclass(frozen=True, order=True)
class Ray:
    xi: IntVec
    euclid_norm_sq: int = field(compare=False)

    @classmethod
    def of(cls, xi) -> "Ray":
        p = primitive(xi)
        return cls(p, sum(x * x for x in p))

    @property
    def norm(self) -> float:
        return math.sqrt(self.euclid_norm_sq)


def fan_rays(supports) -> list[Ray]:
    """Facet normals of the Minkowski sum of the supports' hulls."""
    sets = point_sets(supports)
    n = len(sets[0][0])
    if _sum_rank(sets, n) < n:
        raise RankDeficient(_sum_rank(sets, n), n)
    return sorted(Ray.of(xi) for xi in _facet_normals(sets, n))


def _gap(points: PointSet, xi) -> int | None:
    vals = sorted({_dot(p, xi) for p in points}, reverse=True)
    return vals[0] - vals[1] if len(vals) > 1 else None


def facet_gap_table(supports, rays: list[Ray] | None = None) -> dict[Ray, list[float]]:
    """Per ray, per support normalised gap; ``inf`` when the whole support is the face."""
    sets = point_sets(supports)
    rays = rays if rays is not None else fan_rays(sets)
    table = {}
    for ray in rays:
        row = []
        for pts in sets:
            g = _gap(pts, ray.xi)
            row.append(math.inf if g is None else g / ray.norm)
        table[ray] = row
    return table


def facet_gap_sq(supports, rays: list[Ray] | None = None) -> tuple[list[Fraction | None], Fraction | None]:
    """Exact squared gaps: per support ``min_xi gap^2/|xi|^2`` and the overall minimum."""
    sets = point_sets(supports)
    rays = rays if rays is not None else fan_rays(sets)
    per = []
    for pts in sets:
        vals = [Fraction(g * g, r.euclid_norm_sq) for r in rays if (g := _gap(pts, r.xi)) is not None]
        per.append(min(vals) if vals else None)
    finite = [v for v in per if v is not None]
    return per, (min(finite) if finite else None)


def facet_gap(supports, strict: bool = True, rays: list[Ray] | None = None) -> tuple[list[float], float]:
    """(eta_i per support, eta).

    With ``strict`` a ray on which some support is entirely contained in its
    face raises DegenerateSupport; otherwise such pairs are skipped.
    """
    sets = point_sets(supports)
    rays = rays if rays is not None else fan_rays(sets)
    table = facet_gap_table(sets, rays)
    if strict:
        for ray, row in table.items():
            for i, v in enumerate(row):
                if math.isinf(v):
                    raise DegenerateSupport(i, ray.xi)
    eta_i = [min(row[i] for row in table.values()) for i in range(len(sets))]
    return eta_i, min(eta_i)


def strongly_mixed(supports, rays: list[Ray] | None = None) -> bool:
    sets = point_sets(supports)
    rays = rays if rays is not None else fan_rays(sets)
    return all(any(len(support_value(pts, r.xi)[1]) == 1 for pts in sets) for r in rays)


# ---------------------------------------------------------------- mixed volume

def _project_face(face: PointSet, uinv: list[list[int]]) -> PointSet:
    ref = face[0]
    out = []
    for p in face:
        d = _sub(p, ref)
        w = [sum(uinv[r][c] * d[c] for c in range(len(d))) for r in range(len(d))]
        if w[0] != 0:
            raise InternalInconsistency("face point off its supporting hyperplane")
        out.append(tuple(w[1:]))
    return out


def _faces_projected(sets: Sequence[PointSet], xi) -> list[PointSet]:
    _, uinv = unimodular_completion(xi)
    return [_project_face(support_value(s, xi)[1], uinv) for s in sets]


def _nmv(sets: Sequence[PointSet], n: int) -> int:
    """n! times the mixed volume of n integer point sets in Z^n."""
    if n == 0:
        return 1
    head, last = list(sets[:-1]), sets[-1]
    if n == 1:
        normals = [(1,), (-1,)]
    else:
        normals = _facet_normals(head, n)
    total = 0
    for xi in normals:
        lam = max(_dot(a, xi) for a in last)
        if lam == 0:
            continue
        total += lam * _nmv(_faces_projected(head, xi), n - 1)
    return total


def _shrink(sets) -> list[PointSet]:
    return [hull_vertices(s) for s in point_sets(sets)]


def mixed_volume(supports) -> int:
    """``n! V(conv A_1, ..., conv A_n)`` as an exact integer."""
    sets = _shrink(supports)
    n = len(sets[0][0])
    if len(sets) != n:
        raise ValueError(f"need {n} supports in dimension {n}, got {len(sets)}")
    # translate the last set so it contains the origin; the sum is invariant
    base = sets[-1][0]
    sets[-1] = [_sub(p, base) for p in sets[-1]]
    return _nmv(sets, n)


# ---------------------------------------------------------------- mixed area

class SqrtSum(dict):
    """Exact value ``sum_k c_k sqrt(k)`` stored as ``{k: Fraction(c_k)}``."""

    def add(self, k: int, c) -> None:
        self[k] = self.get(k, Fraction(0)) + Fraction(c)
        if self[k] == 0:
            del self[k]

    def __float__(self) -> float:
        return float(sum(float(c) * math.sqrt(k) for k, c in self.items()))

    def scaled(self, c) -> "SqrtSum":
        out = SqrtSum()
        for k, v in self.items():
            out.add(k, v * c)
        return out


def _mixed_area_slot(others: Sequence[PointSet], n: int) -> SqrtSum:
    """Exact V(K_1, ..., K_{n-1}, unit ball)."""
    out = SqrtSum()
    if n == 1:
        out.add(1, Fraction(2))
        return out
    nf = math.factorial(n)
    for xi in _facet_normals(others, n):
        m = _nmv(_faces_projected(others, xi), n - 1)
        if m:
            out.add(sum(x * x for x in xi), Fraction(m, nf))
    return out


def mixed_area_exact(supports) -> SqrtSum:
    sets = _shrink(supports)
    n = len(sets[0][0])
    out = SqrtSum()
    for i in range(n):
        for k, c in _mixed_area_slot(sets[:i] + sets[i + 1:], n).items():
            out.add(k, c)
    return out


def mixed_area(supports) -> float:
    return float(mixed_area_exact(supports))


def v_coefficients_exact(supports) -> list[SqrtSum]:
    """Exact ``v_0..v_n`` with ``v(t) = sum v_k t^k / k! = V'(A_1 + tA, ..., A_n + tA)``."""
    sets = _shrink(supports)
    n = len(sets[0][0])
    total = minkowski_vertices(sets)
    samples = []
    for t in range(n):
        scaled = [tuple(t * c for c in p) for p in total]
        grown = [hull_vertices([_add(a, b) for a in s for b in scaled]) for s in sets]
        samples.append(mixed_area_exact(grown))
    keys = sorted(set().union(*samples))
    coeffs = [SqrtSum() for _ in range(n + 1)]
    for key in keys:
        ys = [s.get(key, Fraction(0)) for s in samples]
        for k, c in enumerate(_interpolate(list(range(n)), ys)):
            coeffs[k].add(key, c * math.factorial(k))
    return coeffs


def _interpolate(xs: list[int], ys: list[Fraction]) -> list[Fraction]:
    """Monomial coefficients of the interpolating polynomial (exact Lagrange)."""
    m = len(xs)
    out = [Fraction(0)] * m
    for j in range(m):
        basis = [Fraction(1)]
        den = Fraction(1)
        for k in range(m):
            if k == j:
                continue
            basis = [Fraction(0)] + basis
            for d in range(len(basis) - 1):
                basis[d] -= xs[k] * basis[d + 1]
            den *= xs[j] - xs[k]
        for d in range(m):
            out[d] += ys[j] * basis[d] / den
    return out


def v_coefficients(supports) -> list[float]:
    return [float(c) for c in v_coefficients_exact(supports)]


# ---------------------------------------------------------------- derived bounds

def diameter(points) -> float:
    vs = hull_vertices(points)
    best = 0
    for a, b in combinations(vs, 2):
        best = max(best, _dot(_sub(a, b), _sub(a, b)))
    return math.sqrt(best)


def dr_bound(supports, rays: list[Ray] | None = None) -> float:
    """Degree bound for the locus of systems with roots at toric infinity.

    The general branch uses ``n! v_k`` in place of ``v_k``; that is the larger
    of the two plausible normalisations, so the bound stays valid under both.
    """
    sets = point_sets(supports)
    rays = rays if rays is not None else fan_rays(sets)
    if strongly_mixed(sets, rays):
        return float(min(len(rays), sum(len(s) for s in sets)))
    n = len(sets[0][0])
    det = lattice_det(lattice_from_supports(sets))
    diam = max(diameter(s) for s in sets)
    vk = v_coefficients(sets)
    growth = max(math.exp(k) * v for k, v in enumerate(vk))
    return diam / (2 * det) * math.factorial(n) * growth * len(rays)


def bkk_count(supports) -> int:
    sets = point_sets(supports)
    nv = mixed_volume(sets)
    det = lattice_det(lattice_from_supports(sets))
    q, r = divmod(nv, det)
    if r:
        raise InternalInconsistency(f"lattice determinant {det} does not divide n!V = {nv}")
    return q


def q_invariant(supports, deltas: Sequence[float], rays: list[Ray] | None = None) -> float:
    sets = point_sets(supports)
    rays = rays if rays is not None else fan_rays(sets)
    _, eta = facet_gap(sets, strict=False, rays=rays)
    if not (eta > 0) or math.isinf(eta):
        raise ZeroEta(f"facet gap is {eta}")
    nv = mixed_volume(sets)
    va = mixed_area(sets)
    det = lattice_det(lattice_from_supports(sets))
    return sum(d * d for d in deltas) / eta**2 * max(nv, va * eta) / det


@dataclass(frozen=True)
class InvariantReport:
    nV: int
    detLambda: int
    bkk_count: int
    mixed_area: float
    eta_per_ray: dict
    eta: float
    strongly_mixed: bool
    dr_bound: float
    Q: float
    deltas: tuple[float, ...]

    def to_json(self) -> dict:
        def num(x):
            return None if math.isinf(x) else x

        return {
            "version": "1",
            "nV": self.nV,
            "detLambda": self.detLambda,
            "bkk_count": self.bkk_count,
            "mixed_area": self.mixed_area,
            "eta_per_ray": [
                {"ray": list(r.xi), "eta": [num(v) for v in row]} for r, row in self.eta_per_ray.items()
            ],
            "eta": self.eta,
            "strongly_mixed": self.strongly_mixed,
            "dr_bound": self.dr_bound,
            "Q": self.Q,
            "deltas": list(self.deltas),
        }


def invariant_report(supports, deltas: Sequence[float] | None = None) -> InvariantReport:
    """All combinatorial invariants at once.

    ``deltas`` default to the support radii of ``supports`` if it is a
    SupportTuple, else of the unit-weight centred supports.
    """
    sets = point_sets(supports)
    n = len(sets[0][0])
    det = lattice_det(lattice_from_supports(sets))
    rays = fan_rays(sets)
    nv = mixed_volume(sets)
    if deltas is None:
        if hasattr(supports, "deltas0"):
            deltas = supports.deltas0
        else:
            from .expsum import SupportTuple

            deltas = SupportTuple(sets).deltas0
    table = facet_gap_table(sets, rays)
    _, eta = facet_gap(sets, strict=False, rays=rays)
    q, r = divmod(nv, det)
    if r:
        raise InternalInconsistency(f"lattice determinant {det} does not divide n!V = {nv}")
    return InvariantReport(
        nV=nv,
        detLambda=det,
        bkk_count=q,
        mixed_area=mixed_area(sets),
        eta_per_ray=table,
        eta=eta,
        strongly_mixed=strongly_mixed(sets, rays),
        dr_bound=dr_bound(sets, rays),
        Q=q_invariant(sets, deltas, rays),
        deltas=tuple(float(d) for d in deltas),
    )
