"""
Ground-truth quantities in the plane.

The farthest point of an intersection of disks from C0 lies on the boundary,
which is a union of circular arcs.  Along one arc the distance to C0 is
extremal only at the arc endpoints (pairwise circle intersections) or at the
antipode of C0 on that circle, so enumerating those candidates is exact.

Three-dimensional instances get a sampling-based answer only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import minimize

from .errors import DimensionUnsupported, EmptyIntersection
from .geometry import Instance, dc_objective, h_value, piece_arrays
from .sequence import element_at

DISC_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class OracleResult:
    r0: float
    maximizers: list
    certificate: list = field(default_factory=list)  # active ball indices per maximiser
    exact: bool = True

    def to_dict(self) -> dict:
        return {
            "r0": self.r0,
            "maximizers": [np.asarray(p).tolist() for p in self.maximizers],
            "certificate": self.certificate,
            "exact": self.exact,
        }


def _require_dim(inst: Instance, dims=(2,)):
    if inst.dim not in dims:
        raise DimensionUnsupported(f"dimension {inst.dim} not supported here (need {dims})")


def circle_intersections(c1, r1, c2, r2, scale=1.0):
    """Intersection points of two circles; one point at tangency, none if disjoint."""
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    v = c2 - c1
    d = math.hypot(v[0], v[1])
    if d == 0.0:
        return []
    a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
    h2 = r1 * r1 - a * a
    u = v / d
    base = c1 + a * u
    if h2 < -DISC_FLOOR * scale**2:
        return []
    if h2 <= DISC_FLOOR * scale**2:
        return [base]
    h = math.sqrt(h2)
    perp = np.array([-u[1], u[0]])
    return [base + h * perp, base - h * perp]


def _candidates(inst: Instance):
    C, r = inst.q.centers, inst.q.radii
    scale = inst.scale()
    cands = []
    for k in range(inst.q.m):
        v = C[k] - inst.c0
        nv = math.hypot(v[0], v[1])
        if nv > 0:
            cands.append(C[k] + r[k] * v / nv)
        else:
            cands.append(C[k] + np.array([r[k], 0.0]))
    for i, j in combinations(range(inst.q.m), 2):
        cands.extend(circle_intersections(C[i], r[i], C[j], r[j], scale))
    return cands


def farthest_2d(inst: Instance, tol: float = 1e-9) -> OracleResult:
    """Exact farthest point of the disk intersection from ``c0``."""
    _require_dim(inst)
    scale = inst.scale()
    cands = _candidates(inst)
    if not cands:
        raise EmptyIntersection("no candidate points")
    P = np.array(cands)
    feas = h_value(inst.q, P) <= tol * scale**2
    if not np.any(feas):
        raise EmptyIntersection("the disks have no common point")
    P = P[feas]
    dist = np.linalg.norm(P - inst.c0, axis=1)
    r0 = float(dist.max())
    maxers, cert = [], []
    for p in P[dist >= r0 - tol * scale]:
        if any(np.linalg.norm(p - q) <= tol * scale for q in maxers):
            continue
        maxers.append(p)
        gap = np.abs(np.linalg.norm(p - inst.q.centers, axis=1) - inst.q.radii)
        cert.append(np.flatnonzero(gap <= tol * scale).tolist())
    return OracleResult(r0, maxers, cert)


def farthest_sampled(inst: Instance, n_per_ball: int = 200_000, seed: int = 0) -> OracleResult:
    """Farthest point by dense sampling of every ball's boundary (dimension 2 or 3).

    Validation grade only: a lower estimate of R0 whose error shrinks with
    ``n_per_ball``.
    """
    _require_dim(inst, (2, 3))
    rng = np.random.default_rng(seed)
    best, best_p, best_k = -np.inf, None, None
    for k in range(inst.q.m):
        u = rng.standard_normal((n_per_ball, inst.dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        pts = inst.q.centers[k] + inst.q.radii[k] * u
        ok = h_value(inst.q, pts) <= 1e-12 * inst.scale() ** 2
        if not np.any(ok):
            continue
        d = np.linalg.norm(pts[ok] - inst.c0, axis=1)
        j = int(np.argmax(d))
        if d[j] > best:
            best, best_p, best_k = float(d[j]), pts[ok][j], k
    if best_p is None:
        raise EmptyIntersection("no sampled boundary point lies in every ball")
    return OracleResult(best, [best_p], [[best_k]], exact=False)


def _angular_arcs(centers, radii_sq, c0, r):
    """Fraction of the circle ``|x - c0| = r`` inside every disk ``(centers, radii_sq)``."""
    if np.any(radii_sq <= 0):
        return 0.0
    cuts = [0.0, 2 * math.pi]
    tests = []  # (phi, cos threshold)
    for P, rho2 in zip(centers, radii_sq):
        v = P - c0
        d = math.hypot(v[0], v[1])
        if d == 0.0:
            if r * r > rho2:
                return 0.0
            continue
        c = (r * r + d * d - rho2) / (2.0 * r * d)
        if c > 1.0:
            return 0.0
        if c <= -1.0:
            continue
        phi = math.atan2(v[1], v[0])
        half = math.acos(c)
        cuts.extend([(phi - half) % (2 * math.pi), (phi + half) % (2 * math.pi)])
        tests.append((phi, c))
    if not tests:
        return 1.0
    cuts = np.unique(cuts)
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    ok = np.ones_like(mids, dtype=bool)
    for phi, c in tests:
        ok &= np.cos(mids - phi) >= c
    return float(np.sum(np.diff(cuts)[ok]) / (2 * math.pi))


def arc_fraction_2d(inst: Instance, i: int, r: float) -> float:
    """Exact fraction of the circle ``|x - C0| = r`` lying in the ``i``-th element at ``R = r``."""
    _require_dim(inst)
    if r <= 0:
        raise ValueError("r must be positive")
    el = element_at(inst, i, r * r)
    return _angular_arcs(el.centers, el.radii_sq, inst.c0, r)


def _grid_area(centers, radii_sq, step, chunk_rows=256):
    if np.any(radii_sq <= 0):
        return 0.0
    k = int(np.argmin(radii_sq))
    rad = math.sqrt(radii_sq[k])
    lo = centers[k] - rad
    nx = int(math.ceil(2 * rad / step)) + 1
    xs = lo[0] + (np.arange(nx) + 0.5) * step
    ys = lo[1] + (np.arange(nx) + 0.5) * step
    count = 0
    for s in range(0, nx, chunk_rows):
        X, Y = np.meshgrid(xs, ys[s:s + chunk_rows], indexing="xy")
        inside = np.ones(X.shape, dtype=bool)
        for P, rho2 in zip(centers, radii_sq):
            inside &= (X - P[0]) ** 2 + (Y - P[1]) ** 2 <= rho2
        count += int(inside.sum())
    return count * step * step


def area_2d(inst: Instance, i: int, r_sq_probe: float, grid_step: float = 1e-3) -> float:
    """Grid-counted area of the ``i``-th element at ``R^2 = r_sq_probe`` (0 if empty)."""
    _require_dim(inst)
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    el = element_at(inst, i, r_sq_probe)
    return _grid_area(el.centers, el.radii_sq, grid_step)


def _grid_min(inst: Instance, lo, hi, step, chunk_rows=1024):
    xs = np.arange(lo[0], hi[0] + step / 2, step)
    ys = np.arange(lo[1], hi[1] + step / 2, step)
    C, r2 = inst.q.centers, inst.q.radii_sq
    gx = inst.lam * (xs - inst.c0[0]) ** 2
    best, best_p = np.inf, None
    for s in range(0, len(ys), chunk_rows):
        yc = ys[s:s + chunk_rows]
        hv = np.full((len(yc), len(xs)), -np.inf)
        for k in range(len(C)):
            # squared distances separate into an outer sum
            np.maximum(hv, (yc[:, None] - C[k, 1]) ** 2 + ((xs - C[k, 0]) ** 2 - r2[k]), out=hv)
        f = hv - gx - inst.lam * ((yc - inst.c0[1]) ** 2)[:, None]
        f[hv > 1.0] = np.inf
        j = np.unravel_index(int(np.argmin(f)), f.shape)
        if f[j] < best:
            best, best_p = float(f[j]), np.array([xs[j[1]], yc[j[0]]])
    return best, best_p


def _slsqp_polish(inst: Instance, x0):
    """Epigraph form ``min t  s.t.  t >= piece_k(x),  ||x - C_j||^2 <= r_j^2 + 1`` by SLSQP."""
    D, e, s = piece_arrays(inst)
    C, rho = inst.q.centers, inst.q.radii_sq + 1.0
    t0 = float(np.max(s * np.sum((x0 - D) ** 2, axis=1) + e))

    def pieces_gap(z):
        return z[2] - (s * np.sum((z[:2] - D) ** 2, axis=1) + e)

    def pieces_jac(z):
        return np.hstack([-2 * s * (z[:2] - D), np.ones((len(D), 1))])

    def ball_gap(z):
        return rho - np.sum((z[:2] - C) ** 2, axis=1)

    def ball_jac(z):
        return np.hstack([-2 * (z[:2] - C), np.zeros((len(C), 1))])

    res = minimize(lambda z: z[2], np.append(x0, t0), jac=lambda z: np.array([0.0, 0.0, 1.0]),
                   method="SLSQP",
                   constraints=[{"type": "ineq", "fun": pieces_gap, "jac": pieces_jac},
                                {"type": "ineq", "fun": ball_gap, "jac": ball_jac}],
                   options={"ftol": 1e-15, "maxiter": 500})
    return res.x[:2]


def grid_minimize_dc_2d(inst: Instance, step: float = 1e-3, polish: bool = True,
                        feas_tol: float = 1e-9):
    """Brute-force minimum of ``h - g`` over ``{h <= 1}`` on a square grid.

    The grid covers the bounding box of the inflated disks.  Where the
    minimiser sits on a kink of the max or on the constraint boundary the
    grid alone is off by O(step), so by default the best grid point is
    handed to an SLSQP solve of the epigraph form and the better of the two
    feasible answers is returned.

    Returns
    -------
    value : float
    point : ndarray
    """
    _require_dim(inst)
    rad = np.sqrt(inst.q.radii_sq + 1.0)
    lo = np.max(inst.q.centers - rad[:, None], axis=0)
    hi = np.min(inst.q.centers + rad[:, None], axis=0)
    if np.any(lo > hi):
        raise EmptyIntersection("inflated disks have disjoint bounding boxes")
    best, p = _grid_min(inst, lo, hi, step)
    if p is None or not np.isfinite(best):
        raise EmptyIntersection("no grid point satisfies h <= 1")
    if polish:
        x = _slsqp_polish(inst, p)
        if np.all(np.isfinite(x)) and h_value(inst.q, x) <= 1.0 + feas_tol:
            fx = float(dc_objective(inst, x))
            if fx < best:
                best, p = fx, x
    return best, p
