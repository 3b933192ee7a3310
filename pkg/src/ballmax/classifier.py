"""
Position of the DC minimiser relative to the intersection, and what it says about R0.

With ``y*`` the minimiser of ``h - g`` over ``{h <= 1}``:

* ``h(y*) < 0``  (interior): R0 is the smallest R with ``Q_{R^2}`` inside Q;
  only a lower bound is reported, taken from points of Q found by shooting
  rays out of ``y*`` (``sqrt(-value)`` is not a lower bound here in general).
* ``h(y*) > 0``  (exterior): R0 is the largest R with ``Q_{R^2}`` meeting Q.
  An exact polynomial method exists for this case but is not implemented;
  refine with the estimators.
* ``h(y*) ~ 0``  (boundary): ``||y* - C0|| <= R0 <= ||y* - C0|| / sqrt(lam)``.

In every case ``R0^2 <= -value / lam``: the farthest point z has ``h(z) = 0``
and lies in ``{h <= 1}``, so ``-lam R0^2 = h(z) - g(z) >= value``.  This cap is
reported separately as ``r_cap``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dc_solver import DcSolution, minimize_h, project_onto
from .geometry import Instance, h_value

INTERIOR = "InteriorCase"
EXTERIOR = "ExteriorCase"
BOUNDARY = "BoundaryCase"


@dataclass(frozen=True, eq=False)
class Classification:
    case: str
    r_lower: float
    r_upper: float | None
    y_star: np.ndarray
    h_at_y: float
    witness: np.ndarray | None = None  # member of Q at distance r_lower, when certified
    r_cap: float | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {"case": self.case, "r_lower": self.r_lower, "r_upper": self.r_upper,
                "r_cap": self.r_cap, "h_at_y": self.h_at_y}


def _certified_member(inst: Instance, x, interior=None, rounds: int = 80):
    """A point of Q on the segment from an interior point towards ``x``.

    Returns the farthest point along the segment with ``h <= 0`` (by
    bisection; ``h`` is convex so the feasible part is an interval), or
    None when no interior point exists.
    """
    q = inst.q
    x = np.asarray(x, dtype=float)
    if h_value(q, x) <= 0:
        return x
    z = minimize_h(q) if interior is None else np.asarray(interior, dtype=float)
    if h_value(q, z) > 0:
        return None
    lo, hi = 0.0, 1.0
    for _ in range(rounds):
        mid = 0.5 * (lo + hi)
        if h_value(q, z + mid * (x - z)) <= 0:
            lo = mid
        else:
            hi = mid
    return z + lo * (x - z)


def _ray_exit(q, p, u):
    """Largest ``t >= 0`` with ``p + t u`` in every ball, for ``p`` inside all of them."""
    d = p - q.centers
    b = d @ u
    c = np.sum(d * d, axis=1) - q.radii_sq
    disc = np.maximum(b * b - c, 0.0)
    return float(np.min(-b + np.sqrt(disc)))


def _ray_lower_bound(inst: Instance, y):
    """Farthest of the exit points of rays cast from ``y`` (a point of Q)."""
    q = inst.q
    dirs = [y - inst.c0]
    for k in range(q.m):
        v = q.centers[k] - inst.c0
        nv = np.linalg.norm(v)
        anti = q.centers[k] + (q.radii[k] * v / nv if nv > 0 else 0.0)
        dirs.append(anti - y)
    # coordinate axes keep the bound alive when every centre coincides with C0
    eye = np.eye(q.dim)
    dirs.extend(eye)
    dirs.extend(-eye)
    best, best_p = float(np.linalg.norm(y - inst.c0)), y
    for u in dirs:
        nu = np.linalg.norm(u)
        if nu == 0:
            continue
        u = u / nu
        p = _certified_member(inst, y + _ray_exit(q, y, u) * u, interior=y)
        if p is None:
            continue
        dist = float(np.linalg.norm(p - inst.c0))
        if dist > best:
            best, best_p = dist, p
    return best, best_p


def classify(inst: Instance, sol: DcSolution, boundary_tol: float = 1e-6) -> Classification:
    """Decide which case the DC minimiser falls in.

    Parameters
    ----------
    inst : Instance
    sol : DcSolution
        Converged output of :func:`~ballmax.dc_solver.minimize_dc`.
    boundary_tol : float
        Absolute band on ``h(y*)`` treated as the boundary case.

    Returns
    -------
    Classification
        ``r_lower`` is always the distance of a verified member of Q.
    """
    if boundary_tol <= 0:
        raise ValueError("boundary_tol must be positive")
    y = np.asarray(sol.y_star)
    hy = float(h_value(inst.q, y))
    r_cap = math.sqrt(max(-sol.value, 0.0) / inst.lam)
    if hy < -boundary_tol:
        r_lo, p = _ray_lower_bound(inst, y)
        return Classification(INTERIOR, r_lo, None, y, hy, witness=p, r_cap=r_cap)
    if hy > boundary_tol:
        # any member of Q gives a valid lower bound; use the one nearest y*
        p = _certified_member(inst, project_onto(inst.q, y))
        r_lo = 0.0
        if p is not None:
            r_lo, p = _ray_lower_bound(inst, p)
        return Classification(EXTERIOR, r_lo, None, y, hy, witness=p, r_cap=r_cap,
                              note="exact method for this case not implemented; refine with the estimators")
    p = _certified_member(inst, y)
    if p is None:
        p = y
    r_lo = float(np.linalg.norm(p - inst.c0))
    r_up = float(np.linalg.norm(y - inst.c0)) / math.sqrt(inst.lam)
    return Classification(BOUNDARY, r_lo, max(r_up, r_lo), y, hy, witness=p, r_cap=r_cap)


def certify_interval(c: Classification, inst: Instance | None = None) -> tuple[float, float | None]:
    """``(lower, upper)`` bounds on R0; upper is None outside the boundary case."""
    if c.case == BOUNDARY:
        return c.r_lower, c.r_upper
    return c.r_lower, None
