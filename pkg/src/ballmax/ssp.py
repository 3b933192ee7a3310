"""
Subset-sum instances encoded as farthest-point problems over ball intersections.

For ``S in R^n``, ``T`` and ``beta > 0`` the polytope ``{0 <= x <= 1, S.x <= T}``
is paired with ``C0 = (1 - beta S) / 2``.  At every hypercube corner,
``||x - C0||^2 = ||C0||^2 + beta S.x``, so the farthest feasible corner reaches
``||C0||^2 + beta T`` exactly when some subset of S sums to T.

Each facet ``a.x <= b`` is replaced by a ball whose boundary cuts the
circumscribed sphere ``B(1/2, sqrt(n)/2)`` in the same (n-2)-sphere as the
hyperplane does.  With unit normal ``a``, ``delta = b - a.c_s`` and depth
``s > delta`` the ball has centre ``c_s + (delta - s) a`` and radius
``sqrt(s^2 + rho^2 - delta^2)``; on the sphere, ball membership and
``a.x <= b`` coincide, so corners keep their feasibility status.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import FacetMissesSphere, TooLarge
from .geometry import BallSet, h_value

SOLVABLE = "Solvable"
UNSOLVABLE = "Unsolvable"
INCONCLUSIVE = "Inconclusive"
MAX_BRUTE_N = 24


@dataclass(frozen=True, eq=False)
class SspInstance:
    s: np.ndarray
    t: float
    beta: float | None = None

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        if s.ndim != 1 or s.size < 1:
            raise ValueError("s must be a non-empty vector")
        if not np.all(np.isfinite(s)) or np.any(s <= 0):
            raise ValueError("s must contain positive finite values")
        s.setflags(write=False)
        beta = 1.0 / (2.0 * s.sum()) if self.beta is None else float(self.beta)
        if not beta > 0:
            raise ValueError("beta must be positive")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "beta", beta)

    @property
    def n(self) -> int:
        return self.s.size

    @property
    def c0(self) -> np.ndarray:
        return (1.0 - self.beta * self.s) / 2.0

    def target_sq(self) -> float:
        """``||C0||^2 + beta T``, the squared farthest distance iff solvable."""
        c0 = self.c0
        return float(c0 @ c0 + self.beta * self.t)


@dataclass(frozen=True, eq=False)
class Encoding:
    c0: np.ndarray
    sphere_center: np.ndarray
    sphere_radius: float
    balls: BallSet
    offset_param: float
    facets: list = field(default_factory=list)   # (label, unit normal, offset) of kept facets
    dropped: list = field(default_factory=list)  # (label, reason)
    fallback: bool = False

    def to_dict(self) -> dict:
        return {
            "c0": self.c0.tolist(),
            "sphere_center": self.sphere_center.tolist(),
            "sphere_radius": self.sphere_radius,
            "offset_param": self.offset_param,
            "kept_facets": [lab for lab, _, _ in self.facets],
            "dropped_facets": [{"facet": lab, "reason": why} for lab, why in self.dropped],
            "fallback_circumscribed_ball": self.fallback,
        }


def _halfspaces(ssp: SspInstance):
    n = ssp.n
    for i in range(n):
        e = np.zeros(n)
        e[i] = -1.0
        yield f"x{i}>=0", e, 0.0
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        yield f"x{i}<=1", e, 1.0
    yield "S.x<=T", ssp.s.copy(), ssp.t


def encode(ssp: SspInstance, offset_param: float | None = None, tol: float = 1e-12) -> Encoding:
    """Replace each facet of ``{0 <= x <= 1, S.x <= T}`` by its imprint ball.

    A facet touching the sphere from the infeasible side keeps a ball
    tangent to the sphere at that single point.  Facets tangent to or
    missing the circumscribed sphere on the feasible side, and the sum
    facet when ``T >= sum(S)``, constrain no corner and are dropped with a
    warning.  If nothing is left (only possible for ``n = 1``) the
    circumscribed ball itself is used.

    Raises
    ------
    FacetMissesSphere
        A facet leaves the whole sphere on its infeasible side.
    """
    n = ssp.n
    cs = np.full(n, 0.5)
    rho = math.sqrt(n) / 2.0
    depth = rho if offset_param is None else float(offset_param)
    if not depth > 0:
        raise ValueError("offset_param must be positive")
    centers, radii_sq, kept, dropped = [], [], [], []
    for label, a, b in _halfspaces(ssp):
        norm = np.linalg.norm(a)
        a_hat, b_hat = a / norm, b / norm
        delta = b_hat - a_hat @ cs
        if label == "S.x<=T" and ssp.t >= ssp.s.sum():
            dropped.append((label, "redundant on the hypercube"))
            continue
        if delta < -rho * (1 + tol):
            raise FacetMissesSphere(label, delta, rho)
        delta = max(delta, -rho)
        if delta >= rho * (1 - tol):
            dropped.append((label, "tangent to or outside the sphere"))
            continue
        if depth <= delta:
            raise ValueError(f"offset_param {depth:g} must exceed facet offset {delta:g} ({label})")
        p = cs + delta * a_hat
        centers.append(p - depth * a_hat)
        radii_sq.append(depth**2 + rho**2 - delta**2)
        kept.append((label, a_hat, b_hat))
    for label, why in dropped:
        warnings.warn(f"facet {label} dropped: {why}", stacklevel=2)
    fallback = not centers
    if fallback:
        centers, radii_sq = [cs], [rho**2]
    balls = BallSet(np.array(centers), np.sqrt(radii_sq))
    return Encoding(ssp.c0, cs, rho, balls, depth, kept, dropped, fallback)


def corners(n: int) -> np.ndarray:
    """All ``2^n`` vertices of the unit hypercube, one per row (bit i is column i)."""
    if n > MAX_BRUTE_N:
        raise TooLarge(f"2^{n} corners is too many (n <= {MAX_BRUTE_N})")
    idx = np.arange(2**n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(float)


def corner_r0(enc: Encoding, tol: float = 1e-9) -> float | None:
    """Largest distance from C0 over hypercube corners that lie in every encoded ball."""
    X = corners(enc.c0.size)
    inside = h_value(enc.balls, X) <= tol
    if not np.any(inside):
        return None
    return float(np.sqrt(np.max(np.sum((X[inside] - enc.c0) ** 2, axis=1))))


def decide_by_distance(ssp: SspInstance, r0_estimate: float | None, tol: float = 1e-9) -> str:
    """Read the SSP answer off a farthest-distance value.

    Solvable when ``r0^2 >= ||C0||^2 + beta T - tol``; Unsolvable when
    ``r0^2 <= ||C0||^2 + beta T - beta/2 + tol`` (integer data leave a gap of
    at least ``beta``); Inconclusive in between.  ``None`` (no feasible
    corner) is Unsolvable.
    """
    if r0_estimate is None:
        return UNSOLVABLE
    target = ssp.target_sq()
    r2 = r0_estimate**2
    if r2 >= target - tol:
        return SOLVABLE
    if r2 <= target - ssp.beta / 2 + tol:
        return UNSOLVABLE
    return INCONCLUSIVE


def brute_force_ssp(ssp: SspInstance, chunk_bits: int = 16):
    """Exact decision by enumeration: ``(True, witness)`` or ``(False, None)``."""
    n = ssp.n
    if n > MAX_BRUTE_N:
        raise TooLarge(f"n = {n} exceeds {MAX_BRUTE_N}")
    s = ssp.s
    step = 1 << min(chunk_bits, n)
    bits = np.arange(n)
    for start in range(0, 1 << n, step):
        idx = np.arange(start, min(start + step, 1 << n), dtype=np.int64)
        X = (idx[:, None] >> bits) & 1
        hit = np.flatnonzero(np.isclose(X @ s, ssp.t, rtol=0, atol=1e-9))
        if hit.size:
            return True, X[hit[0]].astype(int)
    return False, None
