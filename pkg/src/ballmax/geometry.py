"""
Exact primitives for intersections of closed balls.

An intersection ``Q = ∩ B̄(C_k, r_k)`` is the zero sub-level set of

    h(x) = max_k ||x - C_k||^2 - r_k^2

and the farthest-point problem from ``C0`` is studied through the
difference ``h(x) - lam * ||x - C0||^2``, which for ``0 < lam < 1`` is a
maximum of strongly convex quadratics (the "DC pieces" below).

All point-valued arguments accept either a single point of shape ``(n,)``
or a stack of points of shape ``(N, n)``; scalar results follow the same
leading shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import DimensionMismatch, EmptySet, InvalidInstance


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise InvalidInstance(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInstance(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen_array(self.center, 1, "center"))
        r = float(self.radius)
        if not np.isfinite(r) or r <= 0:
            raise InvalidInstance(f"radius must be positive and finite, got {self.radius!r}")
        object.__setattr__(self, "radius", r)


@dataclass(frozen=True, eq=False)
class BallSet:
    """Ordered intersection of closed balls; row ``k`` of ``centers`` is ball ``k``."""

    centers: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        centers = _frozen_array(self.centers, 2, "centers")
        radii = _frozen_array(self.radii, 1, "radii")
        if centers.shape[0] < 1:
            raise InvalidInstance("a BallSet needs at least one ball")
        if centers.shape[1] < 1:
            raise InvalidInstance("dimension must be positive")
        if radii.shape[0] != centers.shape[0]:
            raise InvalidInstance("centers and radii disagree on the number of balls")
        if np.any(radii <= 0):
            raise InvalidInstance("radii must be strictly positive")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "radii", radii)

    @classmethod
    def from_balls(cls, balls: Sequence[Ball]) -> "BallSet":
        balls = list(balls)
        if not balls:
            raise InvalidInstance("a BallSet needs at least one ball")
        dims = {b.center.shape[0] for b in balls}
        if len(dims) != 1:
            raise DimensionMismatch(f"ball centers have mixed dimensions {sorted(dims)}")
        return cls(np.stack([b.center for b in balls]), np.array([b.radius for b in balls]))

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    @property
    def m(self) -> int:
        return self.centers.shape[0]

    @property
    def radii_sq(self) -> np.ndarray:
        return self.radii**2

    @property
    def balls(self) -> list[Ball]:
        return [Ball(c, r) for c, r in zip(self.centers, self.radii)]

    def contains(self, x, tol: float = 0.0):
        """Per-ball membership test (no use of ``h``), vectorised over points."""
        x = _check_points(x, self.dim)
        d2 = np.sum((x[..., None, :] - self.centers) ** 2, axis=-1)
        return np.all(d2 <= self.radii_sq + tol, axis=-1)

    def same_as(self, other: "BallSet", atol: float = 0.0) -> bool:
        return (
            self.centers.shape == other.centers.shape
            and np.allclose(self.centers, other.centers, rtol=0, atol=atol)
            and np.allclose(self.radii, other.radii, rtol=0, atol=atol)
        )


@dataclass(frozen=True, eq=False)
class Instance:
    """A ball intersection ``q``, the query point ``c0`` and the DC weight ``lam``."""

    q: BallSet
    c0: np.ndarray
    lam: float

    def __post_init__(self):
        c0 = _frozen_array(self.c0, 1, "c0")
        if c0.shape[0] != self.q.dim:
            raise DimensionMismatch(f"c0 has dimension {c0.shape[0]}, balls have {self.q.dim}")
        lam = float(self.lam)
        if not (0.0 < lam < 1.0):
            raise InvalidInstance(f"lambda must lie in (0, 1), got {self.lam!r}")
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "lam", lam)

    @property
    def dim(self) -> int:
        return self.q.dim

    def with_lambda(self, lam: float) -> "Instance":
        return Instance(self.q, self.c0, lam)

    def with_balls(self, q: BallSet) -> "Instance":
        return Instance(q, self.c0, self.lam)

    def scale(self) -> float:
        """Characteristic length of the instance, used to scale tolerances."""
        spread = np.max(np.abs(self.q.centers - self.c0))
        return float(max(1.0, spread, np.max(self.q.radii)))


def _check_points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != dim:
        raise DimensionMismatch(f"expected points of dimension {dim}, got shape {x.shape}")
    return x


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return np.sum((x[..., None, :] - centers) ** 2, axis=-1)


def h_value(q: BallSet, x):
    """``max_k ||x - C_k||^2 - r_k^2``; non-positive exactly on the intersection."""
    x = _check_points(x, q.dim)
    return np.max(_sq_dists(x, q.centers) - q.radii_sq, axis=-1)


def g_value(inst: Instance, x):
    """``lam * ||x - C0||^2``."""
    x = _check_points(x, inst.dim)
    return inst.lam * np.sum((x - inst.c0) ** 2, axis=-1)


@dataclass(frozen=True, eq=False)
class DcPiece:
    """One branch ``scale * ||x - center||^2 + offset`` of ``h - g``."""

    index: int
    center: np.ndarray
    offset: float
    scale: float

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale * np.sum((x - self.center) ** 2, axis=-1) + self.offset


def piece_arrays(inst: Instance) -> tuple[np.ndarray, np.ndarray, float]:
    """Centers ``(m, n)``, offsets ``(m,)`` and common scale of the DC pieces."""
    lam = inst.lam
    centers = (inst.q.centers - lam * inst.c0) / (1.0 - lam)
    dist_sq = np.sum((inst.c0 - inst.q.centers) ** 2, axis=1)
    offsets = -lam / (1.0 - lam) * dist_sq - inst.q.radii_sq
    return centers, offsets, 1.0 - lam


def dc_pieces(inst: Instance) -> list[DcPiece]:
    centers, offsets, scale = piece_arrays(inst)
    return [DcPiece(k, centers[k], float(offsets[k]), scale) for k in range(inst.q.m)]


def dc_objective(inst: Instance, x):
    """``h(x) - g(x)`` evaluated directly from its definition."""
    return h_value(inst.q, x) - g_value(inst, x)


def dc_objective_pieces(inst: Instance, x):
    """``h(x) - g(x)`` evaluated as the maximum over the DC pieces."""
    x = _check_points(x, inst.dim)
    centers, offsets, scale = piece_arrays(inst)
    return np.max(scale * _sq_dists(x, centers) + offsets, axis=-1)


def qset_params(inst: Instance, r_sq: float) -> tuple[np.ndarray, np.ndarray]:
    """Centers and squared radii of ``{x : h(x) - g(x) <= -lam * r_sq}``.

    Squared radii may be non-positive; see :func:`qset_at` for the checked form.
    """
    if r_sq < 0:
        raise ValueError("r_sq must be non-negative")
    lam = inst.lam
    centers = (inst.q.centers - lam * inst.c0) / (1.0 - lam)
    dist_sq = np.sum((inst.c0 - inst.q.centers) ** 2, axis=1)
    radii_sq = (-lam * r_sq + lam / (1.0 - lam) * dist_sq + inst.q.radii_sq) / (1.0 - lam)
    return centers, radii_sq


def qset_at(inst: Instance, r_sq: float) -> BallSet:
    """The max-indicator set for probe ``R^2 = r_sq`` as a BallSet.

    Raises :class:`EmptySet` listing every ball whose squared radius is
    non-positive.
    """
    centers, radii_sq = qset_params(inst, r_sq)
    empty = np.flatnonzero(radii_sq <= 0)
    if empty.size:
        raise EmptySet(empty.tolist(), radii_sq)
    return BallSet(centers, np.sqrt(radii_sq))


@dataclass(frozen=True, eq=False)
class HullResult:
    """Outcome of a hull-membership test.

    When ``inside`` is False, ``normal`` (unit) and ``offset`` describe a
    hyperplane with ``normal @ c0 + offset < 0 < normal @ C_k + offset``.
    """

    inside: bool
    distance: float
    weights: np.ndarray | None = None
    normal: np.ndarray | None = None
    offset: float | None = None

    def __bool__(self):
        return self.inside


_LP_OPTS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def hull_contains(centers, c0, tol: float = 1e-9) -> HullResult:
    """Decide whether ``c0`` lies within ``tol`` (sup-norm) of ``conv(centers)``.

    An LP gives the sup-norm distance from ``c0`` to the hull over convex
    weights.  When that exceeds ``tol`` the separating hyperplane bisects
    ``c0`` and its Euclidean nearest hull point (a non-negative least-squares
    solve), with a max-margin LP as fallback. A separation that fails exact verification is reported as
    Inside, which is the conservative answer for the forward-sequence loop.
    """
    pts = np.atleast_2d(np.asarray(centers, dtype=float))
    c0 = np.asarray(c0, dtype=float)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if pts.shape[1] != c0.shape[0]:
        raise DimensionMismatch("centers and c0 differ in dimension")
    m, n = pts.shape
    scale = max(1.0, float(np.max(np.abs(pts))), float(np.max(np.abs(c0))))
    shift = c0.copy()
    P = (pts - shift) / scale  # c0 sits at the origin in these coordinates

    # min t  s.t.  -t <= P^T w <= t,  sum w = 1,  w >= 0
    cost = np.zeros(m + 1)
    cost[-1] = 1.0
    A_ub = np.block([[P.T, -np.ones((n, 1))], [-P.T, -np.ones((n, 1))]])
    b_ub = np.zeros(2 * n)
    A_eq = np.concatenate([np.ones(m), [0.0]])[None, :]
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * (m + 1), method="highs", options=_LP_OPTS)
    w = np.clip(res.x[:m], 0.0, None)
    w /= w.sum()
    dist = float(np.max(np.abs(w @ pts - c0)))
    if dist <= tol:
        return HullResult(True, dist, weights=w)

    # Euclidean nearest hull point: the simplex constraint rides along as a heavily weighted row
    big = 1e3
    w2, _ = nnls(np.vstack([P.T, big * np.ones((1, m))]), np.concatenate([np.zeros(n), [big]]))
    if w2.sum() > 0:
        near = (w2 / w2.sum()) @ P
        gap = float(np.linalg.norm(near))
        if gap > 0:
            normal = near / gap
            offset = -float(normal @ c0) - 0.5 * gap * scale
            if normal @ c0 + offset < 0 and np.all(pts @ normal + offset > 0):
                return HullResult(False, dist, normal=normal, offset=offset)

    # fallback: max s  s.t.  A.P_k + b >= s,  A.0 + b <= -s,  |A_i| <= 1
    cost = np.zeros(n + 2)
    cost[-1] = -1.0
    rows = [np.concatenate([-P[k], [-1.0, 1.0]]) for k in range(m)]
    rows.append(np.concatenate([np.zeros(n), [1.0, 1.0]]))
    res = linprog(cost, A_ub=np.array(rows), b_ub=np.zeros(m + 1),
                  bounds=[(-1, 1)] * n + [(None, None), (0, 1)], method="highs",
                  options=_LP_OPTS)
    if res.status == 0 and res.x[-1] > 0:
        a = res.x[:n]
        norm = np.linalg.norm(a)
        if norm > 0:
            normal = a / norm
            offset = -float(normal @ c0) + res.x[n] / norm * scale
            if normal @ c0 + offset < 0 and np.all(pts @ normal + offset > 0):
                return HullResult(False, dist, normal=normal, offset=offset)
    return HullResult(True, dist, weights=w)
