"""
Two-sided sequence of ball intersections generated from an instance.

Index convention: ``i > 0`` applies the forward affine map
``C -> (C - lam*C0) / (1 - lam)`` i times (centres move away from C0),
``i < 0`` applies the contracting inverse ``C -> (1 - lam)*C + lam*C0``
``|i|`` times (centres collapse onto C0), and ``i = 0`` is the input set.

Centres never depend on the probe radius ``R``; squared radii do, and are
evaluated in closed form.  Forward elements are built from the recurrence
``r'^2 = (-lam R^2 + lam/(1-lam) ||C0 - C||^2 + r^2) / (1 - lam)``; the
backward closed form inverts it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import SequenceOverflow
from .geometry import HullResult, Instance, hull_contains

OVERFLOW_LIMIT = 1e12


def _check_forward(lam: float, i: int) -> None:
    # (1 - lam)^{-i} > 1e12  <=>  -i * log(1 - lam) > log(1e12)
    if -i * np.log1p(-lam) > np.log(OVERFLOW_LIMIT):
        raise SequenceOverflow(
            f"forward index {i} with lambda={lam} exceeds the growth limit {OVERFLOW_LIMIT:g}")


def forward_centers(inst: Instance, i: int) -> np.ndarray:
    """Centres after ``i >= 1`` forward steps, ``(1-lam)^{-i} (C_k - (1 - (1-lam)^i) C0)``."""
    if i < 1:
        raise ValueError("forward index must be >= 1")
    _check_forward(inst.lam, i)
    a_i = (1.0 - inst.lam) ** i
    return (inst.q.centers - (1.0 - a_i) * inst.c0) / a_i


def backward_centers(inst: Instance, i: int) -> np.ndarray:
    """Centres after ``i >= 1`` backward steps, ``(1-lam)^i C_k + (1 - (1-lam)^i) C0``."""
    if i < 1:
        raise ValueError("backward index must be >= 1")
    a_i = (1.0 - inst.lam) ** i
    return a_i * inst.q.centers + (1.0 - a_i) * inst.c0


def _dist_sq(centers, c0):
    return np.sum((np.asarray(centers) - c0) ** 2, axis=-1)


def backward_radii_sq(inst: Instance, i: int, r0_sq: float) -> np.ndarray:
    """Squared radii after ``i >= 1`` backward steps at probe ``R^2 = r0_sq``.

    ``R^2 + (1-lam)^i (r_k^2 - R^2 - (1 - (1-lam)^i) ||C0 - C_k||^2)``.
    Entries may be non-positive, meaning that ball is empty.
    """
    if i < 1:
        raise ValueError("backward index must be >= 1")
    if r0_sq < 0:
        raise ValueError("r0_sq must be non-negative")
    a_i = (1.0 - inst.lam) ** i
    d2 = _dist_sq(inst.q.centers, inst.c0)
    return r0_sq + a_i * (inst.q.radii_sq - r0_sq - (1.0 - a_i) * d2)


def forward_radii_sq(inst: Instance, prev_radii_sq, prev_centers, r0_sq: float) -> np.ndarray:
    """One forward step of the radius recurrence from ``(prev_centers, prev_radii_sq)``."""
    prev_radii_sq = np.asarray(prev_radii_sq, dtype=float)
    prev_centers = np.atleast_2d(np.asarray(prev_centers, dtype=float))
    if prev_radii_sq.shape[0] != prev_centers.shape[0]:
        raise ValueError("prev_radii_sq and prev_centers disagree in length")
    lam = inst.lam
    d2 = _dist_sq(prev_centers, inst.c0)
    return (-lam * r0_sq + lam / (1.0 - lam) * d2 + prev_radii_sq) / (1.0 - lam)


def forward_radii_sq_closed(inst: Instance, i: int, r0_sq: float) -> np.ndarray:
    """Closed form of ``i >= 1`` forward radius steps starting from the input set."""
    if i < 1:
        raise ValueError("forward index must be >= 1")
    _check_forward(inst.lam, i)
    a_i = (1.0 - inst.lam) ** i
    d2 = _dist_sq(inst.q.centers, inst.c0)
    return r0_sq + (inst.q.radii_sq - r0_sq) / a_i + (1.0 - a_i) * d2 / a_i**2


@dataclass(frozen=True, eq=False)
class SequenceElement:
    """Generation ``index`` of the sequence at a given probe radius.

    ``radii_sq`` is None for centre-only elements (Procedure A traces).
    Empty balls are kept and flagged rather than dropped.
    """

    index: int
    centers: np.ndarray
    radii_sq: np.ndarray | None
    c0: np.ndarray
    r0_sq: float | None = None

    @property
    def empty(self) -> np.ndarray:
        if self.radii_sq is None:
            raise ValueError("element carries no radii")
        return self.radii_sq <= 0

    @property
    def any_empty(self) -> bool:
        return bool(np.any(self.empty))

    @property
    def all_empty(self) -> bool:
        return bool(np.all(self.empty))

    @cached_property
    def hull(self) -> HullResult:
        return hull_contains(self.centers, self.c0)

    @property
    def hull_status(self) -> str:
        return "Inside" if self.hull.inside else "Outside"

    def contains(self, x, tol: float = 0.0):
        """Membership in every ball; always False when any ball is empty."""
        if self.radii_sq is None:
            raise ValueError("element carries no radii")
        x = np.asarray(x, dtype=float)
        d2 = np.sum((x[..., None, :] - self.centers) ** 2, axis=-1)
        inside = np.all(d2 <= self.radii_sq + tol, axis=-1)
        if self.any_empty:
            return np.zeros_like(inside)
        return inside

    def to_dict(self) -> dict:
        out = {
            "index": self.index,
            "centers": self.centers.tolist(),
            "radii_sq": None if self.radii_sq is None else self.radii_sq.tolist(),
            "hull_status": self.hull_status,
        }
        if self.radii_sq is not None:
            out["empty"] = self.empty.tolist()
        return out


def element_at(inst: Instance, i: int, r0_sq: float | None) -> SequenceElement:
    """The ``i``-th element at probe ``R^2 = r0_sq`` (centres only when None)."""
    i = int(i)
    if r0_sq is not None and r0_sq < 0:
        raise ValueError("r0_sq must be non-negative")
    if i == 0:
        centers = np.array(inst.q.centers)
        radii_sq = None if r0_sq is None else np.array(inst.q.radii_sq)
    elif i > 0:
        centers = forward_centers(inst, i)
        radii_sq = None if r0_sq is None else forward_radii_sq_closed(inst, i, r0_sq)
    else:
        centers = backward_centers(inst, -i)
        radii_sq = None if r0_sq is None else backward_radii_sq(inst, -i, r0_sq)
    centers.setflags(write=False)
    if radii_sq is not None:
        radii_sq.setflags(write=False)
    return SequenceElement(i, centers, radii_sq, inst.c0, r0_sq)


@dataclass(frozen=True)
class ProcedureAResult:
    terminated: bool
    iterations: int
    trace: list
    stopped_by: str  # "outside", "max_iter" or "overflow"


def procedure_a(inst: Instance, max_iter: int, r0_sq: float | None = None) -> ProcedureAResult:
    """Push centres forward while C0 stays inside their convex hull.

    Returns ``terminated=True`` with the index at which C0 left the hull,
    or ``terminated=False`` once ``max_iter`` steps (or the overflow limit)
    are reached with C0 still inside.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    trace = []
    for i in range(max_iter + 1):
        try:
            el = element_at(inst, i, r0_sq)
        except SequenceOverflow:
            return ProcedureAResult(False, i - 1, trace, "overflow")
        trace.append(el)
        if not el.hull.inside:
            return ProcedureAResult(True, i, trace, "outside")
    return ProcedureAResult(False, max_iter, trace, "max_iter")
