"""Random and hand-built instances used by the tests, the acceptance suite and the CLI demos."""

from __future__ import annotations

import numpy as np

from .dc_solver import minimize_dc
from .geometry import BallSet, Instance, h_value, hull_contains


def random_instance(rng: np.random.Generator, n: int, m: int, lam: float,
                    spread: float = 1.0, radius=(1.0, 2.0)) -> Instance:
    """Centres uniform in ``[-spread, spread]^n``, radii uniform in ``radius``; may be empty."""
    C = rng.uniform(-spread, spread, (m, n))
    r = rng.uniform(radius[0], radius[1], m)
    c0 = rng.uniform(-spread, spread, n)
    return Instance(BallSet(C, r), c0, lam)


def random_2d_in_hull(rng: np.random.Generator, m_max: int = 8, lam: float = 0.5,
                      radius=(1.2, 2.0)) -> Instance:
    """2D instance with centres in the unit disk and C0 inside both the hull and Q."""
    while True:
        m = int(rng.integers(2, m_max + 1))
        ang = rng.uniform(0, 2 * np.pi, m)
        rad = np.sqrt(rng.uniform(0, 1, m))
        C = np.c_[rad * np.cos(ang), rad * np.sin(ang)]
        r = rng.uniform(radius[0], radius[1], m)
        c0 = rng.dirichlet(np.ones(m)) @ C
        q = BallSet(C, r)
        if h_value(q, c0) < 0 and hull_contains(C, c0).inside:
            return Instance(q, c0, lam)


def random_2d_outside_hull(rng: np.random.Generator, m_max: int = 6, lam: float = 0.5) -> Instance:
    """2D instance with C0 strictly outside the hull of the centres."""
    while True:
        m = int(rng.integers(1, m_max + 1))
        C = rng.uniform(-1, 1, (m, 2))
        r = rng.uniform(1.2, 2.0, m)
        c0 = rng.uniform(-4, 4, 2)
        if not hull_contains(C, c0).inside:
            q = BallSet(C, r)
            if h_value(q, C.mean(axis=0)) <= 0 or m == 1:
                return Instance(q, c0, lam)


def boundary_instance(base: Instance) -> Instance | None:
    """Shift all squared radii so the DC minimiser lands on the boundary of Q.

    Adding ``t`` to every ``r_k^2`` shifts every DC piece by the same
    constant, so the unconstrained minimiser does not move; choosing
    ``t = h(y*)`` puts it on ``h = 0``.  Returns None when the shift would
    make a radius non-positive or the constraint ``h <= 1`` was active.
    """
    sol = minimize_dc(base)
    if sol.h_at_y >= 1.0 - 1e-6:
        return None
    r2 = base.q.radii_sq + sol.h_at_y
    if np.any(r2 <= 0):
        return None
    return base.with_balls(BallSet(base.q.centers, np.sqrt(r2)))


def symmetric_instance(m: int = 6, radius: float = 1.5, lam: float = 0.2) -> Instance:
    """``m`` unit-circle centres around C0 = 0; C0 stays inside the hull forever."""
    ang = 2 * np.pi * np.arange(m) / m
    C = np.c_[np.cos(ang), np.sin(ang)]
    return Instance(BallSet(C, np.full(m, radius)), np.zeros(2), lam)


def lens_instance(lam: float = 0.5) -> Instance:
    """Two unit disks at ``(+-0.5, 0)`` with C0 at the origin."""
    return Instance(BallSet([[-0.5, 0.0], [0.5, 0.0]], [1.0, 1.0]), [0.0, 0.0], lam)


def unit_ball(n: int = 2, c0=None, lam: float = 0.5) -> Instance:
    c0 = np.zeros(n) if c0 is None else np.asarray(c0, dtype=float)
    return Instance(BallSet(np.zeros((1, n)), [1.0]), c0, lam)
