"""
Solver for the convex subproblem

    y* = argmin { h(x) - lam * ||x - C0||^2 : h(x) <= 1 }.

Every branch of the objective is ``(1 - lam) * ||x - D_k||^2 + e_k`` and
every constraint is a ball ``||x - C_j||^2 <= r_j^2 + 1``, so the problem is
a minimax of strongly convex quadratics over an intersection of balls.

The method runs in two phases:

1. projected subgradient descent, the projection onto the inflated balls
   being computed by Dykstra's alternating scheme;
2. an active-set Newton polish on the KKT system of the pieces and
   constraints found near-active in phase 1. A polished point is accepted
   only when it passes an explicit KKT check (feasibility, non-negative
   multipliers, complementarity, small stationarity residual), which for a
   convex problem certifies global optimality.

If the polish cannot certify a point, phase 1 resumes with a larger budget.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MaxIterExceeded, NoFeasibleStart
from .geometry import Instance, h_value, piece_arrays

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOpts:
    tol: float = 1e-8
    feas_tol: float = 1e-9
    max_iter: int = 200_000
    activity_tol: float = 1e-8
    record_trace: bool = False


@dataclass(frozen=True, eq=False)
class DcSolution:
    y_star: np.ndarray
    value: float
    r_lower: float
    h_at_y: float
    iterations: int
    residual: float
    weights: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class _Problem:
    """min_x max_k s*||x - D_k||^2 + e_k  s.t.  ||x - C_j||^2 <= rho_j."""

    D: np.ndarray
    e: np.ndarray
    s: float
    C: np.ndarray
    rho: np.ndarray

    def pieces(self, x):
        return self.s * np.sum((x - self.D) ** 2, axis=-1) + self.e

    def cons(self, x):
        return np.sum((x - self.C) ** 2, axis=-1) - self.rho

    def value(self, x):
        return float(np.max(self.pieces(x)))

    def scale(self):
        pts = np.vstack([self.D, self.C]) if len(self.C) else self.D
        return float(max(1.0, np.max(np.abs(pts))))


@dataclass
class _Polished:
    x: np.ndarray
    t: float
    w: np.ndarray
    mu: np.ndarray
    residual: float
    newton_iters: int


def _project(prob: _Problem, x, feas_tol, max_sweeps=200):
    """Euclidean projection onto the constraint balls (Dykstra).

    Phase 1 only needs an approximate projection; the polish certifies
    feasibility of the returned point.
    """
    if len(prob.C) == 0:
        return x
    viol = prob.cons(x)
    if np.max(viol) <= 0:
        return x
    radii = np.sqrt(prob.rho)
    y = x.copy()
    incr = np.zeros_like(prob.C)
    for _ in range(max_sweeps):
        moved = 0.0
        for j in range(len(prob.C)):
            z = y + incr[j]
            d = z - prob.C[j]
            nd = math.sqrt(d @ d)
            if nd > radii[j]:
                y_new = prob.C[j] + d * (radii[j] / nd)
            else:
                y_new = z
            incr[j] = z - y_new
            diff = y_new - y
            moved += diff @ diff
            y = y_new
        if moved <= 1e-24 * (1.0 + y @ y) and np.max(prob.cons(y)) <= feas_tol:
            break
    return y


def _subgradient(prob: _Problem, x0, n_iter, feas_tol, x_best=None, f_best=np.inf, start_iter=0):
    """Projected subgradient with diminishing steps ``2 / (mu (t + 2))``."""
    mu = 2.0 * prob.s
    x = _project(prob, x0, feas_tol)
    if x_best is None:
        x_best, f_best = x.copy(), prob.value(x)
    for t in range(start_iter, start_iter + n_iter):
        vals = prob.pieces(x)
        k = int(np.argmax(vals))
        g = 2.0 * prob.s * (x - prob.D[k])
        gn = float(g @ g)
        if gn == 0.0:
            return x, x.copy(), vals[k]
        x = _project(prob, x - (2.0 / (mu * (t + 2))) * g, feas_tol)
        fx = prob.value(x)
        if fx < f_best and (len(prob.C) == 0 or np.max(prob.cons(x)) <= feas_tol):
            x_best, f_best = x.copy(), fx
    return x, x_best, f_best


def _kkt_residual(prob, A, B, z, n):
    x = z[:n]
    t = z[n]
    w = z[n + 1:n + 1 + len(A)]
    mu = z[n + 1 + len(A):]
    dA = x - prob.D[A]
    dB = x - prob.C[B]
    r_a = prob.s * np.sum(dA**2, axis=1) + prob.e[A] - t
    r_b = np.sum(dB**2, axis=1) - prob.rho[B]
    r_x = 2.0 * prob.s * (w @ dA) + 2.0 * (mu @ dB)
    r_w = np.array([w.sum() - 1.0])
    F = np.concatenate([r_a, r_b, r_x, r_w])

    nA, nB = len(A), len(B)
    J = np.zeros((nA + nB + n + 1, n + 1 + nA + nB))
    J[:nA, :n] = 2.0 * prob.s * dA
    J[:nA, n] = -1.0
    J[nA:nA + nB, :n] = 2.0 * dB
    rows = slice(nA + nB, nA + nB + n)
    J[rows, :n] = 2.0 * (prob.s * w.sum() + mu.sum()) * np.eye(n)
    J[rows, n + 1:n + 1 + nA] = 2.0 * prob.s * dA.T
    J[rows, n + 1 + nA:] = 2.0 * dB.T
    J[-1, n + 1:n + 1 + nA] = 1.0
    return F, J


def _newton(prob: _Problem, A, B, x0, max_iter=60):
    n = x0.shape[0]
    dA = x0 - prob.D[A]
    dB = x0 - prob.C[B]
    # initial multipliers: least squares on stationarity + normalisation
    M = np.vstack([np.hstack([2 * prob.s * dA.T, 2 * dB.T]),
                   np.concatenate([np.ones(len(A)), np.zeros(len(B))])[None, :]])
    rhs = np.concatenate([np.zeros(n), [1.0]])
    lam0 = np.linalg.lstsq(M, rhs, rcond=None)[0]
    t0 = float(np.max(prob.pieces(x0)[A]))
    z = np.concatenate([x0, [t0], lam0])
    scale = prob.scale()
    F, J = _kkt_residual(prob, A, B, z, n)
    fn = np.linalg.norm(F)
    for it in range(1, max_iter + 1):
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        alpha = 1.0
        while alpha > 1e-6:
            z_try = z + alpha * step
            F_try, J_try = _kkt_residual(prob, A, B, z_try, n)
            fn_try = np.linalg.norm(F_try)
            if fn_try < fn or fn_try <= 1e-14 * scale**2:
                break
            alpha *= 0.5
        else:
            return z, fn, it
        z, F, J, fn = z_try, F_try, J_try, fn_try
        if fn <= 1e-13 * scale**2:
            return z, fn, it
    return z, fn, max_iter


def _certify(prob: _Problem, x, w_A, mu_B, A, B, opts: SolverOpts):
    """Stationarity residual of ``x`` for multipliers supported on ``A``, ``B``."""
    vals = prob.pieces(x)
    f = float(np.max(vals))
    scale = prob.scale()
    act_tol = opts.activity_tol * max(1.0, abs(f), scale**2)
    if len(prob.C) and np.max(prob.cons(x)) > opts.feas_tol:
        return np.inf
    if np.any(vals[A][w_A > 0] < f - act_tol):
        return np.inf
    if len(B) and np.any(np.abs(prob.cons(x)[B][mu_B > 0]) > max(act_tol, opts.feas_tol) * 10):
        return np.inf
    grad = 2.0 * prob.s * (w_A @ (x - prob.D[A])) + 2.0 * (mu_B @ (x - prob.C[B]))
    return float(np.linalg.norm(grad))


def _active_set_polish(prob: _Problem, x, A, B, opts: SolverOpts, max_rounds=40):
    n = x.shape[0]
    A, B = list(A), list(B)
    total = 0
    seen = set()
    for _ in range(max_rounds):
        key = (tuple(sorted(A)), tuple(sorted(B)))
        if key in seen:
            return None
        seen.add(key)
        z, fn, its = _newton(prob, np.array(A), np.array(B, dtype=int), x)
        total += its
        xz, t = z[:n], z[n]
        w = z[n + 1:n + 1 + len(A)]
        mu = z[n + 1 + len(A):]
        if not np.all(np.isfinite(z)):
            return None
        scale = prob.scale()
        mult_tol = 1e-10 * max(1.0, scale)
        neg_w = np.min(w) if len(w) else 0.0
        neg_mu = np.min(mu) if len(mu) else 0.0
        if min(neg_w, neg_mu) < -mult_tol:
            if neg_w <= neg_mu and len(A) > 1:
                A.pop(int(np.argmin(w)))
            elif len(B):
                B.pop(int(np.argmin(mu)))
            else:
                return None
            x = xz
            continue
        vals = prob.pieces(xz)
        viol_p = vals - t
        viol_p[A] = -np.inf
        viol_c = prob.cons(xz) if len(prob.C) else np.array([])
        if len(viol_c):
            viol_c = viol_c.copy()
            viol_c[B] = -np.inf
        tol_p = opts.activity_tol * max(1.0, abs(t))
        kp = int(np.argmax(viol_p))
        vp = viol_p[kp]
        kc = int(np.argmax(viol_c)) if len(viol_c) else -1
        vc = viol_c[kc] if len(viol_c) else -np.inf
        if vp > tol_p or vc > opts.feas_tol:
            if vp / max(1.0, abs(t)) >= vc:
                A.append(kp)
            else:
                B.append(kc)
            x = xz
            continue
        w_c = np.clip(w, 0, None)
        w_c = w_c / w_c.sum()
        mu_c = np.clip(mu, 0, None)
        res = _certify(prob, xz, w_c, mu_c, np.array(A), np.array(B, dtype=int), opts)
        if res <= opts.tol:
            return _Polished(xz, float(np.max(vals)), w_c, mu_c, res, total)
        return None
    return None


def _polish_candidates(prob: _Problem, x):
    vals = prob.pieces(x)
    f = float(np.max(vals))
    cons = prob.cons(x) if len(prob.C) else np.array([])
    scale = max(1.0, abs(f))
    seen = set()
    for eps in (1e-9, 1e-6, 1e-4, 1e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0):
        A = tuple(np.flatnonzero(vals >= f - eps * scale).tolist())
        B = tuple(np.flatnonzero(cons >= -eps * scale).tolist()) if len(cons) else ()
        if (A, B) not in seen:
            seen.add((A, B))
            yield list(A), list(B)


def _solve(prob: _Problem, x0, opts: SolverOpts, label="dc"):
    trace = []
    budget = 200
    used = 0
    x_cur, x_best, f_best = x0, None, np.inf
    while True:
        n_iter = min(budget, opts.max_iter - used)
        if n_iter > 0:
            x_cur, x_best, f_best = _subgradient(prob, x_cur, n_iter, opts.feas_tol,
                                                 x_best, f_best, start_iter=used)
            used += n_iter
        for A, B in _polish_candidates(prob, x_best):
            pol = _active_set_polish(prob, x_best, A, B, opts)
            if pol is not None and pol.t <= f_best + opts.tol * max(1.0, abs(f_best)):
                used += pol.newton_iters
                if opts.record_trace:
                    trace.append((used, pol.t, pol.residual))
                return pol, used, trace
        if opts.record_trace:
            trace.append((used, f_best, np.nan))
        if used >= opts.max_iter:
            raise MaxIterExceeded(x_best, f"{label}: no certified optimum after {used} iterations")
        budget *= 4


def _dc_problem(inst: Instance) -> _Problem:
    D, e, s = piece_arrays(inst)
    return _Problem(D, e, s, inst.q.centers, inst.q.radii_sq + 1.0)


def minimize_h(q, opts: SolverOpts | None = None, start=None) -> np.ndarray:
    """Unconstrained minimiser of ``h``, the deepest point of the intersection."""
    opts = opts or SolverOpts()
    prob = _Problem(q.centers, -q.radii_sq, 1.0, np.zeros((0, q.dim)), np.zeros(0))
    x0 = q.centers.mean(axis=0) if start is None else np.asarray(start, dtype=float)
    pol, _, _ = _solve(prob, x0, opts, label="min h")
    return pol.x


def project_onto(q, x, max_sweeps=2000) -> np.ndarray:
    """Approximate Euclidean projection of ``x`` onto the intersection ``q``.

    Dykstra iterations; the result may violate the balls by rounding-level
    amounts, so callers needing a certified member must check it.
    """
    prob = _Problem(np.zeros((1, q.dim)), np.zeros(1), 1.0, q.centers, q.radii_sq)
    return _project(prob, np.asarray(x, dtype=float), 0.0, max_sweeps=max_sweeps)


def feasible_start(inst: Instance, opts: SolverOpts | None = None) -> np.ndarray:
    """A point with ``h <= 1``.

    Tries the centroid of the centers, every ball center and ``C0`` in that
    order, then falls back to minimising ``h`` itself.
    """
    opts = opts or SolverOpts()
    q = inst.q
    for cand in [q.centers.mean(axis=0), *q.centers, inst.c0]:
        if h_value(q, cand) <= 1.0:
            return np.array(cand, dtype=float)
    x = minimize_h(q, opts)
    min_h = float(h_value(q, x))
    if min_h > 1.0:
        raise NoFeasibleStart(min_h)
    return x


def minimize_dc(inst: Instance, opts: SolverOpts | None = None, start=None) -> DcSolution:
    """Minimise ``h - g`` over ``{h <= 1}``.

    Parameters
    ----------
    inst : Instance
    opts : SolverOpts, optional
    start : array_like, optional
        Initial point; defaults to :func:`feasible_start`. Any start gives
        the same minimiser (the objective is strongly convex).

    Raises
    ------
    NoFeasibleStart
        ``{h <= 1}`` is empty.
    MaxIterExceeded
        No certified optimum within ``opts.max_iter`` iterations; the
        exception carries the best feasible iterate.
    """
    opts = opts or SolverOpts()
    if opts.tol <= 0 or opts.max_iter < 1:
        raise ValueError("tol must be positive and max_iter at least 1")
    x0 = feasible_start(inst, opts) if start is None else np.asarray(start, dtype=float)
    prob = _dc_problem(inst)
    pol, used, trace = _solve(prob, x0, opts)
    y = pol.x
    y.setflags(write=False)
    value = float(np.max(prob.pieces(y)))
    hy = float(h_value(inst.q, y))
    r_lower = float(np.sqrt(-value)) if value <= 0 else 0.0
    log.debug("dc solve: value=%.12g h=%.3g residual=%.2e iters=%d", value, hy, pol.residual, used)
    return DcSolution(y, value, r_lower, hy, used, pol.residual,
                      weights={"pieces": pol.w, "constraints": pol.mu}, trace=trace)
