"""
Randomised estimators of R0.

``procedure_b`` grows a sphere around C0 until no sample lands in the chosen
sequence element, then bisects the last hit / first miss bracket.
``volume_bisect`` bisects on the volume ratio between two elements of the
sequence, which reaches 1 once the probe radius passes R0.  Both record the
seed and every sampled radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classifier import Classification
from .errors import DegenerateDenominator, EmptyElement, InconsistentBracket, NoInitialHit, ZeroDenominator
from .geometry import Instance
from .sampler import HitStats, derive_seed, surface_ratio, volume_ratio

PROCEDURE_B = "ProcedureB"
VOLUME_BISECTION = "VolumeBisection"

# tags for derived seeds, so growth, bisection and probes never share a stream
_GROW, _BISECT, _PROBE = 0, 1, 2


@dataclass(frozen=True, eq=False)
class EstimateReport:
    r_hat: float
    bracket: tuple
    method: str
    i_used: int
    p_used: int | None
    stats_trace: list
    seed: int
    classification: Classification | None = None
    bisect_trace: list = field(default_factory=list)
    workers: int = 1

    def to_dict(self) -> dict:
        return {
            "r_hat": self.r_hat,
            "bracket": list(self.bracket),
            "method": self.method,
            "i_used": self.i_used,
            "p_used": self.p_used,
            "seed": self.seed,
            "workers": self.workers,
            "classification": None if self.classification is None else self.classification.to_dict(),
            "stats_trace": [{"r": r, **s.to_dict()} for r, s in self.stats_trace],
            "bisect_trace": [{"r": r, **s.to_dict()} for r, s in self.bisect_trace],
        }


def procedure_b(inst: Instance, i: int = -20, r_init: float = 1.0, n_samples: int = 4096,
                step: float | None = None, seed: int = 0, *, bisect_iters: int = 20,
                workers: int = 1, max_steps: int = 100_000, allow_positive: bool = False,
                classification: Classification | None = None) -> EstimateReport:
    """Sphere-sampling search for the radius at which the element stops being hit.

    Parameters
    ----------
    inst : Instance
    i : int
        Sequence index, negative (the positive side is only allowed with
        ``allow_positive``; hit rates there are typically tiny).
    r_init : float
        Starting radius, expected to be below R0.
    n_samples : int
        Sphere samples per radius.
    step : float, optional
        Additive growth step; default ``max(0.01, 0.01 * r_init)``.
    seed : int
        Base seed; each radius uses its own derived stream.
    bisect_iters : int
        Bisection rounds on the last-hit / first-miss bracket.

    Raises
    ------
    NoInitialHit
        No sample hits at ``r_init``.
    """
    if r_init <= 0:
        raise ValueError("r_init must be positive")
    if i > -1 and not allow_positive:
        raise ValueError("procedure_b expects a negative index")
    if step is None:
        step = max(0.01, 0.01 * r_init)
    if step <= 0:
        raise ValueError("step must be positive")

    def stats_at(r, *tags):
        try:
            return surface_ratio(inst, i, r, n_samples, derive_seed(seed, *tags), workers)
        except EmptyElement:
            return HitStats.from_counts(0, n_samples)

    trace = []
    r = float(r_init)
    st = stats_at(r, _GROW, 0)
    trace.append((r, st))
    if st.hits == 0:
        raise NoInitialHit(r)
    last_hit = r
    for k in range(1, max_steps + 1):
        r = float(r_init + k * step)
        st = stats_at(r, _GROW, k)
        trace.append((r, st))
        if st.hits == 0:
            break
        last_hit = r
    else:
        raise InconsistentBracket(f"still hitting after {max_steps} steps (r = {r:.6g})")
    lo, hi = last_hit, r
    bis = []
    for j in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        st = stats_at(mid, _BISECT, j)
        bis.append((mid, st))
        if st.hits > 0:
            lo = mid
        else:
            hi = mid
    return EstimateReport(0.5 * (lo + hi), (lo, hi), PROCEDURE_B, i, None, trace, seed,
                          classification, bis, workers)


def initial_radius(c: Classification, backoff: float = 0.9) -> float:
    """Starting radius for :func:`procedure_b` derived from a classification."""
    if not 0 < backoff <= 1:
        raise ValueError("backoff must lie in (0, 1]")
    return max(c.r_lower * backoff, 1e-6)


def procedure_b_from(inst: Instance, c: Classification, *, backoff: float = 0.9,
                     tries: int = 8, **kwargs) -> EstimateReport:
    """Run :func:`procedure_b` from the classifier's lower bound, backing off on misses."""
    r0 = initial_radius(c, backoff)
    for _ in range(tries):
        try:
            return procedure_b(inst, r_init=r0, classification=c, **kwargs)
        except NoInitialHit:
            r0 *= backoff
    return procedure_b(inst, r_init=r0, classification=c, **kwargs)


def volume_bisect(inst: Instance, i: int, p: int, r_bracket, n_samples: int = 20_000,
                  threshold: float = 0.995, seed: int = 0, *, rounds: int = 12,
                  workers: int = 1, expand: int = 4,
                  classification: Classification | None = None) -> EstimateReport:
    """Bisection on the volume ratio of elements ``i + p`` and ``i``.

    A probe counts as "ratio = 1" when the Wilson lower bound of the hit
    ratio reaches ``threshold``, or when the element ``i + p`` is empty or
    too thin to collect 100 denominator hits (it shrinks as the probe
    radius grows, so such probes sit on the large side).  A thin element
    that exhausts the draw budget without a single miss also counts as 1.  Ends that do not
    straddle the transition are widened up to ``expand`` times before
    giving up.

    Raises
    ------
    InconsistentBracket
        Both ends still classify the same after widening.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    lo, hi = map(float, r_bracket)
    if not 0 < lo < hi:
        raise ValueError("need 0 < r_low < r_high")
    trace = []
    counter = [0]

    def is_one(r):
        counter[0] += 1
        ss = derive_seed(seed, _BISECT, counter[0])
        try:
            st = volume_ratio(inst, i, p, r, n_samples, ss, workers)
        except DegenerateDenominator as exc:
            # element i + p empty or too thin to sample: it only shrinks as r grows
            trace.append((r, HitStats.from_counts(0, exc.hits)))
            return True
        trace.append((r, st))
        if st.samples < n_samples and st.hits == st.samples:
            # draw budget ran out on a thin element without a single miss
            return True
        return st.wilson_low >= threshold

    lo_one, hi_one = is_one(lo), is_one(hi)
    for _ in range(expand):
        if hi_one and not lo_one:
            break
        if lo_one:
            lo = lo / 2
            lo_one = is_one(lo)
        if not hi_one:
            hi = hi * 2
            hi_one = is_one(hi)
    if lo_one or not hi_one:
        raise InconsistentBracket(f"bracket [{lo:.6g}, {hi:.6g}] does not straddle the transition")
    for _ in range(rounds):
        mid = 0.5 * (lo + hi)
        if is_one(mid):
            hi = mid
        else:
            lo = mid
    return EstimateReport(0.5 * (lo + hi), (lo, hi), VOLUME_BISECTION, i, p, trace, seed,
                          classification, [], workers)


def shrink_growth_factor(n: int, alpha: float, r: float) -> float:
    """Finite-dimension growth factor ``(1 / (1 - alpha / (r n)))^(n - 1)``."""
    if r <= 0 or n < 1:
        raise ValueError("need r > 0 and n >= 1")
    x = alpha / (r * n)
    if x >= 1:
        return math.inf
    return math.exp(-(n - 1) * math.log1p(-x))


def shrink_growth_ratio(inst: Instance, i: int, r: float, alpha: float, n_samples: int,
                        seed: int = 0, workers: int = 1) -> tuple[float, float]:
    """Empirical ``ratio(r - alpha/n) / ratio(r)`` and its analytic factor.

    Both radii use the same seed (common random numbers), which makes the
    comparison far less noisy than independent streams.

    Raises
    ------
    ZeroDenominator
        No sample hits at radius ``r``.
    """
    n = inst.dim
    r_small = r - alpha / n
    if r_small <= 0:
        raise ValueError("alpha / n must be smaller than r")
    den = surface_ratio(inst, i, r, n_samples, seed, workers)
    if den.hits == 0:
        raise ZeroDenominator(f"no hits at r = {r:.6g}")
    num = surface_ratio(inst, i, r_small, n_samples, seed, workers)
    return num.ratio / den.ratio, shrink_growth_factor(n, alpha, r)


@dataclass(frozen=True)
class FkProfile:
    k: int
    i: int
    value: float
    b_k: float
    regime: str  # "b<0", "b=0" or "b>0"

    def to_dict(self) -> dict:
        return {"k": self.k, "i": self.i, "value": self.value, "b_k": self.b_k, "regime": self.regime}


def fk_profile(inst: Instance, r: float, i_list, tol: float = 1e-12) -> tuple[list, list]:
    """``(r_{k,i}^2 - R^2) / ||C_{k,i} - C0||`` for negative ``i`` and every ball.

    Returns the profile entries and the indices of balls skipped because
    their centre coincides with C0.  Each entry carries
    ``b_k = (r_k^2 - R^2 - d_k^2) / d_k``, whose sign decides the
    monotonicity regime in ``|i|``; algebraically the value equals
    ``b_k + (1 - lam)^|i| d_k``.
    """
    d = np.linalg.norm(inst.q.centers - inst.c0, axis=1)
    skipped = [int(k) for k in np.flatnonzero(d <= tol * inst.scale())]
    out = []
    b = np.where(d > 0, (inst.q.radii_sq - r * r - d * d) / np.where(d > 0, d, 1.0), np.nan)
    for i in i_list:
        i = int(i)
        if i >= 0:
            raise ValueError("fk_profile takes negative indices")
        # (r_{k,i}^2 - R^2) / ||C_{k,i} - C0|| with the common factor (1-lam)^|i| cancelled;
        # forming r_{k,i}^2 - R^2 first loses all precision once (1-lam)^|i| ~ eps
        a_i = (1.0 - inst.lam) ** (-i)
        num = inst.q.radii_sq - r * r - (1.0 - a_i) * d * d
        for k in range(inst.q.m):
            if k in skipped:
                continue
            bk = float(b[k])
            scale = max(1.0, abs(inst.q.radii_sq[k]), r * r)
            regime = "b=0" if abs(bk) * d[k] <= tol * scale else ("b<0" if bk < 0 else "b>0")
            out.append(FkProfile(k, i, float(num[k] / d[k]), bk, regime))
    return out, skipped
