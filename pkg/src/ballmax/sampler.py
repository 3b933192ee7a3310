"""
Seeded sampling on spheres and in ball intersections.

Streams come from ``numpy.random.SeedSequence(seed).spawn(workers)`` with one
PCG64 generator per worker; worker ``w`` draws its share of the samples and
the chunks are concatenated in worker order.  Results therefore depend on
``(seed, workers)`` only, not on thread scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator, EmptyElement
from .geometry import Instance
from .sequence import element_at

Z95 = 1.959963984540054
MIN_DENOMINATOR_HITS = 100


def derive_seed(seed: int, *tags: int) -> np.random.SeedSequence:
    """A child seed sequence keyed by integer ``tags`` (e.g. round number)."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tags)
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(t) for t in tags))


def _as_seedseq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.random.SeedSequence(seed)


def _split(n: int, workers: int) -> list[int]:
    base, extra = divmod(n, workers)
    return [base + (w < extra) for w in range(workers)]


def _parallel(draw, n: int, seed, workers: int):
    """Run ``draw(rng, count)`` per worker stream and concatenate in worker order."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    children = _as_seedseq(seed).spawn(workers)
    counts = _split(n, workers)
    jobs = [(np.random.Generator(np.random.PCG64(ss)), c) for ss, c in zip(children, counts)]
    if workers == 1:
        parts = [draw(*jobs[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: draw(*job), jobs))
    return parts


def _unit_vectors(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    # a zero Gaussian vector has probability zero; redraw just in case
    while np.any(norms == 0):
        bad = norms[:, 0] == 0
        g[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
    return g / norms


def sphere_sample(c0, r: float, n_samples: int, seed, workers: int = 1) -> np.ndarray:
    """Uniform points on the sphere ``|x - c0| = r``.

    Gaussian vectors normalised to unit length, then scaled and shifted.
    """
    c0 = np.asarray(c0, dtype=float)
    if r <= 0:
        raise ValueError("r must be positive")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    dim = c0.shape[0]
    parts = _parallel(lambda rng, c: c0 + r * _unit_vectors(rng, c, dim), n_samples, seed, workers)
    return np.concatenate(parts, axis=0)


def ball_sample(center, radius: float, n_samples: int, seed, workers: int = 1) -> np.ndarray:
    """Uniform points in the solid ball (direction times ``U^{1/n}`` radius)."""
    center = np.asarray(center, dtype=float)
    dim = center.shape[0]

    def draw(rng, c):
        u = _unit_vectors(rng, c, dim)
        rad = radius * rng.random(c) ** (1.0 / dim)
        return center + rad[:, None] * u

    return np.concatenate(_parallel(draw, n_samples, seed, workers), axis=0)


def wilson_interval(hits: int, samples: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if samples <= 0:
        return 0.0, 1.0
    p = hits / samples
    z2 = z * z
    denom = 1.0 + z2 / samples
    centre = (p + z2 / (2 * samples)) / denom
    half = z * math.sqrt(p * (1 - p) / samples + z2 / (4 * samples * samples)) / denom
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    # guard the documented invariant lo <= p <= hi against rounding
    return min(lo, p), max(hi, p)


@dataclass(frozen=True)
class HitStats:
    samples: int
    hits: int
    ratio: float
    wilson_low: float
    wilson_high: float

    @classmethod
    def from_counts(cls, hits: int, samples: int) -> "HitStats":
        lo, hi = wilson_interval(hits, samples)
        return cls(int(samples), int(hits), hits / samples if samples else 0.0, lo, hi)

    def to_dict(self) -> dict:
        return {"samples": self.samples, "hits": self.hits, "ratio": self.ratio,
                "wilson_low": self.wilson_low, "wilson_high": self.wilson_high}


def _membership(centers, radii_sq, pts):
    inside = np.ones(len(pts), dtype=bool)
    for P, rho2 in zip(centers, radii_sq):
        inside &= np.sum((pts - P) ** 2, axis=1) <= rho2
    return inside


def surface_ratio(inst: Instance, i: int, r: float, n_samples: int, seed,
                  workers: int = 1) -> HitStats:
    """Fraction of the sphere ``|x - C0| = r`` inside the ``i``-th element at ``R = r``.

    Raises
    ------
    EmptyElement
        Every ball of the element is empty.
    """
    el = element_at(inst, i, r * r)
    if el.all_empty:
        raise EmptyElement(f"element {i} is empty at r = {r:.6g}")
    if el.any_empty:
        return HitStats.from_counts(0, n_samples)

    def draw(rng, c):
        pts = inst.c0 + r * _unit_vectors(rng, c, inst.dim)
        return int(np.count_nonzero(_membership(el.centers, el.radii_sq, pts)))

    hits = sum(_parallel(draw, n_samples, seed, workers))
    return HitStats.from_counts(hits, n_samples)


def volume_ratio(inst: Instance, i: int, p: int, r: float, n_samples: int, seed,
                 workers: int = 1, max_draw_factor: int = 50) -> HitStats:
    """Hit-or-miss estimate of ``Vol(Q^{i+p} & Q^i) / Vol(Q^{i+p})`` at ``R = r``.

    Points are drawn uniformly in the smallest ball of ``Q^{i+p}``; those in
    ``Q^{i+p}`` count towards the denominator and those also in ``Q^i``
    towards the numerator.  Drawing continues in batches until
    ``n_samples`` denominator hits are collected or
    ``max_draw_factor * n_samples`` points have been drawn.  The returned
    ``samples`` is the denominator count.

    Raises
    ------
    DegenerateDenominator
        Fewer than 100 draws landed in ``Q^{i+p}`` (including an empty element).
    """
    if p < 1:
        raise ValueError("p must be a positive integer")
    top = element_at(inst, i + p, r * r)
    base = element_at(inst, i, r * r)
    if top.any_empty:
        raise DegenerateDenominator(0, MIN_DENOMINATOR_HITS)
    k = int(np.argmin(top.radii_sq))
    center, radius = top.centers[k], math.sqrt(top.radii_sq[k])
    base_empty = base.any_empty

    def draw(rng, target):
        den = num = drawn = 0
        batch = max(target, 1)
        while den < target and drawn < max_draw_factor * target:
            u = _unit_vectors(rng, batch, inst.dim)
            pts = center + (radius * rng.random(batch) ** (1.0 / inst.dim))[:, None] * u
            inside = _membership(top.centers, top.radii_sq, pts)
            idx = np.flatnonzero(inside)[:target - den]
            den += len(idx)
            if not base_empty:
                num += int(np.count_nonzero(_membership(base.centers, base.radii_sq, pts[idx])))
            drawn += batch
        return den, num

    parts = _parallel(draw, n_samples, seed, workers)
    den = sum(d for d, _ in parts)
    num = sum(n for _, n in parts)
    if den < MIN_DENOMINATOR_HITS:
        raise DegenerateDenominator(den, MIN_DENOMINATOR_HITS)
    return HitStats.from_counts(num, den)
