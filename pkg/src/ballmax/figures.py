"""
Plain-text SVG rendering of planar instances.

Four layered figures are produced: the intersection itself with the
farthest point, the max-indicator family over a grid of probe radii with the
R0 member highlighted, and the backward and forward sequence elements at R0.
Output is deterministic (fixed float formatting, no timestamps).
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import DimensionUnsupported
from .geometry import Instance, qset_params
from .sequence import element_at

GREEN, BLUE, MAGENTA, GREY, BLACK = "#2e8b57", "#1f5fbf", "#c0189b", "#888888", "#000000"


def _f(x: float) -> str:
    return f"{x:.6f}"


class _Canvas:
    def __init__(self, lo, hi, size=600):
        span = max(hi[0] - lo[0], hi[1] - lo[1]) * 1.05
        mid = 0.5 * (np.asarray(lo) + np.asarray(hi))
        self.x0, self.y1 = mid[0] - span / 2, mid[1] + span / 2
        self.k = size / span
        self.size = size
        self.layers: list[tuple[str, list[str]]] = []

    def _xy(self, p):
        return (p[0] - self.x0) * self.k, (self.y1 - p[1]) * self.k

    def layer(self, name):
        self.layers.append((name, []))
        return self.layers[-1][1]

    def circle(self, out, center, radius, color, width=1.0, fill="none", dash=None):
        cx, cy = self._xy(center)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(radius * self.k)}" '
                   f'fill="{fill}" stroke="{color}" stroke-width="{width}"{extra}/>')

    def dot(self, out, p, color, label=None):
        cx, cy = self._xy(p)
        out.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="3" fill="{color}"/>')
        if label:
            out.append(f'<text x="{_f(cx + 5)}" y="{_f(cy - 5)}" font-size="12" fill="{color}">{label}</text>')

    def text(self, out, s, y=18, color=BLACK):
        out.append(f'<text x="8" y="{y}" font-size="14" fill="{color}">{s}</text>')

    def render(self) -> str:
        parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" height="{self.size}" '
                 f'viewBox="0 0 {self.size} {self.size}">',
                 f'<rect width="{self.size}" height="{self.size}" fill="white"/>']
        for name, items in self.layers:
            parts.append(f'<g id="{name}">')
            parts.extend("  " + s for s in items)
            parts.append("</g>")
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def _box(centers, radii):
    centers = np.atleast_2d(centers)
    radii = np.asarray(radii)
    return (centers - radii[:, None]).min(axis=0), (centers + radii[:, None]).max(axis=0)


def _union_box(*boxes):
    lo = np.min([b[0] for b in boxes], axis=0)
    hi = np.max([b[1] for b in boxes], axis=0)
    return lo, hi


def emit_figures(inst: Instance, r0: float, indices, out_dir, maximizers=(),
                 n_family: int = 6) -> list[Path]:
    """Write the four SVG figures for a planar instance and return their paths.

    Parameters
    ----------
    inst : Instance
    r0 : float
        Farthest distance used for the highlighted member and the sequence.
    indices : iterable of int
        Sequence indices to draw (negative ones go to the backward figure,
        positive ones to the forward figure, 0 to both).
    maximizers : iterable of points
        Marked on the first figure.
    """
    if inst.dim != 2:
        raise DimensionUnsupported("figures are only drawn for dimension 2")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    q = inst.q
    c0 = inst.c0
    files = []
    q_box = _box(q.centers, q.radii)
    r0_box = (c0 - r0, c0 + r0)

    # the intersection and its farthest point
    cv = _Canvas(*_union_box(q_box, r0_box))
    layer = cv.layer("Q")
    for c, r in zip(q.centers, q.radii):
        cv.circle(layer, c, r, GREEN, 1.5)
    ref = cv.layer("farthest")
    cv.circle(ref, c0, r0, MAGENTA, 1.0, dash="4 3")
    cv.dot(ref, c0, BLACK, "C0")
    for p in maximizers:
        cv.dot(ref, p, MAGENTA)
    cv.text(cv.layer("caption"), f"R0 = {r0:.6f}")
    files.append(_write(out / "fig_q.svg", cv))

    # max-indicator family over a grid of probe radii, R0 member highlighted
    probes = sorted(set(np.round(np.linspace(0.0, r0, n_family), 12)) | {r0})
    fam = []
    for R in probes:
        D, r2 = qset_params(inst, R * R)
        fam.append((R, D, r2))
    boxes = [q_box] + [_box(D, np.sqrt(np.clip(r2, 0, None))) for _, D, r2 in fam if np.all(r2 > 0)]
    cv = _Canvas(*_union_box(*boxes))
    layer = cv.layer("Q")
    for c, r in zip(q.centers, q.radii):
        cv.circle(layer, c, r, GREEN, 1.5)
    fl = cv.layer("family")
    hl = cv.layer("member_R0")
    for R, D, r2 in fam:
        if np.any(r2 <= 0):
            continue
        target, color, width = (hl, MAGENTA, 2.0) if R == r0 else (fl, BLUE, 0.8)
        for c, rr in zip(D, np.sqrt(r2)):
            cv.circle(target, c, rr, color, width)
    cv.dot(cv.layer("C0"), c0, BLACK, "C0")
    cv.text(cv.layer("caption"), f"max-indicator family, R in [0, {r0:.4f}]")
    files.append(_write(out / "fig_family.svg", cv))

    indices = sorted(set(int(i) for i in indices))
    for name, sel in (("backward", [i for i in indices if i <= 0]),
                      ("forward", [i for i in indices if i >= 0])):
        els = [element_at(inst, i, r0 * r0) for i in sel]
        boxes = [r0_box] + [_box(e.centers, np.sqrt(np.clip(e.radii_sq, 0, None))) for e in els]
        cv = _Canvas(*_union_box(*boxes))
        for e in els:
            lay = cv.layer(f"element_{e.index}")
            color = GREEN if e.index == 0 else (BLUE if e.index < 0 else GREY)
            for c, r2 in zip(e.centers, e.radii_sq):
                if r2 > 0:
                    cv.circle(lay, c, math.sqrt(r2), color, 1.0)
        ref = cv.layer("ball_R0")
        cv.circle(ref, c0, r0, MAGENTA, 1.5, dash="4 3")
        cv.dot(ref, c0, BLACK, "C0")
        cv.text(cv.layer("caption"), f"{name} elements {sel} at R0 = {r0:.6f}")
        files.append(_write(out / f"fig_{name}.svg", cv))
    return files


def _write(path: Path, cv: _Canvas) -> Path:
    path.write_text(cv.render())
    return path
