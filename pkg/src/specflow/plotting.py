"""Deterministic SVG plots of eigenvalue trajectories.

The writer emits fixed-precision coordinates in a fixed element order, so
a given curve always produces byte-identical output.  Crossing markers sit
at the linear interpolation of sign changes along each sorted-eigenvalue
branch, colored by direction (upward green, downward red).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow import OperatorCurve
from .operators import eigvalsh

WIDTH, HEIGHT = 800, 500
MARGIN = 55
COLOR_BRANCH = "#4477aa"
COLOR_ZERO = "#888888"
COLOR_UP = "#117733"
COLOR_DOWN = "#cc3311"


@dataclass(frozen=True)
class Crossing:
    t: float
    direction: int  # +1 upward, -1 downward


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def sample_trajectories(curve: OperatorCurve, samples: int = 129):
    ts = np.unique(np.concatenate([np.linspace(0.0, 1.0, samples), curve.ts]))
    evs = np.stack([np.sort(eigvalsh(curve.at(t))) for t in ts])
    return ts, evs


def detect_crossings(ts: np.ndarray, evs: np.ndarray) -> list[Crossing]:
    out = []
    for i in range(evs.shape[1]):
        branch = evs[:, i]
        for j in range(len(ts) - 1):
            a, b = branch[j], branch[j + 1]
            if a < 0.0 <= b:
                frac = -a / (b - a) if b != a else 0.0
                out.append(Crossing(float(ts[j] + frac * (ts[j + 1] - ts[j])), +1))
            elif a >= 0.0 > b:
                frac = a / (a - b) if a != b else 0.0
                out.append(Crossing(float(ts[j] + frac * (ts[j + 1] - ts[j])), -1))
    out.sort(key=lambda c: (c.t, c.direction))
    return out


def plot_spectrum(curve: OperatorCurve, path, samples: int = 129) -> list[Crossing]:
    """Write the eigenvalue-trajectory SVG and return the crossings."""
    ts, evs = sample_trajectories(curve, samples)
    crossings = detect_crossings(ts, evs)
    lo = min(float(evs.min()), -1.0)
    hi = max(float(evs.max()), 1.0)
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def sx(t):
        return MARGIN + t * (WIDTH - 2 * MARGIN)

    def sy(v):
        return HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2 * MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
        f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="#000000" '
        f'stroke-width="1"/>',
        f'<line x1="{_fmt(sx(0))}" y1="{_fmt(sy(0))}" x2="{_fmt(sx(1))}" '
        f'y2="{_fmt(sy(0))}" stroke="{COLOR_ZERO}" stroke-width="1" '
        f'stroke-dasharray="6,4"/>',
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 15}" font-size="14" '
        f'text-anchor="middle">t</text>',
        f'<text x="18" y="{HEIGHT // 2}" font-size="14" '
        f'text-anchor="middle" transform="rotate(-90 18 {HEIGHT // 2})">'
        f'eigenvalue</text>',
    ]
    for i in range(evs.shape[1]):
        pts = " ".join(f"{_fmt(sx(t))},{_fmt(sy(v))}"
                       for t, v in zip(ts, evs[:, i]))
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{COLOR_BRANCH}" stroke-width="1.2"/>')
    for c in crossings:
        color = COLOR_UP if c.direction > 0 else COLOR_DOWN
        parts.append(f'<circle cx="{_fmt(sx(c.t))}" cy="{_fmt(sy(0))}" r="5" '
                     f'fill="{color}" stroke="black" stroke-width="0.8"/>')
    parts.append("</svg>")
    data = "\n".join(parts) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(data)
    return crossings


def spectra_csv(curve: OperatorCurve, path, samples: int = 129):
    """Eigenvalue table: one row per sample, columns t, lambda_1, ..."""
    ts, evs = sample_trajectories(curve, samples)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t," + ",".join(f"lambda_{i}" for i in range(evs.shape[1]))
                 + "\n")
        for t, row in zip(ts, evs):
            fh.write(f"{t:.9g}," + ",".join(f"{v:.12g}" for v in row) + "\n")
