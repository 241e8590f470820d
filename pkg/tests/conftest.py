"""Shared fixtures and independent oracles.

The oracle helpers deliberately avoid the library's own code paths: the
distance transform is a literal scan over background pixels, AUROC counts
pairs exhaustively, and the agreement statistics are written out from their
definitions. Tests compare the implementation against these.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from coroflow.geometry import LumenMask
from coroflow.stats import PairedObservation


def brute_force_edt(grid: np.ndarray) -> np.ndarray:
    """Literal minimum distance from each foreground pixel to any background
    pixel. Quadratic; keep masks small."""
    grid = np.asarray(grid, dtype=bool)
    bg = np.argwhere(~grid)
    out = np.zeros(grid.shape)
    for r, c in np.argwhere(grid):
        out[r, c] = np.sqrt(((bg - (r, c)) ** 2).sum(axis=1).min())
    return out


def brute_force_auroc(scores_pos, scores_neg) -> float:
    """Exhaustive Mann-Whitney with 0.5 credit for ties."""
    wins = 0.0
    for sp in scores_pos:
        for sn in scores_neg:
            if sp > sn:
                wins += 1.0
            elif sp == sn:
                wins += 0.5
    return wins / (len(scores_pos) * len(scores_neg))


def strip_mask(width_px: int, length_px: int, spacing: float, margin: int = 6,
               offset=(0, 0)) -> LumenMask:
    """Horizontal bar of exactly width_px rows, surrounded by background."""
    grid = np.zeros((width_px + 2 * margin, length_px + 2 * margin), dtype=bool)
    grid[margin:margin + width_px, margin:margin + length_px] = True
    if offset != (0, 0):
        grid = np.roll(np.roll(grid, offset[0], axis=0), offset[1], axis=1)
    return LumenMask(grid=grid, spacing=spacing)


def utube_mask(radius_mm: float = 15.0, arm_mm: float = 60.0,
               half_width_mm: float = 1.0, spacing: float = 0.25,
               margin_mm: float = 3.0):
    """U-shaped tube: two vertical arms joined by a semicircle.

    Returns (LumenMask, analytic centreline length in mm). The curve is the
    set {x = -R, y in [0, arm]} + {x = +R, y in [0, arm]} + the lower
    semicircle of radius R about the origin; the lumen is every point within
    half_width_mm of it, with the arm ends cut flat at y = arm.
    """
    r, hw, m = radius_mm, half_width_mm, margin_mm
    xs = np.arange(-(r + hw + m), r + hw + m + spacing, spacing)
    ys = np.arange(-(r + hw + m), arm_mm + hw + m + spacing, spacing)
    X, Y = np.meshgrid(xs, ys)

    d_left = np.hypot(X + r, Y - np.clip(Y, 0.0, arm_mm))
    d_right = np.hypot(X - r, Y - np.clip(Y, 0.0, arm_mm))
    rad = np.hypot(X, Y)
    d_circ = np.where(Y <= 0.0, np.abs(rad - r), np.inf)
    dist = np.minimum(np.minimum(d_left, d_right), d_circ)
    grid = (dist <= hw) & (Y <= arm_mm)
    length = 2.0 * arm_mm + math.pi * r
    return LumenMask(grid=grid, spacing=spacing), length


def wedge_mask(d_start_mm: float, d_end_mm: float, length_mm: float,
               spacing: float, margin: int = 8) -> LumenMask:
    """Horizontal vessel whose width grows linearly from d_start to d_end."""
    n_cols = int(round(length_mm / spacing)) + 1
    x = np.arange(n_cols) * spacing
    d = d_start_mm + (d_end_mm - d_start_mm) * x / length_mm
    half_px = d / (2.0 * spacing)
    height = 2 * (margin + int(math.ceil(d_end_mm / (2 * spacing)))) + 1
    mid = height // 2
    rows = np.arange(height)
    grid = np.zeros((height, n_cols + 2 * margin), dtype=bool)
    grid[:, margin:margin + n_cols] = np.abs(rows[:, None] - mid) < half_px[None, :]
    return LumenMask(grid=grid, spacing=spacing)


def make_pairs(seed: int, n: int = 60, noise_sd: float = 0.05):
    """Synthetic QFR/FFR cohort with realistic spread and both classes."""
    rng = np.random.default_rng(seed)
    ffr = rng.uniform(0.55, 0.98, size=n)
    qfr = np.clip(ffr + rng.normal(0.0, noise_sd, size=n), 0.05, 1.0)
    vessels = rng.choice(["LAD", "LCX", "RCA"], size=n)
    quality = rng.choice(["good", "adequate"], size=n)
    return [
        PairedObservation(case_id=f"c{i:03d}", qfr=float(q), ffr=float(f),
                          vessel=str(v), quality=str(g))
        for i, (q, f, v, g) in enumerate(zip(qfr, ffr, vessels, quality))
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance battery lines once more at the end of the run."""
    try:
        import test_acceptance
    except ImportError:
        return
    if getattr(test_acceptance, "RESULTS", None):
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
