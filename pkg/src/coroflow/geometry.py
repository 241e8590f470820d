"""Lumen geometry: centreline extraction and diameter profiling.

A binary lumen mask is reduced to a single proximal-to-distal centreline by
ridge skeletonisation followed by graph pruning, then converted into a
millimetre-resolution diameter profile using the Euclidean distance
transform. Diameters follow the half-pixel rule ``d = (2 * EDT - 1) * spacing``
so that a straight strip of width ``w`` pixels measures exactly ``w * spacing``
on its midline.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import networkx as nx
import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree
from skimage.morphology import medial_axis

from .errors import (
    CenterlineOutsideMask,
    DegenerateSkeleton,
    EmptyMask,
    InconsistentInputs,
    NonPositiveOverride,
)
from .validation import check_mask, check_positive, check_spacing

logger = logging.getLogger(__name__)

# Spurs shorter than this are always pruned, independent of vessel calibre.
MIN_SPUR_LENGTH_MM = 2.0
# Wide vessels shed longer skeleton spurs near corners; the prune threshold
# grows with the local lumen radius.
SPUR_RADIUS_FACTOR = 1.5
# Healthy-calibre estimate: upper percentile of the diameter profile.
REFERENCE_DIAMETER_PERCENTILE = 90.0


@dataclass(frozen=True)
class LumenMask:
    """Binary lumen segmentation on an isotropic pixel grid.

    Attributes:
        grid: 2-D boolean array, True inside the lumen.
        spacing: Pixel size in mm (identical along both axes).
        frame_index: Index of the cine frame the mask was drawn on.
    """

    grid: np.ndarray
    spacing: float
    frame_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "grid", check_mask(self.grid))
        object.__setattr__(self, "spacing", check_spacing(self.spacing))


@dataclass(frozen=True)
class Centerline:
    """Ordered centreline pixels with cumulative arclength.

    ``points[0]`` is the proximal end. Consecutive points are 8-adjacent, so
    each arclength increment is ``spacing`` or ``sqrt(2) * spacing``.
    """

    points: np.ndarray    # (n, 2) int, row/col
    arclength: np.ndarray  # (n,) mm, arclength[0] == 0
    spacing: float

    @property
    def length(self) -> float:
        """Total arclength in mm."""
        return float(self.arclength[-1])


@dataclass
class DiameterProfile:
    """Lumen diameter sampled at a fixed arclength step.

    Attributes:
        step: Sampling interval in mm.
        samples: Diameters in mm, index k at arclength k * step.
        d_ref: Reference (healthy) diameter in mm, or None if not yet set.
        sample_points: Nearest centreline pixel for each sample, (n, 2) int.
    """

    step: float
    samples: np.ndarray
    d_ref: Optional[float] = None
    sample_points: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class CoregistrationMap:
    """Bidirectional lookup between profile samples and mask pixels.

    ``curve_to_pixel[k]`` is the centreline pixel nearest to sample k.
    ``pixel_to_curve`` assigns every foreground pixel the index of its
    nearest profile sample (-1 on background), stored as an image so the
    lookup is O(1) per click.
    """

    curve_to_pixel: np.ndarray   # (n_samples, 2) int
    pixel_to_curve: np.ndarray   # (H, W) int, -1 outside the lumen


def _edt_pixels(grid: np.ndarray) -> np.ndarray:
    """Distance in pixels from each foreground pixel to the nearest background
    pixel, measured on the raw (unpadded) grid so that touching the image
    border does not shrink the vessel."""
    return ndimage.distance_transform_edt(grid)


def _skeleton_graph(skel: np.ndarray, spacing: float) -> Tuple[nx.Graph, np.ndarray]:
    pts = np.argwhere(skel)
    index: Dict[Tuple[int, int], int] = {(int(r), int(c)): i for i, (r, c) in enumerate(pts)}
    g = nx.Graph()
    g.add_nodes_from(range(len(pts)))
    diag = math.sqrt(2.0) * spacing
    for i, (r, c) in enumerate(pts):
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == 0 and dc == 0:
                    continue
                j = index.get((int(r) + dr, int(c) + dc))
                if j is not None and j > i:
                    g.add_edge(i, j, weight=diag if dr and dc else spacing)
    return g, pts


def _leaf_branches(g: nx.Graph):
    """Yield (branch_nodes, junction, length) for each leaf-to-junction walk.

    ``branch_nodes`` excludes the junction itself. For an isolated path
    (no junction) the walk ends at the far leaf and junction is None.
    """
    for leaf in [n for n in g.nodes if g.degree(n) == 1]:
        nodes = [leaf]
        length = 0.0
        prev, cur = None, leaf
        while True:
            nbrs = [n for n in g.neighbors(cur) if n != prev]
            if g.degree(cur) >= 3 or not nbrs:
                junction = cur if g.degree(cur) >= 3 else None
                tail = nodes[:-1] if junction is not None else nodes
                yield tail, junction, length
                break
            nxt = nbrs[0]
            length += g.edges[cur, nxt]["weight"]
            prev, cur = cur, nxt
            nodes.append(cur)


def _prune_spurs(g: nx.Graph, edt_mm: np.ndarray, spacing: float) -> None:
    """Iteratively remove short side branches.

    A leaf branch is a spur when it is shorter than the larger of a fixed
    floor and a radius-proportional threshold at its junction; skeleton
    corner artefacts scale with lumen radius, true side branches do not.
    Removing one spur can expose another, so iterate to a fixed point.
    """
    while True:
        spurs = []
        for nodes, junc, length in _leaf_branches(g):
            if junc is None:
                continue
            limit = max(MIN_SPUR_LENGTH_MM, SPUR_RADIUS_FACTOR * edt_mm[junc] + spacing)
            if length < limit:
                spurs.append(nodes)
        if not spurs:
            return
        for nodes in spurs:
            g.remove_nodes_from(nodes)


def _longest_leaf_geodesic(g: nx.Graph) -> list:
    """Weighted-longest shortest path between any two remaining leaves.

    Braided ridge regions leave small cycles and junctions that spur pruning
    cannot touch; the geodesic threads the shortest strand through them while
    the leaf pair selection keeps the full proximal-to-distal extent.
    """
    leaves = [n for n in g.nodes if g.degree(n) == 1]
    if len(leaves) < 2:
        raise DegenerateSkeleton(
            f"pruned skeleton has {len(leaves)} endpoints; expected at least 2")
    best_len = -1.0
    best_path: list = []
    for i, a in enumerate(leaves):
        dist, paths = nx.single_source_dijkstra(g, a, weight="weight")
        for b in leaves[i + 1:]:
            if b in dist and dist[b] > best_len:
                best_len = dist[b]
                best_path = paths[b]
    if len(best_path) < 2:
        raise DegenerateSkeleton("no connected endpoint pair in the skeleton")
    return best_path


def extract_centerline(mask: LumenMask, seed: Optional[Tuple[int, int]] = None) -> Centerline:
    """Extract a single ordered centreline from a lumen mask.

    The mask is padded with a one-pixel background ring (so fully spanning
    vessels still produce an interior ridge), skeletonised to the ridge of
    the distance transform, pruned to a simple path, and oriented so that
    the lexicographically smaller (row, col) endpoint comes first.

    Args:
        mask: Binary lumen mask.
        seed: Optional (row, col) hint selecting the connected component to
            analyse; defaults to the largest component.

    Returns:
        Centerline with 8-adjacent points and cumulative arclength in mm.

    Raises:
        EmptyMask: No foreground pixels (or none under the seed's component).
        DegenerateSkeleton: Skeleton has no endpoint pair (single pixel,
            closed loop) or fewer than two samples survive pruning.
    """
    grid = mask.grid
    labels, n_comp = ndimage.label(grid, structure=np.ones((3, 3), dtype=int))
    if n_comp == 0:
        raise EmptyMask("mask has no foreground pixels")
    if seed is not None:
        r, c = int(seed[0]), int(seed[1])
        if not (0 <= r < grid.shape[0] and 0 <= c < grid.shape[1]) or labels[r, c] == 0:
            raise EmptyMask(f"seed {seed!r} is not on a foreground component")
        component = labels == labels[r, c]
    else:
        sizes = ndimage.sum_labels(grid, labels, index=np.arange(1, n_comp + 1))
        component = labels == (1 + int(np.argmax(sizes)))
        if n_comp > 1:
            logger.info("mask has %d components; analysing the largest (%d px)",
                        n_comp, int(component.sum()))

    padded = np.pad(component, 1)
    skel = medial_axis(padded)[1:-1, 1:-1]
    g, pts = _skeleton_graph(skel, mask.spacing)
    if len(pts) < 2:
        raise DegenerateSkeleton(f"skeleton has {len(pts)} pixel(s); need at least 2")

    # Keep the heaviest connected piece of the skeleton before pruning.
    comps = list(nx.connected_components(g))
    if len(comps) > 1:
        keep = max(comps, key=len)
        g.remove_nodes_from(set(g.nodes) - keep)

    edt_mm = _edt_pixels(component)[pts[:, 0], pts[:, 1]] * mask.spacing
    _prune_spurs(g, edt_mm, mask.spacing)
    order = _longest_leaf_geodesic(g)
    path = pts[order]

    first, last = tuple(path[0]), tuple(path[-1])
    if last < first:
        path = path[::-1]

    steps = np.linalg.norm(np.diff(path, axis=0).astype(float), axis=1) * mask.spacing
    arclength = np.concatenate([[0.0], np.cumsum(steps)])
    centerline = Centerline(points=path, arclength=arclength, spacing=mask.spacing)
    check_centerline(mask, centerline)
    return centerline


def check_centerline(mask: LumenMask, centerline: Centerline) -> None:
    """Raise CenterlineOutsideMask unless every point is on foreground."""
    rows, cols = centerline.points[:, 0], centerline.points[:, 1]
    inside = (
        (rows >= 0) & (rows < mask.grid.shape[0])
        & (cols >= 0) & (cols < mask.grid.shape[1])
    )
    if not inside.all():
        raise CenterlineOutsideMask("centreline leaves the image bounds")
    if not mask.grid[rows, cols].all():
        bad = int(np.argmin(mask.grid[rows, cols]))
        raise CenterlineOutsideMask(
            f"centreline point {bad} at {tuple(centerline.points[bad])} is on background")


def diameter_profile(mask: LumenMask, centerline: Centerline, step: float = 1.0) -> DiameterProfile:
    """Sample lumen diameter at a fixed arclength step along the centreline.

    The distance transform is evaluated at centreline pixels and linearly
    interpolated in arclength between the two pixels bracketing each sample
    position, then converted with the half-pixel rule.

    Args:
        mask: The lumen mask the centreline was extracted from.
        centerline: Ordered centreline.
        step: Sampling interval in mm (default 1.0).

    Returns:
        DiameterProfile with samples at arclengths 0, step, 2*step, ...
        (the last sample does not exceed the centreline length).
    """
    check_positive(step, "step")
    check_centerline(mask, centerline)
    edt = _edt_pixels(mask.grid)
    node_edt = edt[centerline.points[:, 0], centerline.points[:, 1]]

    length = centerline.length
    xs = np.arange(0.0, length + 1e-9, step)
    e = np.interp(xs, centerline.arclength, node_edt)
    samples = (2.0 * e - 1.0) * mask.spacing

    idx = np.searchsorted(centerline.arclength, xs)
    idx = np.clip(idx, 0, len(centerline.arclength) - 1)
    prev = np.clip(idx - 1, 0, None)
    use_prev = (np.abs(centerline.arclength[prev] - xs)
                < np.abs(centerline.arclength[idx] - xs))
    nearest = np.where(use_prev, prev, idx)
    sample_points = centerline.points[nearest]

    return DiameterProfile(step=float(step), samples=samples, sample_points=sample_points)


def estimate_reference(profile: DiameterProfile,
                       override: Optional[float] = None) -> DiameterProfile:
    """Attach a reference diameter to a profile.

    Without an override the reference is the upper-percentile calibre of the
    profile, a robust stand-in for the healthy vessel diameter that ignores
    the stenosed samples.

    Args:
        profile: Diameter profile to annotate.
        override: Operator-supplied reference in mm; must be > 0.

    Returns:
        A copy of the profile with d_ref set.

    Raises:
        NonPositiveOverride: override was supplied but is not > 0.
    """
    if override is not None:
        value = float(override)
        if not np.isfinite(value) or value <= 0.0:
            raise NonPositiveOverride(f"reference override must be > 0, got {override!r}")
        return replace_profile(profile, d_ref=value)
    d_ref = float(np.percentile(profile.samples, REFERENCE_DIAMETER_PERCENTILE))
    return replace_profile(profile, d_ref=d_ref)


def replace_profile(profile: DiameterProfile, **changes) -> DiameterProfile:
    """Shallow copy of a profile with the given fields replaced."""
    kwargs = dict(step=profile.step, samples=profile.samples,
                  d_ref=profile.d_ref, sample_points=profile.sample_points)
    kwargs.update(changes)
    return DiameterProfile(**kwargs)


def build_coregistration(mask: LumenMask, profile: DiameterProfile) -> CoregistrationMap:
    """Map every foreground pixel to its nearest profile sample and back.

    Nearest is Euclidean distance to the sample's centreline pixel; ties are
    resolved to the lower sample index by the KD-tree query order.
    """
    if profile.sample_points is None:
        raise InconsistentInputs("profile carries no sample pixel positions")
    tree = cKDTree(profile.sample_points.astype(float))
    fg = np.argwhere(mask.grid)
    _, nearest = tree.query(fg.astype(float))
    pixel_to_curve = np.full(mask.grid.shape, -1, dtype=np.int32)
    pixel_to_curve[fg[:, 0], fg[:, 1]] = nearest.astype(np.int32)
    return CoregistrationMap(
        curve_to_pixel=profile.sample_points.astype(np.int32).copy(),
        pixel_to_curve=pixel_to_curve,
    )
