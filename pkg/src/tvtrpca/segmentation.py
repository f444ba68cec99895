"""Binary vessel masks from extracted foreground frames.

Two-stage region growth (TSRG):

1. binarize the frame at 95% of its maximum and grow a 4-connected region
   from an automatically chosen seed, giving the main branches;
2. enhance the frame with an oriented Gaussian second-derivative (GSD) filter
   followed by Radon-like features (RLF), binarize the RLF image, take the
   union with the stage-1 mask and grow again from the same seed.

Frames are expected with vessels bright and values in [0, 1].
"""
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple
import math
import warnings

import numpy as np
from scipy import ndimage

__all__ = [
    "RlfParams",
    "RegionGrowWarning",
    "SegmentationError",
    "TsrgResult",
    "default_disk_radius",
    "gsd_filter",
    "edge_graph",
    "rlf_filter",
    "select_seed",
    "region_grow",
    "tsrg",
    "tsrg_stages",
]

STAGE1_FRACTION = 0.95
RLF_THRESHOLD = 0.5
EDGE_FRACTION = 0.4
GSD_TRUNCATE = 3.0


class SegmentationError(ValueError):
    """The frame holds no usable foreground (e.g. an all-zero frame)."""


class RegionGrowWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RlfParams:
    """Radon-like feature settings.

    sup
        Longest scan-line segment, in pixels; longer segments are cut into
        pieces of at most ``sup`` pixels.
    or_count
        Scan-line families per base orientation; the scan lines use
        ``8 * or_count`` orientations evenly spread over ``[0, pi)``.
    sc
        GSD scale; the filter bank uses ``sc/4``, ``sc/2`` and ``sc``.
    """
    sup: int = 25
    or_count: int = 1
    sc: float = 10.0

    def __post_init__(self):
        if self.sup < 3 or self.or_count < 1 or self.sc <= 0:
            raise ValueError("RlfParams requires sup >= 3, or_count >= 1 and sc > 0")

    @property
    def scales(self):
        return (self.sc / 4, self.sc / 2, self.sc)

    @property
    def orientations(self):
        return tuple(k * np.pi / 8 for k in range(8))

    @property
    def line_angles(self):
        count = 8 * self.or_count
        return tuple(k * np.pi / count for k in range(count))


def default_disk_radius(shape):
    return max(3, round(min(shape[:2]) / 40))


def _normalize(x):
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        return np.zeros_like(x, dtype=float)
    return (x - lo) / (hi - lo)


def gsd_filter(img, scales, orientations, polarity="dark", normalize=True):
    """Maximum oriented Gaussian second-derivative response.

    For each scale ``s`` and orientation ``theta`` the image is filtered
    with ``s**2`` times the second derivative of a Gaussian along the
    direction ``(sin theta, cos theta)`` (row, column).  With
    ``polarity="dark"`` a dark line on a bright field responds positively;
    ``"bright"`` flips the sign.  Negative responses are clipped to zero.
    """
    img = np.asarray(img, dtype=float)
    if not len(scales) or not len(orientations):
        raise ValueError("need at least one scale and one orientation")
    if polarity not in ("dark", "bright"):
        raise ValueError("polarity must be 'dark' or 'bright'")
    sign = 1.0 if polarity == "dark" else -1.0
    # truncated derivative kernels do not sum to zero; removing the mean keeps
    # the response blind to constant offsets
    img = img - img.mean()
    best = np.full(img.shape, -np.inf)
    for s in scales:
        if 2 * math.ceil(GSD_TRUNCATE * s) + 1 > min(img.shape):
            raise ValueError(f"GSD kernel at scale {s} is larger than the {img.shape} image")
        d = lambda order: ndimage.gaussian_filter(  # noqa: E731
            img, s, order=order, mode="reflect", truncate=GSD_TRUNCATE)
        grr, grc, gcc = d((2, 0)), d((1, 1)), d((0, 2))
        for theta in orientations:
            dr, dc = math.sin(theta), math.cos(theta)
            resp = sign * s ** 2 * (dr * dr * grr + 2 * dr * dc * grc + dc * dc * gcc)
            np.maximum(best, resp, out=best)
    best = np.maximum(best, 0.0)
    return _normalize(best) if normalize else best


def edge_graph(g, threshold_fraction=EDGE_FRACTION):
    """Pixels whose GSD response reaches ``threshold_fraction * max``."""
    if not 0 < threshold_fraction < 1:
        raise ValueError("threshold_fraction must lie in (0, 1)")
    g = np.asarray(g, dtype=float)
    peak = g.max() if g.size else 0.0
    if peak <= 0:
        return np.zeros(g.shape, dtype=bool)
    return (g > 0) & (g >= threshold_fraction * peak)


def _line_family(shape, theta):
    """Partition the pixel grid into digital lines at angle ``theta``.

    Returns the flat pixel indices ordered line by line (and along each
    line) plus the line label of each entry.
    """
    m, n = shape
    rows, cols = np.indices(shape)
    sin, cos = math.sin(theta), math.cos(theta)
    if abs(cos) >= abs(sin):
        # step along columns; the row offset is rounded half up
        off = np.floor(sin / cos * np.arange(n) + 0.5).astype(int)
        label, pos = rows - off[cols], cols
    else:
        off = np.floor(cos / sin * np.arange(m) + 0.5).astype(int)
        label, pos = cols - off[rows], rows
    order = np.lexsort((pos.ravel(), label.ravel()))
    return order, label.ravel()[order]


def rlf_filter(g, edges, params=RlfParams(), normalize=True):
    """Radon-like features of a feature image ``g``.

    Every scan line is cut where it enters or leaves the edge mask (and
    every ``params.sup`` pixels); each pixel receives the mean of ``g`` over
    its segment.  The result is averaged over all scan-line families.
    """
    g = np.asarray(g, dtype=float)
    edges = np.asarray(edges, dtype=bool)
    if g.shape != edges.shape or g.ndim != 2:
        raise ValueError("g and edges must be 2-D arrays of equal shape")
    flat_g, flat_e = g.ravel(), edges.ravel()
    acc = np.zeros(g.size)
    for theta in params.line_angles:
        order, label = _line_family(g.shape, theta)
        e = flat_e[order]
        run_start = np.ones(order.size, dtype=bool)
        run_start[1:] = (label[1:] != label[:-1]) | (e[1:] != e[:-1])
        start_idx = np.flatnonzero(run_start)
        run_id = np.cumsum(run_start) - 1
        offset = np.arange(order.size) - start_idx[run_id]
        seg = np.cumsum(run_start | (offset % params.sup == 0)) - 1
        sums = np.bincount(seg, weights=flat_g[order])
        counts = np.bincount(seg)
        acc[order] += (sums / counts)[seg]
    out = (acc / len(params.line_angles)).reshape(g.shape)
    return _normalize(out) if normalize else out


def _disk(radius):
    yy, xx = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    return yy ** 2 + xx ** 2 <= radius ** 2


def select_seed(img, disk_radius):
    """Centre of the disk placement whose darkest pixel is brightest.

    Only placements with the whole disk inside the image are considered;
    ties resolve to the first centre in row-major order.
    """
    img = np.asarray(img, dtype=float)
    r = int(disk_radius)
    m, n = img.shape
    if r < 0 or 2 * r + 1 > m or 2 * r + 1 > n:
        raise ValueError(f"disk of radius {r} does not fit a {img.shape} image")
    worst = ndimage.minimum_filter(img, footprint=_disk(r), mode="constant", cval=np.inf)
    valid = worst[r:m - r, r:n - r]
    i, j = np.unravel_index(int(np.argmax(valid)), valid.shape)
    return int(i) + r, int(j) + r


def region_grow(img, seed, criterion):
    """4-connected breadth-first region growth from ``seed``.

    ``criterion`` is either a boolean array of the image's shape or a
    callable mapping the image to one.  If the seed itself fails the
    criterion an empty mask is returned and a :class:`RegionGrowWarning`
    is issued.
    """
    img = np.asarray(img)
    ok = criterion(img) if callable(criterion) else criterion
    ok = np.asarray(ok, dtype=bool)
    if ok.shape != img.shape[:2]:
        raise ValueError("criterion shape does not match the image")
    m, n = ok.shape
    r0, c0 = seed
    if not (0 <= r0 < m and 0 <= c0 < n):
        raise ValueError(f"seed {seed} outside the {ok.shape} image")
    mask = np.zeros((m, n), dtype=bool)
    if not ok[r0, c0]:
        warnings.warn(f"seed {seed} does not satisfy the growth criterion",
                      RegionGrowWarning, stacklevel=2)
        return mask
    mask[r0, c0] = True
    queue = deque([(r0, c0)])
    while queue:
        r, c = queue.popleft()
        for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= rr < m and 0 <= cc < n and ok[rr, cc] and not mask[rr, cc]:
                mask[rr, cc] = True
                queue.append((rr, cc))
    return mask


class TsrgResult(NamedTuple):
    mask: np.ndarray
    stage1: np.ndarray
    seed: tuple
    rlf: np.ndarray


def tsrg_stages(frame, params=RlfParams(), disk_radius=None, stage2=True,
                rlf_threshold=RLF_THRESHOLD, edge_fraction=EDGE_FRACTION):
    """Two-stage region growth, returning every intermediate product."""
    frame = np.asarray(frame, dtype=float)
    if frame.ndim != 2:
        raise ValueError("tsrg expects a single 2-D frame")
    peak = frame.max()
    if not peak > 0:
        raise SegmentationError("frame has no positive foreground to segment")
    if disk_radius is None:
        disk_radius = default_disk_radius(frame.shape)
    binary = frame >= STAGE1_FRACTION * peak
    seed = select_seed(frame, disk_radius)
    if not binary[seed]:
        # the best disk sits off the thresholded core: use the closest core pixel
        _, (ri, ci) = ndimage.distance_transform_edt(~binary, return_indices=True)
        seed = (int(ri[seed]), int(ci[seed]))
    stage1 = region_grow(frame, seed, binary)
    if not stage2:
        return TsrgResult(stage1, stage1, seed, None)
    g = gsd_filter(frame, params.scales, params.orientations, polarity="bright")
    rlf = rlf_filter(g, edge_graph(g, edge_fraction), params)
    peak = rlf.max()
    union = stage1 | (rlf >= rlf_threshold * peak) if peak > 0 else stage1
    return TsrgResult(region_grow(frame, seed, union), stage1, seed, rlf)


def tsrg(frame, params=RlfParams(), disk_radius=None, stage2=True):
    """Binary vessel mask of a vessels-bright frame in [0, 1]."""
    return tsrg_stages(frame, params, disk_radius, stage2).mask
