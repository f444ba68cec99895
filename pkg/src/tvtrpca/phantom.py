"""Synthetic angiography-like sequences with known layers.

The generated observation follows the additive layer model
``O = B + E + H + G`` (clipped to [0, 1]):

* ``B``: a smooth texture of rank at most ``r + 1`` (rank-``r`` product plus
  an intensity offset), identical in every frame;
* ``H``: a dark vessel tree (trunk plus branches that grow over time) that
  sways along a smooth periodic trajectory;
* ``E``: a few faint, slowly drifting blobs;
* ``G``: i.i.d. Gaussian noise.

All randomness comes from ``PhantomSpec.seed``.
"""
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .solver import Decomposition

__all__ = ["PhantomSpec", "Phantom", "generate_phantom"]


@dataclass(frozen=True)
class PhantomSpec:
    m: int = 128
    n: int = 128
    t: int = 20
    background_rank: int = 3
    tube_width: float = 8.0
    tube_contrast: float = 0.3
    amplitude: float = 10.0
    n_branches: int = 3
    n_blobs: int = 3
    blob_intensity: float = 0.06
    noise_sigma: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if min(self.m, self.n, self.t) <= 0:
            raise ValueError("phantom dimensions must be positive")
        if self.background_rank < 1:
            raise ValueError("background_rank must be at least 1")
        if self.n_branches < 0 or self.n_blobs < 0:
            raise ValueError("branch and blob counts must be nonnegative")
        if self.noise_sigma < 0 or self.tube_width < 0 or self.amplitude < 0:
            raise ValueError("noise_sigma, tube_width and amplitude must be nonnegative")
        if self.tube_width > 0 and (self.tube_width + 2 * self.amplitude
                                    >= 0.5 * min(self.m, self.n)):
            raise ValueError("tube does not fit the frame: reduce tube_width or amplitude")


@dataclass(frozen=True)
class Phantom:
    observation: np.ndarray
    masks: np.ndarray  # (M, N, T) bool, exact vessel support
    truth: Decomposition


def _smooth_profile(rng, length, n_terms=10):
    x = np.linspace(0.0, 1.0, length)
    prof = np.full(length, 1.0)
    for j in range(1, n_terms + 1):
        prof += rng.normal(scale=0.6 / np.sqrt(j)) * np.cos(np.pi * j * x + rng.uniform(0, 2 * np.pi))
    return prof


def _background(rng, spec):
    frame = np.zeros((spec.m, spec.n))
    for _ in range(spec.background_rank):
        frame += np.outer(_smooth_profile(rng, spec.m), _smooth_profile(rng, spec.n))
    lo, hi = frame.min(), frame.max()
    frame = 0.3 + 0.55 * (frame - lo) / (hi - lo) if hi > lo else np.full_like(frame, 0.55)
    return frame


def _polyline(p0, p1, step=0.25):
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    count = max(2, int(np.ceil(np.linalg.norm(p1 - p0) / step)) + 1)
    return p0 + np.linspace(0, 1, count)[:, None] * (p1 - p0)


def _rasterize(points, shape, width):
    centre = np.zeros(shape, dtype=bool)
    idx = np.rint(points).astype(int)
    ok = (idx[:, 0] >= 0) & (idx[:, 0] < shape[0]) & (idx[:, 1] >= 0) & (idx[:, 1] < shape[1])
    centre[idx[ok, 0], idx[ok, 1]] = True
    if not centre.any():
        return centre
    return ndimage.distance_transform_edt(~centre) <= width / 2


def _vessel_masks(rng, spec):
    m, n, t = spec.m, spec.n, spec.t
    margin = spec.amplitude + spec.tube_width
    # trunk: gently curved path across the frame
    cols = np.linspace(margin, n - 1 - margin, 200)
    base_row = 0.5 * m + 0.15 * m * np.sin(np.pi * (cols - margin) / (n - 2 * margin)
                                         + rng.uniform(-0.3, 0.3))
    trunk = np.stack([base_row, cols], axis=1)
    branches = []
    for i in range(spec.n_branches):
        frac = (i + 1) / (spec.n_branches + 1)
        origin = trunk[int(frac * (len(trunk) - 1))]
        sign = 1 if i % 2 == 0 else -1
        angle = sign * rng.uniform(0.35, 0.6) * np.pi
        length = rng.uniform(0.22, 0.3) * min(m, n)
        direction = np.array([np.sin(angle), np.cos(angle)])
        start = rng.integers(0, max(1, t // 2))  # branches appear over time
        branches.append((origin, direction, length, start))
    branch_width = max(2.0, round(0.6 * spec.tube_width))
    phase = rng.uniform(0, 2 * np.pi)
    masks = np.zeros((m, n, t), dtype=bool)
    for k in range(t):
        if spec.tube_width == 0:
            break
        s = 2 * np.pi * k / t + phase
        shift = spec.amplitude * np.array([np.sin(s), 0.5 * np.sin(2 * s)])
        frame = _rasterize(trunk + shift, (m, n), spec.tube_width)
        for origin, direction, length, start in branches:
            if k < start:
                continue
            grown = length * min(1.0, 0.4 + 0.6 * (k - start + 1) / max(1, t - start))
            pts = _polyline(origin + shift, origin + shift + grown * direction)
            frame |= _rasterize(pts, (m, n), branch_width)
        masks[:, :, k] = frame
    return masks


def _blobs(rng, spec):
    m, n, t = spec.m, spec.n, spec.t
    rows, cols = np.mgrid[0:m, 0:n]
    out = np.zeros((m, n, t))
    for _ in range(spec.n_blobs):
        centre = rng.uniform([0.15 * m, 0.15 * n], [0.85 * m, 0.85 * n])
        velocity = rng.normal(scale=0.6, size=2)
        radius = rng.uniform(5, 10)
        amp = spec.blob_intensity * rng.choice([-1.0, 1.0])
        for k in range(t):
            c = centre + k * velocity
            d2 = (rows - c[0]) ** 2 + (cols - c[1]) ** 2
            out[:, :, k] += amp * np.exp(-d2 / (2 * radius ** 2))
    return out


def generate_phantom(spec=PhantomSpec()):
    """Build an observation tensor together with its ground-truth layers.

    Returns
    -------
    Phantom
        ``observation`` (M, N, T) in [0, 1], boolean vessel ``masks`` of the
        same shape, and the true layers packed as a :class:`Decomposition`.
    """
    rng = np.random.default_rng(spec.seed)
    dims = (spec.m, spec.n, spec.t)
    background = np.repeat(_background(rng, spec)[:, :, None], spec.t, axis=2)
    masks = _vessel_masks(rng, spec)
    foreground = -spec.tube_contrast * masks.astype(float)
    dynamic = _blobs(rng, spec)
    noise = rng.normal(scale=spec.noise_sigma, size=dims) if spec.noise_sigma > 0 else np.zeros(dims)
    observation = np.clip(background + dynamic + foreground + noise, 0.0, 1.0)
    truth = Decomposition(background=background, dynamic_background=dynamic,
                          foreground=foreground, noise=noise, iterations=0,
                          converged=True, residual_history=[])
    return Phantom(observation=observation, masks=masks, truth=truth)
