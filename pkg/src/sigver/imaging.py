"""Grayscale signature images to single-pixel-wide skeletons.

Pipeline stages: difference-of-Gaussians enhancement, global binarization
(fixed threshold or Otsu), and two-subiteration thinning run to a fixed
point. All functions are pure and never modify their inputs.

Conventions used throughout the package:
  * arrays are indexed ``[row, col]`` i.e. ``[y, x]``; points are ``(x, y)``
  * ink is dark: a pixel is ink iff its intensity is strictly below the
    binarization threshold
  * color inputs are reduced to luminance with the ITU-R 601-2 integer
    weights used by Pillow: ``L = (19595 R + 38470 G + 7471 B + 2^15) >> 16``
  * Gaussian kernels are sampled at integer offsets with radius
    ``ceil(3 sigma)`` and renormalized to sum 1; borders are mirrored
    edge-inclusively (numpy pad mode ``symmetric``), which is defined for
    every image size including 1-pixel axes
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import InputError, ParameterError


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale raster, ``pixels`` of shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if not isinstance(p, np.ndarray) or p.ndim != 2 or p.dtype != np.uint8:
            raise InputError("grayscale image must be a 2-D uint8 array")
        if p.shape[0] == 0 or p.shape[1] == 0:
            raise InputError("image has a zero dimension")

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


@dataclass(frozen=True)
class BinaryImage:
    """Ink mask, ``ink`` boolean of shape (height, width), True = ink."""

    ink: np.ndarray

    def __post_init__(self):
        m = self.ink
        if not isinstance(m, np.ndarray) or m.ndim != 2 or m.dtype != np.bool_:
            raise InputError("binary image must be a 2-D bool array")
        if m.shape[0] == 0 or m.shape[1] == 0:
            raise InputError("image has a zero dimension")

    @property
    def height(self) -> int:
        return int(self.ink.shape[0])

    @property
    def width(self) -> int:
        return int(self.ink.shape[1])

    @property
    def ink_count(self) -> int:
        return int(self.ink.sum())


class SkeletonImage(BinaryImage):
    """Thinned ink mask; produced by :func:`thin_zhang_suen`."""

    def ink_points(self) -> np.ndarray:
        """Ink pixel centers as an (N, 2) float array of (x, y), raster order."""
        ys, xs = np.nonzero(self.ink)
        return np.column_stack([xs, ys]).astype(np.float64)


def load_grayscale(path) -> GrayImage:
    """Load a PNG/PGM (or anything Pillow decodes) as 8-bit grayscale."""
    try:
        with Image.open(path) as im:
            if im.mode != "L":
                im = im.convert("L")
            arr = np.asarray(im, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise InputError(f"cannot read image {path}: {exc}") from exc
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InputError(f"image {path} has a zero dimension")
    return GrayImage(arr)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian sampled at integer offsets, radius ceil(3 sigma)."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return k / k.sum()


def _convolve_separable(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Row-then-column convolution with edge-inclusive mirrored borders."""
    r = (len(kernel) - 1) // 2
    out = values.astype(np.float64)
    if r == 0:
        return out * kernel[0] * kernel[0]
    padded = np.pad(out, ((0, 0), (r, r)), mode="symmetric")
    out = np.zeros_like(values, dtype=np.float64)
    for k in range(len(kernel)):
        out += kernel[k] * padded[:, k : k + values.shape[1]]
    padded = np.pad(out, ((r, r), (0, 0)), mode="symmetric")
    out = np.zeros_like(values, dtype=np.float64)
    for k in range(len(kernel)):
        out += kernel[k] * padded[k : k + values.shape[0], :]
    return out


def dog_response(img: GrayImage, sigma_narrow: float = 1.0, sigma_wide: float = 2.0) -> np.ndarray:
    """Raw difference-of-Gaussians response (narrow blur minus wide blur), float."""
    if not sigma_narrow < sigma_wide:
        raise ParameterError(
            f"need sigma_narrow < sigma_wide, got {sigma_narrow} >= {sigma_wide}"
        )
    narrow = _convolve_separable(img.pixels, gaussian_kernel(sigma_narrow))
    wide = _convolve_separable(img.pixels, gaussian_kernel(sigma_wide))
    return narrow - wide


def dog_enhance(img: GrayImage, sigma_narrow: float = 1.0, sigma_wide: float = 2.0) -> GrayImage:
    """Difference-of-Gaussians enhancement rescaled linearly to [0, 255].

    Dark strokes produce the most negative response, so the minimum maps to
    0 (ink stays dark). A flat response (no structure at all) maps to plain
    background, 255 everywhere.
    """
    resp = dog_response(img, sigma_narrow, sigma_wide)
    lo = float(resp.min())
    hi = float(resp.max())
    if hi - lo < 1e-12:
        return GrayImage(np.full(resp.shape, 255, dtype=np.uint8))
    scaled = (resp - lo) * (255.0 / (hi - lo))
    return GrayImage(np.rint(scaled).astype(np.uint8))


def otsu_threshold(img: GrayImage) -> int:
    """Threshold maximizing between-class variance of {v < t} vs {v >= t}.

    Candidates t = 1..255 are scored by w0*w1*(mu0-mu1)^2; degenerate splits
    (an empty class) score 0. Ties take the lowest t. A constant image has
    no valid split and yields 0, i.e. no ink.
    """
    hist = np.bincount(img.pixels.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    values = np.arange(256, dtype=np.float64)
    cum_n = np.cumsum(hist)
    cum_v = np.cumsum(hist * values)
    best_t = 0
    best_score = 0.0
    for t in range(1, 256):
        n0 = cum_n[t - 1]
        n1 = total - n0
        if n0 == 0.0 or n1 == 0.0:
            continue
        mu0 = cum_v[t - 1] / n0
        mu1 = (cum_v[255] - cum_v[t - 1]) / n1
        score = (n0 / total) * (n1 / total) * (mu0 - mu1) ** 2
        if score > best_score:
            best_score = score
            best_t = t
    return best_t


def binarize_global(img: GrayImage, threshold: int | None = None) -> BinaryImage:
    """Ink mask: pixel is ink iff intensity < threshold (Otsu when None)."""
    if threshold is None:
        threshold = otsu_threshold(img)
    else:
        if not (0 <= threshold <= 255):
            raise ParameterError(f"threshold must be in [0, 255], got {threshold}")
    return BinaryImage(img.pixels < threshold)


def _shifted_neighbors(ink: np.ndarray):
    """The 8 neighbor planes clockwise from north: N NE E SE S SW W NW."""
    p = np.pad(ink, 1, constant_values=False)
    return (
        p[:-2, 1:-1],
        p[:-2, 2:],
        p[1:-1, 2:],
        p[2:, 2:],
        p[2:, 1:-1],
        p[2:, :-2],
        p[1:-1, :-2],
        p[:-2, :-2],
    )


def thin_zhang_suen(img: BinaryImage) -> SkeletonImage:
    """Classic two-subiteration thinning, iterated until nothing changes.

    A pixel is deleted when it has 2..6 ink neighbors, exactly one 0->1
    transition around its 8-neighborhood, and the subiteration's two
    direction products are zero. Running the result through thinning again
    changes nothing (the loop exits only at a fixed point).
    """
    ink = img.ink.copy()
    while True:
        changed = False
        for step in (0, 1):
            n, ne, e, se, s, sw, w, nw = _shifted_neighbors(ink)
            seq = (n, ne, e, se, s, sw, w, nw)
            count = np.zeros(ink.shape, dtype=np.uint8)
            for plane in seq:
                count += plane
            transitions = np.zeros(ink.shape, dtype=np.uint8)
            for a, b in zip(seq, seq[1:] + seq[:1]):
                transitions += (~a) & b
            if step == 0:
                cond = ~(n & e & s) & ~(e & s & w)
            else:
                cond = ~(n & e & w) & ~(n & s & w)
            deletable = ink & (count >= 2) & (count <= 6) & (transitions == 1) & cond
            if deletable.any():
                ink &= ~deletable
                changed = True
        if not changed:
            break
    return SkeletonImage(ink)


def save_pgm(img: GrayImage | BinaryImage, path) -> None:
    """Write a binary (P5) PGM; ink masks are written black-on-white."""
    if isinstance(img, BinaryImage):
        data = np.where(img.ink, 0, 255).astype(np.uint8)
    else:
        data = img.pixels
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def load_skeleton_pgm(path) -> SkeletonImage:
    """Read back a skeleton written by :func:`save_pgm` (dark = ink)."""
    gray = load_grayscale(path)
    return SkeletonImage(gray.pixels < 128)


def preprocess(
    img: GrayImage,
    sigma_narrow: float = 1.0,
    sigma_wide: float = 2.0,
    threshold: int | None = None,
) -> tuple[GrayImage, BinaryImage, SkeletonImage]:
    """Run the full imaging pipeline, returning every intermediate stage."""
    enhanced = dog_enhance(img, sigma_narrow, sigma_wide)
    binary = binarize_global(enhanced, threshold)
    skeleton = thin_zhang_suen(binary)
    return enhanced, binary, skeleton
