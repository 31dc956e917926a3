"""Foreground/background composition.

The synthesis adapter returns colored text on a uniform gray field; this
module turns that into a binary text mask via Otsu's threshold and lays
the masked foreground over the erased background. With feathering on, a
one-pixel band just inside the mask boundary is blended 50/50 to soften
edges; every pixel with mask=0 stays bit-identical to the background.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, UniformHistogram
from .scene import SceneImage, to_grayscale

BACKGROUND_GRAY = 128


@dataclass(frozen=True)
class BinaryMask:
    """One bit per pixel; `bits` is a (height, width) bool array."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.bits, dtype=bool)
        if arr.ndim != 2:
            raise ValueError("mask must be 2-D")
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))


def otsu_threshold(hist) -> int:
    """Threshold t in [0, 255] maximizing between-class variance.

    Classes are {values <= t} and {values > t}; variance is computed in
    double precision from integer histogram moments; ties resolve to the
    smallest t. A histogram with a single occupied value has no two-class
    split and raises UniformHistogram.
    """
    hist = np.asarray(hist, dtype=np.int64)
    if hist.shape != (256,) or hist.min() < 0:
        raise ValueError("expected 256 nonnegative bin counts")
    total = int(hist.sum())
    if total < 1:
        raise ValueError("histogram is empty")
    if np.count_nonzero(hist) < 2:
        raise UniformHistogram("all pixels share one value")

    values = np.arange(256, dtype=np.int64)
    w0 = np.cumsum(hist)[:-1].astype(np.float64)          # counts in {<= t}, t = 0..254
    w1 = total - w0
    sum0 = np.cumsum(hist * values)[:-1].astype(np.float64)
    sum_all = float((hist * values).sum())
    valid = (w0 > 0) & (w1 > 0)
    sigma = np.zeros(255)
    mu0 = np.divide(sum0, w0, out=np.zeros(255), where=valid)
    mu1 = np.divide(sum_all - sum0, w1, out=np.zeros(255), where=valid)
    sigma[valid] = (w0 * w1)[valid] * (mu0 - mu1)[valid] ** 2
    return int(np.argmax(sigma))  # argmax returns the first (smallest) maximizer


def extract_foreground_mask(fg: SceneImage) -> BinaryMask:
    """Binary text mask of a synthesized foreground (text on gray).

    Otsu splits the luma histogram in two; the class whose mean luma lies
    farther from the background gray is taken as text. A uniform image has
    no text and yields an empty mask.
    """
    luma = to_grayscale(fg)
    hist = np.bincount(luma.ravel(), minlength=256)
    try:
        t = otsu_threshold(hist)
    except UniformHistogram:
        return BinaryMask.empty(fg.width, fg.height)
    low = luma <= t
    mean_low = float(luma[low].mean())
    mean_high = float(luma[~low].mean())
    if abs(mean_low - BACKGROUND_GRAY) >= abs(mean_high - BACKGROUND_GRAY):
        return BinaryMask(low)
    return BinaryMask(~low)


def _inner_boundary(bits: np.ndarray) -> np.ndarray:
    """Mask pixels with at least one 4-neighbor outside the mask."""
    padded = np.pad(bits, 1, mode="constant", constant_values=False)
    neighbors_all_set = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return bits & ~neighbors_all_set


def composite(
    bg: SceneImage, fg: SceneImage, mask: BinaryMask, feather: bool = False
) -> SceneImage:
    """out = fg where mask else bg; optionally 50/50-blend the mask rim."""
    if (bg.width, bg.height) != (fg.width, fg.height) or (
        mask.width,
        mask.height,
    ) != (bg.width, bg.height):
        raise DimensionMismatch(
            f"bg {bg.width}x{bg.height}, fg {fg.width}x{fg.height}, "
            f"mask {mask.width}x{mask.height} must agree"
        )
    out = np.where(mask.bits[:, :, None], fg.data, bg.data)
    if feather:
        rim = _inner_boundary(mask.bits)
        blend = (
            bg.data[rim].astype(np.uint16) + fg.data[rim].astype(np.uint16) + 1
        ) // 2
        out[rim] = blend.astype(np.uint8)
    return SceneImage(out, bg.id)
