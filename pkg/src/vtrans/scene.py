"""Core raster and geometry types shared by the whole pipeline.

Images are 8-bit RGB, row-major, no alpha. Boxes are axis-aligned and
clamped (never rejected) when they stick out of the image, except when
they miss it entirely. All types are immutable after construction and
safe to share between workers.
"""

from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import DimensionMismatch, EmptyIntersection


class LangCode(str, enum.Enum):
    EN = "en"
    HI = "hi"


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle: top-left corner plus size, in pixels."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box must have positive size, got {self.w}x{self.h}")

    @property
    def right(self) -> int:
        return self.x + self.w

    @property
    def bottom(self) -> int:
        return self.y + self.h

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    def clamped(self, width: int, height: int) -> "Box":
        """Intersect with a width x height canvas.

        Raises EmptyIntersection when the box misses the canvas entirely.
        """
        x0 = max(self.x, 0)
        y0 = max(self.y, 0)
        x1 = min(self.right, width)
        y1 = min(self.bottom, height)
        if x1 <= x0 or y1 <= y0:
            raise EmptyIntersection(f"box {self} outside {width}x{height} image")
        return Box(x0, y0, x1 - x0, y1 - y0)

    def union(self, other: "Box") -> "Box":
        x0 = min(self.x, other.x)
        y0 = min(self.y, other.y)
        return Box(x0, y0, max(self.right, other.right) - x0, max(self.bottom, other.bottom) - y0)

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}

    @classmethod
    def from_json(cls, obj) -> "Box":
        if isinstance(obj, (list, tuple)):
            x, y, w, h = obj
            return cls(int(x), int(y), int(w), int(h))
        return cls(int(obj["x"]), int(obj["y"]), int(obj["w"]), int(obj["h"]))


@dataclass(frozen=True)
class SceneImage:
    """An RGB8 raster. `data` is (height, width, 3) uint8 and read-only."""

    data: np.ndarray
    id: str = ""

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected (h, w, 3) uint8 buffer, got shape {getattr(arr, 'shape', None)}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def pixels(self) -> bytes:
        """Row-major RGB8 buffer (length = width * height * 3)."""
        return self.data.tobytes()

    def with_id(self, new_id: str) -> "SceneImage":
        return SceneImage(self.data, new_id)

    @classmethod
    def from_pixels(cls, width: int, height: int, pixels: bytes, id: str = "") -> "SceneImage":
        if len(pixels) != width * height * 3:
            raise DimensionMismatch(f"buffer length {len(pixels)} != {width}x{height}x3")
        arr = np.frombuffer(bytes(pixels), dtype=np.uint8).reshape(height, width, 3)
        return cls(arr, id)

    @classmethod
    def filled(cls, width: int, height: int, color=(0, 0, 0), id: str = "") -> "SceneImage":
        arr = np.empty((height, width, 3), dtype=np.uint8)
        arr[:, :] = color
        return cls(arr, id)


@dataclass(frozen=True)
class WordObservation:
    """A located, recognized word. Text is stored NFC-normalized."""

    box: Box
    text: str
    confidence: float = 1.0
    token_class: "object" = None  # TokenClass; kept loose to avoid an import cycle

    def __post_init__(self):
        object.__setattr__(self, "text", unicodedata.normalize("NFC", self.text))
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


def crop(img: SceneImage, b: Box) -> SceneImage:
    """Cut the (clamped) sub-image under `b`."""
    cb = b.clamped(img.width, img.height)
    return SceneImage(img.data[cb.y:cb.bottom, cb.x:cb.right].copy(), img.id)


def paste(dst: SceneImage, src: SceneImage, at: Box) -> SceneImage:
    """Replace the pixels of `dst` under `at` with `src`.

    `at` must match the source dimensions; the part of `at` that falls
    outside `dst` is dropped (together with the matching part of `src`),
    so edge-jittered boxes never fail.
    """
    if (at.w, at.h) != (src.width, src.height):
        raise DimensionMismatch(f"paste box {at.w}x{at.h} != source {src.width}x{src.height}")
    try:
        cb = at.clamped(dst.width, dst.height)
    except EmptyIntersection:
        return dst
    out = dst.data.copy()
    sx = cb.x - at.x
    sy = cb.y - at.y
    out[cb.y:cb.bottom, cb.x:cb.right] = src.data[sy:sy + cb.h, sx:sx + cb.w]
    return SceneImage(out, dst.id)


def to_grayscale(img: SceneImage) -> np.ndarray:
    """Per-pixel luma = round(0.299 R + 0.587 G + 0.114 B) as (h, w) uint8.

    Computed in exact integer arithmetic (half-up rounding), so results are
    bit-stable across platforms.
    """
    rgb = img.data.astype(np.uint32)
    luma = (299 * rgb[:, :, 0] + 587 * rgb[:, :, 1] + 114 * rgb[:, :, 2] + 500) // 1000
    return np.minimum(luma, 255).astype(np.uint8)


def read_png(path, id: str = "") -> SceneImage:
    """Load a PNG (or any PIL-readable raster) as RGB8.

    Alpha, when present, is flattened against white.
    """
    with Image.open(path) as im:
        if im.mode in ("RGBA", "LA") or (im.mode == "P" and "transparency" in im.info):
            rgba = im.convert("RGBA")
            bg = Image.new("RGBA", rgba.size, (255, 255, 255, 255))
            im = Image.alpha_composite(bg, rgba).convert("RGB")
        else:
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.uint8)
    return SceneImage(arr, id or str(path))


def write_png(img: SceneImage, path) -> None:
    # compress_level pinned: deterministic bytes and fast enough for batches
    Image.fromarray(img.data).save(path, format="PNG", compress_level=1)


def write_gray_png(gray: np.ndarray, path) -> None:
    """Save a (h, w) uint8 buffer as a single-channel PNG."""
    Image.fromarray(np.ascontiguousarray(gray, dtype=np.uint8), mode="L").save(
        path, format="PNG", compress_level=1
    )
