"""Deterministic in-process adapters.

These reproduce the "Oracle" pipeline configurations: ground-truth
detection/recognition from sidecar annotations, dictionary translation,
and closed-form erase/synthesize/score rules. A pipeline bound to stubs
only runs with zero network or process dependencies, and every stub is
a pure function of its inputs, so whole runs replay bit-identically.
"""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy import ndimage

from ..compositor import BACKGROUND_GRAY, BinaryMask
from ..errors import DimensionMismatch, EmptyText, NoAnnotation
from ..scene import Box, SceneImage, to_grayscale

log = logging.getLogger("vtrans.adapters")


def clamp_boxes(boxes: Iterable[Box], width: int, height: int, source: str = "adapter") -> list[Box]:
    """Clamp detections into the image; drop (and log) fully-outside boxes."""
    out = []
    for b in boxes:
        try:
            cb = b.clamped(width, height)
        except Exception:
            log.warning("%s: dropping box %s fully outside %dx%d", source, b, width, height)
            continue
        if cb != b:
            log.warning("%s: clamped out-of-bounds box %s to %s", source, b, cb)
        out.append(cb)
    return out


@dataclass
class GroundTruth:
    """Sidecar annotations for one image: word boxes with their texts."""

    boxes: list[Box] = field(default_factory=list)
    texts: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.boxes) != len(self.texts):
            raise ValueError("annotation boxes and texts must pair up")


class OracleDetector:
    """Returns the annotated boxes for the image id, verbatim."""

    def __init__(self, annotations: Mapping[str, GroundTruth]):
        self.annotations = dict(annotations)

    def detect(self, img: SceneImage) -> list[Box]:
        gt = self.annotations.get(img.id)
        if gt is None:
            return []
        return clamp_boxes(gt.boxes, img.width, img.height, "oracle-detect")


class OracleRecognizer:
    """Returns the annotated transcription for (image id, box), confidence 1."""

    def __init__(self, annotations: Mapping[str, GroundTruth]):
        self.annotations = dict(annotations)

    def recognize(self, piece: SceneImage, image_id: str = "", box: Optional[Box] = None) -> tuple[str, float]:
        image_id = image_id or piece.id
        gt = self.annotations.get(image_id)
        if gt is not None and box is not None:
            for gb, text in zip(gt.boxes, gt.texts):
                if gb == box:
                    return text, 1.0
        raise NoAnnotation(f"no transcription for {image_id!r} at {box}")


class LexiconTranslator:
    """Phrase-table translation over a UTF-8 TSV `source<TAB>target` file.

    Matching is greedy longest-prefix over whitespace tokens and
    case-insensitive (casefolded keys); tokens absent from the lexicon
    pass through unchanged.
    """

    def __init__(self, entries: Iterable[tuple[str, str]]):
        self.table: dict[tuple[str, ...], str] = {}
        self.max_len = 1
        for src, tgt in entries:
            key = tuple(unicodedata.normalize("NFC", src).casefold().split())
            if not key:
                continue
            self.table[key] = unicodedata.normalize("NFC", tgt)
            self.max_len = max(self.max_len, len(key))

    @classmethod
    def from_tsv(cls, path) -> "LexiconTranslator":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                src, sep, tgt = line.partition("\t")
                if sep:
                    entries.append((src, tgt))
        return cls(entries)

    def translate(self, text: str, src_lang=None, tgt_lang=None) -> str:
        if not text:
            raise EmptyText("cannot translate an empty string")
        tokens = unicodedata.normalize("NFC", text).split()
        folded = [t.casefold() for t in tokens]
        out = []
        i = 0
        while i < len(tokens):
            hit = None
            for L in range(min(self.max_len, len(tokens) - i), 0, -1):
                tgt = self.table.get(tuple(folded[i:i + L]))
                if tgt is not None:
                    hit = (L, tgt)
                    break
            if hit:
                out.append(hit[1])
                i += hit[0]
            else:
                out.append(tokens[i])
                i += 1
        return " ".join(out)


def _median_color(pixels: np.ndarray) -> tuple[int, int, int]:
    # per-channel median, half-up so results stay integral and platform-stable
    med = np.median(pixels.reshape(-1, 3), axis=0)
    return tuple(int(np.floor(m + 0.5)) for m in med)


class MedianRingEraser:
    """Fills each masked component with the median color of the clean
    pixels within a 3-pixel Chebyshev ring around it (masked pixels never
    contribute). Components are 4-connected."""

    RING = 3

    def erase(self, img: SceneImage, mask: BinaryMask) -> SceneImage:
        if (mask.width, mask.height) != (img.width, img.height):
            raise DimensionMismatch("mask dimensions must match the image")
        bits = mask.bits
        if not bits.any():
            return img
        out = img.data.copy()
        labels, n = ndimage.label(bits)
        size = 2 * self.RING + 1
        structure = np.ones((size, size), dtype=bool)
        clean = ~bits
        for comp in range(1, n + 1):
            component = labels == comp
            ring = ndimage.binary_dilation(component, structure=structure) & clean
            if ring.any():
                fill = _median_color(img.data[ring])
            elif clean.any():
                fill = _median_color(img.data[clean])
            else:
                fill = (BACKGROUND_GRAY,) * 3
            out[component] = fill
        return SceneImage(out, img.id)


class RecolorSynthesizer:
    """Paints the rendered target glyphs with the source crop's text color.

    Glyph pixels are those of the black-on-gray render with luma < 96.
    The text color is the modal quantized color (32-level bins per
    channel) of the source crop after removing the crop's background,
    i.e. its overall modal bin; the winning bin's per-channel integer
    mean is used. Ties go to the lexicographically smallest bin; a crop
    with a single color class falls back to black.
    """

    GLYPH_LUMA = 96
    QUANT = 32

    def _dominant_color(self, crop: SceneImage) -> tuple[int, int, int]:
        flat = crop.data.reshape(-1, 3)
        bins = flat // self.QUANT
        keys = bins[:, 0].astype(np.int32) * 64 + bins[:, 1] * 8 + bins[:, 2]
        counts = np.bincount(keys, minlength=512)
        background = int(counts.argmax())
        counts[background] = 0
        if counts.max() == 0:
            return (0, 0, 0)
        winner = int(counts.argmax())
        chosen = flat[keys == winner]
        return tuple(int(np.floor(v + 0.5)) for v in chosen.mean(axis=0))

    def synthesize(self, source_crop: SceneImage, target_render: SceneImage) -> SceneImage:
        glyphs = to_grayscale(target_render) < self.GLYPH_LUMA
        out = np.full(
            (target_render.height, target_render.width, 3), BACKGROUND_GRAY, dtype=np.uint8
        )
        if glyphs.any():
            out[glyphs] = self._dominant_color(source_crop)
        return SceneImage(out, target_render.id)


class LaplacianSharpnessScorer:
    """No-reference quality: min(100, variance of the 4-neighbour Laplacian
    of luma over the interior / 50). Uniform images score 0."""

    def score_quality(self, img: SceneImage) -> float:
        luma = to_grayscale(img).astype(np.float64)
        if img.width < 3 or img.height < 3:
            return 0.0
        lap = (
            luma[:-2, 1:-1] + luma[2:, 1:-1] + luma[1:-1, :-2] + luma[1:-1, 2:]
            - 4.0 * luma[1:-1, 1:-1]
        )
        return float(min(100.0, lap.var() / 50.0))
