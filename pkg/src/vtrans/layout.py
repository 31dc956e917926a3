"""Geometric layout planning.

Words are grouped into lines and paragraphs by transitive closure of two
pairwise predicates, translated text is split back over the original
lines proportionally to their character counts, and target word boxes
are laid along a natural cubic spline through the original word centers.
"""

from __future__ import annotations

import enum
import statistics
from dataclasses import dataclass, field, asdict
from typing import Iterable, Sequence

from .errors import DegenerateLine, NoWords
from .scene import Box, WordObservation
from .spline import NaturalCubicSpline
from .tokens import TokenClass


@dataclass(frozen=True)
class LayoutConfig:
    """Heuristic constants. All are exposed in the pipeline config file.

    line_overlap_factor: two words share a line when their vertical centers
        differ by at most this fraction of the smaller word height.
    line_gap_factor: ... and their horizontal gap is at most this fraction
        of the median height over all input words.
    para_gap_factor: two lines share a paragraph when the vertical gap
        between their bboxes is at most this fraction of the median line
        height over all lines.
    para_overlap_min: ... and their bboxes overlap horizontally by at least
        this fraction of the narrower bbox.
    width_tolerance: source crops within this relative width difference of
        the target are used as-is (no cut / no replication).
    overflow_factor, min_height_scale: when total rendered width exceeds
        overflow_factor times the line extent, target text height is scaled
        down (but never below min_height_scale of the original) and the
        line is re-planned.
    """

    line_overlap_factor: float = 0.5
    line_gap_factor: float = 1.5
    para_gap_factor: float = 0.8
    para_overlap_min: float = 0.2
    width_tolerance: float = 0.05
    overflow_factor: float = 1.15
    min_height_scale: float = 0.6

    @classmethod
    def from_json(cls, obj: dict) -> "LayoutConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: float(v) for k, v in obj.items() if k in known})

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Line:
    words: tuple[WordObservation, ...]
    baseline_y: float
    height: int

    @property
    def bbox(self) -> Box:
        b = self.words[0].box
        for w in self.words[1:]:
            b = b.union(w.box)
        return b

    @property
    def extent(self) -> tuple[int, int]:
        """Horizontal span (left, right) covered by the line's words."""
        return (min(w.box.x for w in self.words), max(w.box.right for w in self.words))

    @property
    def char_count(self) -> int:
        return sum(len(w.text) for w in self.words)


@dataclass(frozen=True)
class Paragraph:
    lines: tuple[Line, ...]

    @property
    def bbox(self) -> Box:
        b = self.lines[0].bbox
        for ln in self.lines[1:]:
            b = b.union(ln.bbox)
        return b

    @property
    def words(self) -> list[WordObservation]:
        return [w for ln in self.lines for w in ln.words]

    @property
    def text(self) -> str:
        return " ".join(w.text for w in self.words)


@dataclass(frozen=True)
class LayoutPlan:
    paragraphs: tuple[Paragraph, ...]
    passthrough: tuple[WordObservation, ...]


class CropAction(enum.Enum):
    NONE = "none"
    CENTER_CUT = "center_cut"
    TILE_REPLICATE = "tile_replicate"


@dataclass(frozen=True)
class PlacementEntry:
    target_text: str
    position: Box
    source_crop: Box
    crop_action: CropAction

    def to_json(self) -> dict:
        return {
            "target_text": self.target_text,
            "position": self.position.to_json(),
            "source_crop": self.source_crop.to_json(),
            "crop_action": self.crop_action.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PlacementEntry":
        return cls(
            target_text=obj["target_text"],
            position=Box.from_json(obj["position"]),
            source_crop=Box.from_json(obj["source_crop"]),
            crop_action=CropAction(obj["crop_action"]),
        )


@dataclass(frozen=True)
class PlacementPlan:
    entries: tuple[PlacementEntry, ...]


def _word_sort_key(w: WordObservation):
    return (w.box.y, w.box.x, w.box.w, w.box.h, w.text)


def _h_gap(a: Box, b: Box) -> float:
    """Signed horizontal gap; negative means the boxes overlap in x."""
    return max(a.x, b.x) - min(a.right, b.right)


def _v_gap(a: Box, b: Box) -> float:
    return max(a.y, b.y) - min(a.bottom, b.bottom)


def _components(n: int, linked) -> list[list[int]]:
    """Connected components of an implicit graph, BFS over pairwise `linked`."""
    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        queue = [start]
        seen[start] = True
        comp = []
        while queue:
            i = queue.pop()
            comp.append(i)
            for j in range(n):
                if not seen[j] and linked(i, j):
                    seen[j] = True
                    queue.append(j)
        comps.append(sorted(comp))
    return comps


def _geometry_paragraphs(
    words: Sequence[WordObservation], config: LayoutConfig
) -> list[list[list[WordObservation]]]:
    """Group ALL words into paragraphs of lines, ignoring token classes.

    Returns paragraphs (top-to-bottom) of lines (top-to-bottom) of words
    (left-to-right). Deterministic under input permutation: everything is
    ordered geometrically.
    """
    words = sorted(words, key=_word_sort_key)
    median_h = statistics.median(w.box.h for w in words)

    def same_line(i: int, j: int) -> bool:
        a, b = words[i].box, words[j].box
        if abs(a.cy - b.cy) > config.line_overlap_factor * min(a.h, b.h):
            return False
        return _h_gap(a, b) <= config.line_gap_factor * median_h

    line_groups = [
        sorted((words[i] for i in comp), key=lambda w: (w.box.x, w.box.y, w.text))
        for comp in _components(len(words), same_line)
    ]
    line_boxes = []
    for grp in line_groups:
        b = grp[0].box
        for w in grp[1:]:
            b = b.union(w.box)
        line_boxes.append(b)
    order = sorted(
        range(len(line_groups)), key=lambda i: (line_boxes[i].y, line_boxes[i].x)
    )
    line_groups = [line_groups[i] for i in order]
    line_boxes = [line_boxes[i] for i in order]

    median_line_h = statistics.median(b.h for b in line_boxes)

    def same_para(i: int, j: int) -> bool:
        a, b = line_boxes[i], line_boxes[j]
        if _v_gap(a, b) > config.para_gap_factor * median_line_h:
            return False
        overlap = min(a.right, b.right) - max(a.x, b.x)
        return overlap >= config.para_overlap_min * min(a.w, b.w)

    paragraphs = []
    for comp in _components(len(line_groups), same_para):
        lines = [line_groups[i] for i in comp]
        lines.sort(key=lambda grp: (min(w.box.y for w in grp), min(w.box.x for w in grp)))
        paragraphs.append(lines)
    paragraphs.sort(
        key=lambda lines: (min(w.box.y for ln in lines for w in ln), min(w.box.x for ln in lines for w in ln))
    )
    return paragraphs


def _make_line(ws: Sequence[WordObservation]) -> Line:
    return Line(
        words=tuple(ws),
        baseline_y=statistics.median(w.box.cy for w in ws),
        height=max(1, round(statistics.median(w.box.h for w in ws))),
    )


def group_layout(
    words: Sequence[WordObservation], config: LayoutConfig | None = None
) -> LayoutPlan:
    """Partition words into translatable paragraphs plus passthrough tokens.

    Non-translatable words (numbers, URLs, emails) take part in the
    geometric grouping, so they still shape lines and paragraphs, but they
    end up in `passthrough` rather than in the translator payload.
    """
    if not words:
        raise NoWords("group_layout requires at least one word")
    config = config or LayoutConfig()

    passthrough = []
    paragraphs = []
    for para in _geometry_paragraphs(words, config):
        lines = []
        for ln in para:
            keep = []
            for w in ln:
                if w.token_class in (TokenClass.NUMERIC, TokenClass.URL, TokenClass.EMAIL):
                    passthrough.append(w)
                else:
                    keep.append(w)
            if keep:
                lines.append(_make_line(keep))
        if lines:
            paragraphs.append(Paragraph(lines=tuple(lines)))
    return LayoutPlan(paragraphs=tuple(paragraphs), passthrough=tuple(passthrough))


def reading_order(
    words: Sequence[WordObservation], config: LayoutConfig | None = None
) -> list[WordObservation]:
    """All words flattened in reading order (paragraphs, lines, left-to-right)."""
    if not words:
        return []
    config = config or LayoutConfig()
    out = []
    for para in _geometry_paragraphs(words, config):
        for ln in para:
            out.extend(ln)
    return out


def largest_remainder(total: int, weights: Sequence[float]) -> list[int]:
    """Split `total` integer units proportionally to `weights`.

    Classic largest-remainder rounding; ties go to earlier entries. The
    result always sums to `total`.
    """
    if total < 0:
        raise ValueError("total must be nonnegative")
    wsum = float(sum(weights))
    if wsum <= 0:
        weights = [1.0] * len(weights)
        wsum = float(len(weights))
    quotas = [total * w / wsum for w in weights]
    counts = [int(q) for q in quotas]
    short = total - sum(counts)
    by_frac = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in by_frac[:short]:
        counts[i] += 1
    return counts


def allocate_lines(translated: Sequence[str], original: Paragraph) -> list[list[str]]:
    """Distribute translated tokens over the paragraph's original lines.

    Token counts follow the original per-line character proportions
    (largest-remainder rounding, ties toward earlier lines); token order
    is preserved, so concatenating the result restores the input.
    """
    weights = [ln.char_count for ln in original.lines]
    counts = largest_remainder(len(translated), weights)
    out = []
    pos = 0
    for c in counts:
        out.append(list(translated[pos:pos + c]))
        pos += c
    return out


def spline_place(
    line: Line,
    new_tokens: Sequence[str],
    rendered_widths: Sequence[float],
    config: LayoutConfig | None = None,
) -> list[Box]:
    """Lay target tokens along the original line.

    Knots are (normalized cumulative-width midpoint, center) per original
    word; x and y centers are splined independently. Target widths are a
    largest-remainder split of the line's horizontal extent proportional to
    the rendered widths, heights inherit the line height, and a final sweep
    removes any rounding overlap so gaps stay >= 0.
    """
    if len(new_tokens) != len(rendered_widths) or not new_tokens:
        raise ValueError("need equally many tokens and widths, at least one")
    if any(rw <= 0 for rw in rendered_widths):
        raise ValueError("rendered widths must be positive")
    total_src = sum(w.box.w for w in line.words)
    if total_src <= 0:
        raise DegenerateLine("line has zero total width")

    cum = 0.0
    knots_u, knots_x, knots_y = [], [], []
    for w in line.words:
        knots_u.append((cum + w.box.w / 2.0) / total_src)
        cum += w.box.w
        knots_x.append(w.box.cx)
        knots_y.append(w.box.cy)
    sx = NaturalCubicSpline(knots_u, knots_x)
    sy = NaturalCubicSpline(knots_u, knots_y)

    left, right = line.extent
    extent = max(1, right - left)
    widths = [max(1, w) for w in largest_remainder(extent, rendered_widths)]
    h = line.height

    boxes = []
    cum = 0.0
    total_new = float(sum(widths))
    for tok, w in zip(new_tokens, widths):
        u = (cum + w / 2.0) / total_new
        cum += w
        cx = float(sx(u))
        cy = float(sy(u))
        boxes.append(Box(round(cx - w / 2.0), round(cy - h / 2.0), w, h))

    # remove rounding overlaps: push right, then pull back inside the extent
    for k in range(1, len(boxes)):
        prev_end = boxes[k - 1].right
        if boxes[k].x < prev_end:
            boxes[k] = Box(prev_end, boxes[k].y, boxes[k].w, boxes[k].h)
    total_w = sum(b.w for b in boxes)
    # when 1px-minimum clamping overflowed a tiny extent, skip the pull-back
    limit = right if total_w <= extent else boxes[-1].right
    for k in range(len(boxes) - 1, -1, -1):
        if boxes[k].right > limit:
            boxes[k] = Box(limit - boxes[k].w, boxes[k].y, boxes[k].w, boxes[k].h)
        limit = boxes[k].x
    return boxes


def plan_crop_action(
    source_w: int, target_w: int, tolerance: float = LayoutConfig.width_tolerance
) -> CropAction:
    """Decide how a source crop is adapted to the target width."""
    if source_w < 1 or target_w < 1:
        raise ValueError("widths must be >= 1")
    if abs(target_w - source_w) <= tolerance * source_w:
        return CropAction.NONE
    return CropAction.CENTER_CUT if target_w < source_w else CropAction.TILE_REPLICATE
