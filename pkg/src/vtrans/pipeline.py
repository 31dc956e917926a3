"""End-to-end orchestration.

ingest -> detect -> recognize -> filter -> group -> translate ->
allocate -> place -> erase -> synthesize -> compose -> paste -> emit.

With design enhancements on, whole paragraphs are translated and laid
back over their original lines; with them off, every word is translated
and re-rendered in its own box. Erasure runs once per image on the
union mask of all participating word boxes, and per-word failures leave
the source word untouched instead of a blank patch.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image

from .adapters import AdapterSet, build_adapters
from .adapters.stubs import GroundTruth
from .compositor import BACKGROUND_GRAY, BinaryMask, composite, extract_foreground_mask
from .errors import VtransError
from .layout import (
    CropAction,
    LayoutConfig,
    Line,
    PlacementEntry,
    allocate_lines,
    group_layout,
    plan_crop_action,
    spline_place,
)
from .scene import Box, LangCode, SceneImage, WordObservation, crop, paste, read_png, write_png
from .synthgen import FontLibrary, render_word, StyleSpec
from .tokens import TokenClass, TokenFilter, load_pattern_file

log = logging.getLogger("vtrans.pipeline")

_FONT_CANDIDATES = (
    "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf",
    "/usr/share/fonts/TTF/DejaVuSans.ttf",
    "/Library/Fonts/Arial Unicode.ttf",
)


def find_default_font() -> str:
    for cand in _FONT_CANDIDATES:
        if Path(cand).exists():
            return cand
    raise VtransError("no default render font found; set render_font in the config")


@dataclass
class PipelineConfig:
    src_lang: LangCode = LangCode.EN
    tgt_lang: LangCode = LangCode.HI
    adapters: dict = field(default_factory=dict)
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    design_enhancements: bool = True
    feather: bool = True
    seed: int = 0
    method_id: str = "run"
    render_font: str = ""
    token_patterns: str = ""
    record_timings: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.src_lang == self.tgt_lang:
            raise ValueError("source and target language must differ")

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineConfig":
        return cls(
            src_lang=LangCode(obj.get("src_lang", "en")),
            tgt_lang=LangCode(obj.get("tgt_lang", "hi")),
            adapters=dict(obj.get("adapters") or {}),
            layout=LayoutConfig.from_json(obj.get("layout") or {}),
            design_enhancements=bool(obj.get("design_enhancements", True)),
            feather=bool(obj.get("feather", True)),
            seed=int(obj.get("seed", 0)),
            method_id=str(obj.get("method_id", "run")),
            render_font=str(obj.get("render_font", "")),
            token_patterns=str(obj.get("token_patterns", "")),
            record_timings=bool(obj.get("record_timings", False)),
            workers=int(obj.get("workers", 1)),
        )

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> dict:
        return {
            "src_lang": self.src_lang.value,
            "tgt_lang": self.tgt_lang.value,
            "adapters": self.adapters,
            "layout": self.layout.to_json(),
            "design_enhancements": self.design_enhancements,
            "feather": self.feather,
            "seed": self.seed,
            "method_id": self.method_id,
            "render_font": self.render_font,
            "token_patterns": self.token_patterns,
            "record_timings": self.record_timings,
            "workers": self.workers,
        }


class CallLog:
    """Per-image adapter facade that records the call trail."""

    def __init__(self, adapters: AdapterSet, image_id: str, record_timings: bool):
        self.adapters = adapters
        self.image_id = image_id
        self.record_timings = record_timings
        self.calls: list[dict] = []
        self._seq = 0

    def _record(self, op: str):
        self._seq += 1
        request_id = f"{self.image_id}:{op}:{self._seq:03d}"
        entry = {"op": op, "request_id": request_id, "elapsed_ms": None}
        self.calls.append(entry)
        return request_id, entry, time.perf_counter()

    def _done(self, entry, t0):
        if self.record_timings:
            entry["elapsed_ms"] = round((time.perf_counter() - t0) * 1000.0, 3)

    def detect(self, img):
        _, entry, t0 = self._record("detect")
        try:
            return self.adapters.detector.detect(img)
        finally:
            self._done(entry, t0)

    def recognize(self, piece, image_id, box):
        _, entry, t0 = self._record("recognize")
        try:
            return self.adapters.recognizer.recognize(piece, image_id=image_id, box=box)
        finally:
            self._done(entry, t0)

    def translate(self, text, src, tgt):
        _, entry, t0 = self._record("translate")
        try:
            return self.adapters.translator.translate(text, src, tgt)
        finally:
            self._done(entry, t0)

    def erase(self, img, mask):
        _, entry, t0 = self._record("erase")
        try:
            return self.adapters.eraser.erase(img, mask)
        finally:
            self._done(entry, t0)

    def synthesize(self, donor, render):
        _, entry, t0 = self._record("synthesize")
        try:
            return self.adapters.synthesizer.synthesize(donor, render)
        finally:
            self._done(entry, t0)


def render_target_text(
    text: str, canvas: tuple[int, int], library: FontLibrary, font_path: str
) -> SceneImage:
    """Black-on-gray render of `text`, font size fitted to the canvas."""
    cw, ch = canvas
    size = max(16, min(72, ch))
    while size > 16:
        try:
            img, _ = render_word(text, StyleSpec(font_path, size, (0, 0, 0)), canvas, library)
            return img
        except VtransError:
            size = max(16, size - max(1, size // 8))
    # smallest allowed size: clip the layer into the canvas instead of failing
    base = Image.new("RGB", (cw, ch), (BACKGROUND_GRAY,) * 3)
    try:
        from .synthgen import _glyph_layer

        layer = _glyph_layer(text, StyleSpec(font_path, 16, (0, 0, 0)), library)
        base.paste(
            layer, ((cw - layer.width) // 2, (ch - layer.height) // 2), layer
        )
    except VtransError:
        pass  # unrenderable text becomes a blank render (treated as no-op glyphs)
    return SceneImage(np.asarray(base, dtype=np.uint8))


def measure_text_width(text: str, height: int, library: FontLibrary, font_path: str) -> int:
    """Natural rendered width at a font size matching the line height,
    padded by one space width so tiled boxes keep inter-word gaps."""
    size = max(16, min(72, height))
    font = library.load(font_path, size)
    try:
        width = font.getbbox(text)[2] - font.getbbox(text)[0]
        space = font.getbbox("n")[2]
    except OSError:
        width, space = 8 * len(text), 8
    return max(1, int(width) + max(1, int(space)))


def apply_crop_action(donor: SceneImage, action: CropAction, target_w: int) -> SceneImage:
    """Cut or replicate the style donor horizontally toward the target width."""
    if action is CropAction.NONE or donor.width == target_w:
        return donor
    if action is CropAction.CENTER_CUT:
        w = min(donor.width, max(1, target_w))
        x0 = (donor.width - w) // 2
        return SceneImage(donor.data[:, x0:x0 + w].copy(), donor.id)
    reps = -(-target_w // donor.width)  # ceil
    tiled = np.tile(donor.data, (1, reps, 1))
    x0 = (tiled.shape[1] - target_w) // 2
    return SceneImage(tiled[:, x0:x0 + target_w].copy(), donor.id)


@dataclass
class _PlannedWord:
    entry: PlacementEntry
    donor_box: Box


def _plan_line(
    line: Line,
    tokens: Sequence[str],
    cfg: PipelineConfig,
    library: FontLibrary,
) -> list[PlacementEntry]:
    """Widths, overflow control, spline placement and donor mapping for a line."""
    font = cfg.render_font
    height = line.height
    widths = [measure_text_width(t, height, library, font) for t in tokens]
    left, right = line.extent
    extent = max(1, right - left)
    total = sum(widths)
    if total > cfg.layout.overflow_factor * extent:
        scale = max(cfg.layout.min_height_scale, extent / total)
        height = max(1, round(line.height * scale))
        widths = [measure_text_width(t, height, library, font) for t in tokens]
        line = dataclasses.replace(line, height=height)
    boxes = spline_place(line, tokens, widths, cfg.layout)

    # donor word: knot nearest to each placed token's parameter position
    total_src = sum(w.box.w for w in line.words)
    knots = []
    cum = 0.0
    for w in line.words:
        knots.append((cum + w.box.w / 2.0) / total_src)
        cum += w.box.w
    total_new = float(sum(b.w for b in boxes))
    first_left = boxes[0].x
    entries = []
    for tok, box in zip(tokens, boxes):
        v = (box.x - first_left + box.w / 2.0) / total_new
        donor_i = min(range(len(knots)), key=lambda i: (abs(knots[i] - v), i))
        donor_box = line.words[donor_i].box
        entries.append(
            PlacementEntry(
                target_text=tok,
                position=box,
                source_crop=donor_box,
                crop_action=plan_crop_action(donor_box.w, box.w, cfg.layout.width_tolerance),
            )
        )
    return entries


def translate_image(
    img: SceneImage,
    cfg: PipelineConfig,
    adapters: AdapterSet,
    library: FontLibrary,
    token_filter: TokenFilter | None = None,
) -> tuple[SceneImage, dict]:
    """Translate one image; returns (output image, manifest entry dict)."""
    token_filter = token_filter or TokenFilter()
    calls = CallLog(adapters, img.id, cfg.record_timings)
    entry: dict = {"image_id": img.id, "status": "ok"}

    boxes = calls.detect(img)
    words: list[WordObservation] = []
    failed_words = 0
    for b in boxes:
        piece = crop(img, b)
        try:
            text, conf = calls.recognize(piece, img.id, b)
        except VtransError as exc:
            log.warning("%s: recognize failed at %s: %s", img.id, b, exc)
            failed_words += 1
            continue
        if not text.strip():
            failed_words += 1
            continue
        words.append(
            WordObservation(box=b, text=text, confidence=conf, token_class=token_filter.classify(text))
        )

    entry["words"] = [
        {
            "box": w.box.to_json(),
            "text": w.text,
            "confidence": w.confidence,
            "token_class": w.token_class.value,
        }
        for w in words
    ]

    if not words:
        entry["status"] = "skipped_no_text" if not boxes or failed_words == 0 else "failed:no_usable_words"
        entry["layout"] = {"paragraphs": 0, "lines": 0, "passthrough": 0}
        entry["placements"] = []
        entry["touched_boxes"] = []
        entry["adapter_calls"] = calls.calls
        return img, entry

    placements: list[PlacementEntry] = []
    erase_words: list[WordObservation] = []

    if cfg.design_enhancements:
        plan = group_layout(words, cfg.layout)
        entry["layout"] = {
            "paragraphs": len(plan.paragraphs),
            "lines": sum(len(p.lines) for p in plan.paragraphs),
            "passthrough": len(plan.passthrough),
        }
        for para in plan.paragraphs:
            try:
                translated = calls.translate(para.text, cfg.src_lang, cfg.tgt_lang)
                tokens = translated.split()
                if not tokens:
                    raise VtransError("translator returned no tokens")
            except VtransError as exc:
                log.warning("%s: paragraph translation failed: %s", img.id, exc)
                failed_words += len(para.words)
                continue
            per_line = allocate_lines(tokens, para)
            erase_words.extend(para.words)
            for line, line_tokens in zip(para.lines, per_line):
                if line_tokens:
                    placements.extend(_plan_line(line, line_tokens, cfg, library))
        for w in plan.passthrough:
            erase_words.append(w)
            placements.append(
                PlacementEntry(w.text, w.box, w.box, CropAction.NONE)
            )
    else:
        entry["layout"] = {"paragraphs": 0, "lines": 0, "passthrough": 0}
        for w in words:
            if w.token_class is TokenClass.TRANSLATABLE:
                try:
                    target = calls.translate(w.text, cfg.src_lang, cfg.tgt_lang)
                except VtransError as exc:
                    log.warning("%s: word translation failed: %s", img.id, exc)
                    failed_words += 1
                    continue
            else:
                target = w.text
            erase_words.append(w)
            placements.append(PlacementEntry(target, w.box, w.box, CropAction.NONE))

    output = img
    touched: list[Box] = []
    if erase_words:
        bits = np.zeros((img.height, img.width), dtype=bool)
        for w in erase_words:
            b = w.box.clamped(img.width, img.height)
            bits[b.y:b.bottom, b.x:b.right] = True
        erased = calls.erase(img, BinaryMask(bits))
        for w in erase_words:
            b = w.box.clamped(img.width, img.height)
            output = paste(output, crop(erased, b), b)
            touched.append(b)

    kept_placements: list[PlacementEntry] = []
    for pe in placements:
        try:
            pos = pe.position.clamped(img.width, img.height)
        except VtransError:
            continue
        render = render_target_text(pe.target_text, (pos.w, pos.h), library, cfg.render_font)
        donor = crop(img, pe.source_crop)
        donor = apply_crop_action(donor, pe.crop_action, pos.w)
        try:
            fg = calls.synthesize(donor, render)
        except VtransError as exc:
            log.warning("%s: synthesize failed for %r: %s", img.id, pe.target_text, exc)
            failed_words += 1
            # leave the source untouched rather than a blank patch
            for region in (pe.source_crop, pos):
                rb = region.clamped(img.width, img.height)
                output = paste(output, crop(img, rb), rb)
            continue
        if (fg.width, fg.height) != (pos.w, pos.h):
            fg = SceneImage(
                np.asarray(
                    Image.fromarray(fg.data).resize((pos.w, pos.h), Image.BILINEAR),
                    dtype=np.uint8,
                ),
                fg.id,
            )
        mask = extract_foreground_mask(fg)
        patch = composite(crop(output, pos), fg, mask, feather=cfg.feather)
        output = paste(output, patch, pos)
        touched.append(pos)
        kept_placements.append(dataclasses.replace(pe, position=pos))

    if failed_words > 0.5 * max(1, len(boxes)):
        entry["status"] = "failed:majority_word_failures"
    entry["failed_words"] = failed_words
    entry["placements"] = [pe.to_json() for pe in kept_placements]
    entry["touched_boxes"] = [b.to_json() for b in touched]
    entry["adapter_calls"] = calls.calls
    return output.with_id(img.id), entry


# -- batch runner ----------------------------------------------------------


def read_input_manifest(path) -> list[dict]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    return entries


def annotations_from_manifest(entries: Sequence[dict], base_dir: Path) -> dict[str, GroundTruth]:
    out = {}
    for e in entries:
        image_id = e.get("id") or Path(e["image"]).stem
        if "boxes" in e:
            out[image_id] = GroundTruth(
                boxes=[Box.from_json(b) for b in e.get("boxes", [])],
                texts=[str(t) for t in e.get("texts", [])],
            )
    return out


def run_batch(
    manifest_path,
    cfg: PipelineConfig,
    out_dir,
    adapters: AdapterSet | None = None,
) -> tuple[list[dict], int]:
    """Process every manifest image; returns (manifest entries, exit code)."""
    manifest_path = Path(manifest_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = read_input_manifest(manifest_path)
    base_dir = manifest_path.parent

    if not cfg.render_font:
        cfg.render_font = find_default_font()
    library = FontLibrary([Path(cfg.render_font)])
    token_filter = (
        TokenFilter(load_pattern_file(cfg.token_patterns)) if cfg.token_patterns else TokenFilter()
    )
    owns_adapters = adapters is None
    if adapters is None:
        adapters = build_adapters(cfg.adapters, annotations_from_manifest(entries, base_dir))

    def process(index_entry):
        index, raw = index_entry
        image_id = raw.get("id") or Path(raw["image"]).stem
        path = Path(raw["image"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            return index, None, {
                "image_id": image_id,
                "input_path": str(raw["image"]),
                "output_path": None,
                "status": "failed:missing_input",
                "words": [],
                "placements": [],
                "touched_boxes": [],
                "adapter_calls": [],
            }
        img = read_png(path, image_id)
        output, m_entry = translate_image(img, cfg, adapters, library, token_filter)
        m_entry["input_path"] = str(raw["image"])
        out_path = out / f"{image_id}.png"
        write_png(output, out_path)
        m_entry["output_path"] = out_path.name
        return index, output, m_entry

    results: list[Optional[dict]] = [None] * len(entries)
    try:
        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                for index, _, m_entry in pool.map(process, enumerate(entries)):
                    results[index] = m_entry
        else:
            for item in enumerate(entries):
                index, _, m_entry = process(item)
                results[index] = m_entry
    finally:
        if owns_adapters:
            adapters.close()

    with open(out / "run_manifest.jsonl", "w", encoding="utf-8") as fh:
        for m_entry in results:
            fh.write(json.dumps(m_entry, ensure_ascii=False) + "\n")
    with open(out / "run_config.json", "w", encoding="utf-8") as fh:
        json.dump(cfg.to_json(), fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    failed = sum(1 for r in results if r["status"].startswith("failed"))
    return results, (0 if failed == 0 else 1)
