"""Paired synthetic word-image generation.

Every sample renders a source and a target word with the *same* style
spec (font, size, color, rotation, shear, outline) over the same
background, together with the training artifacts downstream synthesis
models expect: plain target render, background, gray-field foregrounds,
binary masks and a thinned skeleton. Generation is a pure function of
(inputs, seed): per-sample seeds are derived splitmix-style from the
master seed, so corpora reproduce byte-identically in any order.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, asdict, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from fontTools.ttLib import TTFont
from PIL import Image, ImageDraw, ImageFont

from .compositor import BACKGROUND_GRAY, BinaryMask, composite
from .errors import EmptyResource, MissingGlyph, TextTooWide
from .scene import SceneImage, write_gray_png, write_png

_MASK64 = (1 << 64) - 1


def mask_to_image(bits: np.ndarray) -> SceneImage:
    """White-on-black rendering of a binary mask."""
    gray = np.where(bits, 255, 0).astype(np.uint8)
    return SceneImage(np.repeat(gray[:, :, None], 3, axis=2))


def derive_seed(master: int, index: int) -> int:
    """splitmix64 stream: independent per-sample seeds from one master."""
    z = (master + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class StyleSpec:
    font_id: str
    size: int
    fill_color: tuple[int, int, int]
    rotation: float = 0.0
    shear: float = 0.0
    outline: Optional[tuple[tuple[int, int, int], int]] = None

    def __post_init__(self):
        if not 16 <= self.size <= 72:
            raise ValueError(f"font size {self.size} outside [16, 72]")
        if abs(self.rotation) > 15:
            raise ValueError(f"rotation {self.rotation} outside +-15 degrees")

    def plain(self) -> "StyleSpec":
        """Content-only variant: black upright text, used for the plain render."""
        return StyleSpec(self.font_id, self.size, (0, 0, 0))

    def to_json(self) -> dict:
        d = asdict(self)
        d["fill_color"] = list(self.fill_color)
        d["outline"] = [list(self.outline[0]), self.outline[1]] if self.outline else None
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "StyleSpec":
        outline = obj.get("outline")
        return cls(
            font_id=obj["font_id"],
            size=int(obj["size"]),
            fill_color=tuple(obj["fill_color"]),
            rotation=float(obj.get("rotation", 0.0)),
            shear=float(obj.get("shear", 0.0)),
            outline=(tuple(outline[0]), int(outline[1])) if outline else None,
        )


class FontLibrary:
    """Loads fonts from a directory and answers glyph-coverage queries."""

    def __init__(self, paths: Sequence[Path]):
        self.paths = [Path(p) for p in paths]
        if not self.paths:
            raise EmptyResource("no fonts found")
        self._cmaps: dict[str, set[int]] = {}
        self._pil: dict[tuple[str, int], ImageFont.FreeTypeFont] = {}

    @classmethod
    def from_dir(cls, font_dir) -> "FontLibrary":
        paths = sorted(
            p for p in Path(font_dir).rglob("*") if p.suffix.lower() in (".ttf", ".otf")
        )
        return cls(paths)

    def cmap(self, font_path) -> set[int]:
        key = str(font_path)
        if key not in self._cmaps:
            tt = TTFont(key, fontNumber=0, lazy=True)
            self._cmaps[key] = set(tt.getBestCmap().keys())
            tt.close()
        return self._cmaps[key]

    def covers(self, font_path, text: str) -> bool:
        cmap = self.cmap(font_path)
        return all(ord(ch) in cmap for ch in text if not ch.isspace())

    def load(self, font_path, size: int) -> ImageFont.FreeTypeFont:
        key = (str(font_path), size)
        if key not in self._pil:
            self._pil[key] = ImageFont.truetype(str(font_path), size)
        return self._pil[key]


def require_glyphs(library: FontLibrary, font_path, text: str) -> None:
    missing = sorted(
        {ch for ch in text if not ch.isspace() and ord(ch) not in library.cmap(font_path)}
    )
    if missing:
        raise MissingGlyph(f"font {Path(font_path).name} lacks glyphs for {missing!r}")


_PROBE = ImageDraw.Draw(Image.new("RGBA", (1, 1)))


def _glyph_layer(text: str, style: StyleSpec, library: FontLibrary) -> Image.Image:
    """Styled RGBA rendering of the bare word, tightly cropped."""
    font = library.load(style.font_id, style.size)
    stroke = style.outline[1] if style.outline else 0
    bbox = _PROBE.textbbox((0, 0), text, font=font, stroke_width=stroke)
    w = max(1, bbox[2] - bbox[0])
    h = max(1, bbox[3] - bbox[1])
    layer = Image.new("RGBA", (w, h), (0, 0, 0, 0))
    draw = ImageDraw.Draw(layer)
    draw.text(
        (-bbox[0], -bbox[1]),
        text,
        font=font,
        fill=tuple(style.fill_color) + (255,),
        stroke_width=stroke,
        stroke_fill=tuple(style.outline[0]) + (255,) if style.outline else None,
    )
    if style.shear:
        s = float(style.shear)
        nw = int(np.ceil(w + abs(s) * h))
        shift = max(0.0, -s * h)
        layer = layer.transform(
            (nw, h), Image.AFFINE, (1, -s, -shift, 0, 1, 0), resample=Image.BICUBIC
        )
    if style.rotation:
        layer = layer.rotate(style.rotation, expand=True, resample=Image.BICUBIC)
    return layer


def render_word(
    text: str,
    style: StyleSpec,
    canvas: tuple[int, int],
    library: FontLibrary,
    background: Optional[SceneImage] = None,
) -> tuple[SceneImage, BinaryMask]:
    """Render one word centered on the canvas.

    `background=None` gives the uniform gray field used for foreground
    targets; otherwise the word is laid over the given canvas-sized image.
    The mask is glyph alpha coverage binarized at 50%.
    """
    cw, ch = canvas
    if background is not None and (background.width, background.height) != (cw, ch):
        raise ValueError("background must match the canvas size")
    if background is None:
        base = Image.new("RGB", (cw, ch), (BACKGROUND_GRAY,) * 3)
    else:
        base = Image.fromarray(background.data)
    if not text:
        return SceneImage(np.asarray(base, dtype=np.uint8)), BinaryMask.empty(cw, ch)

    require_glyphs(library, style.font_id, text)
    layer = _glyph_layer(text, style, library)
    if layer.width > cw or layer.height > ch:
        raise TextTooWide(
            f"{text!r} renders {layer.width}x{layer.height}, canvas is {cw}x{ch}"
        )
    ox = (cw - layer.width) // 2
    oy = (ch - layer.height) // 2
    base = base.convert("RGBA")
    base.alpha_composite(layer, (ox, oy))
    img = SceneImage(np.asarray(base.convert("RGB"), dtype=np.uint8))

    alpha = np.zeros((ch, cw), dtype=np.uint8)
    alpha[oy:oy + layer.height, ox:ox + layer.width] = np.asarray(layer, dtype=np.uint8)[:, :, 3]
    return img, BinaryMask(alpha > 127)


def skeletonize(mask: BinaryMask) -> BinaryMask:
    """Zhang-Suen thinning run to completion.

    The two sub-iterations flag boundary pixels whose neighborhood has
    2..6 set neighbors and exactly one 0->1 transition around the ring,
    with the usual north/east and south/west deletion guards. The result
    is a subset of the input and preserves 8-connected component count.
    """
    full = mask.bits
    if not full.any():
        return BinaryMask(full.copy())
    # iterate only over the occupied window; thinning never grows the mask
    ys, xs = np.nonzero(full)
    y0, y1 = int(ys.min()), int(ys.max()) + 1
    x0, x1 = int(xs.min()), int(xs.max()) + 1
    img = full[y0:y1, x0:x1].astype(np.uint8)

    while True:
        changed = False
        for step in (0, 1):
            p = np.pad(img, 1)
            p2 = p[:-2, 1:-1]   # N
            p3 = p[:-2, 2:]     # NE
            p4 = p[1:-1, 2:]    # E
            p5 = p[2:, 2:]      # SE
            p6 = p[2:, 1:-1]    # S
            p7 = p[2:, :-2]     # SW
            p8 = p[1:-1, :-2]   # W
            p9 = p[:-2, :-2]    # NW
            ring = (p2, p3, p4, p5, p6, p7, p8, p9)
            b = sum(n.astype(np.int8) for n in ring)
            a = sum(
                ((ring[i] == 0) & (ring[(i + 1) % 8] == 1)).astype(np.int8)
                for i in range(8)
            )
            cond = (img == 1) & (b >= 2) & (b <= 6) & (a == 1)
            if step == 0:
                cond &= (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
            else:
                cond &= (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
            if cond.any():
                img[cond] = 0
                changed = True
        if not changed:
            out = np.zeros_like(full)
            out[y0:y1, x0:x1] = img.astype(bool)
            return BinaryMask(out)


@dataclass(frozen=True)
class PairedSample:
    src_word: str
    tgt_word: str
    style: StyleSpec
    seed: int
    i_s: SceneImage       # source styled word on background
    i_t: SceneImage       # target text, plain black on gray
    t_b: SceneImage       # background only
    t_f: SceneImage       # target styled foreground on gray
    t_t: SceneImage       # target styled word on background
    mask_s: BinaryMask
    mask_t: BinaryMask
    t_sk: SceneImage      # skeleton of the target mask, white on black

    IMAGE_KINDS = ("i_s", "i_t", "t_b", "t_f", "t_t", "mask_s", "mask_t", "t_sk")


def generate_sample(
    src_word: str,
    tgt_word: str,
    style: StyleSpec,
    background: SceneImage,
    seed: int,
    library: FontLibrary,
) -> PairedSample:
    """Render one paired sample; both words share `style` exactly."""
    canvas = (background.width, background.height)
    src_fg, mask_s = render_word(src_word, style, canvas, library)
    tgt_fg, mask_t = render_word(tgt_word, style, canvas, library)
    plain, _ = render_word(tgt_word, style.plain(), canvas, library)
    t_t = composite(background, tgt_fg, mask_t, feather=False)
    i_s = composite(background, src_fg, mask_s, feather=False)
    sk = skeletonize(mask_t)
    t_sk = mask_to_image(sk.bits)
    return PairedSample(
        src_word=src_word,
        tgt_word=tgt_word,
        style=style,
        seed=seed,
        i_s=i_s,
        i_t=plain,
        t_b=background,
        t_f=tgt_fg,
        t_t=t_t,
        mask_s=mask_s,
        mask_t=mask_t,
        t_sk=t_sk,
    )


def check_sample(sample: PairedSample) -> list[str]:
    """Invariant audit; returns human-readable violations (empty = clean)."""
    problems = []
    mask = sample.mask_t.bits
    if not np.array_equal(sample.t_t.data[~mask], sample.t_b.data[~mask]):
        problems.append("t_t differs from t_b outside mask_t")
    recomposed = composite(sample.t_b, sample.t_f, sample.mask_t, feather=False)
    diff = np.abs(
        sample.t_t.data.astype(np.int16) - recomposed.data.astype(np.int16)
    ).max()
    if diff > 2:
        problems.append(f"t_t deviates from composite(t_b, t_f, mask_t) by {diff}")
    changed = (sample.t_t.data != sample.t_b.data).any(axis=2)
    padded = np.pad(mask, 1)
    dilated = (
        padded[1:-1, 1:-1] | padded[:-2, 1:-1] | padded[2:, 1:-1]
        | padded[1:-1, :-2] | padded[1:-1, 2:]
    )
    if (changed & ~dilated).any():
        problems.append("pixels changed outside the 1px-dilated mask_t")
    if (sample.t_sk.data[:, :, 0] > 0).sum() > mask.sum():
        problems.append("skeleton larger than its mask")
    sizes = {img.data.shape for img in (sample.i_s, sample.i_t, sample.t_b, sample.t_f, sample.t_t)}
    if len(sizes) != 1:
        problems.append("sample images disagree in size")
    return problems


# -- corpus generation ----------------------------------------------------


@dataclass
class CorpusSpec:
    count: int
    vocab_src: list[str]
    vocab_tgt: list[str]
    fonts: FontLibrary
    backgrounds: list[SceneImage] = field(default_factory=list)
    canvas: tuple[int, int] = (256, 64)
    seed: int = 0
    translation_pair_ratio: float = 0.0
    lexicon: dict[str, str] = field(default_factory=dict)


def load_vocab(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        words = [line.strip() for line in fh if line.strip()]
    return words


def _procedural_background(rng: random.Random, canvas: tuple[int, int]) -> SceneImage:
    w, h = canvas
    kind = rng.randrange(3)
    if kind == 0:  # flat color
        color = tuple(rng.randrange(256) for _ in range(3))
        return SceneImage.filled(w, h, color)
    if kind == 1:  # two-color linear gradient
        c0 = np.array([rng.randrange(256) for _ in range(3)], dtype=np.float64)
        c1 = np.array([rng.randrange(256) for _ in range(3)], dtype=np.float64)
        axis = rng.randrange(2)
        n = w if axis == 0 else h
        t = np.linspace(0.0, 1.0, n)[:, None]
        ramp = (c0 * (1 - t) + c1 * t)
        arr = np.broadcast_to(
            ramp[None, :, :] if axis == 0 else ramp[:, None, :], (h, w, 3)
        )
        return SceneImage(np.floor(arr + 0.5).astype(np.uint8))
    # coarse noise texture, upscaled for soft blotches
    npg = np.random.Generator(np.random.PCG64(rng.getrandbits(63)))
    small = npg.integers(0, 256, size=(max(1, h // 8), max(1, w // 8), 3), dtype=np.uint8)
    img = Image.fromarray(small).resize((w, h), Image.BILINEAR)
    return SceneImage(np.asarray(img, dtype=np.uint8))


def _crop_background(rng: random.Random, pool: SceneImage, canvas: tuple[int, int]) -> SceneImage:
    w, h = canvas
    img = Image.fromarray(pool.data)
    if img.width < w or img.height < h:
        img = img.resize((max(w, img.width), max(h, img.height)), Image.BILINEAR)
    x = rng.randrange(img.width - w + 1)
    y = rng.randrange(img.height - h + 1)
    return SceneImage(np.asarray(img.crop((x, y, x + w, y + h)), dtype=np.uint8))


def _pick_background(rng: random.Random, spec: CorpusSpec) -> SceneImage:
    if spec.backgrounds and rng.random() < 0.5:
        return _crop_background(rng, rng.choice(spec.backgrounds), spec.canvas)
    return _procedural_background(rng, spec.canvas)


def _contrasting(rng: random.Random, background: SceneImage) -> tuple[int, int, int]:
    mean = background.data.reshape(-1, 3).mean(axis=0)
    for _ in range(8):
        color = tuple(rng.randrange(256) for _ in range(3))
        if sum(abs(c - m) for c, m in zip(color, mean)) >= 120:
            return color
    # flip against the background instead of sampling again
    return tuple(int(255 - m) for m in mean)


def _pick_words(rng: random.Random, spec: CorpusSpec) -> tuple[str, str]:
    src = rng.choice(spec.vocab_src)
    if spec.lexicon and rng.random() < spec.translation_pair_ratio:
        tgt = spec.lexicon.get(src.casefold())
        if tgt:
            return src, tgt
    return src, rng.choice(spec.vocab_tgt)


def _sample_style(
    rng: random.Random, spec: CorpusSpec, font_path: str, background: SceneImage
) -> StyleSpec:
    outline = None
    if rng.random() < 0.3:
        outline = (tuple(rng.randrange(256) for _ in range(3)), rng.choice((1, 2)))
    return StyleSpec(
        font_id=font_path,
        size=rng.randint(16, 72),
        fill_color=_contrasting(rng, background),
        rotation=rng.uniform(-15.0, 15.0),
        shear=rng.uniform(-0.3, 0.3),
        outline=outline,
    )


def _fitting_size(
    texts: Sequence[str], style: StyleSpec, library: FontLibrary, canvas: tuple[int, int]
) -> Optional[int]:
    """Largest size <= style.size at which every word fits after transforms."""
    cw, ch = canvas
    stroke = style.outline[1] if style.outline else 0
    rad = abs(style.rotation) * math.pi / 180.0
    size = style.size
    for _ in range(5):
        font = library.load(style.font_id, size)
        worst = 1.0
        for text in texts:
            bbox = _PROBE.textbbox((0, 0), text, font=font, stroke_width=stroke)
            w = max(1, bbox[2] - bbox[0]) + abs(style.shear) * max(1, bbox[3] - bbox[1])
            h = max(1, bbox[3] - bbox[1])
            W = w * math.cos(rad) + h * math.sin(rad)
            H = w * math.sin(rad) + h * math.cos(rad)
            worst = min(worst, (cw - 2) / W, (ch - 2) / H)
        if worst >= 1.0:
            return size
        shrunk = min(size - 1, int(size * worst))
        if shrunk < 16:
            return None
        size = shrunk
    return size


def build_sample(spec: CorpusSpec, index: int) -> PairedSample:
    """Deterministic sample for (spec, index): seeds, words, style, background."""
    seed = derive_seed(spec.seed, index)
    rng = random.Random(seed)
    background = _pick_background(rng, spec)
    for attempt in range(24):
        src, tgt = _pick_words(rng, spec)
        font = rng.choice(spec.fonts.paths)
        if not (spec.fonts.covers(font, src) and spec.fonts.covers(font, tgt)):
            continue
        style = _sample_style(rng, spec, str(font), background)
        size = _fitting_size((src, tgt), style, spec.fonts, spec.canvas)
        if size is None:
            continue  # word too long at minimum size, redraw
        if size != style.size:
            style = StyleSpec(
                style.font_id, size, style.fill_color,
                style.rotation, style.shear, style.outline,
            )
        try:
            return generate_sample(src, tgt, style, background, seed, spec.fonts)
        except TextTooWide:
            continue  # estimate was off for this glyph run, redraw
    raise EmptyResource(
        f"sample {index}: no font covers the vocabulary at a fitting size"
    )


def generate_corpus(spec: CorpusSpec, out_dir) -> list[dict]:
    """Write `spec.count` samples plus a JSONL manifest; returns the records."""
    if not spec.vocab_src or not spec.vocab_tgt:
        raise EmptyResource("vocabulary files are empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for index in range(spec.count):
        sample = build_sample(spec, index)
        shard = out / f"{index // 1000:04d}"
        shard.mkdir(exist_ok=True)
        paths = {}
        for kind in PairedSample.IMAGE_KINDS:
            rel = f"{index // 1000:04d}/{index:08d}_{kind}.png"
            image = getattr(sample, kind)
            if isinstance(image, BinaryMask):
                write_gray_png(np.where(image.bits, 255, 0), out / rel)
            elif kind == "t_sk":
                write_gray_png(image.data[:, :, 0], out / rel)
            else:
                write_png(image, out / rel)
            paths[kind] = rel
        records.append(
            {
                "index": index,
                "seed": sample.seed,
                "src_word": sample.src_word,
                "tgt_word": sample.tgt_word,
                "style": sample.style.to_json(),
                "paths": paths,
            }
        )
    with open(out / "manifest.jsonl", "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return records
