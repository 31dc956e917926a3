"""Shared fixtures: fonts, random images, and the closed-loop fixture set.

The fixture set is a deterministic batch of scene images with sidecar
annotations, a 1:1 lexicon, and references equal to the lexicon
translation in reading order, so a stub pipeline must round-trip to
BLEU-1 = 100 on it.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

import numpy as np
import pytest
from PIL import Image, ImageDraw, ImageFont

from vtrans.pipeline import PipelineConfig, find_default_font
from vtrans.synthgen import FontLibrary

FONT_PATH = find_default_font()

# closed-loop vocabulary: every source word maps to one distinct target token
LEXICON = {
    "metro": "metraka",
    "station": "sthanak",
    "water": "panika",
    "market": "bazarka",
    "road": "sadak",
    "city": "nagar",
    "exit": "nikas",
    "open": "khula",
    "fresh": "taza",
    "store": "bhandar",
    "north": "uttar",
    "gate": "dwar",
    "rail": "patri",
    "line": "rekha",
    "food": "bhojan",
}
SOURCE_WORDS = sorted(LEXICON)


@pytest.fixture(scope="session")
def font_path() -> str:
    return FONT_PATH


@pytest.fixture(scope="session")
def library() -> FontLibrary:
    return FontLibrary([Path(FONT_PATH)])


def rand_image(rng: random.Random, w: int, h: int) -> np.ndarray:
    return np.array(
        [[[rng.randrange(256) for _ in range(3)] for _ in range(w)] for _ in range(h)],
        dtype=np.uint8,
    )


def build_fixture_set(root: Path, count: int, seed: int = 7) -> dict:
    """Write `count` annotated scene images plus manifest/lexicon/refs/config."""
    root.mkdir(parents=True, exist_ok=True)
    images_dir = root / "images"
    images_dir.mkdir(exist_ok=True)
    rng = random.Random(seed)
    font = ImageFont.truetype(FONT_PATH, 24)

    lexicon_path = root / "lexicon.tsv"
    with open(lexicon_path, "w", encoding="utf-8") as fh:
        for src, tgt in sorted(LEXICON.items()):
            fh.write(f"{src}\t{tgt}\n")

    manifest_path = root / "input_manifest.jsonl"
    refs_path = root / "refs.jsonl"
    manifest_lines = []
    ref_lines = []
    for i in range(count):
        image_id = f"img{i:03d}"
        w, h = 420, 340
        bg = tuple(rng.randrange(190, 240) for _ in range(3))
        img = Image.new("RGB", (w, h), bg)
        draw = ImageDraw.Draw(img)
        fill = tuple(rng.randrange(0, 60) for _ in range(3))

        boxes, texts = [], []
        y = 30
        n_paragraphs = rng.choice((1, 2))
        for _ in range(n_paragraphs):
            for _ in range(rng.choice((1, 2, 3))):  # lines in this paragraph
                x = 20
                for _ in range(rng.choice((1, 2, 3))):  # words in this line
                    word = rng.choice(SOURCE_WORDS)
                    bb = draw.textbbox((x, y), word, font=font)
                    if bb[2] >= w - 10:
                        break
                    draw.text((x, y), word, font=font, fill=fill)
                    boxes.append([bb[0], bb[1], bb[2] - bb[0], bb[3] - bb[1]])
                    texts.append(word)
                    x = bb[2] + 14
                y += 30  # small gap: stays within one paragraph
            y += 100  # large gap: starts a new paragraph
        img.save(images_dir / f"{image_id}.png")
        references = [" ".join(LEXICON[t] for t in texts)]
        manifest_lines.append(
            {
                "image": f"images/{image_id}.png",
                "id": image_id,
                "boxes": boxes,
                "texts": texts,
                "references": references,
            }
        )
        ref_lines.append({"image_id": image_id, "references": references})

    with open(manifest_path, "w", encoding="utf-8") as fh:
        for line in manifest_lines:
            fh.write(json.dumps(line) + "\n")
    with open(refs_path, "w", encoding="utf-8") as fh:
        for line in ref_lines:
            fh.write(json.dumps(line) + "\n")

    config = {
        "src_lang": "en",
        "tgt_lang": "hi",
        "method_id": "stub-closed-loop",
        "design_enhancements": True,
        "feather": True,
        "seed": seed,
        "render_font": FONT_PATH,
        "adapters": {
            "translator": {"kind": "stub", "lexicon": str(lexicon_path)},
        },
    }
    config_path = root / "config.json"
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
    return {
        "root": root,
        "images_dir": images_dir,
        "manifest": manifest_path,
        "refs": refs_path,
        "lexicon": lexicon_path,
        "config": config_path,
        "count": count,
    }


@pytest.fixture(scope="session")
def fixture_set(tmp_path_factory) -> dict:
    return build_fixture_set(tmp_path_factory.mktemp("fixtures"), count=20, seed=7)


@pytest.fixture()
def pipeline_config(fixture_set) -> PipelineConfig:
    return PipelineConfig.from_file(fixture_set["config"])
