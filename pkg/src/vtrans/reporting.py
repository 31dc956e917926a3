"""Scoring a finished run directory against reference translations.

The run manifest doubles as the sidecar ground truth for the *output*
images: each placement records what text was put where, which is
exactly what an oracle detector/recognizer needs for the round-trip TQ
measurement.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Sequence

from .adapters import build_adapters
from .adapters.stubs import GroundTruth, OracleDetector, OracleRecognizer
from .errors import VtransError
from .evaluator import (
    CorpusReport,
    ImageScore,
    MethodInfo,
    ReferenceSet,
    aggregate,
    compute_tq,
    render_table,
    score_image,
)
from .pipeline import PipelineConfig
from .scene import Box, LangCode, read_png

log = logging.getLogger("vtrans.eval")


def load_references(path, lang: LangCode) -> dict[str, ReferenceSet]:
    """JSONL of {"image_id"|"id"|"image": ..., "references": [str, ...]}."""
    refs = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            texts = raw.get("references")
            if not texts:
                continue
            image_id = raw.get("image_id") or raw.get("id") or Path(raw["image"]).stem
            refs[image_id] = ReferenceSet.from_strings(image_id, texts, lang)
    return refs


def read_run_manifest(outputs_dir: Path) -> list[dict]:
    entries = []
    with open(outputs_dir / "run_manifest.jsonl", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    return entries


def output_annotations(entries: Sequence[dict]) -> dict[str, GroundTruth]:
    """Ground truth of the produced images, from the recorded placements."""
    out = {}
    for e in entries:
        placements = e.get("placements") or []
        out[e["image_id"]] = GroundTruth(
            boxes=[Box.from_json(p["position"]) for p in placements],
            texts=[p["target_text"] for p in placements],
        )
    return out


def _describe(bindings: dict, role: str, stub_label: str) -> str:
    spec = bindings.get(role) or {"kind": "stub"}
    kind = spec.get("kind", "stub")
    if kind == "stub":
        return stub_label
    if kind == "process":
        return f"process:{Path(spec['command'][0]).name}"
    return f"http:{spec.get('url', '?')}"


def method_info(cfg: PipelineConfig) -> MethodInfo:
    return MethodInfo(
        method=cfg.method_id,
        str_name=_describe(cfg.adapters, "detector", "Oracle"),
        mt_name=_describe(cfg.adapters, "translator", "Lexicon"),
        sts_name=_describe(cfg.adapters, "synthesizer", "Decoupled"),
        design_enhancements=cfg.design_enhancements,
    )


def evaluate_run(
    outputs_dir, refs_path, report_path=None
) -> tuple[CorpusReport, list[ImageScore], str]:
    """Score one run directory; returns (corpus report, per-image, table)."""
    outputs_dir = Path(outputs_dir)
    cfg = PipelineConfig.from_file(outputs_dir / "run_config.json")
    entries = read_run_manifest(outputs_dir)
    refs = load_references(refs_path, cfg.tgt_lang)

    annotations = output_annotations(entries)
    detector = OracleDetector(annotations)
    recognizer = OracleRecognizer(annotations)
    scorer = build_adapters({"scorer": cfg.adapters.get("scorer") or {"kind": "stub"}}).scorer

    scores: list[ImageScore] = []
    for entry in entries:
        image_id = entry["image_id"]
        refset = refs.get(image_id)
        if refset is None:
            log.warning("no references for %s; skipping", image_id)
            continue
        if not entry.get("output_path"):
            log.warning("%s produced no output (%s); skipping", image_id, entry["status"])
            continue
        output = read_png(outputs_dir / entry["output_path"], image_id)
        b1, b2 = compute_tq(output, refset, detector, recognizer, cfg.tgt_lang, cfg.layout)
        pq = scorer.score_quality(output)
        scores.append(score_image(image_id, b1, b2, pq))

    if not scores:
        raise VtransError("nothing to score: no overlap between manifest and references")
    report = aggregate(scores, method_info(cfg))
    table = render_table([report])
    payload = {
        "rows": [report.to_json()],
        "images": [s.to_json() for s in scores],
    }
    if report_path:
        report_path = Path(report_path)
        report_path.parent.mkdir(parents=True, exist_ok=True)
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
        with open(report_path.with_suffix(".txt"), "w", encoding="utf-8") as fh:
            fh.write(table)
    return report, scores, table
