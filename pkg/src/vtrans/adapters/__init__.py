"""Adapter roles and their bindings.

Six roles feed the pipeline: detector, recognizer, translator, eraser,
synthesizer and scorer. Each binds to an in-process stub, a child
process speaking NDJSON, or an HTTP endpoint, per the run configuration:

    {"translator": {"kind": "stub", "lexicon": "lex.tsv"},
     "eraser":     {"kind": "process", "command": ["python", "-m", "..."]},
     "scorer":     {"kind": "http", "url": "http://host:port"}}
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .remote import HttpTransport, ProcessTransport, RemoteAdapter
from .stubs import (
    GroundTruth,
    LaplacianSharpnessScorer,
    LexiconTranslator,
    MedianRingEraser,
    OracleDetector,
    OracleRecognizer,
    RecolorSynthesizer,
)

ROLES = ("detector", "recognizer", "translator", "eraser", "synthesizer", "scorer")


@dataclass
class AdapterSet:
    detector: object
    recognizer: object
    translator: object
    eraser: object
    synthesizer: object
    scorer: object

    def role(self, name: str):
        return getattr(self, name)

    def close(self):
        seen = set()
        for name in ROLES:
            adapter = getattr(self, name)
            if id(adapter) in seen:
                continue
            seen.add(id(adapter))
            close = getattr(adapter, "close", None)
            if close:
                close()


def _stub_for(role: str, options: Mapping, annotations: Mapping[str, GroundTruth]):
    if role == "detector":
        return OracleDetector(annotations)
    if role == "recognizer":
        return OracleRecognizer(annotations)
    if role == "translator":
        lexicon = options.get("lexicon")
        return LexiconTranslator.from_tsv(lexicon) if lexicon else LexiconTranslator([])
    if role == "eraser":
        return MedianRingEraser()
    if role == "synthesizer":
        return RecolorSynthesizer()
    return LaplacianSharpnessScorer()


def build_adapters(
    bindings: Mapping[str, Mapping] | None,
    annotations: Optional[Mapping[str, GroundTruth]] = None,
) -> AdapterSet:
    """Instantiate one adapter per role from config bindings.

    Roles left unbound default to their stubs; oracle stubs read the
    given sidecar annotations.
    """
    bindings = bindings or {}
    annotations = annotations or {}
    built = {}
    for role in ROLES:
        spec = dict(bindings.get(role) or {"kind": "stub"})
        kind = spec.get("kind", "stub")
        if kind == "stub":
            built[role] = _stub_for(role, spec, annotations)
        elif kind == "process":
            transport = ProcessTransport(spec["command"], float(spec.get("timeout", 30.0)))
            built[role] = RemoteAdapter(transport, name=f"{role}-process")
        elif kind == "http":
            transport = HttpTransport(spec["url"], float(spec.get("timeout", 30.0)))
            built[role] = RemoteAdapter(transport, name=f"{role}-http")
        else:
            raise ValueError(f"unknown adapter kind {kind!r} for role {role}")
    return AdapterSet(**built)
