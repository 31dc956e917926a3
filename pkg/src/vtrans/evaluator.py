"""Automatic metrics.

Translation quality is smoothed BLEU-1/2 of text detected and recognized
back from the output image against reference translations; perception
quality comes from the bound no-reference scorer; the combined score is
their harmonic mean, computed per image and then averaged over the
corpus (never the other way around).
"""

from __future__ import annotations

import math
import string
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import EmptyInput, NegativeInput
from .layout import LayoutConfig, reading_order
from .scene import LangCode, SceneImage, WordObservation, crop

# ASCII punctuation plus the Devanagari danda / double danda terminators
_PUNCT = set(string.punctuation) | {"।", "॥"}


def tokenize(text: str, lang: LangCode = LangCode.EN) -> list[str]:
    """NFC-normalize, casefold, split on whitespace, peel edge punctuation.

    Leading and trailing punctuation marks become tokens of their own, so
    "रिठाला।" yields ["रिठाला", "।"]. Both supported languages share the
    same rules; `lang` is kept for interface stability.
    """
    text = unicodedata.normalize("NFC", text).casefold()
    out: list[str] = []
    for raw in text.split():
        lead = []
        while raw and raw[0] in _PUNCT:
            lead.append(raw[0])
            raw = raw[1:]
        trail = []
        while raw and raw[-1] in _PUNCT:
            trail.append(raw[-1])
            raw = raw[:-1]
        out.extend(lead)
        if raw:
            out.append(raw)
        out.extend(reversed(trail))
    return out


def _ngrams(tokens: Sequence[str], order: int) -> Counter:
    return Counter(
        tuple(tokens[i:i + order]) for i in range(len(tokens) - order + 1)
    )


def bleu(candidate: Sequence[str], references: Sequence[Sequence[str]], n: int) -> float:
    """Smoothed BLEU-n on a 0..100 scale.

    Geometric mean of clipped n-gram precisions up to order `n`, times the
    brevity penalty min(1, exp(1 - r/c)) with r the reference length
    closest to the candidate's (ties to the shorter). Orders >= 2 get
    add-one smoothing on numerator and denominator; order 1 is unsmoothed.
    """
    if n not in (1, 2):
        raise ValueError("only BLEU-1 and BLEU-2 are supported")
    references = [list(r) for r in references]
    if not references or all(len(r) == 0 for r in references):
        raise ValueError("references must contain at least one nonempty list")
    if n == 2 and max(len(r) for r in references) < 2:
        raise ValueError("BLEU-2 needs a reference with at least two tokens")
    candidate = list(candidate)
    if not candidate:
        return 0.0

    c = len(candidate)
    r = min((len(ref) for ref in references), key=lambda L: (abs(L - c), L))
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)

    log_sum = 0.0
    for k in range(1, n + 1):
        cand_counts = _ngrams(candidate, k)
        total = sum(cand_counts.values())
        correct = 0
        for gram, cnt in cand_counts.items():
            best = max(_ngrams(ref, k).get(gram, 0) for ref in references)
            correct += min(cnt, best)
        if k >= 2:
            correct += 1
            total += 1
        if correct == 0:
            return 0.0
        log_sum += math.log(correct / total)
    return bp * math.exp(log_sum / n) * 100.0


def vt_score(tq: float, pq: float) -> float:
    """Harmonic mean of translation and perception quality (0..100)."""
    if tq < 0 or pq < 0:
        raise NegativeInput("scores must be nonnegative")
    if tq + pq == 0:
        return 0.0
    return 2.0 * tq * pq / (tq + pq)


@dataclass(frozen=True)
class ReferenceSet:
    """1..3 per-annotator reference translations, already tokenized."""

    image_id: str
    references: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if not self.references or all(len(r) == 0 for r in self.references):
            raise ValueError("need at least one nonempty reference")
        if len(self.references) > 3:
            raise ValueError("at most three annotator references")

    @classmethod
    def from_strings(cls, image_id: str, texts: Sequence[str], lang: LangCode) -> "ReferenceSet":
        return cls(image_id, tuple(tuple(tokenize(t, lang)) for t in texts))

    @property
    def bleu2_defined(self) -> bool:
        return max(len(r) for r in self.references) >= 2


@dataclass(frozen=True)
class ImageScore:
    image_id: str
    bleu1: float
    bleu2: Optional[float]
    tq: float
    pq: float
    vt: float

    def to_json(self) -> dict:
        return {
            "image_id": self.image_id,
            "bleu1": self.bleu1,
            "bleu2": self.bleu2,
            "tq": self.tq,
            "pq": self.pq,
            "vt": self.vt,
        }


def compute_tq(
    output_img: SceneImage,
    refs: ReferenceSet,
    detector,
    recognizer,
    tgt_lang: LangCode = LangCode.EN,
    layout_config: LayoutConfig | None = None,
    normalizer=None,
) -> tuple[float, Optional[float]]:
    """Round-trip translation quality of a produced image.

    Detect and recognize the target-language text in the output image,
    flatten it in reading order, and score it against the references.
    `normalizer`, when given, is a text adapter applied to the recognized
    stream first (off by default; references are already target-language).
    """
    boxes = detector.detect(output_img)
    words = []
    for b in boxes:
        piece = crop(output_img, b)
        text, conf = recognizer.recognize(piece, image_id=output_img.id, box=b)
        if text:
            words.append(WordObservation(box=b, text=text, confidence=conf))
    if not words:
        return 0.0, (0.0 if refs.bleu2_defined else None)
    ordered = reading_order(words, layout_config)
    joined = " ".join(w.text for w in ordered)
    if normalizer is not None:
        joined = normalizer.translate(joined, tgt_lang, tgt_lang)
    candidate = tokenize(joined, tgt_lang)
    b1 = bleu(candidate, refs.references, 1)
    b2 = bleu(candidate, refs.references, 2) if refs.bleu2_defined else None
    return b1, b2


def score_image(
    image_id: str, bleu1: float, bleu2: Optional[float], pq: float
) -> ImageScore:
    """Bundle per-image metrics; TQ is BLEU-2 unless only one reference word."""
    tq = bleu1 if bleu2 is None else bleu2
    return ImageScore(image_id, bleu1, bleu2, tq, pq, vt_score(tq, pq))


@dataclass(frozen=True)
class MethodInfo:
    method: str = "run"
    str_name: str = "Oracle"
    mt_name: str = "Lexicon"
    sts_name: str = "Decoupled"
    design_enhancements: bool = True

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "str": self.str_name,
            "mt": self.mt_name,
            "sts": self.sts_name,
            "design_enhancements": self.design_enhancements,
        }


@dataclass(frozen=True)
class CorpusReport:
    method: MethodInfo
    n_images: int
    n_bleu2: int
    mean_bleu1: float
    mean_bleu2: Optional[float]
    mean_pq: float
    mean_vt: float

    def to_json(self) -> dict:
        return {
            **self.method.to_json(),
            "n_images": self.n_images,
            "n_bleu2": self.n_bleu2,
            "tq_bleu1": self.mean_bleu1,
            "tq_bleu2": self.mean_bleu2,
            "pq": self.mean_pq,
            "vt": self.mean_vt,
        }


def aggregate(scores: Sequence[ImageScore], method: MethodInfo | None = None) -> CorpusReport:
    """Corpus means. BLEU-2 averages only over images where it is defined;
    the VT mean is the mean of the per-image harmonic means."""
    if not scores:
        raise EmptyInput("no image scores to aggregate")
    method = method or MethodInfo()
    with_b2 = [s for s in scores if s.bleu2 is not None]
    return CorpusReport(
        method=method,
        n_images=len(scores),
        n_bleu2=len(with_b2),
        mean_bleu1=sum(s.bleu1 for s in scores) / len(scores),
        mean_bleu2=(sum(s.bleu2 for s in with_b2) / len(with_b2)) if with_b2 else None,
        mean_pq=sum(s.pq for s in scores) / len(scores),
        mean_vt=sum(s.vt for s in scores) / len(scores),
    )


_COLUMNS = ("Method", "STR", "MT", "STS", "D.E.", "TQ-BL1", "TQ-BL2", "PQ", "VT")


def render_table(reports: Sequence[CorpusReport]) -> str:
    """Aligned-column text table, one row per method."""

    def fmt(v: Optional[float]) -> str:
        return "-" if v is None else f"{v:.2f}"

    rows = [
        (
            r.method.method,
            r.method.str_name,
            r.method.mt_name,
            r.method.sts_name,
            "on" if r.method.design_enhancements else "off",
            fmt(r.mean_bleu1),
            fmt(r.mean_bleu2),
            fmt(r.mean_pq),
            fmt(r.mean_vt),
        )
        for r in reports
    ]
    widths = [
        max(len(_COLUMNS[i]), *(len(row[i]) for row in rows)) if rows else len(_COLUMNS[i])
        for i in range(len(_COLUMNS))
    ]
    lines = [
        "  ".join(c.ljust(widths[i]) for i, c in enumerate(_COLUMNS)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(row)))
    return "\n".join(lines) + "\n"
