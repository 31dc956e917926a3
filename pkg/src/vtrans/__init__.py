"""Scene-text to scene-text translation toolkit.

Pipeline framework (detect, recognize, filter, group, translate, place,
erase, synthesize, compose), automatic metrics, paired synthetic data
generation, and a human rating study service.
"""

from .scene import Box, LangCode, SceneImage, WordObservation, crop, paste, to_grayscale
from .tokens import TokenClass, classify_token
from .layout import (
    CropAction,
    LayoutConfig,
    LayoutPlan,
    Line,
    Paragraph,
    PlacementEntry,
    PlacementPlan,
    allocate_lines,
    group_layout,
    plan_crop_action,
    reading_order,
    spline_place,
)
from .compositor import BinaryMask, composite, extract_foreground_mask, otsu_threshold
from .evaluator import (
    CorpusReport,
    ImageScore,
    ReferenceSet,
    aggregate,
    bleu,
    compute_tq,
    tokenize,
    vt_score,
)
from .synthgen import PairedSample, StyleSpec, generate_sample, render_word, skeletonize
from .pipeline import PipelineConfig, run_batch, translate_image

__version__ = "0.1.0"

__all__ = [
    "Box",
    "LangCode",
    "SceneImage",
    "WordObservation",
    "crop",
    "paste",
    "to_grayscale",
    "TokenClass",
    "classify_token",
    "CropAction",
    "LayoutConfig",
    "LayoutPlan",
    "Line",
    "Paragraph",
    "PlacementEntry",
    "PlacementPlan",
    "allocate_lines",
    "group_layout",
    "plan_crop_action",
    "reading_order",
    "spline_place",
    "BinaryMask",
    "composite",
    "extract_foreground_mask",
    "otsu_threshold",
    "CorpusReport",
    "ImageScore",
    "ReferenceSet",
    "aggregate",
    "bleu",
    "compute_tq",
    "tokenize",
    "vt_score",
    "PairedSample",
    "StyleSpec",
    "generate_sample",
    "render_word",
    "skeletonize",
    "PipelineConfig",
    "run_batch",
    "translate_image",
    "__version__",
]
