"""Byte-level adapter contract.

External models live in other runtimes; everything crosses the boundary
as one JSON object per call, either as a newline-delimited line on a
child process's stdio or as an HTTP POST body. Images travel as base64
PNG. The field names below are normative.
"""

from __future__ import annotations

import base64
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from PIL import Image

from ..compositor import BinaryMask
from ..errors import MalformedResponse
from ..scene import Box, SceneImage

OPS = ("detect", "recognize", "translate", "erase", "synthesize", "score_quality")

# op -> (required request images, required request texts, response payload key)
OP_CONTRACT = {
    "detect": (("image",), (), "boxes"),
    "recognize": (("crop",), (), "texts"),
    "translate": ((), ("text",), "texts"),
    "erase": (("image", "mask"), (), "images"),
    "synthesize": (("source_crop", "target_render"), (), "images"),
    "score_quality": (("image",), (), "score"),
}


def encode_image(img: SceneImage) -> str:
    buf = io.BytesIO()
    Image.fromarray(img.data).save(buf, format="PNG", compress_level=1)
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_image(data: str, id: str = "") -> SceneImage:
    raw = base64.b64decode(data)
    with Image.open(io.BytesIO(raw)) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return SceneImage(arr, id)


def encode_mask(mask: BinaryMask) -> str:
    buf = io.BytesIO()
    arr = np.where(mask.bits, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(buf, format="PNG", compress_level=1)
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_mask(data: str) -> BinaryMask:
    raw = base64.b64decode(data)
    with Image.open(io.BytesIO(raw)) as im:
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    return BinaryMask(arr >= 128)


@dataclass
class AdapterRequest:
    request_id: str
    op: str
    images: dict[str, str] = field(default_factory=dict)
    texts: dict[str, str] = field(default_factory=dict)
    src_lang: Optional[str] = None
    tgt_lang: Optional[str] = None

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown op {self.op!r}")
        needed_images, needed_texts, _ = OP_CONTRACT[self.op]
        missing = [k for k in needed_images if k not in self.images]
        missing += [k for k in needed_texts if k not in self.texts]
        if missing:
            raise ValueError(f"op {self.op!r} missing required fields: {missing}")

    def to_json(self) -> dict:
        return {
            "request_id": self.request_id,
            "op": self.op,
            "images": self.images,
            "texts": self.texts,
            "src_lang": self.src_lang,
            "tgt_lang": self.tgt_lang,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AdapterRequest":
        return cls(
            request_id=str(obj.get("request_id", "")),
            op=obj.get("op", ""),
            images=dict(obj.get("images") or {}),
            texts=dict(obj.get("texts") or {}),
            src_lang=obj.get("src_lang"),
            tgt_lang=obj.get("tgt_lang"),
        )


@dataclass
class AdapterResponse:
    request_id: str
    ok: bool
    boxes: Optional[list[Box]] = None
    texts: Optional[dict[str, str]] = None
    images: Optional[dict[str, str]] = None
    score: Optional[float] = None
    error: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "request_id": self.request_id,
            "ok": self.ok,
            "boxes": [b.to_json() for b in self.boxes] if self.boxes is not None else None,
            "texts": self.texts,
            "images": self.images,
            "score": self.score,
            "error": self.error,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AdapterResponse":
        boxes = obj.get("boxes")
        return cls(
            request_id=str(obj.get("request_id", "")),
            ok=bool(obj.get("ok", False)),
            boxes=[Box.from_json(b) for b in boxes] if boxes is not None else None,
            texts=obj.get("texts"),
            images=obj.get("images"),
            score=obj.get("score"),
            error=obj.get("error"),
        )


def check_response(request: AdapterRequest, response: AdapterResponse) -> AdapterResponse:
    """Enforce the response side of the contract; raises MalformedResponse."""
    if response.request_id != request.request_id:
        raise MalformedResponse(
            f"request_id mismatch: sent {request.request_id!r}, got {response.request_id!r}"
        )
    if not response.ok:
        return response
    payload_key = OP_CONTRACT[request.op][2]
    payload = getattr(response, payload_key)
    if payload is None:
        raise MalformedResponse(f"ok response to {request.op!r} lacks {payload_key!r}")
    if request.op == "recognize":
        if "text" not in response.texts:
            raise MalformedResponse("recognize response lacks texts['text']")
        conf = response.score if response.score is not None else 1.0
        if not 0.0 <= conf <= 1.0:
            raise MalformedResponse(f"confidence {conf} outside [0, 1]")
    if request.op == "translate" and "text" not in response.texts:
        raise MalformedResponse("translate response lacks texts['text']")
    if request.op in ("erase", "synthesize") and "image" not in response.images:
        raise MalformedResponse(f"{request.op} response lacks images['image']")
    return response


def dumps(obj) -> str:
    """One-line canonical JSON for the NDJSON transport."""
    return json.dumps(obj.to_json() if hasattr(obj, "to_json") else obj, ensure_ascii=False, separators=(",", ":"))
