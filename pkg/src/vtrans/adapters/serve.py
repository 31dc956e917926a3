"""Reference adapter server.

Exposes the in-process stubs behind the two wire transports, which makes
the byte-level contract testable end to end and doubles as a template
for wrapping real models. Run as:

    python -m vtrans.adapters.serve --mode stdio [--lexicon L] [--annotations A]
    python -m vtrans.adapters.serve --mode http --port 8123 ...
"""

from __future__ import annotations

import argparse
import json
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..errors import VtransError
from ..scene import Box
from . import wire
from .stubs import (
    GroundTruth,
    LaplacianSharpnessScorer,
    LexiconTranslator,
    MedianRingEraser,
    OracleDetector,
    OracleRecognizer,
    RecolorSynthesizer,
)


def load_annotations(path) -> dict[str, GroundTruth]:
    """Sidecar ground truth: {"image_id": {"boxes": [[x,y,w,h],...], "texts": [...]}}"""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return {
        image_id: GroundTruth(
            boxes=[Box.from_json(b) for b in entry.get("boxes", [])],
            texts=list(entry.get("texts", [])),
        )
        for image_id, entry in raw.items()
    }


def _parse_box(spec: str) -> Box:
    x, y, w, h = (int(v) for v in spec.split(","))
    return Box(x, y, w, h)


def handle_request(raw: dict, backends: dict) -> dict:
    """Dispatch one decoded request dict; always returns a response dict."""
    request_id = str(raw.get("request_id", ""))
    try:
        request = wire.AdapterRequest.from_json(raw)
        backend = backends.get(request.op)
        if backend is None:
            raise VtransError(f"no backend for op {request.op!r}")
        if request.op == "detect":
            img = wire.decode_image(request.images["image"], request.texts.get("image_id", ""))
            boxes = backend.detect(img)
            resp = wire.AdapterResponse(request_id, True, boxes=boxes)
        elif request.op == "recognize":
            piece = wire.decode_image(request.images["crop"])
            box = _parse_box(request.texts["box"]) if "box" in request.texts else None
            text, conf = backend.recognize(piece, request.texts.get("image_id", ""), box)
            resp = wire.AdapterResponse(request_id, True, texts={"text": text}, score=conf)
        elif request.op == "translate":
            out = backend.translate(request.texts["text"], request.src_lang, request.tgt_lang)
            resp = wire.AdapterResponse(request_id, True, texts={"text": out})
        elif request.op == "erase":
            img = wire.decode_image(request.images["image"])
            mask = wire.decode_mask(request.images["mask"])
            out = backend.erase(img, mask)
            resp = wire.AdapterResponse(request_id, True, images={"image": wire.encode_image(out)})
        elif request.op == "synthesize":
            crop = wire.decode_image(request.images["source_crop"])
            render = wire.decode_image(request.images["target_render"])
            out = backend.synthesize(crop, render)
            resp = wire.AdapterResponse(request_id, True, images={"image": wire.encode_image(out)})
        else:  # score_quality
            img = wire.decode_image(request.images["image"])
            resp = wire.AdapterResponse(request_id, True, score=backend.score_quality(img))
        return resp.to_json()
    except (VtransError, KeyError, ValueError) as exc:
        return wire.AdapterResponse(
            request_id, False, error=f"{type(exc).__name__}: {exc}"
        ).to_json()


def build_stub_backends(lexicon=None, annotations=None) -> dict:
    backends = {
        "erase": MedianRingEraser(),
        "synthesize": RecolorSynthesizer(),
        "score_quality": LaplacianSharpnessScorer(),
    }
    gt = load_annotations(annotations) if annotations else {}
    backends["detect"] = OracleDetector(gt)
    backends["recognize"] = OracleRecognizer(gt)
    if lexicon:
        backends["translate"] = LexiconTranslator.from_tsv(lexicon)
    else:
        backends["translate"] = LexiconTranslator([])
    return backends


def serve_stdio(backends) -> None:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raw = {"request_id": "", "op": ""}
            raw["_decode_error"] = str(exc)
        response = handle_request(raw, backends)
        sys.stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
        sys.stdout.flush()


class _Handler(BaseHTTPRequestHandler):
    backends: dict = {}

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length)
        try:
            raw = json.loads(body)
        except json.JSONDecodeError:
            self.send_response(400)
            self.end_headers()
            return
        if not self.path.startswith("/v1/"):
            self.send_response(404)
            self.end_headers()
            return
        raw.setdefault("op", self.path[len("/v1/"):])
        payload = json.dumps(handle_request(raw, self.backends), ensure_ascii=False).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, fmt, *args):  # keep request noise out of stdio
        pass


def serve_http(backends, host: str, port: int):
    handler = type("BoundHandler", (_Handler,), {"backends": backends})
    server = ThreadingHTTPServer((host, port), handler)
    return server


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="serve the stub adapters over a wire transport")
    ap.add_argument("--mode", choices=("stdio", "http"), default="stdio")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8123)
    ap.add_argument("--lexicon", help="TSV phrase table for the translate op")
    ap.add_argument("--annotations", help="ground-truth JSON for detect/recognize")
    args = ap.parse_args(argv)

    backends = build_stub_backends(args.lexicon, args.annotations)
    if args.mode == "stdio":
        serve_stdio(backends)
    else:
        server = serve_http(backends, args.host, args.port)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
