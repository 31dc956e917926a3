"""Clients for out-of-process adapters.

Two transports carry the same JSON bodies: newline-delimited JSON over a
child process's stdin/stdout, and HTTP POST /v1/{op}. Calls time out
(default 30 s), are retried once, and then raise AdapterUnavailable.
Each transport serializes its own requests; a RemoteAdapter is safe to
share between threads.
"""

from __future__ import annotations

import itertools
import json
import logging
import queue
import subprocess
import threading
import urllib.error
import urllib.request
from typing import Optional, Sequence

from ..compositor import BinaryMask
from ..errors import AdapterUnavailable, EmptyText, MalformedResponse
from ..scene import Box, SceneImage
from . import wire
from .stubs import clamp_boxes

log = logging.getLogger("vtrans.adapters")

DEFAULT_TIMEOUT = 30.0


class ProcessTransport:
    """One NDJSON request/response line pair per call on a child's stdio."""

    def __init__(self, command: Sequence[str], timeout: float = DEFAULT_TIMEOUT):
        self.command = list(command)
        self.timeout = timeout
        self._proc: Optional[subprocess.Popen] = None
        self._lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self._lock = threading.Lock()

    def _ensure_process(self):
        if self._proc is not None and self._proc.poll() is None:
            return
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._lines = queue.Queue()

        def pump(proc, sink):
            for line in proc.stdout:
                sink.put(line)
            sink.put(None)

        threading.Thread(
            target=pump, args=(self._proc, self._lines), daemon=True
        ).start()

    def _shutdown(self):
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None

    def send(self, body: dict) -> dict:
        with self._lock:
            self._ensure_process()
            try:
                self._proc.stdin.write(json.dumps(body, ensure_ascii=False) + "\n")
                self._proc.stdin.flush()
                line = self._lines.get(timeout=self.timeout)
            except (OSError, queue.Empty) as exc:
                self._shutdown()
                raise TimeoutError(str(exc)) from exc
            if line is None:
                self._shutdown()
                raise TimeoutError("adapter process closed its stdout")
            try:
                return json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedResponse(f"undecodable NDJSON line: {exc}") from exc

    def close(self):
        with self._lock:
            if self._proc is not None:
                try:
                    self._proc.stdin.close()
                except OSError:
                    pass
                self._shutdown()


class HttpTransport:
    """POSTs the request body to {base_url}/v1/{op}."""

    def __init__(self, base_url: str, timeout: float = DEFAULT_TIMEOUT):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def send(self, body: dict) -> dict:
        req = urllib.request.Request(
            f"{self.base_url}/v1/{body['op']}",
            data=json.dumps(body, ensure_ascii=False).encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                body = resp.read().decode("utf-8")
        except (urllib.error.URLError, OSError, TimeoutError) as exc:
            raise TimeoutError(str(exc)) from exc
        try:
            return json.loads(body)
        except json.JSONDecodeError as exc:
            raise MalformedResponse(f"non-JSON adapter reply: {exc}") from exc

    def close(self):
        pass


class RemoteAdapter:
    """All six ops over one transport; bind the instance to pipeline roles."""

    def __init__(self, transport, name: str = "remote"):
        self.transport = transport
        self.name = name
        self._ids = itertools.count(1)

    def _call(self, request: wire.AdapterRequest) -> wire.AdapterResponse:
        body = request.to_json()
        last_exc: Exception | None = None
        for attempt in (1, 2):
            try:
                raw = self.transport.send(body)
                break
            except TimeoutError as exc:
                last_exc = exc
                log.warning("%s: %s attempt %d failed: %s", self.name, request.op, attempt, exc)
        else:
            raise AdapterUnavailable(f"{self.name}: {request.op} failed twice: {last_exc}")
        try:
            response = wire.AdapterResponse.from_json(raw)
        except Exception as exc:
            raise MalformedResponse(f"{self.name}: undecodable response: {exc}") from exc
        wire.check_response(request, response)
        if not response.ok:
            raise AdapterUnavailable(f"{self.name}: {request.op} error: {response.error}")
        return response

    def _next_id(self, request_id: Optional[str]) -> str:
        return request_id if request_id is not None else f"{self.name}-{next(self._ids):06d}"

    def detect(self, img: SceneImage, request_id: Optional[str] = None) -> list[Box]:
        resp = self._call(
            wire.AdapterRequest(
                request_id=self._next_id(request_id),
                op="detect",
                images={"image": wire.encode_image(img)},
                texts={"image_id": img.id},
            )
        )
        return clamp_boxes(resp.boxes, img.width, img.height, self.name)

    def recognize(
        self,
        piece: SceneImage,
        image_id: str = "",
        box: Optional[Box] = None,
        request_id: Optional[str] = None,
    ) -> tuple[str, float]:
        texts = {"image_id": image_id or piece.id}
        if box is not None:
            texts["box"] = f"{box.x},{box.y},{box.w},{box.h}"
        resp = self._call(
            wire.AdapterRequest(
                request_id=self._next_id(request_id),
                op="recognize",
                images={"crop": wire.encode_image(piece)},
                texts=texts,
            )
        )
        return resp.texts["text"], resp.score if resp.score is not None else 1.0

    def translate(
        self,
        text: str,
        src_lang=None,
        tgt_lang=None,
        request_id: Optional[str] = None,
    ) -> str:
        if not text:
            raise EmptyText("cannot translate an empty string")
        resp = self._call(
            wire.AdapterRequest(
                request_id=self._next_id(request_id),
                op="translate",
                texts={"text": text},
                src_lang=getattr(src_lang, "value", src_lang),
                tgt_lang=getattr(tgt_lang, "value", tgt_lang),
            )
        )
        return resp.texts["text"]

    def erase(self, img: SceneImage, mask: BinaryMask, request_id: Optional[str] = None) -> SceneImage:
        resp = self._call(
            wire.AdapterRequest(
                request_id=self._next_id(request_id),
                op="erase",
                images={"image": wire.encode_image(img), "mask": wire.encode_mask(mask)},
            )
        )
        out = wire.decode_image(resp.images["image"], img.id)
        if (out.width, out.height) != (img.width, img.height):
            raise MalformedResponse(
                f"{self.name}: erase returned {out.width}x{out.height} for "
                f"{img.width}x{img.height} input"
            )
        return out

    def synthesize(
        self,
        source_crop: SceneImage,
        target_render: SceneImage,
        request_id: Optional[str] = None,
    ) -> SceneImage:
        resp = self._call(
            wire.AdapterRequest(
                request_id=self._next_id(request_id),
                op="synthesize",
                images={
                    "source_crop": wire.encode_image(source_crop),
                    "target_render": wire.encode_image(target_render),
                },
            )
        )
        return wire.decode_image(resp.images["image"], target_render.id)

    def score_quality(self, img: SceneImage, request_id: Optional[str] = None) -> float:
        resp = self._call(
            wire.AdapterRequest(
                request_id=self._next_id(request_id),
                op="score_quality",
                images={"image": wire.encode_image(img)},
            )
        )
        return float(resp.score)

    def close(self):
        self.transport.close()
