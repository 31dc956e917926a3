import json
import random
import sys
import threading
import time

import numpy as np
import pytest

from vtrans.adapters import build_adapters, wire
from vtrans.adapters.remote import HttpTransport, ProcessTransport, RemoteAdapter
from vtrans.adapters.serve import build_stub_backends, handle_request, serve_http
from vtrans.adapters.stubs import (
    GroundTruth,
    LaplacianSharpnessScorer,
    LexiconTranslator,
    MedianRingEraser,
    OracleDetector,
    OracleRecognizer,
    RecolorSynthesizer,
)
from vtrans.compositor import BACKGROUND_GRAY, BinaryMask
from vtrans.errors import (
    AdapterUnavailable,
    DimensionMismatch,
    EmptyText,
    MalformedResponse,
    NoAnnotation,
)
from vtrans.scene import Box, SceneImage

from oracles import (
    dominant_nonbackground_color,
    laplacian_variance_score,
    median_ring_fill,
)


class TestWire:
    def test_required_fields_enforced(self):
        with pytest.raises(ValueError):
            wire.AdapterRequest(request_id="1", op="detect")  # no image
        with pytest.raises(ValueError):
            wire.AdapterRequest(request_id="1", op="nonsense")

    def test_image_round_trip(self):
        rng = random.Random(3)
        img = SceneImage(
            np.array([[[rng.randrange(256)] * 3 for _ in range(5)] for _ in range(4)], dtype=np.uint8),
            "x",
        )
        assert np.array_equal(wire.decode_image(wire.encode_image(img), "x").data, img.data)

    def test_mask_round_trip(self):
        bits = np.array([[True, False], [False, True]])
        assert np.array_equal(wire.decode_mask(wire.encode_mask(BinaryMask(bits))).bits, bits)

    def test_request_id_mismatch(self):
        req = wire.AdapterRequest(request_id="a", op="translate", texts={"text": "x"})
        resp = wire.AdapterResponse(request_id="b", ok=True, texts={"text": "y"})
        with pytest.raises(MalformedResponse):
            wire.check_response(req, resp)

    def test_confidence_out_of_range(self):
        req = wire.AdapterRequest(
            request_id="a", op="recognize", images={"crop": "zz"}
        )
        resp = wire.AdapterResponse(request_id="a", ok=True, texts={"text": "M"}, score=1.2)
        with pytest.raises(MalformedResponse):
            wire.check_response(req, resp)

    def test_missing_payload(self):
        req = wire.AdapterRequest(request_id="a", op="detect", images={"image": "zz"})
        resp = wire.AdapterResponse(request_id="a", ok=True)
        with pytest.raises(MalformedResponse):
            wire.check_response(req, resp)


def flat(w, h, color, id=""):
    return SceneImage.filled(w, h, color, id=id)


class TestOracleStubs:
    def test_detector_verbatim(self):
        boxes = [Box(0, 0, 5, 5), Box(10, 10, 5, 5), Box(20, 20, 5, 5)]
        det = OracleDetector({"i": GroundTruth(boxes=boxes, texts=["a", "b", "c"])})
        assert det.detect(flat(64, 64, (0, 0, 0), "i")) == boxes

    def test_detector_empty_annotation(self):
        det = OracleDetector({"i": GroundTruth()})
        assert det.detect(flat(8, 8, (0, 0, 0), "i")) == []
        assert det.detect(flat(8, 8, (0, 0, 0), "unknown")) == []

    def test_out_of_bounds_clamped_and_dropped(self, caplog):
        det = OracleDetector(
            {"i": GroundTruth(boxes=[Box(60, 60, 20, 20), Box(100, 100, 5, 5)], texts=["a", "b"])}
        )
        with caplog.at_level("WARNING", logger="vtrans.adapters"):
            out = det.detect(flat(64, 64, (0, 0, 0), "i"))
        assert out == [Box(60, 60, 4, 4)]
        assert any("clamped" in r.message for r in caplog.records)
        assert any("dropping" in r.message for r in caplog.records)

    def test_recognizer_hits_and_misses(self):
        b = Box(1, 1, 4, 4)
        rec = OracleRecognizer({"i": GroundTruth(boxes=[b], texts=["METRO"])})
        assert rec.recognize(flat(4, 4, (0, 0, 0)), "i", b) == ("METRO", 1.0)
        with pytest.raises(NoAnnotation):
            rec.recognize(flat(4, 4, (0, 0, 0)), "i", Box(2, 2, 4, 4))


class TestLexicon:
    def test_simple_lookup(self):
        tr = LexiconTranslator([("water", "पानी")])
        assert tr.translate("water") == "पानी"

    def test_unknown_passes_through(self):
        tr = LexiconTranslator([("water", "पानी")])
        assert tr.translate("zzz") == "zzz"

    def test_empty_raises(self):
        tr = LexiconTranslator([])
        with pytest.raises(EmptyText):
            tr.translate("")

    def test_longest_prefix_wins(self):
        tr = LexiconTranslator([("new", "naya"), ("new delhi", "nayi dilli")])
        assert tr.translate("new delhi station") == "nayi dilli station"

    def test_case_insensitive(self):
        tr = LexiconTranslator([("Water", "पानी")])
        assert tr.translate("WATER bottle") == "पानी bottle"

    def test_tsv_loading(self, tmp_path):
        p = tmp_path / "lex.tsv"
        p.write_text("water\tपानी\n# note\nroad\tsadak\n", encoding="utf-8")
        tr = LexiconTranslator.from_tsv(p)
        assert tr.translate("water road") == "पानी sadak"


class TestEraser:
    def test_zero_mask_is_identity(self):
        rng = random.Random(4)
        img = SceneImage(
            np.array([[[rng.randrange(256)] * 3 for _ in range(8)] for _ in range(8)], dtype=np.uint8)
        )
        out = MedianRingEraser().erase(img, BinaryMask.empty(8, 8))
        assert np.array_equal(out.data, img.data)

    def test_uniform_image_any_mask(self):
        img = flat(10, 10, (40, 90, 200))
        bits = np.zeros((10, 10), dtype=bool)
        bits[3:7, 3:7] = True
        out = MedianRingEraser().erase(img, BinaryMask(bits))
        assert np.array_equal(out.data, img.data)

    def test_white_text_on_blue_becomes_blue(self):
        img = flat(20, 12, (10, 20, 180)).data.copy()
        bits = np.zeros((12, 20), dtype=bool)
        bits[4:8, 5:15] = True
        img[bits] = (255, 255, 255)
        out = MedianRingEraser().erase(SceneImage(img), BinaryMask(bits))
        assert (out.data[bits] == (10, 20, 180)).all()

    def test_matches_ring_median_oracle(self):
        rng = random.Random(12)
        for _ in range(5):
            data = np.array(
                [[[rng.randrange(256) for _ in range(3)] for _ in range(14)] for _ in range(10)],
                dtype=np.uint8,
            )
            bits = np.zeros((10, 14), dtype=bool)
            bits[2:5, 3:7] = True
            bits[7:9, 9:13] = True
            out = MedianRingEraser().erase(SceneImage(data), BinaryMask(bits))
            assert np.array_equal(out.data, median_ring_fill(data, bits))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            MedianRingEraser().erase(flat(4, 4, (0, 0, 0)), BinaryMask.empty(5, 4))


class TestSynthesizer:
    def _render(self, w=20, h=10):
        data = np.full((h, w, 3), BACKGROUND_GRAY, dtype=np.uint8)
        data[3:7, 4:16] = 0  # black glyph block
        return SceneImage(data)

    def test_red_text_recolors_glyphs(self):
        crop = flat(16, 8, (20, 40, 200)).data.copy()
        crop[2:6, 2:14] = (220, 10, 10)  # red text on blue
        out = RecolorSynthesizer().synthesize(SceneImage(crop), self._render())
        expected = dominant_nonbackground_color(crop)
        glyphs = out.data[3:7, 4:16]
        assert (glyphs == expected).all()
        assert expected[0] > 200 and expected[2] < 50  # red won

    def test_blank_render_stays_gray(self):
        out = RecolorSynthesizer().synthesize(
            flat(8, 8, (255, 0, 0)), flat(12, 6, (BACKGROUND_GRAY,) * 3)
        )
        assert (out.data == BACKGROUND_GRAY).all()

    def test_output_sized_to_render(self):
        out = RecolorSynthesizer().synthesize(flat(30, 30, (1, 2, 3)), self._render(24, 12))
        assert (out.width, out.height) == (24, 12)

    def test_single_color_crop_falls_back_to_black(self):
        out = RecolorSynthesizer().synthesize(flat(8, 8, (7, 7, 7)), self._render())
        assert (out.data[5, 10] == (0, 0, 0)).all()


class TestScorer:
    def test_uniform_scores_zero(self):
        assert LaplacianSharpnessScorer().score_quality(flat(16, 16, (90, 10, 30))) == 0.0

    def test_deterministic(self):
        rng = random.Random(77)
        img = SceneImage(
            np.array([[[rng.randrange(256)] * 3 for _ in range(12)] for _ in range(12)], dtype=np.uint8)
        )
        s = LaplacianSharpnessScorer()
        assert s.score_quality(img) == s.score_quality(img)

    def test_sharp_beats_blurred(self):
        tile = np.indices((16, 16)).sum(axis=0) % 2 * 255
        sharp = SceneImage(np.repeat(tile[:, :, None], 3, axis=2).astype(np.uint8))
        blurred_tile = np.full((16, 16), 127.5)
        blurred = SceneImage(np.repeat(blurred_tile[:, :, None], 3, axis=2).astype(np.uint8))
        s = LaplacianSharpnessScorer()
        assert s.score_quality(sharp) > 50 * s.score_quality(blurred) + 1

    def test_matches_formula_oracle(self):
        rng = random.Random(9)
        data = np.array(
            [[[rng.randrange(256) for _ in range(3)] for _ in range(9)] for _ in range(7)],
            dtype=np.uint8,
        )
        got = LaplacianSharpnessScorer().score_quality(SceneImage(data))
        assert got == pytest.approx(laplacian_variance_score(data), abs=1e-9)


class TestDispatcher:
    def test_translate_round_trip(self):
        backends = {"translate": LexiconTranslator([("water", "paani")])}
        req = wire.AdapterRequest(
            request_id="r1", op="translate", texts={"text": "water glass"},
            src_lang="en", tgt_lang="hi",
        )
        resp = wire.AdapterResponse.from_json(handle_request(req.to_json(), backends))
        wire.check_response(req, resp)
        assert resp.ok and resp.texts["text"] == "paani glass"

    def test_error_reported_not_raised(self):
        backends = build_stub_backends()
        raw = {
            "request_id": "r2",
            "op": "translate",
            "texts": {"text": ""},
            "images": {},
        }
        resp = handle_request(raw, backends)
        assert resp["ok"] is False
        assert "EmptyText" in resp["error"]


@pytest.fixture(scope="module")
def annotations_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("ann") / "gt.json"
    path.write_text(
        json.dumps({"img": {"boxes": [[2, 2, 6, 4]], "texts": ["METRO"]}}), encoding="utf-8"
    )
    return path


@pytest.fixture(scope="module")
def lexicon_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("lex") / "lex.tsv"
    path.write_text("water\tpaani\n", encoding="utf-8")
    return path


class TestProcessTransport:
    def test_full_round_trip(self, annotations_file, lexicon_file):
        adapter = RemoteAdapter(
            ProcessTransport(
                [
                    sys.executable,
                    "-m",
                    "vtrans.adapters.serve",
                    "--mode",
                    "stdio",
                    "--lexicon",
                    str(lexicon_file),
                    "--annotations",
                    str(annotations_file),
                ],
                timeout=20.0,
            ),
            name="stdio-stub",
        )
        try:
            img = flat(16, 8, (200, 200, 200), id="img")
            assert adapter.detect(img) == [Box(2, 2, 6, 4)]
            text, conf = adapter.recognize(flat(6, 4, (0, 0, 0)), "img", Box(2, 2, 6, 4))
            assert (text, conf) == ("METRO", 1.0)
            assert adapter.translate("water", "en", "hi") == "paani"
            assert adapter.score_quality(flat(8, 8, (5, 5, 5))) == 0.0
            erased = adapter.erase(img, BinaryMask.empty(16, 8))
            assert np.array_equal(erased.data, img.data)
        finally:
            adapter.close()

    def test_timeout_then_unavailable(self):
        adapter = RemoteAdapter(
            ProcessTransport(
                [sys.executable, "-c", "import time; time.sleep(30)"], timeout=0.4
            ),
            name="hang",
        )
        try:
            t0 = time.monotonic()
            with pytest.raises(AdapterUnavailable):
                adapter.translate("x", "en", "hi")
            assert time.monotonic() - t0 < 5.0  # two attempts, no hang
        finally:
            adapter.close()


class TestHttpTransport:
    def test_round_trip(self, lexicon_file):
        backends = build_stub_backends(lexicon=str(lexicon_file))
        server = serve_http(backends, "127.0.0.1", 0)
        port = server.server_address[1]
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            adapter = RemoteAdapter(HttpTransport(f"http://127.0.0.1:{port}", timeout=10))
            assert adapter.translate("water", "en", "hi") == "paani"
            assert adapter.score_quality(flat(6, 6, (9, 9, 9))) == 0.0
        finally:
            server.shutdown()
            server.server_close()

    def test_unreachable_raises_unavailable(self):
        adapter = RemoteAdapter(HttpTransport("http://127.0.0.1:1", timeout=0.3))
        with pytest.raises(AdapterUnavailable):
            adapter.translate("x", "en", "hi")


class _EchoWrongId:
    def send(self, body):
        return {"request_id": "other", "ok": True, "texts": {"text": "y"}}

    def close(self):
        pass


class TestRemoteValidation:
    def test_wrong_request_id_is_malformed(self):
        adapter = RemoteAdapter(_EchoWrongId())
        with pytest.raises(MalformedResponse):
            adapter.translate("x", "en", "hi")

    def test_non_json_reply_is_malformed_not_retried(self):
        adapter = RemoteAdapter(
            ProcessTransport(
                [
                    sys.executable,
                    "-c",
                    "import sys, time; print('not json'); sys.stdout.flush(); time.sleep(10)",
                ],
                timeout=5.0,
            ),
            name="garbled",
        )
        try:
            with pytest.raises(MalformedResponse):
                adapter.translate("x", "en", "hi")
        finally:
            adapter.close()


class TestBuildAdapters:
    def test_defaults_to_stubs(self):
        adapters = build_adapters({})
        assert isinstance(adapters.detector, OracleDetector)
        assert isinstance(adapters.scorer, LaplacianSharpnessScorer)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            build_adapters({"scorer": {"kind": "carrier-pigeon"}})
