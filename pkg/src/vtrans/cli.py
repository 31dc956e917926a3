"""Command-line surface.

    vt translate  --config cfg.json --input-manifest in.jsonl --out dir
    vt eval       --outputs dir --refs refs.jsonl --report report.json
    vt synth      --count N --vocab-src f --vocab-tgt f --fonts dir --out dir
    vt serve-ratings --study study.json --port 8000
    vt serve-adapter --mode stdio|http ...

VT_LOG sets the log level (debug/info/warning/error).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .errors import VtransError


def _setup_logging():
    level = os.environ.get("VT_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _onoff(value: str) -> bool:
    value = value.lower()
    if value in ("on", "true", "1", "yes"):
        return True
    if value in ("off", "false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {value!r}")


def cmd_translate(args) -> int:
    from .pipeline import PipelineConfig, run_batch

    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    if args.design_enhancements is not None:
        cfg.design_enhancements = args.design_enhancements
    if args.feather is not None:
        cfg.feather = args.feather
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.record_timings:
        cfg.record_timings = True
    if args.token_patterns:
        cfg.token_patterns = args.token_patterns
    _, code = run_batch(args.input_manifest, cfg, args.out)
    return code


def cmd_eval(args) -> int:
    from .reporting import evaluate_run

    _, _, table = evaluate_run(args.outputs, args.refs, args.report)
    sys.stdout.write(table)
    return 0


def cmd_synth(args) -> int:
    from .scene import read_png
    from .synthgen import CorpusSpec, FontLibrary, generate_corpus, load_vocab

    backgrounds = []
    if args.backgrounds:
        bg_dir = Path(args.backgrounds)
        for p in sorted(bg_dir.iterdir()):
            if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp"):
                backgrounds.append(read_png(p, p.stem))
    lexicon = {}
    if args.lexicon:
        with open(args.lexicon, encoding="utf-8") as fh:
            for line in fh:
                src, sep, tgt = line.rstrip("\n").partition("\t")
                if sep:
                    lexicon[src.casefold()] = tgt
    w, h = (int(v) for v in args.canvas.split("x"))
    spec = CorpusSpec(
        count=args.count,
        vocab_src=load_vocab(args.vocab_src),
        vocab_tgt=load_vocab(args.vocab_tgt),
        fonts=FontLibrary.from_dir(args.fonts),
        backgrounds=backgrounds,
        canvas=(w, h),
        seed=args.seed,
        translation_pair_ratio=args.translation_pair_ratio,
        lexicon=lexicon,
    )
    records = generate_corpus(spec, args.out)
    print(f"wrote {len(records)} samples to {args.out}")
    return 0


def cmd_serve_ratings(args) -> int:
    import uvicorn

    from .ratings import Study, create_app

    study = Study(args.study, args.data)
    app = create_app(study, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_serve_adapter(args) -> int:
    from .adapters import serve

    argv = ["--mode", args.mode, "--host", args.host, "--port", str(args.port)]
    if args.lexicon:
        argv += ["--lexicon", args.lexicon]
    if args.annotations:
        argv += ["--annotations", args.annotations]
    return serve.main(argv)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vt", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("translate", help="run the visual translation pipeline over a manifest")
    t.add_argument("--config", help="pipeline config JSON")
    t.add_argument("--input-manifest", required=True, help="JSONL of input images")
    t.add_argument("--out", required=True, help="output directory")
    t.add_argument("--design-enhancements", type=_onoff, default=None, metavar="on|off")
    t.add_argument("--feather", type=_onoff, default=None, metavar="on|off")
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--workers", type=int, default=None)
    t.add_argument("--record-timings", action="store_true",
                   help="write wall-clock timings into the run manifest (breaks byte-reproducibility)")
    t.add_argument("--token-patterns", default=None,
                   help="override token-filter patterns (one class<TAB>pattern per line)")
    t.set_defaults(func=cmd_translate)

    e = sub.add_parser("eval", help="score a run directory against references")
    e.add_argument("--outputs", required=True, help="directory written by vt translate")
    e.add_argument("--refs", required=True, help="JSONL with reference translations")
    e.add_argument("--report", help="write the JSON report here (plus .txt table)")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="generate a paired synthetic word-image corpus")
    s.add_argument("--count", type=int, default=10_000)
    s.add_argument("--vocab-src", required=True)
    s.add_argument("--vocab-tgt", required=True)
    s.add_argument("--fonts", required=True, help="directory of .ttf/.otf files")
    s.add_argument("--backgrounds", help="directory of background images (optional)")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--canvas", default="256x64")
    s.add_argument("--translation-pair-ratio", type=float, default=0.0)
    s.add_argument("--lexicon", help="TSV used when translation pairs are requested")
    s.set_defaults(func=cmd_synth)

    r = sub.add_parser("serve-ratings", help="serve the rating study API (and optional UI)")
    r.add_argument("--study", required=True, help="study definition JSON")
    r.add_argument("--data", help="directory for the ratings log (default: study dir)")
    r.add_argument("--ui", help="directory with the built rating UI to mount at /ui")
    r.add_argument("--host", default="127.0.0.1")
    r.add_argument("--port", type=int, default=8000)
    r.set_defaults(func=cmd_serve_ratings)

    a = sub.add_parser("serve-adapter", help="expose the stub adapters over stdio or HTTP")
    a.add_argument("--mode", choices=("stdio", "http"), default="stdio")
    a.add_argument("--host", default="127.0.0.1")
    a.add_argument("--port", type=int, default=8123)
    a.add_argument("--lexicon")
    a.add_argument("--annotations")
    a.set_defaults(func=cmd_serve_adapter)
    return ap


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VtransError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
