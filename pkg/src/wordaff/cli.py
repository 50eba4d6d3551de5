"""Command-line entry points: run, bench, synth, serve.

Exit codes: 0 success, 1 validation problem (bad file or config), 2
internal error. All outputs are deterministic under a fixed seed and land
inside the chosen output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from .config import ConfigError, PipelineConfig
from .model import DocumentValidationError, ingest_document


def _json_dumps(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _cmd_run(args) -> int:
    from .edits import render_svg
    from .pipeline import run_pipeline
    from .service import _projection_payload
    from .siamese import checkpoint_bytes

    doc = ingest_document(Path(args.document).read_bytes())
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        config = config.with_seed(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    session = run_pipeline(doc, config)
    (out / "clusters.json").write_text(_json_dumps(session.assignment.to_payload()))
    (out / "projection.json").write_text(_json_dumps(_projection_payload(session)))
    report = {
        "doc_id": doc.doc_id,
        "n_words": len(doc.words),
        "n_lines": len(doc.lines),
        "n_clusters": session.assignment.n_clusters,
        "constraints": session.auto_constraints.stats,
        "train": session.report.to_payload(),
        "config": config.to_dict(),
    }
    (out / "report.json").write_text(_json_dumps(report))
    (out / "render.svg").write_text(render_svg(doc, session.assignment))
    (out / "checkpoint.json").write_bytes(checkpoint_bytes(session.model))
    with (out / "constraints.jsonl").open("w") as fh:
        for con in session.auto_constraints.constraints:
            fh.write(json.dumps(con.to_payload(), sort_keys=True) + "\n")
    print(f"{doc.doc_id}: {len(doc.words)} words -> {session.assignment.n_clusters} clusters")
    return 0


def _cmd_bench(args) -> int:
    from .synthgen import load_corpus, run_benchmark

    corpus = load_corpus(args.corpus)
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = run_benchmark(corpus, config)
    (out / "bench.json").write_text(_json_dumps(report.to_payload()))
    (out / "bench.csv").write_text(report.to_csv())
    print(f"{len(report.rows)} documents, mean purity {report.mean_purity():.4f}")
    return 0


def _cmd_synth(args) -> int:
    from .synthgen import SynthSpec, generate_document

    payload = json.loads(Path(args.spec).read_text())
    if args.seed is not None:
        payload["seed"] = args.seed
    spec = SynthSpec.from_payload(payload)
    doc, gt = generate_document(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "document.json").write_text(_json_dumps(doc.to_payload()))
    (out / "ground_truth.json").write_text(_json_dumps(gt.to_payload()))
    print(f"{doc.doc_id}: {len(doc.words)} words, {len(gt.categories())} categories")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=args.data_dir, seed=args.seed or 0)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wordaff",
        description="Learn word affinities in a document, cluster, and propagate edits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the pipeline on one document file")
    p_run.add_argument("document", help="document JSON file")
    p_run.add_argument("--config", help="key=value config file")
    p_run.add_argument("--seed", type=int, help="master seed override")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_bench = sub.add_parser("bench", help="run the benchmark over a synthetic corpus")
    p_bench.add_argument("corpus", help="corpus spec JSON file")
    p_bench.add_argument("--config", help="key=value config file")
    p_bench.add_argument("--out", default="out", help="output directory")
    p_bench.set_defaults(func=_cmd_bench)

    p_synth = sub.add_parser("synth", help="generate a synthetic document + ground truth")
    p_synth.add_argument("spec", help="synthetic spec JSON file")
    p_synth.add_argument("--seed", type=int, help="seed override")
    p_synth.add_argument("--out", default="out", help="output directory")
    p_synth.set_defaults(func=_cmd_synth)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--port", type=int, default=8400)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--data-dir", help="session persistence directory")
    p_serve.add_argument("--seed", type=int, default=0)
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DocumentValidationError, ConfigError, ValueError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
