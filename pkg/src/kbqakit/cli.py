"""Command line entry point: one subcommand per pipeline stage, plus the
annotation service and a dataset stats report.

Exit codes: 0 on success, 1 on configuration or validation problems, 2 on
runtime failures inside a stage.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline, verification
from .pipeline import ConfigError, PipelineError
from .templates import TemplateError

STAGE_COMMANDS = pipeline.STAGE_ORDER

_HELP = {
    "kg-import": "validate and normalize the knowledge graph TSV files",
    "templates": "generate, refine, and filter template questions",
    "questions": "expand seed questions into suggestion-completed candidates",
    "passages": "search, fetch, segment, and rank candidate passages",
    "tag": "extract and ground answer spans",
    "link": "attach candidate topic entities to each question",
    "verify-export": "write annotation work items for both stages",
    "verify-import": "resolve recorded decisions into effective flags",
    "assemble": "build and split the three datasets",
    "kg-sample": "cut the dataset-sized knowledge graph around the examples",
    "eval-kbqa": "score entity answers from a response file",
    "eval-mrc": "score extracted spans from a prediction file",
    "eval-ir": "run the lexical retrieval baseline and score it",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kbqakit", description="dataset construction pipeline")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    for name in STAGE_COMMANDS:
        sub = commands.add_parser(name, help=_HELP.get(name, name))
        sub.add_argument("-c", "--config", required=True, help="pipeline config YAML")
        sub.add_argument("--force", action="store_true", help="ignore the cached fingerprint")
        sub.add_argument("--dry-run", action="store_true", help="print the stage plan and exit")

    serve = commands.add_parser("serve", help="run the annotation service")
    serve.add_argument("-c", "--config", required=True)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8137)
    serve.add_argument("--static", default=None, help="directory of UI files to serve at /")

    stats = commands.add_parser("stats", help="summarize the assembled datasets")
    stats.add_argument("-c", "--config", required=True)
    return parser


def _run_stage_command(args) -> int:
    config = pipeline.load_config(args.config)
    if args.dry_run:
        for name, status in pipeline.plan(config, args.command):
            print(f"{name}: {status}")
        return 0
    report = pipeline.run_stage(config, args.command, force=args.force)
    print(report.line())
    return 0


def _run_serve(args) -> int:
    from .service import AnnotationStore, create_app, load_work_items

    config = pipeline.load_config(args.config)
    out = pipeline._out(config)
    annotators = config.verification.get("annotators")
    if not annotators:
        raise ConfigError("verification.annotators: required to serve")
    items = []
    for name in ("stage1_items.jsonl", "stage2_items.jsonl"):
        path = out / "verify" / name
        if path.exists():
            items.extend(load_work_items(path))
    if not items:
        raise PipelineError("no work items; run verify-export first")
    log_path = config.resolve(config.verification.get("log", str(out / "verify" / "decisions.log")))
    store = AnnotationStore(
        items,
        list(annotators),
        log_path,
        overlap_fraction=config.verification.get("overlap_fraction", 0.10),
        seed=config.seed,
    )
    app = create_app(store, static_dir=args.static)
    import uvicorn

    print(f"serving {len(items)} items on {args.host}:{args.port}, log at {log_path}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _run_stats(args) -> int:
    config = pipeline.load_config(args.config)
    print(json.dumps(pipeline.dataset_stats(config), ensure_ascii=False, indent=2, sort_keys=True))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.command == "serve":
            return _run_serve(args)
        if args.command == "stats":
            return _run_stats(args)
        return _run_stage_command(args)
    except (ConfigError, TemplateError, verification.VerificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # stage crashed: bad data, provider failure
        logging.getLogger(__name__).debug("unhandled failure", exc_info=True)
        print(f"failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
