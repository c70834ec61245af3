"""Command line entry point: ``python -m backend.cli <command> ...``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from backend.errors import ConfigError, LayoutToolkitError
from backend.models.config import PipelineConfig
from backend.services.config_service import ENV_PREFIX, load_pipeline_config
from backend.services.pipeline import LayoutPipeline, sequence_paths

logger = logging.getLogger("backend.cli")

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"


def _split_argument(text: str) -> tuple:
    name, sep, path = text.partition("=")
    if not sep or not name or not path:
        raise argparse.ArgumentTypeError(f"expected NAME=PATH, got {text!r}")
    return name, Path(path)


def _common_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", type=Path, help="JSON or key=value configuration file")
    parent.add_argument("--seed", type=int, help="Augmentation seed")
    parent.add_argument("--jobs", type=int, help="Worker threads for per-sample work")
    parent.add_argument(
        "--t-iou",
        type=float,
        action="append",
        dest="t_iou",
        help="Jaccard threshold; repeat for several reports",
    )
    parent.add_argument("--grid-max", type=int, dest="grid_max", help="Longest grid side")
    parent.add_argument("--mode", choices=("relative", "absolute"), help="Object position encoding")
    parent.add_argument(
        "--imgar",
        action=argparse.BooleanOptionalAction,
        default=None,
        dest="include_imgar",
        help="Prepend the image aspect-ratio action (--no-imgar overrides the environment)",
    )
    parent.add_argument(
        "--log-level",
        default=None,
        help=f"Logging level (default: ${ENV_PREFIX}LOG_LEVEL or INFO)",
    )
    return parent


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="sglayout",
        description="Scene graph layout encoding, restoration and SLEU evaluation",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    ingest = commands.add_parser("ingest", parents=[common], help="Split and filter a corpus")
    ingest.add_argument("corpus", type=Path)
    ingest.add_argument(
        "--split",
        type=_split_argument,
        action="append",
        required=True,
        metavar="NAME=PATH",
        help="Split manifest with one sample id per line",
    )
    ingest.add_argument("--out-dir", type=Path, required=True)

    encode = commands.add_parser("encode", parents=[common], help="Write .sf/.nodes/.bacs/.ids lines")
    encode.add_argument("corpus", type=Path)
    encode.add_argument("--out", type=Path, required=True, help="Output prefix")

    augment = commands.add_parser("augment", parents=[common], help="Write augmented sequence files")
    augment.add_argument("corpus", type=Path)
    augment.add_argument("--out", type=Path, required=True, help="Output prefix")

    decode = commands.add_parser("decode", parents=[common], help="Restore layouts from BACS lines")
    decode.add_argument("bacs", type=Path)
    decode.add_argument("--sf", type=Path, required=True)
    decode.add_argument("--nodes", type=Path, required=True)
    decode.add_argument("--ids", type=Path, help="Sample ids (defaults to the .ids file next to --sf)")
    decode.add_argument("--out", type=Path, required=True, help="Restored layout JSON")
    decode.add_argument("--svg-dir", type=Path, help="Also draw every restored layout")

    evaluate = commands.add_parser("evaluate", parents=[common], help="Score predictions with SLEU")
    evaluate.add_argument("predictions", type=Path, nargs="+", help=".bacs lines or restored layout JSON")
    evaluate.add_argument(
        "--reference",
        type=Path,
        action="append",
        required=True,
        help="Reference corpus; repeat to add alternative layouts",
    )
    evaluate.add_argument("--out-dir", type=Path, help="Directory for JSON reports")
    evaluate.add_argument(
        "--ids",
        type=Path,
        help="Sample id of every .bacs line (defaults to the .ids file next to each prediction)",
    )

    baseline = commands.add_parser("baseline", help="Mean-geometry baseline translator")
    baseline_commands = baseline.add_subparsers(dest="baseline_command", required=True)
    train = baseline_commands.add_parser("train", parents=[common])
    train.add_argument("--sf", type=Path, required=True)
    train.add_argument("--bacs", type=Path, required=True)
    train.add_argument("--table", type=Path, required=True)
    predict = baseline_commands.add_parser("predict", parents=[common])
    predict.add_argument("--sf", type=Path, required=True)
    predict.add_argument("--table", type=Path, required=True)
    predict.add_argument("--out", type=Path, required=True)
    return parser


def configure_logging(level: Optional[str]) -> None:
    level = (level or os.getenv(f"{ENV_PREFIX}LOG_LEVEL") or "INFO").upper()
    if not isinstance(logging.getLevelName(level), int):
        raise ConfigError(f"unknown log level {level!r}")
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    overrides: Dict[str, Any] = {
        key: getattr(args, key, None)
        for key in ("seed", "jobs", "t_iou", "grid_max", "mode", "include_imgar")
    }
    return load_pipeline_config(args.config, overrides)


def _run_ingest(pipeline: LayoutPipeline, args: argparse.Namespace) -> None:
    manifests = dict(args.split)
    if len(manifests) != len(args.split):
        raise ConfigError("a split name was given twice")
    summaries = pipeline.ingest(args.corpus, manifests, args.out_dir)
    for s in summaries:
        print(
            f"{s.name}: {s.samples_out}/{s.samples_in} samples, "
            f"{s.objects_out} objects, {s.relationships_out} relationships"
        )


def _run_decode(pipeline: LayoutPipeline, args: argparse.Namespace) -> None:
    ids = args.ids
    if ids is None:
        sidecar = args.sf.with_suffix(".ids")
        ids = sidecar if sidecar.exists() else None
    summary = pipeline.decode(args.bacs, args.sf, args.nodes, args.out, ids_path=ids, svg_dir=args.svg_dir)
    print(f"decoded {summary.decoded}, misaligned {summary.misaligned}")


def _run_evaluate(pipeline: LayoutPipeline, args: argparse.Namespace) -> None:
    for report in pipeline.evaluate(args.predictions, args.reference, args.out_dir, ids_path=args.ids):
        print(
            f"{report.prediction}\tIoU{report.t_iou:.2f}\t"
            f"mean-SLEU {report.mean_sleu:.4f}\tflagged {report.flagged}"
        )


def run(args: argparse.Namespace) -> None:
    pipeline = LayoutPipeline(config_from_args(args))
    if args.command == "ingest":
        _run_ingest(pipeline, args)
    elif args.command == "encode":
        count = pipeline.encode(args.corpus, args.out)
        print(f"encoded {count} samples -> {', '.join(str(p) for p in sequence_paths(args.out).values())}")
    elif args.command == "augment":
        print(f"wrote {pipeline.augment(args.corpus, args.out)} lines")
    elif args.command == "decode":
        _run_decode(pipeline, args)
    elif args.command == "evaluate":
        _run_evaluate(pipeline, args)
    elif args.baseline_command == "train":
        pipeline.baseline_train(args.sf, args.bacs, args.table)
        print(f"baseline table written to {args.table}")
    else:
        print(f"wrote {pipeline.baseline_predict(args.sf, args.table, args.out)} predictions")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        configure_logging(args.log_level)
        run(args)
    except (LayoutToolkitError, OSError) as exc:
        logger.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
