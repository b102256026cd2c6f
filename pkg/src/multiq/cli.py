"""Command-line interface.

Subcommands: train, evaluate, segment, extract, make-dataset.
Exit codes: 0 success, 1 usage/config error, 2 I/O or decode error,
3 data/validation error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import pipeline, report, synthetic
from .errors import ConfigError, DataError, DecodeError
from .features import DEFAULT_Q_GRID, parse_qgrid

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_DATA = 3

DEFAULT_QGRID_SPEC = "0.1:2.0:0.1"


class _Parser(argparse.ArgumentParser):
    """argparse, but usage errors exit with code 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_tuning_options(sp):
    sp.add_argument("--block-size", type=int, default=16, help="square block edge in pixels")
    sp.add_argument("--select-count", type=int, default=8,
                    help="features kept by attribute selection (multiq-selected)")
    sp.add_argument("--svm-lambda", type=float, default=1e-3, help="SVM regularization")
    sp.add_argument("--svm-epochs", type=int, default=200, help="SVM subgradient steps")
    sp.add_argument("--tree-expansions", type=int, default=32,
                    help="best-first tree split budget")
    sp.add_argument("--tree-min-leaf", type=int, default=2, help="minimum samples per leaf")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="multiq",
        description="Multi-q entropy features: train, evaluate, and segment tile images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", parents=[], help="train a classifier and write a model file")
    train.add_argument("--data", required=True, help="dataset root (one subdirectory per class)")
    train.add_argument("--method", choices=pipeline.METHODS, default="multiq")
    train.add_argument("--classifier", choices=pipeline.CLASSIFIER_CHOICES, default="knn3")
    train.add_argument("--qgrid", default=DEFAULT_QGRID_SPEC, help="entropic index grid A:B:STEP")
    train.add_argument("--folds", type=int, default=10)
    train.add_argument("--seed", type=int, default=42)
    train.add_argument("--out", required=True, help="model file to write")
    _add_tuning_options(train)

    evaluate = sub.add_parser("evaluate", help="cross-validated hit-rate matrix")
    evaluate.add_argument("--data", required=True)
    evaluate.add_argument("--methods", nargs="+", choices=pipeline.METHODS,
                          default=list(pipeline.METHODS))
    evaluate.add_argument("--classifiers", nargs="+", choices=pipeline.CLASSIFIER_CHOICES,
                          default=list(pipeline.CLASSIFIER_CHOICES))
    evaluate.add_argument("--qgrid", default=DEFAULT_QGRID_SPEC)
    evaluate.add_argument("--folds", type=int, default=10)
    evaluate.add_argument("--seed", type=int, default=42)
    evaluate.add_argument("--out-csv", required=True, help="hit-rate CSV to write")
    evaluate.add_argument("--plot", default=None,
                          help="bar-chart PNG path (default: CSV path with .png)")
    evaluate.add_argument("--no-plot", action="store_true", help="skip the figure")
    _add_tuning_options(evaluate)

    segment = sub.add_parser("segment", help="classify blocks of an image and tint them")
    segment.add_argument("--image", required=True)
    segment.add_argument("--model", required=True)
    segment.add_argument("--alpha", type=float, default=0.5, help="overlay blend in [0, 1]")
    segment.add_argument("--out", required=True, help="overlay image to write (.ppm or .png)")
    segment.add_argument("--workers", type=int, default=1,
                         help="processes for block feature extraction")

    extract = sub.add_parser("extract", help="write the per-block feature CSV")
    source = extract.add_mutually_exclusive_group(required=True)
    source.add_argument("--data", help="dataset root")
    source.add_argument("--image", help="single image")
    extract.add_argument("--method", choices=pipeline.METHODS, default="multiq")
    extract.add_argument("--qgrid", default=DEFAULT_QGRID_SPEC)
    extract.add_argument("--block-size", type=int, default=16)
    extract.add_argument("--out", required=True, help="CSV to write")

    synth = sub.add_parser("make-dataset", help="generate the synthetic three-class tile set")
    synth.add_argument("--out", required=True, help="dataset root to create")
    synth.add_argument("--tiles", type=int, default=40, help="tiles per class")
    synth.add_argument("--size", type=int, default=32, help="tile edge in pixels")
    synth.add_argument("--seed", type=int, default=42)
    synth.add_argument("--composite", default=None,
                       help="also write a three-band composite image here")

    return parser


def _config_from(args, method=None, classifier=None) -> pipeline.RunConfig:
    try:
        qgrid = parse_qgrid(args.qgrid) if getattr(args, "qgrid", None) else DEFAULT_Q_GRID
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return pipeline.RunConfig(
        method=method or getattr(args, "method", "multiq"),
        classifier=classifier or getattr(args, "classifier", "knn3"),
        qgrid=qgrid,
        folds=getattr(args, "folds", 10),
        seed=getattr(args, "seed", 42),
        block_size=getattr(args, "block_size", 16),
        select_count=getattr(args, "select_count", 8),
        svm_lambda=getattr(args, "svm_lambda", 1e-3),
        svm_epochs=getattr(args, "svm_epochs", 200),
        tree_expansions=getattr(args, "tree_expansions", 32),
        tree_min_leaf=getattr(args, "tree_min_leaf", 2),
    )


def _cmd_train(args) -> int:
    config = _config_from(args)
    model, dataset = pipeline.train(args.data, config)
    pipeline.print_warnings(dataset.warnings)
    pipeline.save_model(model, args.out)
    print(f"trained {config.classifier} on {len(dataset.y)} blocks "
          f"({len(model.labels)} classes), seed {config.seed}")
    print(f"method {model.method}: {model.feature_count} features")
    print(f"model written to {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    config = _config_from(args)
    result, warnings = pipeline.evaluate_matrix(args.data, args.methods, args.classifiers, config)
    pipeline.print_warnings(warnings)
    print(report.format_table(result))
    report.write_csv(result, args.out_csv)
    print(f"csv written to {args.out_csv}")
    if not args.no_plot:
        plot_path = args.plot or str(Path(args.out_csv).with_suffix(".png"))
        report.render_figure(result, plot_path)
        print(f"figure written to {plot_path}")
    return EXIT_OK


def _cmd_segment(args) -> int:
    if not 0.0 <= args.alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {args.alpha}")
    if args.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {args.workers}")
    model = pipeline.load_model(args.model)
    image = pipeline.read_image(args.image)
    overlay, _, counts = pipeline.segment_image(image, model, args.alpha, args.workers)
    pipeline.write_image(args.out, overlay)
    print(f"model seed {model.seed}, method {model.method}, classifier {model.classifier_name}")
    for label, count in counts.items():
        print(f"{label}: {count} blocks")
    print(f"overlay written to {args.out}")
    return EXIT_OK


def _cmd_extract(args) -> int:
    config = _config_from(args, classifier="knn3")
    dataset = pipeline.extract_to_csv(
        args.out, config, data_dir=args.data, image_path=args.image)
    pipeline.print_warnings(dataset.warnings)
    print(f"{len(dataset.y)} rows x {len(dataset.names)} features written to {args.out}")
    return EXIT_OK


def _cmd_make_dataset(args) -> int:
    counts = synthetic.write_dataset(
        args.out, tiles_per_class=args.tiles, size=args.size, seed=args.seed)
    for label in synthetic.CLASSES:
        print(f"{label}: {counts[label]} tiles")
    if args.composite:
        image, _ = synthetic.composite_image(seed=args.seed)
        pipeline.write_image(args.composite, image)
        print(f"composite written to {args.composite}")
    print(f"dataset written to {args.out} (seed {args.seed})")
    return EXIT_OK


_COMMANDS = {
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "segment": _cmd_segment,
    "extract": _cmd_extract,
    "make-dataset": _cmd_make_dataset,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"multiq: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DecodeError as exc:
        print(f"multiq: decode error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"multiq: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DataError as exc:
        print(f"multiq: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"multiq: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
