"""Command-line entry point.

Verbs: train-ae, encode, qtransform, train-clf, eval, pipeline.
Exit codes: 0 success, 1 internal error, 2 bad config/data,
3 threshold failure under --check.
"""

from __future__ import annotations

import argparse
import sys

from .archive import ArchiveError
from .config import ConfigError, load_config, validate_config
from .data import IdxFormatError
from .pipeline import (
    StageError,
    StagePaths,
    check_thresholds,
    load_splits,
    run_pipeline,
    stage_encode,
    stage_eval,
    stage_qtransform,
    stage_train_ae,
    stage_train_clf,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_CHECK = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qhybrid",
        description="hybrid quantum-classical digit classification experiments",
    )
    parser.add_argument("--config", required=True, help="path to key = value config file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="override the config output directory")
    parser.add_argument("--force", action="store_true",
                        help="re-run pipeline stages even when outputs exist")
    parser.add_argument("--check", action="store_true",
                        help="after running, fail (exit 3) if metrics miss their floors")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train-ae", help="train the autoencoder stage")
    sub.add_parser("encode", help="cache latent features from the trained autoencoder")
    sub.add_parser("qtransform", help="run the quantum feature transform over latents")
    for verb in ("train-clf", "eval"):
        p = sub.add_parser(verb, help=f"{verb} on a chosen feature set")
        p.add_argument("--features", choices=("latent", "quantum"), default="quantum")
    sub.add_parser("pipeline", help="run every stage end to end with caching")
    return parser


def _run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    validate_config(cfg)
    paths = StagePaths(cfg.out_dir)
    paths.out_dir.mkdir(parents=True, exist_ok=True)

    if args.command == "pipeline":
        summary = run_pipeline(cfg, force=args.force)
        print(summary, end="")
    elif args.command == "train-ae":
        stage_train_ae(cfg, paths, load_splits(cfg))
        print(f"autoencoder written to {paths.ae_model}")
    elif args.command == "encode":
        _require(paths.ae_model, "train-ae")
        stage_encode(cfg, paths, load_splits(cfg))
        print(f"latents written to {paths.latents}")
    elif args.command == "qtransform":
        _require(paths.latents, "encode")
        stage_qtransform(cfg, paths)
        print(f"quantum features written to {paths.qfeatures}")
    elif args.command == "train-clf":
        _require(paths.latents, "encode")
        if args.features == "quantum":
            _require(paths.qfeatures, "qtransform")
        stage_train_clf(cfg, paths, args.features)
        print(f"classifier written to {paths.clf_model[args.features]}")
    elif args.command == "eval":
        _require(paths.clf_model[args.features], f"train-clf --features {args.features}")
        stage_eval(cfg, paths, args.features)
        print(f"evaluation written to {paths.eval_metrics_csv[args.features]}")

    if args.check:
        failures = check_thresholds(cfg, paths)
        if failures:
            for failure in failures:
                print(f"check failed: {failure}", file=sys.stderr)
            return EXIT_CHECK
        print("all checks passed")
    return EXIT_OK


def _require(path, producer: str) -> None:
    if not path.exists():
        raise StageError(f"missing artifact {path}; run `{producer}` first")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (ConfigError, IdxFormatError, ArchiveError, StageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - last-resort guard for exit code 1
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
