"""Command-line harness: run / sweep / search / export-fixtures.

Exit code 0 on full success; on any failure a machine-readable JSON error is
printed to stderr and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import data
from .harness import (
    ConfigError,
    parse_config_file,
    parse_search_space,
    run_experiment,
    run_sweep,
    search_hyperparams,
    spec_from_flat,
)
from .presets import PRESETS, load_preset_overrides


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", help="config file (flat text or flat JSON)")
    parser.add_argument(
        "--preset",
        help="layer a shipped schedule preset (e.g. cifar10/40) over the config",
    )
    parser.add_argument("--seeds", type=int, help="number of seeds (default 5)")
    parser.add_argument("--out", help="output directory override")
    parser.add_argument(
        "--clock", choices=("epoch", "iteration"), help="schedule clock unit override"
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="discrimloss",
        description="noise-robust training experiments with a stage-wise discriminating loss",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("run", help="run one experiment over n seeds"))

    p_sweep = sub.add_parser("sweep", help="repeat an experiment along one hyperparameter axis")
    _add_common(p_sweep)
    p_sweep.add_argument(
        "--axis", required=True, choices=("a", "p", "q", "lambda", "noise_rate")
    )
    p_sweep.add_argument("--values", required=True, help="comma-separated axis values")

    p_search = sub.add_parser("search", help="random search over search.* config ranges")
    _add_common(p_search)
    p_search.add_argument("--budget", required=True, type=int)
    p_search.add_argument("--search-seed", type=int, default=0)

    p_fix = sub.add_parser(
        "export-fixtures", help="write golden telemetry and IDX fixtures for downstream tools"
    )
    p_fix.add_argument("--out", default="fixtures")
    return parser


def _load_spec(args):
    flat = parse_config_file(args.config)
    if args.preset:
        if args.preset in PRESETS:
            flat.update(load_preset_overrides(args.preset))
        elif Path(args.preset).exists():
            flat.update(parse_config_file(args.preset))
        else:
            raise ConfigError(f"unknown preset {args.preset!r} and no such file")
    if args.seeds is not None:
        flat["n_seeds"] = args.seeds
    if args.out is not None:
        flat["output_dir"] = args.out
    if args.clock is not None:
        flat["discrim.clock"] = args.clock
    return spec_from_flat(flat), flat


def export_fixtures(out_dir) -> dict:
    """Record a small blobs run plus example IDX/CSV files under out_dir.

    The golden run telemetry (metrics.csv, samples.csv, summary.json) is what
    figure tools consume; the IDX pair and dataset CSV exercise the file
    formats end to end.
    """
    from .loss_core import DiscrimConfig
    from .models import CrossEntropy, LinearSoftmax
    from .trainer import TrainConfig, train

    out = Path(out_dir)
    run_dir = out / "golden_run"
    run_dir.mkdir(parents=True, exist_ok=True)

    trainset = data.inject_symmetric_noise(
        data.make_blobs(120, 4, 2, 8.0, seed=7), 0.3, seed=11
    )
    testset = data.make_blobs(120, 4, 2, 8.0, seed=13)
    model = LinearSoftmax(2, 4, seed=3)
    dcfg = DiscrimConfig(a=0.3, p=0.8, q=4, e_s=2, tau=0.5, k1_mode="ga")
    tcfg = TrainConfig(epochs=8, batch_size=30, lr=0.2, momentum=0.9, seed=5, mode="discrim")
    _, record = train(model, trainset, CrossEntropy(), dcfg, tcfg, test_dataset=testset)
    record.write_metrics_csv(run_dir / "metrics.csv")
    record.write_samples_csv(run_dir / "samples.csv")
    record.write_summary_json(run_dir / "summary.json")

    rng = np.random.default_rng(17)
    images = rng.integers(0, 256, size=(8, 6, 6), dtype=np.uint8)
    labels = rng.integers(0, 4, size=8, dtype=np.uint8)
    data.write_idx(images, labels, out / "sample-images.idx", out / "sample-labels.idx")
    data.dataset_to_csv(trainset, out / "example_dataset.csv")
    return {"out": str(out), "golden_run": str(run_dir)}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "export-fixtures":
            info = export_fixtures(args.out)
            print(json.dumps(info))
            return 0

        spec, flat = _load_spec(args)
        if args.command == "run":
            summary = run_experiment(spec)
            agg = {k: f"{v['mean']:.6g} +/- {v['std']:.6g}" for k, v in summary["aggregate"].items()}
            print(json.dumps({"output_dir": spec.output_dir, "aggregate": agg}))
            if summary["n_failed"]:
                raise RuntimeError(
                    f"{summary['n_failed']} of {spec.n_seeds} seeds failed; see summary.json"
                )
            return 0
        if args.command == "sweep":
            values = [float(v) for v in args.values.split(",") if v.strip()]
            summaries = run_sweep(spec, args.axis, values)
            print(json.dumps({"output_dir": spec.output_dir, "cells": len(summaries)}))
            failed = sum(s["n_failed"] for s in summaries)
            if failed:
                raise RuntimeError(f"{failed} seed runs failed across sweep cells")
            return 0
        if args.command == "search":
            space = parse_search_space(flat)
            result = search_hyperparams(spec, space, args.budget, seed=args.search_seed)
            print(
                json.dumps(
                    {
                        "best_overrides": result["best_overrides"],
                        "metric": result["metric"],
                        "value": result["best_value"],
                    }
                )
            )
            return 0
        raise ConfigError(f"unknown command {args.command!r}")
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
