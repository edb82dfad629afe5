"""Experiment harness: flat config files, multi-seed runs, sweeps, random search.

Config files are flat key-value text with dotted sections (dataset.*,
model.*, loss.*, discrim.*, train.*), plus n_seeds and output_dir at top
level. A run executes n_seeds trainings with consecutive seeds, writes one
directory per seed (metrics.csv, samples.csv, summary.json) and an aggregate
summary with mean and population std per metric. The echoed config.json in
the run directory reproduces the run exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import (
    Dataset,
    dataset_from_csv,
    inject_regression_noise,
    inject_symmetric_noise,
    load_mnist_idx,
    make_blobs,
    make_regression,
)
from .loss_core import DiscrimConfig
from .models import CrossEntropy, L2, LinearRegressor, LinearSoftmax, Mlp, SmoothL1
from .trainer import TrainConfig, evaluate, train

# seed offsets keeping the test/validation/noise streams independent of the
# training shuffle stream
_TEST_SEED_OFFSET = 7919
_VAL_SEED_OFFSET = 104729
_NOISE_SEED_OFFSET = 15485863
_MODEL_SEED_OFFSET = 1000003

DATASET_KINDS = ("blobs", "regression", "mnist", "csv")
MODEL_KINDS = ("linear_softmax", "mlp", "linear_regressor")
LOSS_KINDS = ("cross_entropy", "l2", "smooth_l1")
SWEEP_AXES = ("a", "p", "q", "lambda", "noise_rate")


class ConfigError(ValueError):
    """Bad or inconsistent experiment configuration."""


@dataclass
class ExperimentSpec:
    """Fully resolved description of one experiment (before per-seed expansion)."""

    dataset: dict
    model: dict
    loss: dict
    discrim: DiscrimConfig
    train: TrainConfig
    n_seeds: int = 5
    output_dir: str = "runs"

    def __post_init__(self):
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")


def _parse_scalar(text: str):
    s = text.strip()
    if s.lower() in ("true", "false"):
        return s.lower() == "true"
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


def parse_config_text(text: str) -> dict:
    """Parse flat `key = value` lines; '#' starts a comment line."""
    flat = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        flat[key.strip()] = _parse_scalar(value)
    return flat


def parse_config_file(path) -> dict:
    """Load a config: flat text by default, a flat JSON object for .json files."""
    p = Path(path)
    if p.suffix == ".json":
        flat = json.loads(p.read_text())
        if not isinstance(flat, dict):
            raise ConfigError(f"{path}: expected a JSON object of config keys")
        return flat
    return parse_config_text(p.read_text())


def _parse_lr_schedule(value) -> dict:
    if isinstance(value, dict):
        return {int(k): float(v) for k, v in value.items()}
    if value in (None, ""):
        return {}
    out = {}
    for part in str(value).split(","):
        epoch, _, lr = part.partition(":")
        if not _:
            raise ConfigError(f"bad lr_schedule entry {part!r}, expected epoch:lr")
        out[int(epoch)] = float(lr)
    return out


def _format_lr_schedule(schedule: dict) -> str:
    return ",".join(f"{e}:{lr!r}" for e, lr in sorted(schedule.items()))


def _parse_range(value) -> tuple[float, float] | None:
    if value in (None, ""):
        return None
    if isinstance(value, (tuple, list)):
        lo, hi = value
        return float(lo), float(hi)
    lo, _, hi = str(value).partition(":")
    if not _:
        raise ConfigError(f"bad range {value!r}, expected lo:hi")
    return float(lo), float(hi)


_DATASET_DEFAULTS = {
    "kind": "blobs",
    "n": 1000,
    "test_n": None,  # defaults to n
    "val_n": None,  # defaults to max(8, n // 5)
    "d": 2,
    "classes": 4,
    "separation": 10.0,
    "noise_std": 0.1,
    "noise_rate": 0.0,
    "noise_range": None,
    "seed": 0,
    "images": None,
    "labels": None,
    "test_images": None,
    "test_labels": None,
    "path": None,
    "test_path": None,
    "val_fraction": 0.1,
    "limit": None,
    "test_limit": None,
}
_MODEL_DEFAULTS = {"kind": None, "hidden": "32"}
_LOSS_DEFAULTS = {"kind": None, "beta": 1.0}
_DISCRIM_DEFAULTS = {
    "a": 0.27,
    "p": 0.54,
    "q": 60,
    "e_s": 3,
    "lambda": 0.0,
    "rho": 0.9,
    "rho_prime": 0.9,
    "tau": 0.1,
    "k1_mode": "ga",
    "eta": None,
    "delta_min": 1e-2,
    "delta_max": 1e2,
    "clock": "epoch",
}
_TRAIN_DEFAULTS = {
    "mode": "discrim",
    "epochs": 10,
    "batch_size": 32,
    "lr": 0.1,
    "lr_schedule": "",
    "momentum": 0.9,
    "weight_decay": 0.0,
    "seed": 0,
    "freeze_delta": False,
    "delta_update_first": True,
    "t_fluc": 2.0,
    "fluctuation_source": "weight",
}
_TOP_DEFAULTS = {"n_seeds": 5, "output_dir": "runs"}


def _section(flat: dict, name: str, defaults: dict) -> dict:
    out = dict(defaults)
    prefix = name + "."
    for key, value in flat.items():
        if key.startswith(prefix):
            field = key[len(prefix):]
            if field not in defaults:
                raise ConfigError(f"unknown config key {key!r}")
            out[field] = value
    return out


def spec_from_flat(flat: dict) -> ExperimentSpec:
    """Build an ExperimentSpec from a flat config dict, applying defaults."""
    known_prefixes = ("dataset.", "model.", "loss.", "discrim.", "train.", "search.")
    for key in flat:
        if key in _TOP_DEFAULTS:
            continue
        if not any(key.startswith(p) for p in known_prefixes):
            raise ConfigError(f"unknown config key {key!r}")

    ds = _section(flat, "dataset", _DATASET_DEFAULTS)
    if ds["kind"] not in DATASET_KINDS:
        raise ConfigError(f"dataset.kind must be one of {DATASET_KINDS}")
    regression = ds["kind"] == "regression" or (
        ds["kind"] == "csv" and flat.get("loss.kind") in ("l2", "smooth_l1")
    )

    loss = _section(flat, "loss", _LOSS_DEFAULTS)
    if loss["kind"] is None:
        loss["kind"] = "l2" if regression else "cross_entropy"
    if loss["kind"] not in LOSS_KINDS:
        raise ConfigError(f"loss.kind must be one of {LOSS_KINDS}")

    model = _section(flat, "model", _MODEL_DEFAULTS)
    if model["kind"] is None:
        model["kind"] = "linear_regressor" if loss["kind"] != "cross_entropy" else "linear_softmax"
    if model["kind"] not in MODEL_KINDS:
        raise ConfigError(f"model.kind must be one of {MODEL_KINDS}")

    dc = _section(flat, "discrim", _DISCRIM_DEFAULTS)
    discrim = DiscrimConfig(
        a=float(dc["a"]),
        p=float(dc["p"]),
        q=float(dc["q"]),
        e_s=int(dc["e_s"]),
        lam=float(dc["lambda"]),
        rho=float(dc["rho"]),
        rho_prime=float(dc["rho_prime"]),
        tau=float(dc["tau"]),
        k1_mode=str(dc["k1_mode"]),
        eta=None if dc["eta"] in (None, "") else float(dc["eta"]),
        delta_min=float(dc["delta_min"]),
        delta_max=float(dc["delta_max"]),
        clock=str(dc["clock"]),
    )

    tc = _section(flat, "train", _TRAIN_DEFAULTS)
    train_cfg = TrainConfig(
        epochs=int(tc["epochs"]),
        batch_size=int(tc["batch_size"]),
        lr=float(tc["lr"]),
        lr_schedule=_parse_lr_schedule(tc["lr_schedule"]),
        momentum=float(tc["momentum"]),
        weight_decay=float(tc["weight_decay"]),
        seed=int(tc["seed"]),
        mode=str(tc["mode"]),
        freeze_delta=bool(tc["freeze_delta"]),
        delta_update_first=bool(tc["delta_update_first"]),
        t_fluc=float(tc["t_fluc"]),
        fluctuation_source=str(tc["fluctuation_source"]),
    )

    return ExperimentSpec(
        dataset=ds,
        model=model,
        loss=loss,
        discrim=discrim,
        train=train_cfg,
        n_seeds=int(flat.get("n_seeds", _TOP_DEFAULTS["n_seeds"])),
        output_dir=str(flat.get("output_dir", _TOP_DEFAULTS["output_dir"])),
    )


def flat_from_spec(spec: ExperimentSpec) -> dict:
    """Canonical flat echo of a spec; spec_from_flat inverts it exactly."""
    flat = {}
    for field, value in spec.dataset.items():
        if value is not None:
            flat[f"dataset.{field}"] = value
    for field, value in spec.model.items():
        flat[f"model.{field}"] = value
    for field, value in spec.loss.items():
        flat[f"loss.{field}"] = value
    d = spec.discrim
    flat.update(
        {
            "discrim.a": d.a,
            "discrim.p": d.p,
            "discrim.q": d.q,
            "discrim.e_s": d.e_s,
            "discrim.lambda": d.lam,
            "discrim.rho": d.rho,
            "discrim.rho_prime": d.rho_prime,
            "discrim.tau": d.tau,
            "discrim.k1_mode": d.k1_mode,
            "discrim.delta_min": d.delta_min,
            "discrim.delta_max": d.delta_max,
            "discrim.clock": d.clock,
        }
    )
    if d.eta is not None:
        flat["discrim.eta"] = d.eta
    t = spec.train
    flat.update(
        {
            "train.mode": t.mode,
            "train.epochs": t.epochs,
            "train.batch_size": t.batch_size,
            "train.lr": t.lr,
            "train.lr_schedule": _format_lr_schedule(t.lr_schedule),
            "train.momentum": t.momentum,
            "train.weight_decay": t.weight_decay,
            "train.seed": t.seed,
            "train.freeze_delta": t.freeze_delta,
            "train.delta_update_first": t.delta_update_first,
            "train.t_fluc": t.t_fluc,
            "train.fluctuation_source": t.fluctuation_source,
        }
    )
    flat["n_seeds"] = spec.n_seeds
    flat["output_dir"] = spec.output_dir
    return flat


def _subset(ds: Dataset, idx: np.ndarray) -> Dataset:
    return Dataset(
        features=ds.features[idx],
        labels=ds.labels[idx],
        clean_labels=ds.clean_labels[idx],
        noisy_mask=ds.noisy_mask[idx],
        ids=np.arange(len(idx), dtype=np.int64),
        n_classes=ds.n_classes,
    )


def build_datasets(dspec: dict, run_seed: int) -> dict:
    """Materialize train/test/val datasets for one run seed (train noise included)."""
    kind = dspec["kind"]
    rate = float(dspec["noise_rate"])
    if kind == "blobs":
        n = int(dspec["n"])
        test_n = int(dspec["test_n"] or n)
        val_n = int(dspec["val_n"] or max(8, n // 5))
        args = (int(dspec["classes"]), int(dspec["d"]), float(dspec["separation"]))
        base = int(dspec["seed"]) + run_seed
        trainset = make_blobs(n, *args, seed=base)
        testset = make_blobs(test_n, *args, seed=base + _TEST_SEED_OFFSET)
        valset = make_blobs(val_n, *args, seed=base + _VAL_SEED_OFFSET)
        trainset = inject_symmetric_noise(trainset, rate, seed=base + _NOISE_SEED_OFFSET)
    elif kind == "regression":
        n = int(dspec["n"])
        test_n = int(dspec["test_n"] or n)
        val_n = int(dspec["val_n"] or max(8, n // 5))
        d = int(dspec["d"])
        noise_std = float(dspec["noise_std"])
        base = int(dspec["seed"]) + run_seed
        # same generating function across splits: identical generator seed
        # would duplicate the data, so only the sampling seed moves
        trainset = make_regression(n, d, seed=base, noise_std=noise_std)
        testset = make_regression(test_n, d, seed=base + _TEST_SEED_OFFSET, noise_std=noise_std)
        valset = make_regression(val_n, d, seed=base + _VAL_SEED_OFFSET, noise_std=noise_std)
        trainset = inject_regression_noise(
            trainset, rate, _parse_range(dspec["noise_range"]), seed=base + _NOISE_SEED_OFFSET
        )
    elif kind in ("mnist", "csv"):
        if kind == "mnist":
            if not dspec["images"] or not dspec["labels"]:
                raise ConfigError("mnist dataset needs dataset.images and dataset.labels")
            full = load_mnist_idx(dspec["images"], dspec["labels"])
            if dspec["test_images"] and dspec["test_labels"]:
                testset = load_mnist_idx(dspec["test_images"], dspec["test_labels"])
            else:
                testset = None
        else:
            if not dspec["path"]:
                raise ConfigError("csv dataset needs dataset.path")
            full = dataset_from_csv(dspec["path"])
            testset = dataset_from_csv(dspec["test_path"]) if dspec["test_path"] else None
        base = int(dspec["seed"]) + run_seed
        if dspec["limit"]:
            full = _subset(full, np.arange(min(int(dspec["limit"]), full.n)))
        if testset is None:
            # no separate test files: hold out 20% of the (clean) data
            rng = np.random.default_rng(base + _TEST_SEED_OFFSET)
            perm = rng.permutation(full.n)
            cut = max(1, int(0.2 * full.n))
            testset, full = _subset(full, perm[:cut]), _subset(full, perm[cut:])
        if dspec["test_limit"]:
            testset = _subset(testset, np.arange(min(int(dspec["test_limit"]), testset.n)))
        rng = np.random.default_rng(base + _VAL_SEED_OFFSET)
        perm = rng.permutation(full.n)
        n_val = max(1, int(float(dspec["val_fraction"]) * full.n))
        valset, trainset = _subset(full, perm[:n_val]), _subset(full, perm[n_val:])
        if full.is_classification:
            trainset = inject_symmetric_noise(trainset, rate, seed=base + _NOISE_SEED_OFFSET)
        else:
            trainset = inject_regression_noise(
                trainset, rate, _parse_range(dspec["noise_range"]), seed=base + _NOISE_SEED_OFFSET
            )
    else:
        raise ConfigError(f"unknown dataset kind {kind!r}")
    return {"train": trainset, "test": testset, "val": valset}


def build_model(mspec: dict, dataset: Dataset, seed: int):
    kind = mspec["kind"]
    if kind == "linear_softmax":
        return LinearSoftmax(dataset.d, dataset.n_classes, seed=seed)
    if kind == "linear_regressor":
        return LinearRegressor(dataset.d, seed=seed)
    hidden = [int(h) for h in str(mspec["hidden"]).split(",") if str(h).strip()]
    n_out = dataset.n_classes if dataset.is_classification else 1
    return Mlp(dataset.d, hidden, n_out, seed=seed)


def build_inner_loss(lspec: dict):
    kind = lspec["kind"]
    if kind == "cross_entropy":
        return CrossEntropy()
    if kind == "l2":
        return L2()
    return SmoothL1(beta=float(lspec["beta"]))


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run n_seeds trainings (seeds base..base+n-1), write artifacts, aggregate.

    A failing seed is reported in the summary without aborting its siblings.
    """
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_seed = []
    finals = []
    for s in range(spec.n_seeds):
        train_seed = spec.train.seed + s
        entry = {"seed_index": s, "train_seed": train_seed}
        try:
            datasets = build_datasets(spec.dataset, run_seed=s)
            model = build_model(spec.model, datasets["train"], seed=train_seed + _MODEL_SEED_OFFSET)
            inner = build_inner_loss(spec.loss)
            cfg = replace(spec.train, seed=train_seed)
            model, record = train(
                model, datasets["train"], inner, spec.discrim, cfg,
                test_dataset=datasets["test"],
            )
            record.summary["final"]["val"] = evaluate(model, datasets["val"], inner)
            seed_dir = out / f"seed_{s}"
            seed_dir.mkdir(parents=True, exist_ok=True)
            record.write_metrics_csv(seed_dir / "metrics.csv")
            record.write_samples_csv(seed_dir / "samples.csv")
            record.write_summary_json(seed_dir / "summary.json")
            entry["run_id"] = record.summary["run_id"]
            entry["final"] = record.summary["final"]
            finals.append(record.summary["final"])
        except Exception as exc:  # noqa: BLE001 - isolate sibling seeds
            entry["error"] = f"{type(exc).__name__}: {exc}"
        per_seed.append(entry)

    aggregate = {}
    if finals:
        keys = sorted(
            (split, metric) for split, metrics in finals[0].items() for metric in metrics
        )
        for split, metric in keys:
            values = np.array([f[split][metric] for f in finals if metric in f.get(split, {})])
            aggregate[f"{split}.{metric}"] = {
                # population std (divide by n), matching mean +/- std reporting
                "mean": float(values.mean()),
                "std": float(values.std()),
                "n": int(values.size),
            }
    summary = {
        "config": flat_from_spec(spec),
        "n_seeds": spec.n_seeds,
        "n_failed": sum("error" in e for e in per_seed),
        "per_seed": per_seed,
        "aggregate": aggregate,
    }
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(out / "config.json", "w") as f:
        json.dump(flat_from_spec(spec), f, indent=2, sort_keys=True)
        f.write("\n")
    return summary


def apply_overrides(spec: ExperimentSpec, overrides: dict) -> ExperimentSpec:
    flat = flat_from_spec(spec)
    flat.update(overrides)
    return spec_from_flat(flat)


_AXIS_KEYS = {
    "a": "discrim.a",
    "p": "discrim.p",
    "q": "discrim.q",
    "lambda": "discrim.lambda",
    "noise_rate": "dataset.noise_rate",
}


def run_sweep(spec: ExperimentSpec, axis: str, values) -> list[dict]:
    """One run_experiment per axis value; writes <output_dir>/sweep.csv."""
    if axis not in _AXIS_KEYS:
        raise ConfigError(f"sweep axis must be one of {sorted(_AXIS_KEYS)}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    summaries = []
    for value in values:
        cell = apply_overrides(
            spec,
            {
                _AXIS_KEYS[axis]: value,
                "output_dir": str(out / f"{axis}_{value}"),
            },
        )
        summaries.append(run_experiment(cell))

    metric_keys = sorted({key for s in summaries for key in s["aggregate"]})
    with open(out / "sweep.csv", "w") as f:
        header = ["axis", "value"]
        for key in metric_keys:
            header += [f"{key}.mean", f"{key}.std"]
        f.write(",".join(header) + "\n")
        for value, s in zip(values, summaries):
            row = [axis, repr(float(value))]
            for key in metric_keys:
                agg = s["aggregate"].get(key)
                row += ["" if agg is None else repr(agg["mean"]),
                        "" if agg is None else repr(agg["std"])]
            f.write(",".join(row) + "\n")
    return summaries


def _draw(rng: np.random.Generator, setting):
    """Draw one value: tuple = numeric range (int ends -> integer draw), list = choices."""
    if isinstance(setting, tuple):
        lo, hi = setting
        if isinstance(lo, int) and isinstance(hi, int):
            return int(rng.integers(lo, hi + 1))
        return float(rng.uniform(float(lo), float(hi)))
    if isinstance(setting, list):
        if not setting:
            raise ConfigError("empty choice list in search space")
        return setting[int(rng.integers(0, len(setting)))]
    return setting  # single fixed value


def search_hyperparams(spec: ExperimentSpec, space: dict, budget: int, seed: int = 0) -> dict:
    """Random search over flat-key ranges, selected by validation metric.

    space maps flat config keys to a (lo, hi) tuple, a list of choices, or a
    single fixed value. Classification picks max val accuracy, regression min
    val MAE. Returns the trial log plus the winning overrides and spec.
    """
    if budget < 1:
        raise ConfigError("budget must be >= 1")
    if not space:
        raise ConfigError("empty search space")
    rng = np.random.default_rng(seed)
    out = Path(spec.output_dir)
    trials = []
    for t in range(budget):
        overrides = {key: _draw(rng, setting) for key, setting in space.items()}
        trial_spec = apply_overrides(
            spec, {**overrides, "output_dir": str(out / "search" / f"trial_{t}")}
        )
        summary = run_experiment(trial_spec)
        if "val.accuracy" in summary["aggregate"]:
            metric_name, sign = "val.accuracy", 1.0
        elif "val.mae" in summary["aggregate"]:
            metric_name, sign = "val.mae", -1.0
        else:
            raise ConfigError("search needs a validation split with accuracy or mae")
        score = summary["aggregate"][metric_name]["mean"]
        trials.append(
            {
                "trial": t,
                "overrides": overrides,
                "metric": metric_name,
                "value": score,
                "objective": sign * score,
                "n_failed": summary["n_failed"],
            }
        )
    best = max(trials, key=lambda tr: tr["objective"])
    result = {
        "best_overrides": best["overrides"],
        "best_value": best["value"],
        "metric": best["metric"],
        "best_config": flat_from_spec(apply_overrides(spec, best["overrides"])),
        "trials": trials,
    }
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "search.json", "w") as f:
        json.dump(result, f, indent=2, sort_keys=True)
        f.write("\n")
    return result


def parse_search_space(flat: dict) -> dict:
    """Extract search.* keys from a flat config into a search space.

    Values: "lo..hi" numeric range, "x|y|z" choices, or a single scalar.
    """
    space = {}
    for key, value in flat.items():
        if not key.startswith("search."):
            continue
        target = key[len("search."):]
        if isinstance(value, str) and ".." in value:
            lo, _, hi = value.partition("..")
            space[target] = (_parse_scalar(lo), _parse_scalar(hi))
        elif isinstance(value, str) and "|" in value:
            space[target] = [_parse_scalar(v) for v in value.split("|")]
        else:
            space[target] = value
    return space
