"""Deterministic mini-batch SGD loop with per-sample reweighting.

The trainer owns the per-sample weight states and the threshold schedule.
Per batch it computes inner losses, updates the smoothed loss and weight of
exactly the samples present, and scales each sample's parameter gradient by
its effective weight ES/delta before the SGD step. Weight decay, momentum,
and the learning-rate map follow the usual SGD conventions (velocity update
v <- m*v + g, params <- params - lr*v).

Telemetry goes into a RunRecord: one metric row per (epoch, split, metric)
and one sample row per (epoch, id), serialized as metrics.csv / samples.csv /
summary.json.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .loss_core import (
    DiscrimConfig,
    SampleState,
    ThresholdSchedule,
    delta_gradient,
    effective_weight,
    es_factor,
    update_avg_loss,
    update_delta,
)

MODES = ("vanilla", "discrim", "discrim_no_es", "discrim_no_hl")


class TrainingDivergedError(RuntimeError):
    """A non-finite inner loss was produced during training."""


@dataclass
class TrainConfig:
    epochs: int
    batch_size: int
    lr: float
    lr_schedule: dict = field(default_factory=dict)  # epoch -> new lr, applied at epoch start
    momentum: float = 0.0
    weight_decay: float = 0.0
    seed: int = 0
    mode: str = "vanilla"
    # pin all sample weights at 1 (used to check vanilla equivalence)
    freeze_delta: bool = False
    # update delta before the model step so the batch sees the freshest weights;
    # set False to weight the batch with the previous deltas instead
    delta_update_first: bool = True
    t_fluc: float = 2.0
    fluctuation_source: str = "weight"  # or "delta"
    track_params: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.fluctuation_source not in ("weight", "delta"):
            raise ValueError("fluctuation_source must be 'weight' or 'delta'")
        self.lr_schedule = {int(k): float(v) for k, v in self.lr_schedule.items()}


@dataclass
class RunRecord:
    """Per-epoch metrics, per-sample telemetry, and the final summary of one run."""

    seed: int
    epoch_rows: list = field(default_factory=list)  # (epoch, split, metric, value)
    sample_rows: list = field(default_factory=list)  # (epoch, id, loss, avg, delta, weight, noisy)
    summary: dict = field(default_factory=dict)
    param_trajectory: list = field(default_factory=list)
    final_sample_states: list = field(default_factory=list)  # SampleState per id, not serialized

    def add_metric(self, epoch: int, split: str, metric: str, value: float) -> None:
        self.epoch_rows.append((int(epoch), split, metric, float(value)))

    def add_sample_row(self, epoch, sample_id, loss, avg, delta, weight, noisy) -> None:
        self.sample_rows.append(
            (int(epoch), int(sample_id), float(loss), float(avg), float(delta),
             float(weight), bool(noisy))
        )

    def metric_series(self, split: str, metric: str):
        rows = [(e, v) for e, s, m, v in self.epoch_rows if s == split and m == metric]
        epochs = np.array([e for e, _ in rows], dtype=int)
        values = np.array([v for _, v in rows])
        return epochs, values

    def final(self, split: str, metric: str) -> float:
        _, values = self.metric_series(split, metric)
        if values.size == 0:
            raise KeyError(f"no metric {metric!r} for split {split!r}")
        return float(values[-1])

    def sample_losses(self, epoch: int):
        """ids, inner losses, and noisy flags at one epoch, sorted by id."""
        rows = sorted(r for r in self.sample_rows if r[0] == epoch)
        if not rows:
            raise KeyError(f"no sample telemetry for epoch {epoch}")
        ids = np.array([r[1] for r in rows], dtype=int)
        losses = np.array([r[2] for r in rows])
        noisy = np.array([r[6] for r in rows], dtype=bool)
        return ids, losses, noisy

    def importance_matrix(self, column: str = "weight"):
        """Per-sample importance history as an (n_samples, n_epochs) array."""
        idx = {"weight": 5, "delta": 4}[column]
        epochs = sorted({r[0] for r in self.sample_rows})
        ids = sorted({r[1] for r in self.sample_rows})
        epoch_pos = {e: j for j, e in enumerate(epochs)}
        id_pos = {i: j for j, i in enumerate(ids)}
        out = np.full((len(ids), len(epochs)), np.nan)
        noisy = np.zeros(len(ids), dtype=bool)
        for r in self.sample_rows:
            out[id_pos[r[1]], epoch_pos[r[0]]] = r[idx]
            noisy[id_pos[r[1]]] = r[6]
        return np.array(ids, dtype=int), out, noisy

    def write_metrics_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("epoch,split,metric,value,seed\n")
            for epoch, split, metric, value in self.epoch_rows:
                f.write(f"{epoch},{split},{metric},{value!r},{self.seed}\n")

    def write_samples_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("epoch,id,inner_loss,avg_loss,delta,weight,noisy\n")
            for epoch, sid, loss, avg, delta, weight, noisy in self.sample_rows:
                f.write(
                    f"{epoch},{sid},{loss!r},{avg!r},{delta!r},{weight!r},{int(noisy)}\n"
                )

    def write_summary_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.summary, f, indent=2, sort_keys=True)
            f.write("\n")


def evaluate(model, dataset, inner_loss) -> dict:
    """Task metrics on a dataset: accuracy for classifiers, MAE for regressors.

    The discriminating loss plays no role here; only the inner loss and the
    model prediction are used.
    """
    if dataset.n == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    preds = model.forward(dataset.features)
    losses, _ = inner_loss.loss_and_grad(preds, dataset.labels)
    metrics = {"loss": float(np.mean(losses))}
    if dataset.is_classification:
        hard = np.argmax(preds, axis=1)
        metrics["accuracy"] = float(np.mean(hard == dataset.labels))
    else:
        metrics["mae"] = float(np.mean(np.abs(preds - dataset.labels)))
    return metrics


def normalized_loss_snapshot(losses) -> np.ndarray:
    """Min-max normalize an epoch's per-sample losses to [0, 1] (all equal -> zeros)."""
    arr = np.asarray(losses, dtype=float)
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def fluctuation_counts(history, t_fluc: float = 2.0):
    """Count adjacent-step importance jumps with magnitude strictly above t_fluc.

    Accepts one history (1-d, length >= 2) or a stack of histories (rows).
    """
    arr = np.asarray(history, dtype=float)
    if arr.shape[-1] < 2:
        raise ValueError("history must contain at least 2 entries")
    counts = (np.abs(np.diff(arr, axis=-1)) > t_fluc).sum(axis=-1)
    return int(counts) if counts.ndim == 0 else counts


def _discrim_batch_update(states, ids, losses, k, es, dcfg, raw_drive, update_first, freeze):
    """Update smoothed losses (and optionally deltas) for the samples in a batch.

    Returns the effective weights to apply to this batch. Touches only the
    SampleStates listed in ids.
    """
    weights = np.empty(len(ids))
    for j, i in enumerate(ids):
        st = states[i]
        avg = update_avg_loss(st, losses[j], dcfg.rho)
        drive = float(losses[j]) if raw_drive else avg
        if update_first and not freeze:
            g = delta_gradient(drive, k, st.delta, es, dcfg.lam)
            update_delta(st, g, dcfg.tau, dcfg.clamp)
        weights[j] = effective_weight(st.delta, es)
    return weights


def _discrim_post_update(states, ids, losses, k, es, dcfg, raw_drive):
    """Delta updates placed after the model step (delta_update_first=False)."""
    for j, i in enumerate(ids):
        st = states[i]
        drive = float(losses[j]) if raw_drive else st.avg_loss
        g = delta_gradient(drive, k, st.delta, es, dcfg.lam)
        update_delta(st, g, dcfg.tau, dcfg.clamp)


def _run_id(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha1(blob).hexdigest()[:12]


def train(
    model,
    dataset,
    inner_loss,
    discrim_config: DiscrimConfig,
    train_config: TrainConfig,
    test_dataset=None,
):
    """Train the model in place and return (model, RunRecord).

    vanilla mode weights every sample by 1; the discrim modes maintain
    per-sample weights via the discriminating loss (discrim_no_es forces the
    early-suppression factor to 1, discrim_no_hl drives weight updates with
    the raw instead of the smoothed inner loss). Runs are deterministic given
    the config seed; the only randomness is the per-epoch shuffle.
    """
    if dataset.n == 0:
        raise ValueError("cannot train on an empty dataset")
    cfg = train_config
    dcfg = discrim_config
    discrim = cfg.mode != "vanilla"
    es_off = cfg.mode == "discrim_no_es"
    raw_drive = cfg.mode == "discrim_no_hl"
    per_epoch_clock = dcfg.clock == "epoch"

    n = dataset.n
    states = [SampleState() for _ in range(n)]
    schedule = ThresholdSchedule(dcfg)
    rng = np.random.default_rng(cfg.seed)
    velocity = np.zeros_like(model.params)
    record = RunRecord(seed=cfg.seed)
    lr = cfg.lr
    step = 0
    t_start = time.perf_counter()

    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.lr_schedule.get(epoch, lr)
        if discrim and per_epoch_clock:
            schedule.start_period(epoch)
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            ids = perm[start : start + cfg.batch_size]
            step += 1
            e_c = epoch if per_epoch_clock else step
            if discrim and not per_epoch_clock:
                schedule.start_period(step)
            X = dataset.features[ids]
            y = dataset.labels[ids]
            preds = model.forward(X)
            losses, pred_grads = inner_loss.loss_and_grad(preds, y)
            losses = np.asarray(losses, dtype=float)
            if not np.all(np.isfinite(losses)):
                bad = int(ids[int(np.argmax(~np.isfinite(losses)))])
                raise TrainingDivergedError(
                    f"non-finite inner loss for sample {bad} at epoch {epoch}"
                )

            if discrim:
                schedule.observe(losses)
                es = 1.0 if es_off else es_factor(e_c, dcfg.e_s)
                k = schedule.k_dyn(e_c)
                weights = _discrim_batch_update(
                    states, ids, losses, k, es, dcfg, raw_drive,
                    cfg.delta_update_first, cfg.freeze_delta,
                )
            else:
                es = 1.0
                weights = np.ones(len(ids))
                for j, i in enumerate(ids):
                    update_avg_loss(states[i], losses[j], dcfg.rho)

            scale = weights / len(ids)
            G = np.asarray(pred_grads, dtype=float)
            G_scaled = G * (scale[:, None] if G.ndim == 2 else scale)
            pgrad = model.backward(X, G_scaled)
            if cfg.weight_decay:
                pgrad = pgrad + cfg.weight_decay * model.params
            velocity = cfg.momentum * velocity + pgrad
            model.params -= lr * velocity

            if discrim and not cfg.delta_update_first and not cfg.freeze_delta:
                _discrim_post_update(states, ids, losses, k, es, dcfg, raw_drive)

            for j, i in enumerate(ids):
                st = states[i]
                tracked = weights[j] if cfg.fluctuation_source == "weight" else st.delta
                if st.last_weight is not None and abs(tracked - st.last_weight) > cfg.t_fluc:
                    st.fluctuation_count += 1
                st.last_weight = float(tracked)
                record.add_sample_row(
                    epoch, i, losses[j], st.avg_loss, st.delta, weights[j],
                    dataset.noisy_mask[i],
                )
            if cfg.track_params:
                record.param_trajectory.append(model.params.copy())

        for name, value in evaluate(model, dataset, inner_loss).items():
            record.add_metric(epoch, "train", name, value)
        if dataset.is_classification and dataset.noisy_mask.any():
            hard = np.argmax(model.forward(dataset.features), axis=1)
            record.add_metric(
                epoch, "train", "clean_accuracy",
                float(np.mean(hard == dataset.clean_labels)),
            )
        if test_dataset is not None:
            for name, value in evaluate(model, test_dataset, inner_loss).items():
                record.add_metric(epoch, "test", name, value)

    wall = time.perf_counter() - t_start
    splits = {s for _, s, _, _ in record.epoch_rows}
    final = {
        s: {
            m: record.final(s, m)
            for m in {mm for _, ss, mm, _ in record.epoch_rows if ss == s}
        }
        for s in splits
    }
    record.final_sample_states = states
    config_echo = {"discrim": asdict(dcfg), "train": asdict(cfg)}
    record.summary = {
        "run_id": _run_id({"config": config_echo, "n_train": n}),
        "seed": cfg.seed,
        "mode": cfg.mode,
        "epochs": cfg.epochs,
        "n_train": n,
        "final": final,
        "wall_time_s": wall,
        "config": config_echo,
    }
    return model, record
