"""Render figures from discrimloss run telemetry CSVs.

Consumes exactly the trainer's documented file schemas and never modifies
them:

    metrics.csv   epoch,split,metric,value,seed
    samples.csv   epoch,id,inner_loss,avg_loss,delta,weight,noisy

Four figure kinds: per-epoch normalized-loss histograms overlaying clean and
corrupted samples, boxplots of importance-fluctuation counts, per-sample
weight/delta trajectories, and train/test generalization curves.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = (
    "loss-histogram",
    "fluctuation-box",
    "weight-trajectory",
    "generalization-curves",
)

METRICS_COLUMNS = ["epoch", "split", "metric", "value", "seed"]
SAMPLES_COLUMNS = ["epoch", "id", "inner_loss", "avg_loss", "delta", "weight", "noisy"]


class SchemaError(ValueError):
    """Input CSV does not match the trainer's documented schema."""


class DataRangeError(ValueError):
    """A requested epoch or sample id is not present in the telemetry."""


@dataclass
class FigureSpec:
    kind: str
    input_dir: Path
    output: Path
    epoch: int | None = None
    bins: int = 30
    sample_ids: tuple | None = None
    t_fluc: float = 2.0
    column: str = "weight"  # trajectory/fluctuation source: "weight" or "delta"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if self.column not in ("weight", "delta"):
            raise ValueError("column must be 'weight' or 'delta'")
        self.input_dir = Path(self.input_dir)
        self.output = Path(self.output)


def _read_csv(path: Path, expected: list[str]):
    if not path.exists():
        raise SchemaError(f"{path}: file not found")
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected columns {expected}") from None
        missing = [c for c in expected if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing} in header {header}")
        idx = [header.index(c) for c in expected]
        rows = [[row[i] for i in idx] for row in reader]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_samples(path: Path) -> dict:
    rows = _read_csv(path, SAMPLES_COLUMNS)
    return {
        "epoch": np.array([int(r[0]) for r in rows]),
        "id": np.array([int(r[1]) for r in rows]),
        "inner_loss": np.array([float(r[2]) for r in rows]),
        "avg_loss": np.array([float(r[3]) for r in rows]),
        "delta": np.array([float(r[4]) for r in rows]),
        "weight": np.array([float(r[5]) for r in rows]),
        "noisy": np.array([bool(int(r[6])) for r in rows]),
    }


def read_metrics(path: Path) -> dict:
    rows = _read_csv(path, METRICS_COLUMNS)
    return {
        "epoch": np.array([int(r[0]) for r in rows]),
        "split": np.array([r[1] for r in rows]),
        "metric": np.array([r[2] for r in rows]),
        "value": np.array([float(r[3]) for r in rows]),
    }


def _rows_at_epoch(samples: dict, epoch: int | None):
    epochs = np.unique(samples["epoch"])
    if epoch is None:
        epoch = int(epochs.max())
    if epoch not in epochs:
        raise DataRangeError(
            f"epoch {epoch} not in telemetry (available {epochs.min()}..{epochs.max()})"
        )
    return int(epoch), samples["epoch"] == epoch


def _normalize(losses: np.ndarray) -> np.ndarray:
    lo, hi = losses.min(), losses.max()
    if hi == lo:
        return np.zeros_like(losses)
    return (losses - lo) / (hi - lo)


def _history_matrix(samples: dict, column: str):
    """Per-sample history of the chosen column as an (n_ids, n_epochs) array."""
    epochs = np.unique(samples["epoch"])
    ids = np.unique(samples["id"])
    mat = np.full((ids.size, epochs.size), np.nan)
    noisy = np.zeros(ids.size, dtype=bool)
    e_pos = {e: j for j, e in enumerate(epochs)}
    i_pos = {i: j for j, i in enumerate(ids)}
    values = samples[column]
    for e, i, v, nz in zip(samples["epoch"], samples["id"], values, samples["noisy"]):
        mat[i_pos[i], e_pos[e]] = v
        noisy[i_pos[i]] = nz
    return ids, epochs, mat, noisy


def render_loss_histogram(spec: FigureSpec) -> dict:
    samples = read_samples(spec.input_dir / "samples.csv")
    epoch, mask = _rows_at_epoch(samples, spec.epoch)
    losses = samples["inner_loss"][mask]
    noisy = samples["noisy"][mask]
    norm = _normalize(losses)
    edges = np.linspace(0.0, 1.0, spec.bins + 1)
    # keep the right edge inclusive so every row lands in a bin
    clean_counts, _ = np.histogram(norm[~noisy], bins=edges)
    noisy_counts, _ = np.histogram(norm[noisy], bins=edges)

    fig, ax = plt.subplots(figsize=(6, 4))
    width = edges[1] - edges[0]
    ax.bar(edges[:-1], clean_counts, width=width, align="edge", alpha=0.6,
           label=f"clean ({(~noisy).sum()})", color="tab:blue")
    ax.bar(edges[:-1], noisy_counts, width=width, align="edge", alpha=0.6,
           label=f"corrupted ({noisy.sum()})", color="tab:red")
    ax.set_xlabel("normalized loss")
    ax.set_ylabel("samples")
    ax.set_title(f"Normalized loss distribution, epoch {epoch}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return {
        "epoch": epoch,
        "n_rows": int(mask.sum()),
        "clean_counts": clean_counts,
        "noisy_counts": noisy_counts,
    }


def render_fluctuation_box(spec: FigureSpec) -> dict:
    samples = read_samples(spec.input_dir / "samples.csv")
    _, epochs, mat, noisy = _history_matrix(samples, spec.column)
    if epochs.size < 2:
        raise DataRangeError("fluctuation counts need at least 2 epochs of telemetry")
    counts = (np.abs(np.diff(mat, axis=1)) > spec.t_fluc).sum(axis=1)

    fig, ax = plt.subplots(figsize=(5, 4))
    ax.boxplot(
        [counts[~noisy], counts[noisy]],
        tick_labels=[f"clean ({(~noisy).sum()})", f"corrupted ({noisy.sum()})"],
    )
    ax.set_ylabel(f"fluctuation count (|d{spec.column}| > {spec.t_fluc})")
    ax.set_title("Importance-estimate fluctuations")
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return {
        "clean_counts": counts[~noisy],
        "noisy_counts": counts[noisy],
        "n_epochs": int(epochs.size),
    }


def render_weight_trajectory(spec: FigureSpec) -> dict:
    samples = read_samples(spec.input_dir / "samples.csv")
    ids, epochs, mat, noisy = _history_matrix(samples, spec.column)
    if spec.sample_ids is None:
        # default: one clean and one corrupted sample, lowest ids first
        picks = []
        for flag in (False, True):
            sel = ids[noisy == flag]
            if sel.size:
                picks.append(int(sel.min()))
        chosen = tuple(picks)
    else:
        chosen = tuple(int(i) for i in spec.sample_ids)
        missing = [i for i in chosen if i not in set(ids.tolist())]
        if missing:
            raise DataRangeError(f"sample ids {missing} not in telemetry")

    fig, ax = plt.subplots(figsize=(6, 4))
    id_pos = {i: j for j, i in enumerate(ids)}
    for sid in chosen:
        row = mat[id_pos[sid]]
        flag = "corrupted" if noisy[id_pos[sid]] else "clean"
        ax.plot(epochs, row, marker="o", markersize=3, label=f"sample {sid} ({flag})")
    ax.set_xlabel("epoch")
    ax.set_ylabel(spec.column)
    ax.set_title(f"Per-sample {spec.column} trajectories")
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return {"ids": chosen, "n_epochs": int(epochs.size)}


def _series(metrics: dict, split: str, names: tuple[str, ...]):
    for name in names:
        mask = (metrics["split"] == split) & (metrics["metric"] == name)
        if mask.any():
            order = np.argsort(metrics["epoch"][mask])
            return name, metrics["epoch"][mask][order], metrics["value"][mask][order]
    return None, None, None


def render_generalization_curves(spec: FigureSpec) -> dict:
    metrics = read_metrics(spec.input_dir / "metrics.csv")
    panels = []
    name, e, v = _series(metrics, "train", ("accuracy", "mae"))
    if name is None:
        raise SchemaError("metrics.csv has no train accuracy or mae series")
    panels.append((f"train {name}", e, v))
    name, e, v = _series(metrics, "test", ("accuracy", "mae"))
    if name is not None:
        panels.append((f"test {name}", e, v))
    name, e, v = _series(metrics, "test", ("loss",))
    if name is not None:
        panels.append(("test loss", e, v))

    fig, axes = plt.subplots(1, len(panels), figsize=(4 * len(panels), 3.5))
    if len(panels) == 1:
        axes = [axes]
    for ax, (title, e, v) in zip(axes, panels):
        ax.plot(e, v)
        ax.set_xlabel("epoch")
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return {"panels": [p[0] for p in panels]}


_RENDERERS = {
    "loss-histogram": render_loss_histogram,
    "fluctuation-box": render_fluctuation_box,
    "weight-trajectory": render_weight_trajectory,
    "generalization-curves": render_generalization_curves,
}


def render(spec: FigureSpec) -> dict:
    """Render one figure; returns the plotted statistics for checking."""
    return _RENDERERS[spec.kind](spec)
