"""Shipped threshold-schedule presets.

Tuned (e_s, a, p, q, lam) settings per dataset and symmetric-noise level,
keyed "<dataset>/<noise percent>" (real-noise datasets use "<dataset>/real").
The same values ship as config fragments under presets/*.cfg so they can be
layered onto an experiment config from the command line. q and e_s are in
epochs everywhere except wikihow, whose clock runs in iterations.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .loss_core import DiscrimConfig


@dataclass(frozen=True)
class SchedulePreset:
    e_s: int
    a: float
    p: float
    q: float
    lam: float
    clock: str = "epoch"

    def to_config(self, **overrides) -> DiscrimConfig:
        """Build a DiscrimConfig from the preset; overrides win."""
        kwargs = dict(
            a=self.a, p=self.p, q=self.q, e_s=self.e_s, lam=self.lam, clock=self.clock
        )
        kwargs.update(overrides)
        return DiscrimConfig(**kwargs)


PRESETS: dict[str, SchedulePreset] = {
    "mnist/0": SchedulePreset(2, 0.35, 1.56, 12, 0.0),
    "mnist/20": SchedulePreset(2, 0.50, 1.05, 2, 8e-3),
    "mnist/40": SchedulePreset(2, 0.10, 0.97, 18, 0.0),
    "mnist/60": SchedulePreset(2, 0.10, 0.61, 16, 0.0),
    "mnist/80": SchedulePreset(2, 0.12, 1.20, 14, 0.09),
    "cifar10/0": SchedulePreset(4, 0.25, 1.92, 81, 0.0),
    "cifar10/20": SchedulePreset(3, 0.27, 0.54, 60, 0.0),
    "cifar10/40": SchedulePreset(3, 0.27, 0.54, 60, 0.0),
    "cifar10/60": SchedulePreset(3, 0.27, 0.54, 60, 0.0),
    "cifar100/0": SchedulePreset(4, 0.25, 1.92, 81, 0.0),
    "cifar100/20": SchedulePreset(4, 0.25, 1.92, 81, 0.0),
    "cifar100/40": SchedulePreset(3, 0.27, 0.54, 60, 0.0),
    "cifar100/60": SchedulePreset(2, 0.37, 2.25, 75, 0.0),
    "utkface_smooth_l1/0": SchedulePreset(3, 0.42, 1.40, 41, 0.09),
    "utkface_smooth_l1/20": SchedulePreset(2, 0.46, 1.25, 50, 0.01),
    "utkface_smooth_l1/40": SchedulePreset(2, 0.46, 1.25, 50, 0.01),
    "utkface_smooth_l1/60": SchedulePreset(4, 0.25, 1.92, 28, 3e-6),
    "utkface_smooth_l1/80": SchedulePreset(3, 0.42, 1.40, 41, 0.09),
    "utkface_l2/0": SchedulePreset(3, 0.42, 1.40, 41, 0.09),
    "utkface_l2/20": SchedulePreset(2, 0.46, 1.25, 50, 0.01),
    "utkface_l2/40": SchedulePreset(2, 0.46, 1.25, 50, 0.01),
    "utkface_l2/60": SchedulePreset(2, 0.46, 1.25, 50, 0.01),
    "utkface_l2/80": SchedulePreset(3, 0.42, 1.40, 41, 0.09),
    "digit_sum/0": SchedulePreset(3, 1.51, 3.17, 67, 9e-8),
    "digit_sum/20": SchedulePreset(3, 0.48, 3.03, 57, 0.550),
    "digit_sum/40": SchedulePreset(3, 1.18, 0.23, 54, 0.105),
    "digit_sum/60": SchedulePreset(3, 1.09, 1.37, 75, 0.145),
    "clothing1m/real": SchedulePreset(3, 0.26, 0.68, 5, 0.0),
    "wikihow/real": SchedulePreset(3, 0.2, 1.2, 10, 1e-6, clock="iteration"),
}


def preset_file_name(key: str) -> str:
    return key.replace("/", "_") + ".cfg"


def load_preset_overrides(key: str) -> dict:
    """Read a shipped preset file as flat config overrides (discrim.* keys)."""
    from .harness import parse_config_text  # local import to avoid a cycle

    if key not in PRESETS:
        raise KeyError(f"unknown preset {key!r}; known: {sorted(PRESETS)}")
    text = (
        resources.files("discrimloss")
        .joinpath("presets", preset_file_name(key))
        .read_text()
    )
    return parse_config_text(text)
