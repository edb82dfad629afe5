"""Core math of the stage-wise discriminating loss.

Each training sample i carries a learnable weight delta_i and a smoothed
(exponential moving average) copy of its task loss, Avg(l_i). The outer
per-sample loss wrapped around the task loss is

    L_i = ES(e_c) * (Avg(l_i) - k_dyn(e_c)) / delta_i + lam * log(delta_i)**2

where ES is a linear ramp over the first e_s clock ticks and k_dyn is a
tanh threshold schedule sweeping from k1 (easy/difficult split) up to
k2 = (1 + 2a) * k1 (hard/incorrect split):

    k_dyn(e_c) = (a * tanh(p * (e_c - q)) + a + 1) * k1

Minimizing L_i in delta_i shrinks the weight of samples whose smoothed loss
sits below the threshold (amplifying their gradient, since the model update
is scaled by ES/delta) and grows the weight of samples above it (suppressing
them). Everything in this module is plain float/ndarray math with no training
state beyond the per-sample record and the k1 estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

K1_MODES = ("ga", "ema", "constant")
CLOCKS = ("epoch", "iteration")


class ScheduleNotWarmedError(RuntimeError):
    """k_dyn was requested before any inner loss was observed (ga/ema modes)."""


@dataclass
class DiscrimConfig:
    """Hyperparameters of the discriminating loss.

    a controls the threshold amplitude (k2 = (1 + 2a) * k1), p the switching
    speed, q the switching moment in clock units. e_s is the length of the
    early-suppression ramp, lam the strength of the log(delta)^2 regularizer,
    rho the smoothing of the per-sample loss average, rho_prime the smoothing
    of the ema k1 estimate, tau the learning rate of the delta updates.

    k1_mode selects how the base threshold k1 is estimated: "ga" uses the
    mean inner loss over the current clock period, "ema" a smoothed batch
    mean, "constant" the fixed value eta. The clock unit ("epoch" or
    "iteration") applies to q, e_s, and the schedule input e_c.
    """

    a: float
    p: float
    q: float
    e_s: int = 1
    lam: float = 0.0
    rho: float = 0.9
    rho_prime: float = 0.9
    tau: float = 0.1
    k1_mode: str = "ga"
    eta: float | None = None
    delta_min: float = 1e-2
    delta_max: float = 1e2
    clock: str = "epoch"

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("a must be > 0")
        if self.p <= 0:
            raise ValueError("p must be > 0")
        if self.q < 0:
            raise ValueError("q must be >= 0")
        if int(self.e_s) != self.e_s or self.e_s < 1:
            raise ValueError("e_s must be an integer >= 1")
        self.e_s = int(self.e_s)
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must be in [0, 1)")
        if not 0.0 <= self.rho_prime < 1.0:
            raise ValueError("rho_prime must be in [0, 1)")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.k1_mode not in K1_MODES:
            raise ValueError(f"k1_mode must be one of {K1_MODES}")
        if self.k1_mode == "constant":
            if self.eta is None or self.eta <= 0:
                raise ValueError("constant k1 mode requires eta > 0")
        if self.delta_min <= 0:
            raise ValueError("delta_min must be > 0")
        # initial delta = 1 must sit inside the clamp range
        if not self.delta_min <= 1.0 <= self.delta_max:
            raise ValueError("clamp range must satisfy delta_min <= 1 <= delta_max")
        if self.delta_max <= self.delta_min:
            raise ValueError("delta_max must exceed delta_min")
        if self.clock not in CLOCKS:
            raise ValueError(f"clock must be one of {CLOCKS}")

    @property
    def clamp(self) -> tuple[float, float]:
        return (self.delta_min, self.delta_max)


@dataclass
class SampleState:
    """Mutable per-sample record: weight, smoothed loss, fluctuation telemetry.

    last_weight holds the previously recorded importance estimate (effective
    weight or delta, depending on what the trainer tracks); fluctuation_count
    is bumped whenever that estimate jumps by more than the telemetry
    threshold between consecutive epochs.
    """

    delta: float = 1.0
    avg_loss: float | None = None
    last_weight: float | None = None
    fluctuation_count: int = 0


class ThresholdSchedule:
    """Evaluates k_dyn(e_c) and owns the k1 estimation state.

    The k1 value fed into k_dyn is snapshotted once per clock period (at
    start_period, or at the first observe call while still warming up), so
    the threshold stays fixed within a period even though the underlying
    estimators keep accumulating.
    """

    def __init__(self, config: DiscrimConfig):
        self.config = config
        self._period_sum = 0.0
        self._period_count = 0
        self._last_period_mean: float | None = None
        self._ema: float | None = None
        self._k1: float | None = config.eta if config.k1_mode == "constant" else None

    def start_period(self, e_c: int) -> None:
        """Advance the schedule clock to period e_c.

        In ga mode this finalizes the previous period's running mean; in all
        modes it refreshes the k1 snapshot used by k_dyn for this period.
        """
        if e_c < 1:
            raise ValueError("clock periods are 1-based")
        if self.config.k1_mode == "ga" and self._period_count > 0:
            self._last_period_mean = self._period_sum / self._period_count
            self._period_sum = 0.0
            self._period_count = 0
        estimate = self._estimate()
        if estimate is not None:
            self._k1 = estimate

    def observe(self, losses) -> None:
        """Feed a batch of inner losses into the k1 estimator."""
        arr = np.asarray(losses, dtype=float).ravel()
        if arr.size == 0:
            return
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite inner loss fed to threshold schedule")
        if self.config.k1_mode == "ga":
            self._period_sum += float(arr.sum())
            self._period_count += arr.size
        elif self.config.k1_mode == "ema":
            batch_mean = float(arr.mean())
            if self._ema is None:
                self._ema = batch_mean
            else:
                rp = self.config.rho_prime
                self._ema = rp * self._ema + (1.0 - rp) * batch_mean
        if self._k1 is None:
            # warm-up: adopt the first usable estimate immediately
            self._k1 = self._estimate()

    def _estimate(self) -> float | None:
        if self.config.k1_mode == "constant":
            return self.config.eta
        if self.config.k1_mode == "ema":
            return self._ema
        if self._last_period_mean is not None:
            return self._last_period_mean
        if self._period_count > 0:
            return self._period_sum / self._period_count
        return None

    @property
    def k1(self) -> float | None:
        """k1 snapshot currently used by k_dyn, or None before warm-up."""
        return self._k1

    def k_dyn(self, e_c: int) -> float:
        """Threshold value at clock tick e_c (1-based)."""
        if e_c < 1:
            raise ValueError("e_c must be >= 1")
        if self._k1 is None:
            raise ScheduleNotWarmedError(
                "k1 is not available yet: no inner loss observed"
            )
        cfg = self.config
        return (cfg.a * math.tanh(cfg.p * (e_c - cfg.q)) + cfg.a + 1.0) * self._k1


def es_factor(e_c: int, e_s: int) -> float:
    """Early-suppression ramp: e_c/e_s while e_c < e_s, then 1. Ticks are 1-based."""
    if e_c < 1:
        raise ValueError("e_c must be >= 1")
    if e_s < 1:
        raise ValueError("e_s must be >= 1")
    return e_c / e_s if e_c < e_s else 1.0


def _require_positive_delta(delta) -> None:
    if np.any(np.asarray(delta) <= 0):
        raise ValueError("delta must be strictly positive")


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def discrim_loss(avg_loss, k_dyn, delta, es, lam):
    """Outer loss es*(avg - k)/delta + lam*log(delta)^2. Broadcasts over arrays."""
    _require_positive_delta(delta)
    d = np.asarray(delta, dtype=float)
    out = es * (np.asarray(avg_loss, dtype=float) - k_dyn) / d + lam * np.log(d) ** 2
    return _scalar_or_array(out)


def delta_gradient(avg_loss, k_dyn, delta, es, lam):
    """Exact derivative of discrim_loss in delta: es*(k - avg)/delta^2 + 2*lam*log(delta)/delta."""
    _require_positive_delta(delta)
    d = np.asarray(delta, dtype=float)
    out = es * (k_dyn - np.asarray(avg_loss, dtype=float)) / d**2
    if lam != 0.0:
        out = out + 2.0 * lam * np.log(d) / d
    return _scalar_or_array(out)


def effective_weight(delta, es):
    """Scalar es/delta multiplying the task-loss gradient in the model update."""
    _require_positive_delta(delta)
    return _scalar_or_array(es / np.asarray(delta, dtype=float))


def update_avg_loss(state: SampleState, l_i: float, rho: float) -> float:
    """EMA update of the sample's smoothed loss; the first observation initializes it."""
    l = float(l_i)
    if not math.isfinite(l):
        raise ValueError(f"non-finite inner loss {l_i!r}")
    if state.avg_loss is None:
        state.avg_loss = l
    else:
        state.avg_loss = rho * state.avg_loss + (1.0 - rho) * l
    return state.avg_loss


def update_delta(
    state: SampleState, grad: float, tau: float, clamp: tuple[float, float]
) -> float:
    """One SGD step on the sample weight, clamped to [delta_min, delta_max]."""
    g = float(grad)
    if not math.isfinite(g):
        raise ValueError(f"non-finite delta gradient {grad!r}")
    lo, hi = clamp
    state.delta = min(max(state.delta - tau * g, lo), hi)
    return state.delta
