"""Per-round local-step and learning-rate schedules.

Eight rules are supported: ``dSGD``, ``fixed``, three that shrink the number
of local steps K (``K-rounds``, ``K-error``, ``K-step``) and three that shrink
the learning rate (``eta-rounds``, ``eta-error``, ``eta-step``). Only one of
K and eta ever varies under a given rule.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

KINDS = (
    "dSGD",
    "fixed",
    "K-rounds",
    "K-error",
    "K-step",
    "eta-rounds",
    "eta-error",
    "eta-step",
)
K_KINDS = ("K-rounds", "K-error", "K-step")
ETA_KINDS = ("eta-rounds", "eta-error", "eta-step")
METRICS = ("validation-accuracy", "training-loss")


@dataclass(frozen=True)
class PlateauSpec:
    patience: int = 200
    min_rel_improvement: float = 1e-3
    metric: str = "validation-accuracy"

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.min_rel_improvement < 0:
            raise ValueError("min_rel_improvement must be >= 0")
        if self.metric not in METRICS:
            raise ValueError(f"unknown plateau metric {self.metric!r}; choose from {METRICS}")

    @property
    def maximize(self) -> bool:
        return self.metric == "validation-accuracy"


@dataclass(frozen=True)
class ScheduleSpec:
    kind: str
    k0: int = 1
    eta0: float = 0.1
    window_s: int = 100
    plateau: PlateauSpec = field(default_factory=PlateauSpec)
    step_divisor: float = 10.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule {self.kind!r}; choose from {KINDS}")
        if self.kind == "dSGD":
            object.__setattr__(self, "k0", 1)
        if int(self.k0) != self.k0 or self.k0 < 1:
            raise ValueError(f"k0 must be an integer >= 1, got {self.k0}")
        object.__setattr__(self, "k0", int(self.k0))
        if not self.eta0 > 0:
            raise ValueError(f"eta0 must be > 0, got {self.eta0}")
        if self.window_s < 1:
            raise ValueError(f"window_s must be >= 1, got {self.window_s}")
        if not self.step_divisor > 0:
            raise ValueError("step_divisor must be > 0")

    @property
    def uses_plateau(self) -> bool:
        return self.kind in ("K-step", "eta-step")


class LossEstimator:
    """Rolling mean of per-round client losses over the last ``window`` rounds.

    ``f0`` is frozen to the first full-window mean; :attr:`estimate` is
    ``None`` until ``window`` rounds have been recorded.
    """

    def __init__(self, window: int):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = window
        self.values: deque[float] = deque(maxlen=window)
        self.f0: float | None = None
        self.rounds_seen = 0

    @property
    def ready(self) -> bool:
        return len(self.values) == self.window

    @property
    def estimate(self) -> float | None:
        if not self.ready:
            return None
        return math.fsum(self.values) / self.window

    def ratio(self) -> float | None:
        """F_r / F_0, or ``None`` during warm-up."""
        est = self.estimate
        if est is None or self.f0 is None:
            return None
        if self.f0 == 0:
            return 1.0 if est == 0 else math.inf
        return est / self.f0

    def copy(self) -> "LossEstimator":
        new = LossEstimator(self.window)
        new.values.extend(self.values)
        new.f0 = self.f0
        new.rounds_seen = self.rounds_seen
        return new


def record_round_loss(est: LossEstimator, client_first_step_losses) -> LossEstimator:
    """Push the mean of this round's first-step client losses (mutates ``est``)."""
    losses = [float(v) for v in client_first_step_losses]
    if not losses:
        raise ValueError("need at least one client loss per round")
    est.values.append(math.fsum(losses) / len(losses))
    est.rounds_seen += 1
    if est.f0 is None and est.ready:
        est.f0 = est.estimate
    return est


def _k_rounds(k0: int, r: int) -> int:
    # smallest k with k^3 * r >= k0^3, i.e. ceil(k0 / r^(1/3)) without rounding error
    k = max(1, math.ceil(k0 / np.cbrt(r)))
    target = k0**3
    while k > 1 and (k - 1) ** 3 * r >= target:
        k -= 1
    while k**3 * r < target:
        k += 1
    return min(k, k0)


def k_for_round(spec: ScheduleSpec, r: int, est: LossEstimator | None = None, plateaued: bool = False) -> int:
    if r < 1:
        raise ValueError(f"rounds are numbered from 1, got {r}")
    kind, k0 = spec.kind, spec.k0
    if kind == "dSGD":
        return 1
    if kind == "K-rounds":
        return _k_rounds(k0, r)
    if kind == "K-error":
        ratio = est.ratio() if est is not None else None
        if ratio is None:
            return k0
        k = math.ceil(float(np.cbrt(ratio)) * k0) if math.isfinite(ratio) else k0
        return min(max(k, 1), k0)
    if kind == "K-step":
        return max(1, math.ceil(k0 / spec.step_divisor)) if plateaued else k0
    return k0


def eta_for_round(spec: ScheduleSpec, r: int, est: LossEstimator | None = None, plateaued: bool = False) -> float:
    if r < 1:
        raise ValueError(f"rounds are numbered from 1, got {r}")
    kind, eta0 = spec.kind, spec.eta0
    if kind == "eta-rounds":
        return eta0 / math.sqrt(r)
    if kind == "eta-error":
        ratio = est.ratio() if est is not None else None
        if ratio is None:
            return eta0
        return math.sqrt(min(ratio, 1.0)) * eta0
    if kind == "eta-step":
        return eta0 / spec.step_divisor if plateaued else eta0
    return eta0


class PlateauTracker:
    """Incremental form of :func:`plateau_check`; latches once it fires."""

    def __init__(self, spec: PlateauSpec):
        self.spec = spec
        self.best: float | None = None
        self.stale = 0
        self.fired = False
        self.fired_at: int | None = None
        self.count = 0

    def _improves(self, value: float) -> bool:
        margin = self.spec.min_rel_improvement * abs(self.best)
        if self.spec.maximize:
            return value > self.best + margin
        return value < self.best - margin

    def update(self, value: float) -> bool:
        self.count += 1
        if self.fired:
            return True
        if self.best is None or self._improves(value):
            self.best = value
            self.stale = 0
            return False
        self.stale += 1
        if self.stale >= self.spec.patience:
            self.fired = True
            self.fired_at = self.count
        return self.fired


def plateau_check(history, spec: PlateauSpec) -> bool:
    """True once the metric went ``patience`` evaluations without beating its
    best value by ``min_rel_improvement`` (relative)."""
    tracker = PlateauTracker(spec)
    for value in history:
        tracker.update(float(value))
    return tracker.fired


def relative_sgd_steps(k_sequence, k0: int) -> float:
    """Total local steps relative to running every round with ``k0``."""
    ks = list(k_sequence)
    return sum(ks) / (k0 * len(ks))


def k_rounds_relative_steps(k0: int, rounds: int) -> float:
    """Closed-loop value of :func:`relative_sgd_steps` for the K-rounds rule."""
    from fedtick.kernels import k_rounds_total

    return k_rounds_total(k0, rounds) / (k0 * rounds)
