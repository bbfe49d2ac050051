"""Wall-clock cost of FedAvg rounds from model size, bandwidth and compute time."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RuntimeConfig:
    """Homogeneous client link and device parameters.

    Sizes are megabits, bandwidths megabits per second and ``beta_seconds``
    is the time for one minibatch SGD step on a client.
    """

    model_megabits: float
    down_mbps: float = 20.0
    up_mbps: float = 5.0
    beta_seconds: float = 0.0
    n_participants: int = 1

    def __post_init__(self):
        for name in ("model_megabits", "down_mbps", "up_mbps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.beta_seconds < 0:
            raise ValueError(f"beta_seconds must be >= 0, got {self.beta_seconds}")
        if self.n_participants < 1:
            raise ValueError("n_participants must be >= 1")

    @property
    def comm_seconds(self) -> float:
        """Download plus upload time for one model."""
        return self.model_megabits / self.down_mbps + self.model_megabits / self.up_mbps


def _check_k(k):
    if k < 1:
        raise ValueError(f"local steps must be >= 1, got {k}")


def client_round_time(cfg: RuntimeConfig, k: int, beta: float | None = None) -> float:
    _check_k(k)
    beta = cfg.beta_seconds if beta is None else beta
    return cfg.model_megabits / cfg.down_mbps + k * beta + cfg.model_megabits / cfg.up_mbps


def round_time(cfg: RuntimeConfig, k: int, betas=None) -> float:
    """Time until the slowest participant uploads.

    ``betas`` optionally gives one per-step compute time per participant;
    otherwise all ``cfg.n_participants`` clients share ``cfg.beta_seconds``.
    """
    if betas is None:
        return client_round_time(cfg, k)
    return max(client_round_time(cfg, k, b) for b in betas)


def cumulative_walltime(cfg: RuntimeConfig, k_sequence) -> float:
    """Total time of consecutive rounds running ``k_sequence`` local steps."""
    ks = np.asarray(list(k_sequence), dtype=np.int64)
    if ks.size and ks.min() < 1:
        raise ValueError("every round needs at least one local step")
    return ks.size * cfg.comm_seconds + cfg.beta_seconds * float(ks.sum())


def walltime_fixed_k(cfg: RuntimeConfig, total_steps: float, k: float) -> float:
    """Runtime of ``total_steps`` iterations at a constant ``k`` steps per round."""
    return (total_steps / k) * (cfg.comm_seconds + cfg.beta_seconds * k)
