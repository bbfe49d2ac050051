"""Named task settings for the four benchmark workloads.

Model size (Mb), client counts, initial K and learning rate, and the mean and
standard deviation of per-minibatch compute time measured on a Raspberry Pi
3B+. All presets assume 20 Mbps download and 5 Mbps upload.
"""
from __future__ import annotations

from dataclasses import dataclass

from fedtick.runtime_model import RuntimeConfig

DOWN_MBPS = 20.0
UP_MBPS = 5.0


@dataclass(frozen=True)
class TaskPreset:
    name: str
    model_megabits: float
    c_total: int
    n_participants: int
    k0: int
    eta0: float
    beta_mean: float
    beta_std: float
    classes: int
    batch_size: int | None

    def runtime(self) -> RuntimeConfig:
        return RuntimeConfig(
            model_megabits=self.model_megabits,
            down_mbps=DOWN_MBPS,
            up_mbps=UP_MBPS,
            beta_seconds=self.beta_mean,
            n_participants=self.n_participants,
        )


PRESETS = {
    p.name: p
    for p in (
        TaskPreset("sent140", 0.32, 21876, 50, 60, 3.0, 5.2e-3, 2.1e-4, 2, 8),
        TaskPreset("femnist", 6.71, 3000, 60, 80, 0.3, 0.017, 5.1e-4, 62, 32),
        TaskPreset("cifar100", 40.0, 500, 25, 50, 0.01, 0.31, 1.7e-2, 100, None),
        TaskPreset("shakespeare", 5.21, 660, 10, 80, 0.1, 1.5, 8.5e-2, 79, 32),
    )
}


def get_preset(name: str) -> TaskPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
