"""Deterministic FedAvg simulator with decaying local-step and learning-rate schedules."""
from fedtick.kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
