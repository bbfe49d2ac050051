"""Regenerate ``frozen.json`` from the oracles: ``python tests/make_frozen.py``."""
import json
from pathlib import Path

import numpy as np

import oracles

HERE = Path(__file__).parent


def build():
    out = {}
    out["k_rounds_sum_50_10000"] = oracles.k_rounds_sum_fast(50, 10000)
    out["k_rounds_sum_60_10000"] = oracles.k_rounds_sum_fast(60, 10000)
    out["k_rounds_relative_50_10000"] = out["k_rounds_sum_50_10000"] / (50 * 10000)
    out["k_rounds_relative_60_10000"] = out["k_rounds_sum_60_10000"] / (60 * 10000)
    out["sent140_walltime_10000"] = oracles.walltime(0.32, 20.0, 5.0, 0.0052, [60] * 10000)
    out["femnist_client_round_time"] = oracles.walltime(6.71, 20.0, 5.0, 0.017, [80])
    out["theorem1_example"] = oracles.theorem1_value(1, 1, 0, 1, 0, 0, 1, 4, 0.1, [1] * 100)
    # kappa=2 (L=1, mu=0.5), F0=1, F*=0, eta=0.01, N=10, comm=1, W=1000, G^2=1
    out["optimal_k_example"] = oracles.stationary_k(2.0, 0.01, 1.0, 10, 1.0, 1.0, 1000.0)
    A = np.array([[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]])
    out["power_iteration_3x3"] = oracles.power_iteration_eigs(A).tolist()
    out["rolling_means_1_to_6_w3"] = oracles.rolling_means([1, 2, 3, 4, 5, 6], 3)
    out["plateau_constant_p5"] = oracles.plateau_sim([1.0] * 20, 5, 1e-3)
    out["k_error_half_80"] = oracles.ceil_cuberoot_ratio(0.5, 80)
    return out


if __name__ == "__main__":
    data = build()
    (HERE / "frozen.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(json.dumps(data, indent=2, sort_keys=True))
