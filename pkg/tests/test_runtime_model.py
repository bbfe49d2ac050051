import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedtick.presets import PRESETS, get_preset
from fedtick.runtime_model import (
    RuntimeConfig,
    client_round_time,
    cumulative_walltime,
    round_time,
    walltime_fixed_k,
)

import oracles


def test_femnist_client_time(frozen):
    cfg = RuntimeConfig(model_megabits=6.71, beta_seconds=0.017)
    assert client_round_time(cfg, 80) == pytest.approx(3.0375, rel=1e-12)
    assert client_round_time(cfg, 80) == pytest.approx(frozen["femnist_client_round_time"], rel=1e-12)


def test_zero_beta_is_communication_only():
    cfg = RuntimeConfig(model_megabits=2.0, beta_seconds=0.0)
    assert client_round_time(cfg, 1) == client_round_time(cfg, 500) == pytest.approx(2.0 * (1 / 20 + 1 / 5))


def test_tiny_model_limit_is_beta():
    cfg = RuntimeConfig(model_megabits=1e-15, beta_seconds=0.25)
    assert client_round_time(cfg, 1) == pytest.approx(0.25, rel=1e-12)


def test_k_zero_rejected():
    with pytest.raises(ValueError):
        client_round_time(RuntimeConfig(model_megabits=1.0), 0)


def test_nonpositive_config_rejected():
    with pytest.raises(ValueError):
        RuntimeConfig(model_megabits=0.0)
    with pytest.raises(ValueError):
        RuntimeConfig(model_megabits=1.0, up_mbps=-1.0)


def test_sent140_walltime(frozen):
    cfg = get_preset("sent140").runtime()
    assert cumulative_walltime(cfg, [60] * 10000) == pytest.approx(3920.0, rel=1e-6)
    assert cumulative_walltime(cfg, [60] * 10000) == pytest.approx(frozen["sent140_walltime_10000"], rel=1e-12)


def test_round_time_homogeneous_and_max():
    cfg = RuntimeConfig(model_megabits=1.0, beta_seconds=0.1, n_participants=3)
    assert round_time(cfg, 5) == client_round_time(cfg, 5)
    betas = [0.1, 0.4, 0.2]
    assert round_time(cfg, 5, betas) == client_round_time(cfg, 5, 0.4)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 2.0), min_size=1, max_size=12), st.integers(1, 100))
def test_round_time_equals_sorted_last(betas, k):
    cfg = RuntimeConfig(model_megabits=3.0)
    assert round_time(cfg, k, betas) == client_round_time(cfg, k, sorted(betas)[-1])


def test_all_ones_sequence():
    cfg = RuntimeConfig(model_megabits=1.5, beta_seconds=0.3)
    assert cumulative_walltime(cfg, [1] * 40) == pytest.approx(40 * (cfg.comm_seconds + 0.3))


def test_fixed_k_identity_on_random_configs():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        cfg = RuntimeConfig(
            model_megabits=float(rng.uniform(0.01, 50)),
            down_mbps=float(rng.uniform(1, 100)),
            up_mbps=float(rng.uniform(0.5, 50)),
            beta_seconds=float(rng.uniform(1e-4, 2)),
        )
        k = int(rng.integers(1, 100))
        r = int(rng.integers(1, 2000))
        w5 = cumulative_walltime(cfg, [k] * r)
        w7 = walltime_fixed_k(cfg, k * r, k)
        assert abs(w5 - w7) <= 1e-9 * w7


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 80), min_size=1, max_size=50), st.lists(st.integers(1, 80), min_size=1, max_size=50))
def test_additive_over_concatenation(a, b):
    cfg = RuntimeConfig(model_megabits=0.7, beta_seconds=0.02)
    assert cumulative_walltime(cfg, a + b) == pytest.approx(
        cumulative_walltime(cfg, a) + cumulative_walltime(cfg, b), rel=1e-12
    )
    assert cumulative_walltime(cfg, a) == pytest.approx(
        oracles.walltime(0.7, 20.0, 5.0, 0.02, a), rel=1e-12
    )


def test_strict_monotonicity():
    base = dict(model_megabits=2.0, down_mbps=10.0, up_mbps=4.0, beta_seconds=0.1)
    ks = [5, 3, 2]
    w = cumulative_walltime(RuntimeConfig(**base), ks)
    for key, up in (("model_megabits", True), ("beta_seconds", True), ("down_mbps", False), ("up_mbps", False)):
        bigger = dict(base, **{key: base[key] * 1.5})
        w2 = cumulative_walltime(RuntimeConfig(**bigger), ks)
        assert (w2 > w) if up else (w2 < w)
    assert cumulative_walltime(RuntimeConfig(**base), [5, 3, 3]) > w


def test_presets_bind_table_values():
    p = get_preset("cifar100")
    assert (p.k0, p.eta0, p.n_participants, p.c_total, p.model_megabits, p.beta_mean) == (50, 0.01, 25, 500, 40.0, 0.31)
    assert set(PRESETS) == {"sent140", "femnist", "cifar100", "shakespeare"}
    with pytest.raises(KeyError):
        get_preset("mnist")
