import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedtick.federation import (
    Client,
    ConfigurationError,
    Dataset,
    UnsupportedOperation,
    compute_gamma,
    load_dataset,
    make_blobs,
    make_dataset_federation,
    make_quadratic_federation,
    quadratic_federation,
    sample_minibatch,
    save_dataset,
    shard_partition,
)
from fedtick.objectives import LinearSoftmax, QuadraticObjective

import oracles


def plus_minus_one():
    objs = [QuadraticObjective(np.eye(1), np.array([1.0])), QuadraticObjective(np.eye(1), np.array([-1.0]))]
    return quadratic_federation(objs, weights=[0.5, 0.5])


def test_two_client_example():
    fed = plus_minus_one()
    c = fed.global_constants
    assert c.x_star.tolist() == [0.0]
    assert c.f_star == pytest.approx(0.5, abs=1e-15)
    assert compute_gamma(fed) == pytest.approx(0.5, abs=1e-15)


def test_iid_federation_has_zero_gamma():
    fed = make_quadratic_federation(8, 4, 0.0, (0.5, 2.0), seed=3)
    assert compute_gamma(fed) == 0.0
    assert fed.global_constants.gamma == 0.0


def test_single_client_gamma_zero():
    fed = make_quadratic_federation(1, 3, 1.0, (0.5, 2.0), seed=1)
    assert compute_gamma(fed) == pytest.approx(0.0, abs=1e-14)


def test_same_seed_bit_identical():
    a = make_quadratic_federation(5, 3, 0.7, (0.2, 1.0), 0.3, seed=11)
    b = make_quadratic_federation(5, 3, 0.7, (0.2, 1.0), 0.3, seed=11)
    for ca, cb in zip(a.clients, b.clients):
        assert np.array_equal(ca.objective.matrix_A, cb.objective.matrix_A)
        assert np.array_equal(ca.objective.center_b, cb.objective.center_b)
    assert a.global_constants.gamma == b.global_constants.gamma


def test_invalid_spectrum_rejected():
    with pytest.raises(ConfigurationError):
        make_quadratic_federation(3, 3, 1.0, (2.0, 1.0))
    with pytest.raises(ConfigurationError):
        make_quadratic_federation(3, 3, 1.0, (0.0, 1.0))


@pytest.mark.parametrize("per_client", [False, True])
@pytest.mark.parametrize("seed", range(3))
def test_gamma_matches_gd_oracle(seed, per_client):
    fed = make_quadratic_federation(6, 4, 1.0, (0.5, 2.0), seed=seed, per_client_spectra=per_client)
    x = oracles.gd_minimize(fed.global_grad, np.zeros(4), 1.0 / fed.global_constants.L)
    gamma_gd = fed.global_loss(x) - 0.0  # each client's own minimum is 0
    assert abs(compute_gamma(fed) - gamma_gd) < 1e-8
    assert np.allclose(x, fed.global_constants.x_star, atol=1e-8)


def test_gamma_on_dataset_federation_unsupported():
    data = make_blobs(40, 3, 2, seed=0)
    fed = make_dataset_federation(data, LinearSoftmax(3, 2), 2, 1)
    with pytest.raises(UnsupportedOperation):
        compute_gamma(fed)


def test_weights_sum_to_one():
    for c in (1, 3, 7, 50):
        fed = make_quadratic_federation(c, 2, 1.0, (0.5, 1.0), seed=c)
        assert abs(fed.weights.sum() - 1.0) < 1e-9
    data = make_blobs(120, 3, 3, seed=0)
    fed = make_dataset_federation(data, LinearSoftmax(3, 3), 6, 2)
    assert abs(fed.weights.sum() - 1.0) < 1e-9


def test_bad_weights_rejected():
    objs = [QuadraticObjective(np.eye(1), np.zeros(1))] * 2
    with pytest.raises(ConfigurationError):
        quadratic_federation(objs, weights=[0.6, 0.6])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), t=st.floats(1.0, 5.0))
def test_gamma_monotone_in_spread(seed, t):
    base = make_quadratic_federation(5, 3, 1.0, (0.3, 1.5), seed=seed)
    A = base.clients[0].objective.matrix_A
    centers = np.array([c.objective.center_b for c in base.clients])
    mean = centers.mean(axis=0)
    scaled = quadratic_federation([QuadraticObjective(A, mean + t * (b - mean)) for b in centers])
    assert compute_gamma(scaled) >= compute_gamma(base) * (1 - 1e-12)


def test_gamma_zero_iff_centers_coincide():
    A = np.diag([1.0, 2.0])
    same = quadratic_federation([QuadraticObjective(A, np.ones(2))] * 3)
    assert compute_gamma(same) == 0.0
    diff = quadratic_federation([QuadraticObjective(A, np.ones(2)), QuadraticObjective(A, np.zeros(2))])
    assert compute_gamma(diff) > 0.0


def test_g_squared_recomputed_for_new_x0():
    fed = make_quadratic_federation(4, 3, 1.0, (0.5, 2.0), seed=0)
    x0 = np.full(3, 2.0)
    moved = fed.with_initial(x0)
    c = moved.global_constants
    assert c.g_squared == pytest.approx(c.L**2 * np.sum((x0 - c.x_star) ** 2), rel=1e-12)
    assert c.g_squared != fed.global_constants.g_squared


def test_shard_examples():
    parts = shard_partition([0, 0, 1, 1], 2, 1, seed=0)
    assert sorted(parts[0].tolist()) == [0, 1]
    assert sorted(parts[1].tolist()) == [2, 3]
    labels = np.array([3, 1, 2, 0, 1, 2])
    single = shard_partition(labels, 1, 6)
    assert sorted(single[0].tolist()) == list(range(6))


def test_shard_divisibility_error():
    with pytest.raises(ConfigurationError):
        shard_partition(np.zeros(10), 3, 1)


@settings(max_examples=60, deadline=None)
@given(
    c=st.integers(1, 6),
    s=st.integers(1, 4),
    per=st.integers(1, 5),
    n_labels=st.integers(1, 5),
    seed=st.integers(0, 1000),
)
def test_shards_are_disjoint_cover(c, s, per, n_labels, seed):
    n = c * s * per
    labels = np.random.default_rng(seed).integers(0, n_labels, n)
    parts = shard_partition(labels, c, s, seed)
    flat = np.concatenate(parts)
    assert sorted(flat.tolist()) == list(range(n))
    # label-sorted order: concatenated client blocks have non-decreasing labels
    assert np.all(np.diff(labels[flat]) >= 0)


def test_single_sample_client_repeats():
    client = Client(id=0, weight_p=1.0, data=Dataset(np.array([[1.0, 2.0]]), np.array([1])))
    batch = sample_minibatch(client, 5, np.random.default_rng(0))
    assert batch.inputs.shape == (5, 2)
    assert np.all(batch.inputs == [1.0, 2.0]) and np.all(batch.targets == 1)


def test_minibatch_replay_is_identical():
    data = make_blobs(30, 2, 3, seed=1)
    client = Client(id=0, weight_p=1.0, data=data)
    a = sample_minibatch(client, 8, np.random.default_rng(42))
    b = sample_minibatch(client, 8, np.random.default_rng(42))
    assert np.array_equal(a.inputs, b.inputs) and np.array_equal(a.targets, b.targets)


def test_minibatch_frequencies_uniform():
    n = 20
    data = Dataset(np.arange(n, dtype=float)[:, None], np.zeros(n, dtype=int))
    client = Client(id=0, weight_p=1.0, data=data)
    rng = np.random.default_rng(2024)
    counts = np.zeros(n)
    for _ in range(1000):
        batch = sample_minibatch(client, 100, rng)
        counts += np.bincount(batch.inputs[:, 0].astype(int), minlength=n)
    expected = 1e5 / n
    se = np.sqrt(expected * (1 - 1 / n))
    assert np.all(np.abs(counts - expected) < 4 * se)
    chi2 = np.sum((counts - expected) ** 2 / expected)
    assert chi2 < 43.82  # 0.999 quantile of chi-square with 19 degrees of freedom


def test_dataset_csv_round_trip(tmp_path):
    data = make_blobs(25, 3, 4, seed=5)
    path = tmp_path / "d.csv"
    save_dataset(path, data)
    back = load_dataset(path)
    assert np.array_equal(back.inputs, data.inputs)
    assert np.array_equal(back.labels, data.labels)
    assert path.read_text().splitlines()[0] == "x0,x1,x2,label"


def test_dataset_weights_are_sample_fractions():
    data = make_blobs(60, 2, 3, seed=0)
    fed = make_dataset_federation(data, LinearSoftmax(2, 3), 3, 2)
    assert [c.weight_p for c in fed.clients] == pytest.approx([len(c.data) / 60 for c in fed.clients])
