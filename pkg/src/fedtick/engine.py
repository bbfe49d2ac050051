"""FedAvg training loop with per-round local-step and learning-rate schedules.

Randomness is keyed, not streamed: client sampling for round ``r`` uses
``default_rng([seed, r, 0])`` and client ``c``'s local work uses
``default_rng([seed, r, 1, c])``. Results therefore do not depend on the
order in which clients are processed, and aggregation always reduces in
ascending client-id order.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from fedtick import kernels
from fedtick.federation import ConfigurationError, Dataset, Federation, UnsupportedOperation
from fedtick.objectives import Minibatch, ParamVector
from fedtick.runtime_model import RuntimeConfig, round_time
from fedtick.schedules import (
    LossEstimator,
    PlateauTracker,
    ScheduleSpec,
    eta_for_round,
    k_for_round,
    record_round_loss,
)

log = logging.getLogger(__name__)

AGGREGATIONS = ("mean", "weighted")


@dataclass(frozen=True)
class RoundRecord:
    r: int
    k_r: int
    eta_r: float
    client_ids: tuple
    mean_first_step_loss: float
    val_metric: float | None
    wall_seconds_cum: float
    sgd_steps_cum: int


@dataclass
class TrainingTrace:
    records: list
    config: dict
    final_params: ParamVector
    params_history: list | None = None
    plateau_round: int | None = None

    @property
    def k_sequence(self) -> list:
        return [rec.k_r for rec in self.records]


@dataclass(frozen=True)
class RoundResult:
    params: np.ndarray
    client_ids: tuple
    first_step_losses: np.ndarray
    client_models: np.ndarray = field(repr=False)


def sampling_rng(seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng([seed, r, 0])


def client_rng(seed: int, r: int, client_id: int) -> np.random.Generator:
    return np.random.default_rng([seed, r, 1, client_id])


def sample_clients(c_total: int, n_sample: int, seed: int, r: int) -> np.ndarray:
    """Uniform draw of ``n_sample`` distinct client ids, returned sorted."""
    if not 1 <= n_sample <= c_total:
        raise ConfigurationError(f"n_sample must be in [1, {c_total}], got {n_sample}")
    ids = sampling_rng(seed, r).choice(c_total, size=n_sample, replace=False)
    return np.sort(ids)


def quadratic_noise(rng: np.random.Generator, k: int, dim: int, sigma: float) -> np.ndarray:
    """Gradient noise for ``k`` local steps: per-coordinate variance sigma^2 / dim."""
    if sigma == 0:
        return np.zeros((k, dim))
    return rng.standard_normal((k, dim)) * (sigma / np.sqrt(dim))


def _values(params):
    return params.values if isinstance(params, ParamVector) else np.asarray(params, dtype=np.float64)


def _aggregate(models, ids, fed, aggregation):
    if aggregation == "mean":
        return models.mean(axis=0)
    w = fed.weights[ids]
    return (w / w.sum()) @ models


def _quadratic_local(fed, x, ids, k, eta, seed, r):
    clients = [fed.clients[i] for i in ids]
    d = x.shape[0]
    A0 = clients[0].objective.matrix_A
    if all(c.objective.matrix_A is A0 for c in clients):
        A = np.broadcast_to(A0, (len(ids), d, d))
    else:
        A = np.stack([c.objective.matrix_A for c in clients])
    B = np.stack([c.objective.center_b for c in clients])
    noise = np.stack(
        [quadratic_noise(client_rng(seed, r, c.id), k, d, c.sigma) for c in clients]
    )
    return kernels.quadratic_round(x, A, B, float(eta), int(k), noise)


def _dataset_local(fed, x, ids, k, eta, batch_size, seed, r):
    model = fed.model
    models = np.empty((len(ids), x.shape[0]))
    first = np.empty(len(ids))
    for j, cid in enumerate(ids):
        client = fed.clients[cid]
        rng = client_rng(seed, r, client.id)
        cur = x.copy()
        n_c = len(client.data)
        for step in range(k):
            idx = rng.integers(0, n_c, size=batch_size)
            batch = Minibatch(client.data.inputs[idx], client.data.labels[idx])
            if step == 0:
                first[j] = model.loss(cur, batch)
            cur -= eta * model.grad(cur, batch)
        models[j] = cur
    return models, first


def run_round(
    global_params,
    fed: Federation,
    k_r: int,
    eta_r: float,
    batch_size: int,
    n_sample: int,
    seed: int,
    r: int,
    aggregation: str = "mean",
) -> RoundResult:
    """One communication round: sample, train locally for ``k_r`` steps, average."""
    if k_r < 1:
        raise ConfigurationError(f"k_r must be >= 1, got {k_r}")
    if aggregation not in AGGREGATIONS:
        raise ConfigurationError(f"aggregation must be one of {AGGREGATIONS}")
    x = np.array(_values(global_params), dtype=np.float64)
    ids = sample_clients(fed.c_total, n_sample, seed, r)
    if fed.is_quadratic:
        models, first = _quadratic_local(fed, x, ids, k_r, eta_r, seed, r)
    else:
        models, first = _dataset_local(fed, x, ids, k_r, eta_r, batch_size, seed, r)
    new = _aggregate(models, ids, fed, aggregation)
    return RoundResult(new, tuple(int(i) for i in ids), first, models)


def evaluate(params, target, metric: str = "loss", model=None) -> float:
    """Full-pass ``loss`` or ``top1-accuracy``.

    ``target`` is a :class:`Federation` (quadratic: global objective; dataset:
    pooled training data for loss, validation split for accuracy when present)
    or a :class:`Dataset` together with ``model``.
    """
    x = _values(params)
    if metric not in ("loss", "top1-accuracy"):
        raise ValueError(f"unknown metric {metric!r}")
    if isinstance(target, Federation):
        if target.is_quadratic:
            if metric != "loss":
                raise UnsupportedOperation("quadratic federations only support the loss metric")
            return target.global_loss(x)
        model = target.model
        if metric == "top1-accuracy" and target.validation is not None:
            data = target.validation
        else:
            data = target.pooled_data()
    elif isinstance(target, Dataset):
        if model is None:
            raise ValueError("evaluating a Dataset needs a model")
        data = target
    else:
        raise TypeError(f"cannot evaluate on {type(target).__name__}")
    if metric == "loss":
        return model.loss(x, Minibatch(data.inputs, data.labels))
    logits = model.logits(x, data.inputs)
    return float(np.mean(np.argmax(logits, axis=1) == data.labels))


def run_training(
    fed: Federation,
    spec: ScheduleSpec,
    cfg: RuntimeConfig,
    rounds: int,
    batch_size: int = 32,
    eval_every: int = 50,
    seed: int = 0,
    *,
    n_sample: int | None = None,
    aggregation: str = "mean",
    x0=None,
    record_params: bool = False,
    beta_jitter: float = 0.0,
) -> TrainingTrace:
    """Run ``rounds`` rounds of FedAvg under ``spec``.

    ``n_sample`` defaults to ``cfg.n_participants``. Validation runs on round
    1, every ``eval_every`` rounds and the last round; it reports top-1
    accuracy for classifiers and the global loss for quadratic federations.
    ``beta_jitter`` adds Gaussian noise with that standard deviation to each
    participant's per-step time, and the slowest participant sets the round time.
    """
    if rounds < 1:
        raise ConfigurationError("rounds must be >= 1")
    if eval_every < 1:
        raise ConfigurationError("eval_every must be >= 1")
    n_sample = cfg.n_participants if n_sample is None else n_sample
    if n_sample > fed.c_total:
        raise ConfigurationError(f"n_sample={n_sample} exceeds the {fed.c_total} clients")
    if spec.uses_plateau and spec.plateau.metric == "validation-accuracy" and fed.is_quadratic:
        raise ConfigurationError("quadratic federations have no accuracy; plateau on training-loss")

    x = np.array(fed.x0 if x0 is None else _values(x0), dtype=np.float64)
    val_kind = "loss" if fed.is_quadratic else "top1-accuracy"
    est = LossEstimator(spec.window_s)
    tracker = PlateauTracker(spec.plateau) if spec.uses_plateau else None
    plateau_round = None
    wall = 0.0
    steps = 0
    records = []
    history = [x.copy()] if record_params else None

    for r in range(1, rounds + 1):
        plateaued = tracker is not None and tracker.fired
        k = k_for_round(spec, r, est, plateaued)
        eta = eta_for_round(spec, r, est, plateaued)
        res = run_round(x, fed, k, eta, batch_size, n_sample, seed, r, aggregation)
        x = res.params
        record_round_loss(est, res.first_step_losses)
        if beta_jitter > 0:
            jitter = np.random.default_rng([seed, r, 2]).normal(0.0, beta_jitter, n_sample)
            wall += round_time(cfg, k, np.maximum(cfg.beta_seconds + jitter, 0.0))
        else:
            wall += round_time(cfg, k)
        steps += k * n_sample

        val = None
        if r == 1 or r % eval_every == 0 or r == rounds:
            val = evaluate(x, fed, val_kind)
            if tracker is not None and not tracker.fired:
                if spec.plateau.metric == "training-loss":
                    observed = val if fed.is_quadratic else evaluate(x, fed, "loss")
                else:
                    observed = val
                if tracker.update(observed):
                    plateau_round = r
                    log.info("plateau detected at round %d", r)
        records.append(
            RoundRecord(
                r=r,
                k_r=k,
                eta_r=eta,
                client_ids=res.client_ids,
                mean_first_step_loss=float(np.mean(res.first_step_losses)),
                val_metric=val,
                wall_seconds_cum=wall,
                sgd_steps_cum=steps,
            )
        )
        if record_params:
            history.append(x.copy())

    config = {
        "schedule": spec.kind,
        "k0": spec.k0,
        "eta0": spec.eta0,
        "window_s": spec.window_s,
        "rounds": rounds,
        "batch_size": batch_size,
        "eval_every": eval_every,
        "seed": seed,
        "n_sample": n_sample,
        "aggregation": aggregation,
        "runtime": {
            "model_megabits": cfg.model_megabits,
            "down_mbps": cfg.down_mbps,
            "up_mbps": cfg.up_mbps,
            "beta_seconds": cfg.beta_seconds,
        },
        "val_metric": val_kind,
    }
    return TrainingTrace(
        records=records,
        config=config,
        final_params=ParamVector(x, fed.layout),
        params_history=history,
        plateau_round=plateau_round,
    )
