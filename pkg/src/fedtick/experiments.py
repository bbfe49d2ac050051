"""Experiment orchestration: seeded runs, schedule sweeps and theory checks."""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from fedtick import theory
from fedtick.config import ExperimentConfig, with_overrides
from fedtick.engine import run_training
from fedtick.federation import (
    ConfigurationError,
    load_dataset,
    make_blobs,
    make_dataset_federation,
    make_quadratic_federation,
)
from fedtick.metrics import check_monotone, mean_rows, rows_from_trace, write_csv
from fedtick.objectives import MLP, LinearSoftmax
from fedtick.runtime_model import RuntimeConfig
from fedtick.schedules import KINDS, ScheduleSpec

log = logging.getLogger(__name__)

THRESHOLDS = {"k_agreement": 0.99, "eta_agreement": 0.99, "convexity": 1.0, "bound_violation": 0.0}


def max_threads() -> int:
    env = os.environ.get("FEDTICK_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("FEDTICK_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def build_federation(spec: dict):
    """Federation from the ``federation`` section of a resolved config."""
    kind = spec["kind"]
    if kind == "quadratic":
        return make_quadratic_federation(
            spec["c_total"],
            spec["dim"],
            spec["heterogeneity"],
            (spec["mu"], spec["L"]),
            spec["sigma"],
            spec["seed"],
            center_scale=spec["center_scale"],
            per_client_spectra=spec["per_client_spectra"],
        )
    if kind == "blobs":
        data = make_blobs(spec["n_samples"], spec["n_features"], spec["n_classes"], spec["seed"])
        n_val = int(round(len(data) * spec["val_fraction"]))
        train, val = data.subset(slice(n_val, None)), data.subset(slice(0, n_val))
    else:
        train = load_dataset(spec["path"])
        val = load_dataset(spec["val_path"]) if spec["val_path"] else None
    n_classes = int(train.labels.max()) + 1
    if spec["model"] == "mlp":
        model = MLP(train.n_features, spec["hidden"], n_classes)
    else:
        model = LinearSoftmax(train.n_features, n_classes)
    return make_dataset_federation(
        train, model, spec["c_total"], spec["shards_per_client"], spec["seed"], validation=val
    )


def _n_sample(cfg: ExperimentConfig, fed) -> int:
    if cfg.n_sample is not None:
        if cfg.n_sample > fed.c_total:
            raise ConfigurationError(f"n_sample={cfg.n_sample} exceeds {fed.c_total} clients")
        return cfg.n_sample
    n = cfg.runtime.n_participants
    if n > fed.c_total:
        log.warning("runtime participants %d > %d clients; sampling all clients", n, fed.c_total)
        n = fed.c_total
    return n


def run_seeds(cfg: ExperimentConfig, fed=None):
    """Train once per seed (in parallel, up to FEDTICK_THREADS) and return traces in seed order."""
    fed = build_federation(cfg.federation) if fed is None else fed
    n_sample = _n_sample(cfg, fed)

    def one(seed):
        return run_training(
            fed,
            cfg.schedule,
            cfg.runtime,
            cfg.rounds,
            batch_size=cfg.batch_size,
            eval_every=cfg.eval_every,
            seed=seed,
            n_sample=n_sample,
            aggregation=cfg.aggregation,
        )

    workers = min(len(cfg.seeds), max_threads())
    if workers <= 1:
        return [one(s) for s in cfg.seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, cfg.seeds))


def run_experiment(cfg: ExperimentConfig, out: Path | None = None) -> dict:
    """Write ``seed_<s>.csv`` per seed, ``mean.csv`` and a ``config.json`` snapshot."""
    out = Path(cfg.out if out is None else out)
    traces = run_seeds(cfg)
    out.mkdir(parents=True, exist_ok=True)
    per_seed = []
    files = []
    for seed, trace in zip(cfg.seeds, traces):
        rows = rows_from_trace(trace)
        check_monotone(rows)
        path = out / f"seed_{seed}.csv"
        write_csv(path, rows)
        per_seed.append(rows)
        files.append(path)
    mean = mean_rows(per_seed)
    write_csv(out / "mean.csv", mean)
    files.append(out / "mean.csv")
    snapshot = cfg.snapshot()
    snapshot["n_sample_used"] = traces[0].config["n_sample"]
    (out / "config.json").write_text(json.dumps(snapshot, indent=2, sort_keys=True) + "\n")
    return {"files": files, "mean": mean, "traces": traces}


def sweep(cfg: ExperimentConfig, kinds=KINDS, out: Path | None = None) -> list[dict]:
    """Run every schedule in ``kinds`` with otherwise identical settings.

    Results go to ``<out>/<kind>/``; ``<out>/summary.csv`` holds the final
    mean row of each schedule.
    """
    out = Path(cfg.out if out is None else out)
    fed = build_federation(cfg.federation)
    summary = []
    for kind in kinds:
        sub = with_overrides(cfg, **{"schedule.kind": kind})
        sub_out = out / kind
        traces = run_seeds(sub, fed)
        per_seed = [rows_from_trace(t) for t in traces]
        sub_out.mkdir(parents=True, exist_ok=True)
        for seed, rows in zip(sub.seeds, per_seed):
            write_csv(sub_out / f"seed_{seed}.csv", rows)
        mean = mean_rows(per_seed)
        write_csv(sub_out / "mean.csv", mean)
        (sub_out / "config.json").write_text(json.dumps(sub.snapshot(), indent=2, sort_keys=True) + "\n")
        final = mean[-1]
        summary.append(
            {
                "schedule": kind,
                "wall_seconds": final.wall_seconds,
                "cum_min_train_loss": final.cum_min_train_loss,
                "cum_max_val_acc": final.cum_max_val_acc,
                "relative_sgd_steps": final.relative_sgd_steps,
            }
        )
    lines = ["schedule,wall_seconds,cum_min_train_loss,cum_max_val_acc,relative_sgd_steps"]
    for s in summary:
        lines.append(
            ",".join(
                [s["schedule"]]
                + [repr(float(s[k])) for k in ("wall_seconds", "cum_min_train_loss", "cum_max_val_acc", "relative_sgd_steps")]
            )
        )
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    return summary


def _log_uniform(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def random_bound_inputs(rng: np.random.Generator) -> theory.BoundInputs:
    """A random input satisfying every premise of the restart bound."""
    L = _log_uniform(rng, 0.1, 10.0)
    mu = L / _log_uniform(rng, 1.0, 100.0)
    n = int(rng.integers(1, 101))
    f_star = float(rng.uniform(0.0, 1.0))
    constants = theory.make_constants(
        L,
        mu,
        gamma=float(rng.uniform(0.0, 1.0)),
        g_squared=_log_uniform(rng, 1e-2, 1e2),
        sigma_weighted=float(rng.uniform(0.0, 1.0)),
        f_star=f_star,
        f0=f_star + _log_uniform(rng, 0.1, 10.0),
        n_participants=n,
        c_total=n * int(rng.integers(1, 20)),
    )
    runtime = RuntimeConfig(
        model_megabits=_log_uniform(rng, 0.1, 50.0),
        down_mbps=_log_uniform(rng, 1.0, 100.0),
        up_mbps=_log_uniform(rng, 0.5, 20.0),
        beta_seconds=_log_uniform(rng, 1e-3, 2.0),
        n_participants=n,
    )
    return theory.BoundInputs(
        constants=constants,
        eta=float(rng.uniform(0.05, 1.0)) / (4.0 * L),
        k=int(rng.integers(1, 101)),
        runtime=runtime,
        w=_log_uniform(rng, 10.0, 1e6),
    )


def k_oracle_agrees(inp: theory.BoundInputs) -> bool:
    k_star = theory.optimal_k(inp)
    k_grid = theory.grid_argmin_k(inp)
    return k_grid in {max(1, math.floor(k_star)), max(1, math.ceil(k_star))}


def eta_oracle_agrees(inp: theory.BoundInputs) -> bool:
    eta_star = theory.optimal_eta(inp)
    idx, grid = theory.grid_argmin_eta(inp)
    lo = grid[max(idx - 1, 0)]
    hi = grid[min(idx + 1, len(grid) - 1)]
    return lo <= eta_star <= hi


def convexity_holds(inp: theory.BoundInputs, points: int = 16) -> bool:
    """Positive central second differences of the restart bound in K and in eta."""
    k_star = max(theory.optimal_k(inp), 1.0)
    ks = np.geomspace(1.0, 10 * k_star + 10, points)
    d2k = theory.second_differences(lambda k: theory.restart_curve(inp, k=k), ks, 1e-3 * ks)
    eta_star = theory.optimal_eta(inp)
    etas = eta_star * np.geomspace(1e-2, 1e2, points)
    d2e = theory.second_differences(lambda e: theory.restart_curve(inp, eta=e), etas, 1e-3 * etas)
    return bool(np.all(d2k > 0) and np.all(d2e > 0))


def bound_violation_rate(seed: int, cases: int = 2, seeds_per_case: int = 10, rounds: int = 100) -> float:
    """Fraction of (federation, K) cases where the mean over seeds of the
    empirical min gradient norm exceeds the bound."""
    rng = np.random.default_rng(seed)
    violations = 0
    total = 0
    for case in range(cases):
        fed = make_quadratic_federation(
            10,
            5,
            float(rng.uniform(0.2, 2.0)),
            (0.1, 1.0),
            float(rng.uniform(0.0, 1.0)),
            seed=int(rng.integers(2**31)),
        ).with_participants(2)
        L = fed.global_constants.L
        eta = 1.0 / (8.0 * L)
        rt = RuntimeConfig(model_megabits=1.0, n_participants=2)
        for k in (1, 4, 16):
            spec = ScheduleSpec("fixed", k0=k, eta0=eta)
            norms = []
            for s in range(seeds_per_case):
                tr = run_training(fed, spec, rt, rounds, seed=s, n_sample=2, eval_every=rounds, record_params=True)
                norms.append(theory.empirical_min_grad_norm(tr, fed))
            bound = theory.theorem1_bound(theory.bound_inputs_for(fed, eta, [k] * rounds))
            total += 1
            violations += float(np.mean(norms)) > bound
    return violations / total


def verify_theory(sample_count: int, seed: int = 0, thresholds=None) -> dict:
    """Compare closed forms with grid oracles on ``sample_count`` random inputs."""
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    thresholds = dict(THRESHOLDS if thresholds is None else thresholds)
    rng = np.random.default_rng(seed)
    inputs = [random_bound_inputs(rng) for _ in range(sample_count)]
    k_ok = sum(k_oracle_agrees(i) for i in inputs)
    eta_ok = sum(eta_oracle_agrees(i) for i in inputs)
    conv_ok = sum(convexity_holds(i) for i in inputs)
    printed_k_ok = sum(
        theory.grid_argmin_k(i)
        in {max(1, math.floor(theory.optimal_k(i, printed=True))), max(1, math.ceil(theory.optimal_k(i, printed=True)))}
        for i in inputs
    )
    rates = {
        "k_agreement": k_ok / sample_count,
        "eta_agreement": eta_ok / sample_count,
        "convexity": conv_ok / sample_count,
        "bound_violation": bound_violation_rate(seed),
    }
    passed = (
        rates["k_agreement"] >= thresholds["k_agreement"]
        and rates["eta_agreement"] >= thresholds["eta_agreement"]
        and rates["convexity"] >= thresholds["convexity"]
        and rates["bound_violation"] <= thresholds["bound_violation"]
    )
    return {
        "sample_count": sample_count,
        "seed": seed,
        "rates": rates,
        "printed_k_formula_agreement": printed_k_ok / sample_count,
        "thresholds": thresholds,
        "passed": passed,
    }
