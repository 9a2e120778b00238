"""Parameter sweeps over reservoir realizations with best-case aggregation."""
from __future__ import annotations

import itertools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

from .dynamics import ClassicalParams
from .errors import QuditRCError, SweepError
from .operators import QuantumParams
from .tasks import (
    SignalTaskConfig,
    StmcTaskConfig,
    TaskResult,
    random_stream,
    run_signal_task,
    run_stmc_task,
)

log = logging.getLogger(__name__)

METRICS = {
    "signal": {"amplitude_rmse": "min", "phase_rmse": "min"},
    "stmc": {"stmc": "max"},
}
DEFAULT_GROUP_BY = {"signal": ("system", "J_train"), "stmc": ("system", "A")}


@dataclass(frozen=True)
class KDraw:
    """``count`` values of K drawn uniformly from ``interval`` with ``seed``."""

    count: int
    interval: tuple
    seed: int = 0

    def values(self) -> tuple:
        lo, hi = sorted(self.interval)
        return tuple(random_stream(self.seed, "K-draws").uniform(lo, hi, self.count).tolist())


@dataclass(frozen=True)
class SweepSpec:
    """Realization grid: systems x K x Omega x omega x beta x dt x A x J_train.

    Empty value lists fall back to the base config's value. ``dimensions``
    holds qudit sizes and/or the string ``"classical"``.
    """

    task: str
    base: Union[SignalTaskConfig, StmcTaskConfig]
    dimensions: tuple = (2,)
    K: Union[tuple, KDraw] = ()
    Omega_values: tuple = ()
    omega_values: tuple = ()
    beta_values: tuple = ()
    dt_values: tuple = ()
    A_values: tuple = ()
    J_train_values: tuple = ()
    workers: int = 1
    group_by: Optional[tuple] = None

    def __post_init__(self):
        if self.task not in METRICS:
            raise QuditRCError(f"unknown sweep task {self.task!r}")
        if self.group_by is None:
            object.__setattr__(self, "group_by", DEFAULT_GROUP_BY[self.task])

    def K_list(self) -> tuple:
        return self.K.values() if isinstance(self.K, KDraw) else tuple(self.K)

    def to_dict(self) -> dict:
        K = ({"count": self.K.count, "interval": list(self.K.interval), "seed": self.K.seed}
             if isinstance(self.K, KDraw) else list(self.K))
        return {
            "task": self.task, "base": self.base.to_dict(), "dimensions": list(self.dimensions),
            "K": K, "Omega_values": list(self.Omega_values), "omega_values": list(self.omega_values),
            "beta_values": list(self.beta_values), "dt_values": list(self.dt_values),
            "A_values": [list(a) for a in self.A_values],
            "J_train_values": list(self.J_train_values), "group_by": list(self.group_by),
        }

    @classmethod
    def from_dict(cls, data: dict, workers: int = 1) -> "SweepSpec":
        base_cls = SignalTaskConfig if data["task"] == "signal" else StmcTaskConfig
        K = data["K"]
        K = KDraw(K["count"], tuple(K["interval"]), K["seed"]) if isinstance(K, dict) else tuple(K)
        return cls(data["task"], base_cls.from_dict(data["base"]), tuple(data["dimensions"]), K,
                   tuple(data["Omega_values"]), tuple(data["omega_values"]),
                   tuple(data["beta_values"]), tuple(data["dt_values"]),
                   tuple(tuple(a) for a in data["A_values"]), tuple(data["J_train_values"]),
                   workers, tuple(data["group_by"]))


@dataclass
class Realization:
    id: int
    params: dict
    config: Union[SignalTaskConfig, StmcTaskConfig]


@dataclass
class RealizationResult:
    id: int
    params: dict
    status: str
    result: Optional[TaskResult] = None
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return {"id": self.id, "params": self.params, "status": self.status,
                "result": self.result.to_dict() if self.result else None, "error": self.error}

    @classmethod
    def from_dict(cls, data: dict) -> "RealizationResult":
        res = TaskResult.from_dict(data["result"]) if data["result"] else None
        return cls(data["id"], data["params"], data["status"], res, data["error"])


@dataclass
class SweepSummary:
    task: str
    spec: dict
    realizations: list
    best: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"task": self.task, "spec": self.spec,
                "realizations": [r.to_dict() for r in self.realizations], "best": self.best}

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSummary":
        return cls(data["task"], data["spec"],
                   [RealizationResult.from_dict(r) for r in data["realizations"]], data["best"])

    def best_value(self, metric: str, **group) -> float:
        for rec in self.best:
            if rec["metric"] == metric and all(rec["group"].get(k) == v for k, v in group.items()):
                return rec["value"]
        raise KeyError(f"no best-case record for {metric} with {group}")


def _system(dim) -> str:
    return "classical" if dim == "classical" else f"d={int(dim)}"


def expand_sweep(spec: SweepSpec) -> list:
    """Deterministic Cartesian expansion into task configs with ids 0..n-1."""
    base = spec.base
    res = base.reservoir
    Ks = spec.K_list() or (res.K,)
    Omegas = spec.Omega_values or (res.Omega,)
    if spec.task == "signal":
        axes = [spec.omega_values or (base.omega,), spec.beta_values or (base.beta,),
                spec.J_train_values or (base.J_train,)]
        names = ("omega", "beta", "J_train")
    else:
        axes = [spec.dt_values or (base.dt,), spec.A_values or (base.amplitude_interval,),
                spec.J_train_values or (base.J_train,)]
        names = ("dt", "A", "J_train")
    out = []
    for dim, K, Om, *rest in itertools.product(spec.dimensions, Ks, Omegas, *axes):
        if dim == "classical":
            reservoir = ClassicalParams(float(Om), float(K), res.kappa)
        else:
            reservoir = QuantumParams(int(dim), float(Om), float(K), res.kappa)
        values = dict(zip(names, rest))
        params = {"system": _system(dim), "d": None if dim == "classical" else int(dim),
                  "K": float(K), "Omega": float(Om)}
        if spec.task == "signal":
            cfg = replace(base, reservoir=reservoir, omega=float(values["omega"]),
                          beta=float(values["beta"]), J_train=int(values["J_train"]))
            params.update(omega=cfg.omega, beta=cfg.beta, J_train=cfg.J_train)
        else:
            A = tuple(float(a) for a in values["A"])
            cfg = replace(base, reservoir=reservoir, dt=float(values["dt"]),
                          amplitude_interval=A, J_train=int(values["J_train"]))
            params.update(dt=cfg.dt, A=list(A), J_train=cfg.J_train)
        out.append(Realization(len(out), params, cfg))
    if not out:
        raise SweepError("sweep expands to zero realizations")
    return out


def _run_one(realization: Realization) -> RealizationResult:
    runner = run_signal_task if isinstance(realization.config, SignalTaskConfig) else run_stmc_task
    try:
        result = runner(realization.config)
    except (QuditRCError, ValueError, ArithmeticError) as exc:
        log.warning("realization %d failed: %s", realization.id, exc)
        return RealizationResult(realization.id, realization.params, "failed",
                                 error=f"{type(exc).__name__}: {exc}")
    return RealizationResult(realization.id, realization.params, "ok", result)


def best_case(results: Sequence[RealizationResult], metric: Union[str, Callable],
              direction: str = "min") -> RealizationResult:
    """Extremal ok realization; ties go to the lowest id."""
    get = metric if callable(metric) else (lambda r: r.result.metrics[metric])
    ok = sorted((r for r in results if r.ok), key=lambda r: r.id)
    if not ok:
        raise SweepError("no successful realization to aggregate")
    best = ok[0]
    for r in ok[1:]:
        if (get(r) < get(best)) if direction == "min" else (get(r) > get(best)):
            best = r
    return best


def _group_key(params: dict, group_by) -> tuple:
    return tuple((k, tuple(params[k]) if isinstance(params[k], list) else params[k]) for k in group_by)


def summarize(task: str, spec_dict: dict, results: list, group_by) -> SweepSummary:
    results = sorted(results, key=lambda r: r.id)
    groups = {}
    for r in results:
        groups.setdefault(_group_key(r.params, group_by), []).append(r)
    best = []
    for key, members in groups.items():
        if not any(m.ok for m in members):
            continue
        for metric, direction in METRICS[task].items():
            winner = best_case(members, metric, direction)
            best.append({"group": {k: (list(v) if isinstance(v, tuple) else v) for k, v in key},
                         "metric": metric, "direction": direction,
                         "realization_id": winner.id, "value": winner.result.metrics[metric]})
    return SweepSummary(task, spec_dict, results, best)


def run_sweep(spec: SweepSpec, progress: Optional[Callable] = None) -> SweepSummary:
    """Run every realization, isolating failures, and aggregate best cases.

    The summary depends only on the spec: results are keyed and sorted by
    realization id whatever the worker count.
    """
    realizations = expand_sweep(spec)
    workers = spec.workers if spec.workers and spec.workers > 0 else (os.cpu_count() or 1)
    results = []
    if workers == 1:
        for r in realizations:
            results.append(_run_one(r))
            if progress:
                progress(results[-1], len(realizations))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(_run_one, realizations, chunksize=max(1, len(realizations) // (4 * workers))):
                results.append(res)
                if progress:
                    progress(res, len(realizations))
    if not any(r.ok for r in results):
        raise SweepError(f"all {len(results)} realizations failed; first error: {results[0].error}")
    return summarize(spec.task, spec.to_dict(), results, spec.group_by)
