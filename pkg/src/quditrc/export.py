"""Result files, run manifests and tidy plot-data CSVs.

Floats are written with 17 significant digits so every value parses back to
the identical 64-bit pattern. Result files never contain timestamps or wall
times; those go to ``manifest.json`` only.
"""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import os
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .dynamics import Trajectory
from .errors import ExportError, ExportKindError
from .sweep import SweepSummary
from .tasks import TaskResult

from . import __version__

SIGNAL_COLUMNS = [
    "realization_id", "system", "d", "K", "Omega", "omega", "beta", "J_train", "status",
    "amplitude_rmse", "phase_rmse", "shared_amplitude_rmse", "shared_phase_rmse",
    "gamma_amplitude", "gamma_phase", "gamma_shared", "error",
]
STMC_COLUMNS = [
    "realization_id", "system", "d", "K", "Omega", "dt", "A_lo", "A_hi", "J_train", "status",
    "stmc", "r2_curve", "error",
]
PLOT_KINDS = ("rmse_vs_jtrain", "rmse_vs_omega", "heatmap", "r2_curve", "stmc_vs_d",
              "trajectory", "fock_populations")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror}") from None


def _csv_text(header: list, rows: Iterable[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def reproducibility_block(config: dict, seed: int, integrator: dict) -> dict:
    """Manifest fields that are embedded into result files (no timestamps)."""
    return {"tool": "quditrc", "tool_version": __version__, "config": config,
            "seed": seed, "integrator": integrator}


def _summary_rows(summary: SweepSummary):
    for r in summary.realizations:
        p = r.params
        m = r.result.metrics if r.result else {}
        g = r.result.best_gamma if r.result else {}
        if summary.task == "signal":
            yield [r.id, p["system"], p.get("d"), p["K"], p["Omega"], p["omega"], p["beta"],
                   p["J_train"], r.status, m.get("amplitude_rmse"), m.get("phase_rmse"),
                   m.get("shared_amplitude_rmse"), m.get("shared_phase_rmse"),
                   g.get("amplitude"), g.get("phase"), g.get("shared"), r.error]
        else:
            curve = " ".join(fmt(v) for v in r.result.r2_curve) if r.result else ""
            yield [r.id, p["system"], p.get("d"), p["K"], p["Omega"], p["dt"], p["A"][0], p["A"][1],
                   p["J_train"], r.status, m.get("stmc"), curve, r.error]


def export_results(summary: SweepSummary, format: str, path, manifest: Optional[dict] = None) -> Path:
    """Write a sweep summary as CSV (one row per realization) or JSON."""
    path = Path(path)
    if format == "csv":
        header = SIGNAL_COLUMNS if summary.task == "signal" else STMC_COLUMNS
        _write_text(path, _csv_text(header, _summary_rows(summary)))
    elif format == "json":
        _write_text(path, dumps({"summary": summary.to_dict(), "manifest": manifest or {}}))
    else:
        raise ExportKindError(f"unknown result format {format!r} (csv or json)")
    return path


def load_results(path) -> tuple:
    """Read a JSON result file back into (SweepSummary or TaskResult, manifest)."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc.strerror}") from None
    if "summary" in data:
        return SweepSummary.from_dict(data["summary"]), data.get("manifest", {})
    return TaskResult.from_dict(data["result"]), data.get("manifest", {})


def export_task_result(result: TaskResult, path, manifest: Optional[dict] = None) -> Path:
    path = Path(path)
    _write_text(path, dumps({"result": result.to_dict(), "manifest": manifest or {}}))
    return path


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, block: dict, files: Iterable, timings: Optional[dict] = None) -> Path:
    """RunManifest: reproducibility block, timestamp and output checksums."""
    out_dir = Path(out_dir)
    manifest = dict(block)
    manifest["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    manifest["outputs"] = {Path(f).name: sha256(f) for f in files}
    if timings:
        manifest["timings"] = timings
    path = out_dir / "manifest.json"
    _write_text(path, dumps(manifest))
    return path


# -- plot data -------------------------------------------------------------

def _best_rows(summary: SweepSummary, keys: tuple, metric: str, direction: str):
    groups = {}
    for r in summary.realizations:
        if not r.ok:
            continue
        key = tuple(tuple(r.params[k]) if isinstance(r.params[k], list) else r.params[k] for k in keys)
        value = r.result.metrics[metric]
        cur = groups.get(key)
        if cur is None or (value < cur if direction == "min" else value > cur):
            groups[key] = value
    return groups


def _plot_rows(result, kind: str):
    if kind == "trajectory":
        if not isinstance(result, Trajectory):
            raise ExportKindError("trajectory plot data needs a Trajectory")
        return ["t", "s"], zip(result.sample_times, result.samples)
    if kind == "fock_populations":
        if not isinstance(result, Trajectory) or result.states is None or np.ndim(result.states) != 3:
            raise ExportKindError("fock_populations needs a quantum Trajectory with states")
        pops = np.real(np.diagonal(result.states, axis1=1, axis2=2))
        rows = ([t, n, pops[i, n]] for i, t in enumerate(result.sample_times) for n in range(pops.shape[1]))
        return ["t", "level", "population"], rows
    if kind == "r2_curve":
        if not isinstance(result, TaskResult) or result.r2_curve is None:
            raise ExportKindError("r2_curve plot data needs a memory-capacity TaskResult")
        return ["k", "r2"], ([k, v] for k, v in enumerate(result.r2_curve, start=1))
    if not isinstance(result, SweepSummary):
        raise ExportKindError(f"{kind} plot data needs a SweepSummary")
    if kind in ("rmse_vs_jtrain", "rmse_vs_omega"):
        if result.task != "signal":
            raise ExportKindError(f"{kind} needs a signal-task sweep")
        axis = "J_train" if kind == "rmse_vs_jtrain" else "omega"
        keys = ("system", axis) if axis == "J_train" else ("system", "J_train", "omega")
        rows = []
        for metric in ("amplitude_rmse", "phase_rmse"):
            for key, value in sorted(_best_rows(result, keys, metric, "min").items(), key=str):
                rows.append(list(key) + [metric, value])
        return list(keys) + ["metric", "value"], rows
    if kind == "heatmap":
        if result.task != "signal":
            raise ExportKindError("heatmap needs a signal-task sweep")
        rows = ([r.params["system"], r.params["J_train"], r.params["omega"], r.params["K"],
                 r.result.metrics["amplitude_rmse"], r.result.metrics["phase_rmse"]]
                for r in result.realizations if r.ok)
        return ["system", "J_train", "omega", "K", "amplitude_rmse", "phase_rmse"], rows
    if kind == "stmc_vs_d":
        if result.task != "stmc":
            raise ExportKindError("stmc_vs_d needs a memory-capacity sweep")
        best = _best_rows(result, ("system", "A"), "stmc", "max")
        rows = []
        for (system, A), value in sorted(best.items(), key=str):
            d = 1 if system == "classical" else int(system.split("=")[1])
            rows.append([system, d, A[0], A[1], value])
        return ["system", "d", "A_lo", "A_hi", "stmc"], rows
    raise ExportKindError(f"unknown plot kind {kind!r}; choose from {', '.join(PLOT_KINDS)}")


def export_plot_data(result: Union[TaskResult, SweepSummary, Trajectory], kind: str, path) -> Path:
    """Write tidy long-format CSV (one observation per row) for ``kind``."""
    header, rows = _plot_rows(result, kind)
    path = Path(path)
    _write_text(path, _csv_text(header, rows))
    return path
