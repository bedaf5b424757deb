"""Trial-log serialization.

CSV holds one row per step with a fixed column set. JSON holds the full
log: configuration echo, per-step columns (including the GP hyperparameters
each logged map was computed with), and the final predicted and true maps.
Floats are written with ``repr`` so files are byte-stable and round-trip
exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .engine import StepRecord, TrialLog

SCHEMA = "adaptive-sampling/trial-log"
SCHEMA_VERSION = 1
CSV_COLUMNS = ("step", "time_s", "robot_id", "x_m", "y_m", "rss_dbm", "rmse", "mean_var", "cum_dist_m", "loc_correct")


def _f(x) -> str:
    return repr(float(x))


def csv_rows(log: TrialLog):
    for r in log.records:
        yield (str(r.step), _f(r.time), str(r.robot_id), _f(r.position[0]), _f(r.position[1]),
               _f(r.measured), _f(r.rmse), _f(r.mean_variance), _f(r.cumulative_distance),
               str(int(r.localization_correct)))


def write_csv(log: TrialLog, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(csv_rows(log))
    return path


def to_json_dict(log: TrialLog) -> dict:
    rs = log.records
    final = rs[-1] if rs else None
    return {
        "schema": SCHEMA,
        "version": SCHEMA_VERSION,
        "label": log.label,
        "seed": log.seed,
        "config": log.config,
        "summary": {
            "samples": log.sample_count,
            "rmse": final.rmse if final else None,
            "mean_variance": final.mean_variance if final else None,
            "cumulative_distance": final.cumulative_distance if final else 0.0,
            "robot_distance": [float(d) for d in log.robot_distance],
            "robot_samples": [int(n) for n in log.robot_samples],
        },
        "records": {
            "step": [r.step for r in rs],
            "time_s": [float(r.time) for r in rs],
            "robot_id": [r.robot_id for r in rs],
            "x_m": [float(r.position[0]) for r in rs],
            "y_m": [float(r.position[1]) for r in rs],
            "rss_dbm": [float(r.measured) for r in rs],
            "rmse": [float(r.rmse) for r in rs],
            "mean_var": [float(r.mean_variance) for r in rs],
            "cum_dist_m": [float(r.cumulative_distance) for r in rs],
            "loc_correct": [bool(r.localization_correct) for r in rs],
            "phase": [r.phase for r in rs],
            "hyper": [[float(v) for v in r.hyper] for r in rs],
            "sites": [None if r.sites is None else [list(map(float, s)) for s in r.sites] for r in rs],
        },
        "final_mean": [float(v) for v in log.final_mean],
        "final_variance": [float(v) for v in log.final_variance],
        "truth": [float(v) for v in log.truth],
    }


def write_json(log: TrialLog, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(to_json_dict(log), separators=(",", ":")) + "\n")
    return path


def from_json_dict(d: dict) -> TrialLog:
    if d.get("schema") != SCHEMA:
        raise ValueError(f"not a trial log (schema {d.get('schema')!r})")
    if d.get("version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported trial-log version {d.get('version')!r}")
    c = d["records"]
    records = [
        StepRecord(
            step=c["step"][i],
            time=c["time_s"][i],
            robot_id=c["robot_id"][i],
            position=(c["x_m"][i], c["y_m"][i]),
            measured=c["rss_dbm"][i],
            rmse=c["rmse"][i],
            mean_variance=c["mean_var"][i],
            cumulative_distance=c["cum_dist_m"][i],
            localization_correct=c["loc_correct"][i],
            phase=c["phase"][i],
            hyper=tuple(c["hyper"][i]),
            sites=None if c["sites"][i] is None else tuple(tuple(s) for s in c["sites"][i]),
        )
        for i in range(len(c["step"]))
    ]
    return TrialLog(
        config=d["config"],
        seed=d["seed"],
        records=records,
        final_mean=np.array(d["final_mean"]),
        final_variance=np.array(d["final_variance"]),
        truth=np.array(d["truth"]),
        robot_distance=d["summary"]["robot_distance"],
        robot_samples=d["summary"]["robot_samples"],
        label=d.get("label", {}),
    )


def read_json(path) -> TrialLog:
    return from_json_dict(json.loads(Path(path).read_text()))


def read_logs(logdir) -> list[TrialLog]:
    """All JSON trial logs under ``logdir``, in sorted path order."""
    return [read_json(p) for p in sorted(Path(logdir).rglob("*.json"))]
