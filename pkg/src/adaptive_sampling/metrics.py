"""Mapping metrics and their aggregation over trials."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOCALIZATION_RADIUS = 1.0
CHECKPOINTS = (10, 25, 35, 45, 50, "half", "last")
SUMMARY_COLUMNS = ("Samples", "RMSE", "Variance", "Cumulative Distance")


def rmse(pred_mean, truth) -> float:
    err = np.asarray(pred_mean, float) - np.asarray(truth, float)
    return float(math.sqrt(np.mean(err * err)))


def mean_variance(variances) -> float:
    v = np.asarray(variances, float)
    if v.size == 0:
        raise ValueError("no variances given")
    return float(v.mean())


def localization_correct(pred_mean, cells, source, radius: float = LOCALIZATION_RADIUS) -> bool:
    """Whether the cell with the highest predicted mean is within ``radius`` of the source.

    ``cells`` must be in lexicographic (x, y) order so that ties resolve to
    the lexicographically smallest cell.
    """
    k = int(np.argmax(np.asarray(pred_mean, float)))
    x, y = np.asarray(cells, float)[k]
    return math.hypot(x - float(source[0]), y - float(source[1])) <= radius


def checkpoint_index(n_samples: int, checkpoint) -> int | None:
    """Record index holding the state after ``checkpoint`` samples.

    Trials shorter than a numeric checkpoint report their final state.
    """
    if n_samples == 0:
        return None
    if checkpoint == "last":
        return n_samples - 1
    if checkpoint == "half":
        return max(math.ceil(n_samples / 2), 1) - 1
    return min(int(checkpoint), n_samples) - 1


@dataclass(frozen=True)
class MetricStat:
    mean: float
    std: float

    def __str__(self):
        return f"{self.mean:.2f} ± {self.std:.2f}"


@dataclass(frozen=True)
class ExperimentSummary:
    """Trial-end statistics and localization accuracy (percent) per checkpoint."""

    n_trials: int
    metrics: dict  # column name -> MetricStat
    localization: dict  # checkpoint -> percent


def _stat(values) -> MetricStat:
    v = np.asarray(values, float)
    return MetricStat(float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0)


def aggregate(logs, checkpoints=CHECKPOINTS) -> ExperimentSummary:
    """Mean and sample standard deviation of the final metrics over ``logs``."""
    logs = list(logs)
    if not logs:
        raise ValueError("aggregate() needs at least one trial log")
    finals = [lg.records[-1] if lg.records else None for lg in logs]
    metrics = {
        "Samples": _stat([lg.sample_count for lg in logs]),
        "RMSE": _stat([r.rmse if r else math.nan for r in finals]),
        "Variance": _stat([r.mean_variance if r else math.nan for r in finals]),
        "Cumulative Distance": _stat([r.cumulative_distance if r else 0.0 for r in finals]),
    }
    localization = {}
    for cp in checkpoints:
        hits = 0
        for lg in logs:
            k = checkpoint_index(len(lg.records), cp)
            hits += k is not None and lg.records[k].localization_correct
        localization[cp] = 100.0 * hits / len(logs)
    return ExperimentSummary(len(logs), metrics, localization)
