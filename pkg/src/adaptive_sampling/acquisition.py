"""Information function and next-target selection for the sampling variants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WEIGHTED = "weighted"
MAX_VAR_MAX_MEAN = "max_var_max_mean"
SWEEP_BASELINE = "sweep_baseline"
RANDOM_WALK_BASELINE = "random_walk_baseline"
KINDS = (WEIGHTED, MAX_VAR_MAX_MEAN, SWEEP_BASELINE, RANDOM_WALK_BASELINE)

STANDARD_WEIGHTS = {(1.0, 0.0), (0.75, 0.25), (0.5, 0.5), (0.25, 0.75), (0.0, 1.0)}


@dataclass(frozen=True)
class InfoVariant:
    """A sampling policy.

    ``weighted`` scores cells by ``alpha * mean + beta * variance``.
    ``max_var_max_mean`` explores (max variance) until the mean variance over
    the robot's region drops to ``variance_threshold``, then exploits (max
    mean). The two baseline kinds ignore the GP entirely.
    """

    name: str
    kind: str = WEIGHTED
    alpha: float = 0.0
    beta: float = 0.0
    variance_threshold: float = 5.0
    allow_custom_weights: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown variant kind {self.kind!r}")
        if self.kind == WEIGHTED:
            if not (0 <= self.alpha <= 1 and 0 <= self.beta <= 1):
                raise ValueError(f"{self.name}: alpha and beta must lie in [0, 1]")
            if abs(self.alpha + self.beta - 1.0) > 1e-9:
                raise ValueError(f"{self.name}: alpha + beta must equal 1 (got {self.alpha} + {self.beta})")
            if not self.allow_custom_weights and (self.alpha, self.beta) not in STANDARD_WEIGHTS:
                raise ValueError(
                    f"{self.name}: (alpha, beta) = ({self.alpha}, {self.beta}) is not a standard weighting; "
                    "set allow_custom_weights to use it")

    @property
    def is_baseline(self) -> bool:
        return self.kind in (SWEEP_BASELINE, RANDOM_WALK_BASELINE)


MAX_MEAN = InfoVariant("MaxMean", WEIGHTED, 1.0, 0.0)
ALPHA75 = InfoVariant("Alpha75", WEIGHTED, 0.75, 0.25)
ALPHA50 = InfoVariant("Alpha50", WEIGHTED, 0.5, 0.5)
ALPHA25 = InfoVariant("Alpha25", WEIGHTED, 0.25, 0.75)
MAX_VAR = InfoVariant("MaxVar", WEIGHTED, 0.0, 1.0)
MAX_VAR_THEN_MEAN = InfoVariant("MaxVarMaxMean", MAX_VAR_MAX_MEAN)
SWEEP = InfoVariant("HT", SWEEP_BASELINE)
RANDOM_WALK = InfoVariant("RW", RANDOM_WALK_BASELINE)

ADAPTIVE_VARIANTS = (ALPHA75, ALPHA50, ALPHA25, MAX_VAR, MAX_MEAN, MAX_VAR_THEN_MEAN)
VARIANTS = {v.name: v for v in (*ADAPTIVE_VARIANTS, SWEEP, RANDOM_WALK)}


def informativeness(mean, variance, alpha: float, beta: float) -> np.ndarray:
    return alpha * np.asarray(mean, float) + beta * np.asarray(variance, float)


def _argmax_tiebreak(score, cells, mask, robot_pos) -> int:
    idx = np.flatnonzero(mask)
    s = score[idx]
    top = idx[s == s.max()]
    if len(top) == 1:
        return int(top[0])
    d = np.hypot(*(cells[top] - np.asarray(robot_pos, float)).T)
    order = np.lexsort((cells[top, 1], cells[top, 0], d))
    return int(top[order[0]])


def select_target(variant: InfoVariant, mean, variance, cells, region_mask, robot_pos) -> int:
    """Index of the next cell to sample inside ``region_mask``.

    Ties go to the cell nearest ``robot_pos``, then to the smallest x, then
    the smallest y.
    """
    mask = np.asarray(region_mask, bool)
    if not mask.any():
        raise ValueError("region_mask is empty")
    mean = np.asarray(mean, float)
    variance = np.asarray(variance, float)
    if variant.kind == WEIGHTED:
        score = informativeness(mean, variance, variant.alpha, variant.beta)
    elif variant.kind == MAX_VAR_MAX_MEAN:
        score = variance if variance[mask].mean() > variant.variance_threshold else mean
    else:
        raise ValueError(f"{variant.name} is a non-adaptive baseline and does not select targets")
    return _argmax_tiebreak(score, np.asarray(cells, float), mask, robot_pos)
