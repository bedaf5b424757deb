"""The sampling trial loop.

A trial is a discrete-event simulation: every robot has at most one pending
move, and the move that completes first (lowest robot id on ties) is applied
next. On completion the measurement joins the shared GP, the whole map is
re-predicted, the step is logged, and that robot immediately plans its next
target. With equal move costs this is plain round-robin; with unequal costs
it keeps the log's clock monotone.
"""

from __future__ import annotations

import heapq
import json
import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import acquisition as acq
from .field import FieldParams, generate, measure
from .gp import GpModel, Hyperparams, TrainingSet, fit, predict
from .grid import GridSpec
from .metrics import localization_correct, mean_variance, rmse
from .partition import DYNAMIC, FIXED, PartitionSchedule, region_mask
from .planner import RobotState, advance, random_walk_step, sweep_waypoints

log = logging.getLogger(__name__)

SINGLE_ROBOT = ("HT", "RW")
MULTI_ROBOT = (FIXED, DYNAMIC)
SCENARIOS = SINGLE_ROBOT + MULTI_ROBOT


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    variant: acq.InfoVariant
    field: FieldParams = FieldParams()
    grid: GridSpec = GridSpec()
    budget: float = 500.0
    speed: float = 1.0
    sample_time: float = 1.0
    single_start: tuple = (4.5, 0.0)
    multi_starts: tuple = ((3.0, 2.0), (3.0, 10.0), (7.0, 7.0))
    sweep_row_spacing: float = 3.0
    walk_step_cells: int = 3
    initial_walk_samples: int = 15
    initial_samples_per_robot: int = 5
    refit_every: int = 10
    gp_restarts: int = 3
    gp_min_length_scale: float | None = None  # default: one cell pitch
    fit_distinct_locations: bool = True

    def __post_init__(self):
        object.__setattr__(self, "single_start", tuple(float(c) for c in self.single_start))
        object.__setattr__(self, "multi_starts", tuple(tuple(float(c) for c in s) for s in self.multi_starts))
        self.validate()

    @property
    def robots(self) -> int:
        return 1 if self.scenario in SINGLE_ROBOT else len(self.multi_starts)

    @property
    def starts(self) -> tuple:
        return (self.single_start,) if self.scenario in SINGLE_ROBOT else self.multi_starts

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.variant.kind == acq.SWEEP_BASELINE and self.scenario != "HT":
            raise ValueError(f"the sweep baseline only exists in the HT scenario, not {self.scenario}")
        if self.scenario in MULTI_ROBOT and len(self.multi_starts) < 1:
            raise ValueError("multi-robot scenarios need at least one start position")
        for s in self.starts:
            if not self.grid.contains(s):
                raise ValueError(f"start {s} lies outside the grid")
        if not self.grid.contains(self.field.source):
            raise ValueError(f"source {self.field.source} lies outside the grid")
        if self.budget < 0 or self.sample_time < 0:
            raise ValueError("budget and sample_time must be non-negative")
        if self.refit_every < 1 or self.walk_step_cells < 1:
            raise ValueError("refit_every and walk_step_cells must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = {k: d["grid"][k] for k in ("width", "height", "cell_pitch")}
        # JSON-native (tuples become lists) so a loaded echo compares equal
        return json.loads(json.dumps(d))


@dataclass(frozen=True, slots=True)
class StepRecord:
    step: int
    time: float
    robot_id: int
    position: tuple
    measured: float
    rmse: float
    mean_variance: float
    cumulative_distance: float
    localization_correct: bool
    phase: str
    hyper: tuple  # (signal_variance, length_scale, noise_variance) used for the logged map
    sites: tuple | None = None  # partition sites the target was selected under


@dataclass
class TrialLog:
    config: dict
    seed: int
    records: list
    final_mean: np.ndarray
    final_variance: np.ndarray
    truth: np.ndarray
    robot_distance: list
    robot_samples: list
    label: dict = field(default_factory=dict)

    @property
    def sample_count(self) -> int:
        return len(self.records)

    @property
    def scenario(self) -> str:
        return self.config["scenario"]

    @property
    def variant(self) -> str:
        return self.config["variant"]["name"]

    @property
    def source(self) -> tuple:
        return tuple(self.config["field"]["source"])


class _Robot:
    """Target generator for one robot: initial phase, then adaptive or baseline."""

    def __init__(self, rid: int, cfg: ScenarioConfig, rng: np.random.Generator):
        self.id = rid
        self.cfg = cfg
        self.rng = rng
        grid = cfg.grid
        self.sweep = None
        if cfg.scenario == "HT":
            self.sweep = sweep_waypoints(grid, cfg.single_start, cfg.sweep_row_spacing)
            self.initial_left = len(self.sweep)
            self._sweep_pos = 0
            self._sweep_dir = 1
        elif cfg.scenario == "RW":
            self.initial_left = cfg.initial_walk_samples
        else:
            self.initial_left = cfg.initial_samples_per_robot

    def _next_sweep(self) -> np.ndarray:
        wp = self.sweep
        if len(wp) == 1:
            return wp[0]
        k = self._sweep_pos
        target = wp[k]
        if not 0 <= k + self._sweep_dir < len(wp):
            self._sweep_dir = -self._sweep_dir
        self._sweep_pos = k + self._sweep_dir
        return target

    def _walk(self, state: RobotState, allowed) -> np.ndarray:
        grid = self.cfg.grid
        here = np.asarray(state.position)
        if state.samples_taken == 0:
            return grid.snap(here)
        return random_walk_step(here, grid, self.cfg.walk_step_cells, self.rng, allowed)

    def next_target(self, state: RobotState, mask, ctx) -> tuple[np.ndarray, str]:
        cfg = self.cfg
        if self.initial_left > 0:
            self.initial_left -= 1
            if self.sweep is not None:
                return self._next_sweep(), "initial"
            return self._walk(state, mask), "initial"
        if cfg.variant.kind == acq.SWEEP_BASELINE:
            return self._next_sweep(), "baseline"
        if cfg.variant.kind == acq.RANDOM_WALK_BASELINE:
            return self._walk(state, mask), "baseline"
        if mask is None:
            mask = np.ones(cfg.grid.n_cells, bool)
        k = acq.select_target(cfg.variant, ctx.mean, ctx.variance, cfg.grid.centers, mask, state.position)
        return cfg.grid.centers[k], "adaptive"


class _MapState:
    """Shared GP map with the refit schedule."""

    def __init__(self, cfg: ScenarioConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.training = TrainingSet()
        self.hyper = Hyperparams(1.0, 0.25 * cfg.grid.diagonal, 1.0)
        self.last_fit_n = None
        self._fit_data = None
        self._set_model(GpModel.condition(self.training, self.hyper))

    def _set_model(self, model):
        self.model = model
        pred = predict(model, self.cfg.grid.centers)
        self.mean, self.variance = pred.mean, pred.variance

    def _fit(self):
        data = self.training
        if self.cfg.fit_distinct_locations:
            # frozen field: a repeat reading is an exact copy and says nothing about noise
            _, first = np.unique(data.locations, axis=0, return_index=True)
            first = np.sort(first)
            data = TrainingSet(data.locations[first], data.observations[first])
            if len(data) < 2:
                return
            if self._fit_data is not None and len(data) == len(self._fit_data):
                # no new distinct location since the last fit: same problem, same answer
                self.last_fit_n = len(self.training)
                return
            self._fit_data = data
        self.hyper = fit(data, self.hyper, self.cfg.gp_restarts,
                         seed=int(self.rng.integers(2**32)),
                         max_length_scale=self.cfg.grid.diagonal,
                         min_length_scale=self.cfg.gp_min_length_scale or self.cfg.grid.cell_pitch)
        self.last_fit_n = len(self.training)

    def add(self, location, value):
        self.training = self.training.extend(location, value)
        n = len(self.training)
        if n >= 2 and (self.last_fit_n is None or n - self.last_fit_n >= self.cfg.refit_every):
            self._fit()
        try:
            model = GpModel.condition(self.training, self.hyper)
        except np.linalg.LinAlgError:
            log.debug("factorization failed at n=%d, refitting", n)
            self._fit()
            model = GpModel.condition(self.training, self.hyper)
        self._set_model(model)


def _streams(trial_seed: int):
    # independent streams for the field, the walks and the GP restarts
    return np.random.SeedSequence(trial_seed).spawn(3)


def trial_field(grid: GridSpec, params: FieldParams, trial_seed: int):
    """The ground truth a trial with ``trial_seed`` measures."""
    return generate(grid, params, _streams(trial_seed)[0])


def run_trial(cfg: ScenarioConfig, trial_seed: int) -> TrialLog:
    """Run one trial; a pure function of ``(cfg, trial_seed)``."""
    cfg.validate()
    field_ss, walk_ss, gp_ss = _streams(trial_seed)
    truth = generate(cfg.grid, cfg.field, field_ss)
    cells = cfg.grid.centers
    walk_rngs = [np.random.default_rng(s) for s in walk_ss.spawn(cfg.robots)]
    robots = [_Robot(i, cfg, walk_rngs[i]) for i in range(cfg.robots)]
    states = [RobotState(i, s, speed=cfg.speed, sample_time=cfg.sample_time, budget=cfg.budget)
              for i, s in enumerate(cfg.starts)]
    gp_map = _MapState(cfg, np.random.default_rng(gp_ss))
    multi = cfg.scenario in MULTI_ROBOT
    schedule = PartitionSchedule(cfg.scenario, cfg.grid, cfg.starts) if multi else None

    queue = []
    # where each robot is or is already headed; DVP sites are taken from here
    committed = [s.position for s in states]

    def plan(rid: int):
        state = states[rid]
        sites = mask = None
        if multi:
            part = schedule.current(committed)
            mask = region_mask(part, rid)
            if not mask.any():
                # co-located with a lower id robot: only its own cell is left
                mask[cfg.grid.index_of(state.position)] = True
            sites = tuple(map(tuple, part.sites.tolist()))
        target, phase = robots[rid].next_target(state, mask, gp_map)
        moved = advance(state, target)
        if moved.exhausted:
            states[rid] = moved
            return
        committed[rid] = moved.position
        heapq.heappush(queue, (moved.time_used, rid, moved, phase, sites if phase == "adaptive" else None))

    for rid in range(cfg.robots):
        plan(rid)

    records = []
    while queue:
        t, rid, moved, phase, sites = heapq.heappop(queue)
        states[rid] = moved
        value = measure(truth, moved.position)
        gp_map.add(moved.position, value)
        h = gp_map.hyper
        records.append(StepRecord(
            step=len(records),
            time=t,
            robot_id=rid,
            position=moved.position,
            measured=value,
            rmse=rmse(gp_map.mean, truth.values),
            mean_variance=mean_variance(gp_map.variance),
            cumulative_distance=sum(s.cumulative_distance for s in states),
            localization_correct=localization_correct(gp_map.mean, cells, cfg.field.source),
            phase=phase,
            hyper=(h.signal_variance, h.length_scale, h.noise_variance),
            sites=sites,
        ))
        plan(rid)

    return TrialLog(
        config=cfg.to_dict(),
        seed=int(trial_seed),
        records=records,
        final_mean=gp_map.mean.copy(),
        final_variance=gp_map.variance.copy(),
        truth=np.array(truth.values),
        robot_distance=[s.cumulative_distance for s in states],
        robot_samples=[s.samples_taken for s in states],
    )


def replace_variant(cfg: ScenarioConfig, variant: acq.InfoVariant) -> ScenarioConfig:
    return replace(cfg, variant=variant)
