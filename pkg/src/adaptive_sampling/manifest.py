"""Experiment manifests (YAML).

A manifest names the scenarios and variants to run, and optionally the
source set, trial count, base seed and any model/robot settings to change
from their defaults. It expands to scenario × variant × source × trial runs.
See README.md for the full key reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from . import acquisition as acq
from .engine import MULTI_ROBOT, SCENARIOS, SINGLE_ROBOT, ScenarioConfig
from .field import FieldParams
from .grid import GridSpec

DEFAULT_SOURCES = ((4.0, 7.0), (0.0, 0.0), (9.0, 0.0), (0.0, 14.0), (9.0, 14.0))
BASELINE = "Baseline"
REQUIRED = ("scenarios", "variants")

_SECTIONS = {
    "grid": ("width", "height", "cell_pitch"),
    "field": ("tx_power", "frequency", "path_loss_exponent", "shadowing_variance", "log_base"),
    "robot": ("budget", "speed", "sample_time"),
    "single_robot": ("start", "sweep_row_spacing", "walk_step_cells", "initial_samples"),
    "multi_robot": ("starts", "initial_samples"),
    "gp": ("refit_every", "restarts", "min_length_scale", "fit_distinct_locations"),
    "output": ("dir", "jobs", "plots", "heatmaps"),
}
_TOP = REQUIRED + ("sources", "trials", "seed", "robots") + tuple(_SECTIONS)
_VARIANT_KEYS = ("name", "kind", "alpha", "beta", "variance_threshold", "override")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class RunSpec:
    scenario: str
    variant: str
    source: tuple
    trial: int
    seed: int
    config: ScenarioConfig

    @property
    def relpath(self) -> Path:
        sx, sy = (f"{c:g}" for c in self.source)
        return Path(self.scenario) / self.variant / f"src_{sx}_{sy}" / f"trial_{self.trial}"

    @property
    def label(self) -> dict:
        return {"scenario": self.scenario, "variant": self.variant, "source": list(self.source),
                "trial": self.trial, "seed": self.seed}


@dataclass(frozen=True)
class ExperimentManifest:
    scenarios: tuple
    variants: tuple  # InfoVariant, or BASELINE resolved per scenario
    sources: tuple = DEFAULT_SOURCES
    trials: int = 5
    seed: int = 0
    base: ScenarioConfig | None = None  # settings shared by every run; scenario/variant/source get replaced
    out: Path | None = None
    jobs: int = 1
    plots: bool = True
    heatmaps: bool = False
    origin: str = field(default="<manifest>", compare=False)

    def __len__(self):
        return len(self.scenarios) * len(self.variants) * len(self.sources) * self.trials

    def runs(self) -> list[RunSpec]:
        out = []
        for scen in self.scenarios:
            for v in self.variants:
                variant = resolve_variant(v, scen)
                for src in self.sources:
                    cfg = replace(self.base, scenario=scen, variant=variant,
                                  field=replace(self.base.field, source=tuple(src)))
                    for t in range(self.trials):
                        out.append(RunSpec(scen, variant.name, tuple(src), t, self.seed + t, cfg))
        return out


def resolve_variant(v, scenario: str) -> acq.InfoVariant:
    if v == BASELINE:
        return acq.SWEEP if scenario == "HT" else acq.RANDOM_WALK
    return v


class _Lines:
    """Maps key paths in the YAML document to 1-based line numbers."""

    def __init__(self, node):
        self.lines = {}
        self._walk(node, ())

    def _walk(self, node, path):
        if node is None:
            return
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                self.lines[path + (str(k.value),)] = k.start_mark.line + 1
                self._walk(v, path + (str(k.value),))
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                self._walk(v, path + (i,))

    def at(self, path) -> int | None:
        path = tuple(path)
        while path not in self.lines and path:
            path = path[:-1]
        return self.lines.get(path)


class _Parser:
    def __init__(self, text: str, origin: str):
        self.origin = origin
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            where = f"{origin}:{mark.line + 1}" if mark else origin
            raise ManifestError(f"{where}: malformed YAML: {getattr(e, 'problem', e)}") from None
        self.lines = _Lines(node)

    def fail(self, path, msg):
        line = self.lines.at(path)
        where = f"{self.origin}:{line}" if line else self.origin
        key = ".".join(map(str, path))
        raise ManifestError(f"{where}: {key + ': ' if key else ''}{msg}")

    def mapping(self, value, path, allowed):
        if not isinstance(value, dict):
            self.fail(path, f"expected a mapping, got {type(value).__name__}")
        for k in value:
            if k not in allowed:
                self.fail(path + (k,), f"unknown key {k!r} (allowed: {', '.join(allowed)})")
        return value

    def number(self, value, path, *, integer=False, minimum=None, positive=False):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        if integer and (not isinstance(value, int)):
            self.fail(path, f"expected an integer, got {value!r}")
        if not math.isfinite(value):
            self.fail(path, f"expected a finite number, got {value!r}")
        if positive and value <= 0:
            self.fail(path, f"must be positive, got {value!r}")
        if minimum is not None and value < minimum:
            self.fail(path, f"must be >= {minimum}, got {value!r}")
        return value

    def flag(self, value, path):
        if not isinstance(value, bool):
            self.fail(path, f"expected true or false, got {value!r}")
        return value

    def point(self, value, path):
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            self.fail(path, f"expected an [x, y] pair, got {value!r}")
        return tuple(float(self.number(c, path + (i,))) for i, c in enumerate(value))

    def names(self, value, path):
        if not isinstance(value, list) or not value:
            self.fail(path, "expected a non-empty list")
        return value

    def variant(self, item, path):
        if isinstance(item, str):
            if item == BASELINE:
                return BASELINE
            if item not in acq.VARIANTS:
                self.fail(path, f"unknown variant {item!r} (known: {', '.join([*acq.VARIANTS, BASELINE])})")
            return acq.VARIANTS[item]
        d = self.mapping(item, path, _VARIANT_KEYS)
        name = d.get("name")
        if not isinstance(name, str) or not name:
            self.fail(path, "a custom variant needs a 'name'")
        kind = d.get("kind", acq.WEIGHTED)
        if kind not in (acq.WEIGHTED, acq.MAX_VAR_MAX_MEAN):
            self.fail(path + ("kind",), f"custom variants must be {acq.WEIGHTED!r} or {acq.MAX_VAR_MAX_MEAN!r}")
        kw = {"name": name, "kind": kind}
        if kind == acq.WEIGHTED:
            for k in ("alpha", "beta"):
                if k not in d:
                    self.fail(path, f"weighted variant {name!r} needs {k!r}")
                kw[k] = float(self.number(d[k], path + (k,)))
            kw["allow_custom_weights"] = self.flag(d.get("override", False), path + ("override",))
        if "variance_threshold" in d:
            kw["variance_threshold"] = float(self.number(d["variance_threshold"], path + ("variance_threshold",), minimum=0))
        try:
            return acq.InfoVariant(**kw)
        except ValueError as e:
            msg = str(e)
            if "standard weighting" in msg:
                msg += " (in a manifest: 'override: true')"
            self.fail(path, msg)

    def parse(self) -> ExperimentManifest:
        d = self.data
        if d is None:
            self.fail((), f"empty manifest; required keys: {', '.join(REQUIRED)}")
        self.mapping(d, (), _TOP)
        missing = [k for k in REQUIRED if k not in d]
        if missing:
            self.fail((), f"missing required key(s): {', '.join(missing)}")

        scenarios = self.names(d["scenarios"], ("scenarios",))
        for i, s in enumerate(scenarios):
            if s not in SCENARIOS:
                self.fail(("scenarios", i), f"unknown scenario {s!r} (known: {', '.join(SCENARIOS)})")
        if len(set(scenarios)) != len(scenarios):
            self.fail(("scenarios",), "duplicate scenario")
        variants = [self.variant(v, ("variants", i)) for i, v in enumerate(self.names(d["variants"], ("variants",)))]
        vnames = [v if v == BASELINE else v.name for v in variants]
        if len(set(vnames)) != len(vnames):
            self.fail(("variants",), "duplicate variant name")

        sources = DEFAULT_SOURCES
        if "sources" in d:
            sources = tuple(self.point(p, ("sources", i)) for i, p in enumerate(self.names(d["sources"], ("sources",))))
        trials = int(self.number(d.get("trials", 5), ("trials",), integer=True, minimum=1))
        seed = int(self.number(d.get("seed", 0), ("seed",), integer=True, minimum=0))

        sec = {k: self.mapping(d.get(k) or {}, (k,), keys) for k, keys in _SECTIONS.items()}
        num = lambda s, k, **kw: self.number(sec[s][k], (s, k), **kw)  # noqa: E731

        grid_kw = {k: float(num("grid", k, positive=True)) for k in sec["grid"]}
        try:
            grid = GridSpec(**grid_kw)
        except ValueError as e:
            self.fail(("grid",), str(e))

        for i, src in enumerate(sources):
            if not grid.contains(src):
                self.fail(("sources", i), f"source {src} lies outside the grid")

        field_kw = {}
        for k in sec["field"]:
            if k == "log_base":
                if sec["field"][k] not in ("natural", "base-10"):
                    self.fail(("field", k), "expected 'natural' or 'base-10'")
                field_kw[k] = sec["field"][k]
            else:
                field_kw[k] = float(num("field", k, minimum=0))
        if field_kw.get("frequency", 1.0) <= 0:
            self.fail(("field", "frequency"), "must be positive")

        cfg_kw = {}
        for k in sec["robot"]:
            cfg_kw[k] = float(num("robot", k, minimum=0, positive=(k == "speed")))
        sr, mr, gp = sec["single_robot"], sec["multi_robot"], sec["gp"]
        if "start" in sr:
            cfg_kw["single_start"] = self.point(sr["start"], ("single_robot", "start"))
        if "sweep_row_spacing" in sr:
            cfg_kw["sweep_row_spacing"] = float(num("single_robot", "sweep_row_spacing", positive=True))
        if "walk_step_cells" in sr:
            cfg_kw["walk_step_cells"] = int(num("single_robot", "walk_step_cells", integer=True, minimum=1))
        if "initial_samples" in sr:
            cfg_kw["initial_walk_samples"] = int(num("single_robot", "initial_samples", integer=True, minimum=0))
        if "starts" in mr:
            cfg_kw["multi_starts"] = tuple(self.point(p, ("multi_robot", "starts", i))
                                           for i, p in enumerate(self.names(mr["starts"], ("multi_robot", "starts"))))
        if "initial_samples" in mr:
            cfg_kw["initial_samples_per_robot"] = int(num("multi_robot", "initial_samples", integer=True, minimum=0))
        if "refit_every" in gp:
            cfg_kw["refit_every"] = int(num("gp", "refit_every", integer=True, minimum=1))
        if "restarts" in gp:
            cfg_kw["gp_restarts"] = int(num("gp", "restarts", integer=True, minimum=0))
        if "min_length_scale" in gp:
            cfg_kw["gp_min_length_scale"] = float(num("gp", "min_length_scale", positive=True))
        if "fit_distinct_locations" in gp:
            cfg_kw["fit_distinct_locations"] = self.flag(gp["fit_distinct_locations"], ("gp", "fit_distinct_locations"))

        n_multi = len(cfg_kw.get("multi_starts", ScenarioConfig.multi_starts))
        if "robots" in d:
            self._check_robots(d["robots"], scenarios, n_multi)

        out = sec["output"]
        jobs = int(self.number(out.get("jobs", 1), ("output", "jobs"), integer=True, minimum=1))
        plots = self.flag(out.get("plots", True), ("output", "plots"))
        heatmaps = self.flag(out.get("heatmaps", False), ("output", "heatmaps"))
        outdir = out.get("dir")
        if outdir is not None and not isinstance(outdir, str):
            self.fail(("output", "dir"), "expected a path string")

        base_variant = next((v for v in variants if v != BASELINE), acq.RANDOM_WALK)
        try:
            base = ScenarioConfig(scenarios[0], resolve_variant(base_variant, scenarios[0]),
                                  field=FieldParams(**field_kw, source=sources[0]), grid=grid, **cfg_kw)
        except ValueError as e:
            self.fail(("variants",) if "baseline" in str(e) else (), str(e))
        m = ExperimentManifest(tuple(scenarios), tuple(variants), sources, trials, seed, base,
                               Path(outdir) if outdir else None, jobs, plots, heatmaps, self.origin)
        # validate every expansion up front so a bad combination fails before any run starts
        for scen in scenarios:
            for v in variants:
                for i, src in enumerate(sources):
                    try:
                        replace(base, scenario=scen, variant=resolve_variant(v, scen),
                                field=replace(base.field, source=src))
                    except ValueError as e:
                        path = ("sources", i) if "source" in str(e) else ("variants",)
                        self.fail(path, f"{scen}/{v if v == BASELINE else v.name}: {e}")
        return m

    def _check_robots(self, value, scenarios, n_multi):
        expected = {s: 1 if s in SINGLE_ROBOT else n_multi for s in scenarios}
        if isinstance(value, dict):
            self.mapping(value, ("robots",), tuple(SCENARIOS))
            pairs = [(s, value[s], ("robots", s)) for s in value]
        else:
            pairs = [(s, value, ("robots",)) for s in scenarios]
        for s, n, path in pairs:
            self.number(n, path, integer=True, minimum=1)
            want = 1 if s in SINGLE_ROBOT else n_multi
            if s in expected and n != want:
                what = "is single-robot" if s in SINGLE_ROBOT else f"has {want} start position(s)"
                self.fail(path, f"robot count {n} is inconsistent with scenario {s}, which {what}")


def parse_manifest_text(text: str, origin: str = "<manifest>") -> ExperimentManifest:
    return _Parser(text, origin).parse()


def parse_manifest(path) -> ExperimentManifest:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ManifestError(f"{path}: cannot read manifest: {e.strerror}") from None
    return parse_manifest_text(text, str(path))


FULL_MATRIX = """\
scenarios: [HT, RW, FVP, DVP]
variants: [Alpha75, Alpha50, Alpha25, MaxVar, MaxMean, MaxVarMaxMean, Baseline]
sources: [[4, 7], [0, 0], [9, 0], [0, 14], [9, 14]]
trials: 5
seed: 0
"""


def full_matrix() -> ExperimentManifest:
    return parse_manifest_text(FULL_MATRIX, "<full-matrix>")


__all__ = ["BASELINE", "DEFAULT_SOURCES", "ExperimentManifest", "ManifestError", "MULTI_ROBOT",
           "RunSpec", "full_matrix", "parse_manifest", "parse_manifest_text", "resolve_variant"]
