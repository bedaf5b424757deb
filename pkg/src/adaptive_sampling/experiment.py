"""Run a manifest's trial matrix and write logs, summary tables and plots.

Output layout under the output directory::

    runs/<scenario>/<variant>/src_<x>_<y>/trial_<k>.csv|.json
    summary/metrics.csv|.md         trial-end metrics, mean ± std per scenario and variant
    summary/localization.csv|.md    localization accuracy (%) per checkpoint
    summary/summary.json            the same figures as exact floats
    plots/*.svg
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

from .engine import TrialLog, run_trial
from .logio import read_logs, write_csv, write_json
from .manifest import ExperimentManifest, RunSpec
from .metrics import CHECKPOINTS, SUMMARY_COLUMNS, aggregate
from .plots import emit_plots, group_logs

log = logging.getLogger(__name__)


class OutputError(OSError):
    pass


def execute(run: RunSpec) -> TrialLog:
    trial = run_trial(run.config, run.seed)
    trial.label = run.label
    return trial


def _prepare(out: Path):
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise OutputError(f"output directory {out} is not writable: {e.strerror or e}") from None


def checkpoint_label(cp) -> str:
    return {"half": "Half", "last": "Last"}.get(cp, f"{cp} samples")


def summarize(logs) -> dict:
    """``{scenario: {variant: ExperimentSummary}}``."""
    return {scen: {name: aggregate(lgs) for name, lgs in by_v.items()}
            for scen, by_v in group_logs(logs).items()}


def write_summary(logs, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    table = summarize(logs)

    met_csv = ["scenario,variant,trials," + ",".join(SUMMARY_COLUMNS)]
    met_md = []
    loc_csv = []
    loc_md = []
    exact = {}
    for scen, by_v in table.items():
        names = list(by_v)
        met_md += [f"### {scen}", "", "| Variant | " + " | ".join(SUMMARY_COLUMNS) + " |",
                  "|---" * (len(SUMMARY_COLUMNS) + 1) + "|"]
        for name, s in by_v.items():
            cells = [str(s.metrics[c]) for c in SUMMARY_COLUMNS]
            met_csv.append(f"{scen},{name},{s.n_trials}," + ",".join(cells))
            met_md.append(f"| {name} | " + " | ".join(cells) + " |")
        met_md.append("")

        loc_csv.append("scenario,checkpoint," + ",".join(names))
        loc_md += [f"### {scen}", "", "| Checkpoint | " + " | ".join(names) + " |", "|---" * (len(names) + 1) + "|"]
        for cp in CHECKPOINTS:
            vals = [f"{by_v[n].localization[cp]:g}" for n in names]
            loc_csv.append(f"{scen},{checkpoint_label(cp)}," + ",".join(vals))
            loc_md.append(f"| {checkpoint_label(cp)} | " + " | ".join(vals) + " |")
        loc_md.append("")

        exact[scen] = {
            name: {
                "trials": s.n_trials,
                "metrics": {c: {"mean": s.metrics[c].mean, "std": s.metrics[c].std} for c in SUMMARY_COLUMNS},
                "localization": {checkpoint_label(cp): s.localization[cp] for cp in CHECKPOINTS},
            }
            for name, s in by_v.items()
        }

    files = {
        "metrics.csv": "\n".join(met_csv) + "\n",
        "metrics.md": "\n".join(met_md),
        "localization.csv": "\n".join(loc_csv) + "\n",
        "localization.md": "\n".join(loc_md),
        "summary.json": json.dumps(exact, indent=1) + "\n",
    }
    written = []
    for name, text in files.items():
        p = outdir / name
        p.write_text(text)
        written.append(p)
    return written


def _write_run(out: Path, run: RunSpec, trial: TrialLog):
    base = out / "runs" / run.relpath
    base.parent.mkdir(parents=True, exist_ok=True)
    write_csv(trial, base.with_suffix(".csv"))
    write_json(trial, base.with_suffix(".json"))


def run_experiment(manifest: ExperimentManifest, out=None, jobs: int | None = None,
                   plots: bool | None = None, heatmaps: bool | None = None) -> int:
    """Run every expansion of ``manifest``; 0 if all runs succeeded, 1 otherwise.

    Each finished run is written immediately, so an interrupted experiment
    keeps its completed logs; the summary covers whatever completed.
    """
    out = Path(out or manifest.out or "results")
    jobs = jobs or manifest.jobs
    plots = manifest.plots if plots is None else plots
    heatmaps = manifest.heatmaps if heatmaps is None else heatmaps
    _prepare(out)
    runs = manifest.runs()
    log.info("%d runs, %d worker(s), output in %s", len(runs), jobs, out)

    done: dict[int, TrialLog] = {}
    failed = []

    def finish(i, trial):
        _write_run(out, runs[i], trial)
        done[i] = trial
        if len(done) % 25 == 0 or len(done) == len(runs):
            log.info("%d/%d runs complete", len(done), len(runs))

    def fail(i, exc):
        failed.append(i)
        log.error("run %s (seed %d) failed: %s", runs[i].relpath, runs[i].seed, exc)

    try:
        if jobs <= 1:
            for i, run in enumerate(runs):
                try:
                    trial = execute(run)
                except Exception as exc:  # a broken run must not take down the rest
                    fail(i, exc)
                    continue
                finish(i, trial)
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = {pool.submit(execute, run): i for i, run in enumerate(runs)}
                for fut in as_completed(futures):
                    i = futures[fut]
                    try:
                        trial = fut.result()
                    except Exception as exc:
                        fail(i, exc)
                        continue
                    finish(i, trial)
    finally:
        logs = [done[i] for i in sorted(done)]
        if logs:
            write_summary(logs, out / "summary")
            if plots:
                emit_plots(logs, out / "plots", heatmaps=heatmaps)
        if failed:
            (out / "failed_runs.txt").write_text("".join(f"{runs[i].relpath}\n" for i in sorted(failed)))
        elif (out / "failed_runs.txt").exists():
            os.remove(out / "failed_runs.txt")
    return 1 if failed else 0


def summarize_dir(logdir, outdir=None) -> list[Path]:
    logs = read_logs(Path(logdir) / "runs" if (Path(logdir) / "runs").is_dir() else logdir)
    if not logs:
        raise FileNotFoundError(f"no trial logs under {logdir}")
    return write_summary(logs, outdir or Path(logdir) / "summary")


def plot_dir(logdir, outdir=None, heatmaps: bool = False) -> list[Path]:
    logs = read_logs(Path(logdir) / "runs" if (Path(logdir) / "runs").is_dir() else logdir)
    if not logs:
        raise FileNotFoundError(f"no trial logs under {logdir}")
    return emit_plots(logs, outdir or Path(logdir) / "plots", heatmaps=heatmaps)
