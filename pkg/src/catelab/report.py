"""Serialize scenario runs to CSV and JSON.

Every float in a CSV is written with 17 significant digits (``%.17g``), so
two runs with the same seed produce byte-identical files. Missing values are
empty fields.
"""

from dataclasses import dataclass, field

import csv
import json
import math
import os
import time

from . import __version__
from ._backend import BACKEND
from .config import to_dict
from .errors import CatelabError
from .harness import APPENDIX_SWEEP, LINEAR, RCT, Grid, grid_summary, quadratic_curvature, run_scenario

FLOAT_FORMAT = ".17g"
FORMATS = ("csv", "json")
SCATTER_COLUMNS = ("unit_id", "x", "ite_true", "cate_true", "cate_hat")
GRID_COLUMNS = ("x", "mean_estimate", "band_lo", "band_hi", "truth")
BINS_COLUMNS = ("replication", "axis", "bin_center", "contrast", "se", "oracle_value",
                "n_treated", "n_control", "flagged")
APPENDIX_COLUMNS = ("index", "constructed", "beta4", "beta5", "rho", "sigma_x", "sigma_z",
                    "closed_form_cov", "empirical_cov", "closed_form_corr", "empirical_corr", "abs_diff")


class ReportIOError(CatelabError, OSError):
    """Writing an output file failed; files from the run were removed."""


def fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, str)):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return ""
    return format(value, FLOAT_FORMAT)


def _json_float(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


@dataclass
class ScenarioOutcome:
    name: str
    master_seed: int
    config: dict
    files: list = field(default_factory=list)
    status: str = "ok"
    error: str = ""


@dataclass
class RunManifest:
    """What a run wrote and how to reproduce it."""

    scenarios: list
    tool_version: str
    backend: str
    duration_seconds: float
    threads: int
    manifest_path: str = ""

    @property
    def ok(self):
        return all(s.status == "ok" for s in self.scenarios)

    def to_dict(self):
        return {
            "tool": "catelab",
            "tool_version": self.tool_version,
            "backend": self.backend,
            "threads": self.threads,
            "duration_seconds": self.duration_seconds,
            "scenarios": [
                {"name": s.name, "master_seed": s.master_seed, "status": s.status, "error": s.error,
                 "files": s.files, "config": s.config}
                for s in self.scenarios
            ],
        }


class _Writer:
    """Tracks every file written so a failed run can be rolled back."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.written = []

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def csv(self, name, header, rows):
        path = self.path(name)
        self.written.append(path)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
        return path

    def json(self, name, payload):
        path = self.path(name)
        self.written.append(path)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=False)
            fh.write("\n")
        return path

    def cleanup(self):
        for path in self.written:
            try:
                os.remove(path)
            except OSError:
                pass


def _linear_outputs(writer, config, report, formats):
    files = []
    if "csv" in formats:
        rec = report.scatter_sample
        rows = [] if rec is None else zip(range(len(rec)), rec.x, rec.ite_true, rec.cate_true, rec.cate_hat)
        files.append(writer.csv(f"{config.name}_scatter.csv", SCATTER_COLUMNS, rows))
        summary = report.grid_summary
        if summary is None and report.n_succeeded:
            summary = grid_summary(config, report.coefficients, Grid())
        files.append(writer.csv(f"{config.name}_grid.csv", GRID_COLUMNS,
                                ((p.x, p.mean_estimate, p.band_lo, p.band_hi, p.truth) for p in summary or [])))
    extra = {
        "band_coverage": report.band_coverage(),
        "heterogeneity_ratio": _json_float(report.heterogeneity_ratio()),
        "scatter_replication": report.scatter_replication,
        "discordance": None if report.discordance is None else
        {k: _json_float(v) for k, v in report.discordance.to_dict().items()},
    }
    return files, extra


def _rct_outputs(writer, config, report, formats):
    files = []
    if "csv" in formats:
        rows = (
            (rep, b.axis, b.bin_center, b.contrast, b.se, b.oracle_value, b.n_treated, b.n_control, b.flagged)
            for rep, by_axis in sorted(report.rct_bins.items())
            for axis in ("X1", "X2")
            for b in by_axis[axis]
        )
        files.append(writer.csv(f"{config.name}_bins.csv", BINS_COLUMNS, rows))
    first = report.rct_bins[min(report.rct_bins)]
    extra = {"curvature": {}, "max_abs_z_interior": {}}
    for axis, rows in first.items():
        extra["curvature"][axis] = quadratic_curvature(rows)
        interior = [b for b in rows[1:-1] if not b.flagged]
        extra["max_abs_z_interior"][axis] = max(abs(b.contrast - b.oracle_value) / b.se for b in interior)
    return files, extra


def _appendix_outputs(writer, config, report, formats):
    rows = report.appendix_rows
    files = []
    if "csv" in formats:
        files.append(writer.csv(
            f"{config.name}_appendix.csv", APPENDIX_COLUMNS,
            ((r.index, r.constructed, r.beta4, r.beta5, r.rho, r.sigma_x, r.sigma_z, r.closed_form_cov,
              r.empirical_cov, r.closed_form_corr, r.empirical_corr, r.abs_diff) for r in rows)))
    diffs = [r.abs_diff for r in rows if r.abs_diff is not None]
    extra = {
        "max_abs_diff": max(diffs) if diffs else None,
        "closed_form_in_unit_interval": all(0.0 <= r.closed_form_corr <= 1.0 for r in rows),
        "constructed_zero_exact": all(r.closed_form_corr == 0.0 for r in rows if r.constructed),
    }
    return files, extra


_OUTPUTS = {LINEAR: _linear_outputs, RCT: _rct_outputs, APPENDIX_SWEEP: _appendix_outputs}


def run_and_report(configs, output_dir, formats=FORMATS, threads=1):
    """Run each scenario and write its outputs plus ``manifest.json``.

    Harness failures are recorded per scenario in the manifest. An I/O
    failure removes every file written by this call and raises
    :class:`ReportIOError`.
    """
    formats = tuple(formats)
    start = time.perf_counter()
    writer = _Writer(output_dir)
    outcomes = []
    try:
        os.makedirs(output_dir, exist_ok=True)
        for config in configs:
            outcome = ScenarioOutcome(config.name, config.master_seed, to_dict(config))
            outcomes.append(outcome)
            try:
                report = run_scenario(config, threads=threads)
            except CatelabError as exc:
                outcome.status, outcome.error = "failed", str(exc)
                continue
            if report.n_succeeded == 0:
                outcome.status = "failed"
                outcome.error = f"all {len(report.failed)} replications failed"
            elif report.failed:
                outcome.status = "partial"
                outcome.error = f"{len(report.failed)} replications failed"
            files, extra = ([], {}) if report.n_succeeded == 0 else _OUTPUTS[config.experiment](
                writer, config, report, formats)
            if "json" in formats or report.failed:
                files.append(writer.json(f"{config.name}_summary.json", {
                    "scenario": config.name,
                    "experiment": config.experiment,
                    "mean_mse": _json_float(report.mean_mse),
                    "n_succeeded": report.n_succeeded,
                    "failed_replications": [{"rep_index": i, "error": msg} for i, msg in report.failed],
                    "per_replication_mse": [_json_float(m) for m in report.per_replication_mse],
                    **extra,
                    "backend": BACKEND,
                    "config": outcome.config,
                }))
            outcome.files = [os.path.basename(f) for f in files]
        manifest = RunManifest(outcomes, __version__, BACKEND, time.perf_counter() - start, threads)
        manifest.manifest_path = writer.json("manifest.json", manifest.to_dict())
    except OSError as exc:
        writer.cleanup()
        raise ReportIOError(f"cannot write outputs to {output_dir}: {exc}") from exc
    return manifest
