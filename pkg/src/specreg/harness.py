"""Convergence experiments over sample-size grids.

Each ``(n, replicate)`` job draws a sample with a seed derived from
``(seed, n, replicate)``, fits the estimator at the chosen ``lambda`` and
records both oracle errors. Jobs are merged by key, so the report does not
depend on the number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from . import filters, index_fn, theory
from .errors import ExperimentError, ValidationError
from .operators import check_lambda_admissible, effective_dimension, fit_coordinates
from .synthetic import draw_sample, model_from_config, oracle_errors

__all__ = [
    "ExperimentConfig",
    "RateReport",
    "run_convergence",
    "fit_slope",
    "summarize",
    "emit_report",
    "read_errors_csv",
    "format_summary_csv",
    "job_seed",
]

log = logging.getLogger(__name__)

DEFAULT_N_GRID = (256, 512, 1024, 2048, 4096, 8192)
ERRORS_HEADER = ["n", "replicate", "lambda", "admissible", "err_h", "err_pred"]
SUMMARY_HEADER = ["n", "median_h", "q90_h", "median_pred", "q90_pred", "theo_rate_h", "theo_rate_pred"]
MAX_FAILED_FRACTION = 0.10
# probe order standing in for an unbounded qualification in covering checks
UNBOUNDED_PROBE_NU = 16.0


@dataclass
class ExperimentConfig:
    model: dict
    filter: dict
    n_grid: list[int] = field(default_factory=lambda: list(DEFAULT_N_GRID))
    replicates: int = 20
    eta: float = 0.1
    lambda_rule: dict = field(default_factory=lambda: {"rule": "apriori"})
    seed: int = 0
    output: str | None = None
    slope_tolerance: float = 0.15
    gates: list[str] = field(default_factory=lambda: ["pred", "h"])
    jobs: int = 1

    def __post_init__(self):
        self.n_grid = [int(n) for n in self.n_grid]
        if len(self.n_grid) < 1 or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValidationError("n_grid must be nonempty and strictly increasing")
        if self.n_grid[0] < 1:
            raise ValidationError("sample sizes must be positive")
        if self.replicates < 1:
            raise ValidationError("replicates must be at least 1")
        if not 0 < self.eta < 1:
            raise ValidationError("eta must lie in (0, 1)")
        rule = self.lambda_rule.get("rule")
        if rule not in ("apriori", "fixed", "grid"):
            raise ValidationError(f"unknown lambda rule {rule!r}")
        if rule == "grid" and len(self.lambda_rule["values"]) != len(self.n_grid):
            raise ValidationError("a lambda grid needs one value per sample size")
        for g in self.gates:
            if g not in ("pred", "h"):
                raise ValidationError(f"unknown gate {g!r}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ValidationError(f"unknown config keys: {sorted(extra)}")
        return cls(**{k: v for k, v in data.items()})

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


@dataclass
class RateReport:
    rows: list[dict]
    failed: list[tuple[int, int, str]]
    summary: list[dict]
    theo_rates: dict[int, tuple[float, float]]
    fitted_slope_H: float
    fitted_slope_pred: float
    theoretical_slope_H: float
    theoretical_slope_pred: float
    tolerance: float
    gates: list[str]
    annotations: list[str] = field(default_factory=list)

    def gate_results(self) -> dict[str, bool]:
        def ok(a, b):
            return bool(math.isfinite(a) and math.isfinite(b) and abs(a - b) <= self.tolerance)
        return {"pred": ok(self.fitted_slope_pred, self.theoretical_slope_pred),
                "h": ok(self.fitted_slope_H, self.theoretical_slope_H)}

    @property
    def passed(self) -> bool:
        res = self.gate_results()
        return all(res[g] for g in self.gates)

    def slopes_dict(self) -> dict:
        res = self.gate_results()
        return {
            "fitted_slope_h": self.fitted_slope_H,
            "fitted_slope_pred": self.fitted_slope_pred,
            "theoretical_slope_h": self.theoretical_slope_H,
            "theoretical_slope_pred": self.theoretical_slope_pred,
            "tolerance": self.tolerance,
            "pass": {"h": res["h"], "pred": res["pred"]},
            "gates": list(self.gates),
            "all_pass": self.passed,
            "annotations": list(self.annotations),
            "failed_replicates": len(self.failed),
        }


def fit_slope(pairs: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of ``log(error)`` against ``log(n)``."""
    if len(pairs) < 2:
        raise ValidationError("need at least two (n, error) pairs")
    n = np.array([p[0] for p in pairs], dtype=float)
    e = np.array([p[1] for p in pairs], dtype=float)
    if np.any(e <= 0) or np.any(n <= 0):
        raise ValidationError("errors and sample sizes must be positive")
    x, y = np.log(n), np.log(e)
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def job_seed(seed: int, n: int, replicate: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(n), int(replicate)]).generate_state(1)[0])


def _run_job(model_block, filter_block, n, rep, seed, lam, eta):
    with threadpool_limits(1):
        model = model_from_config(model_block)
        filt = filters.from_config(filter_block, s=model.kappa ** 2)
        sample = draw_sample(model, n, job_seed(seed, n, rep))
        try:
            w = fit_coordinates(filt, lam, sample.covariates, sample.y)
        except np.linalg.LinAlgError as exc:
            return {"n": n, "replicate": rep, "failed": str(exc)}
        errs = oracle_errors(model, w)
        adm = check_lambda_admissible(model.kappa, effective_dimension(model.eigenvalues, lam), n, eta, lam)
    return {"n": n, "replicate": rep, "lambda": lam, "admissible": adm,
            "err_h": errs["h_norm"], "err_pred": errs["pred_norm"]}


def _lambdas(config: ExperimentConfig, phi, b) -> tuple[dict[int, float], list[int]]:
    rule = config.lambda_rule["rule"]
    clipped = []
    if rule == "fixed":
        return {n: float(config.lambda_rule["lambda"]) for n in config.n_grid}, clipped
    if rule == "grid":
        return {n: float(v) for n, v in zip(config.n_grid, config.lambda_rule["values"])}, clipped
    out = {}
    for n in config.n_grid:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", theory.LambdaClipWarning)
            out[n] = theory.apriori_lambda(phi, b, n)
        if caught:
            clipped.append(n)
    return out, clipped


def _saturation_notes(phi, filt) -> list[str]:
    nu0 = UNBOUNDED_PROBE_NU if filt.qualification_unbounded else filt.qualification
    notes = []
    if not index_fn.covering_check(phi, nu0).covered:
        notes.append(f"saturation expected (H-norm): qualification {filt.qualification:g} "
                     f"does not cover {phi.label}")
    sqrt_phi = index_fn.IndexFunction(lambda t: np.sqrt(t) * phi(t), s=phi.s,
                                      label=f"sqrt(t)*{phi.label}")
    if not index_fn.covering_check(sqrt_phi, nu0).covered:
        notes.append(f"saturation expected (prediction norm): qualification {filt.qualification:g} "
                     f"does not cover {sqrt_phi.label}")
    return notes


def summarize(rows: Sequence[Mapping[str, Any]], n_grid: Sequence[int],
              theo_rates: Mapping[int, tuple[float, float]]) -> list[dict]:
    """Per-n medians and 90th percentiles of both errors."""
    out = []
    for n in n_grid:
        h = np.array([r["err_h"] for r in rows if r["n"] == n], dtype=float)
        p = np.array([r["err_pred"] for r in rows if r["n"] == n], dtype=float)
        if h.size == 0:
            continue
        th, tp = theo_rates[n]
        out.append({"n": n, "median_h": float(np.median(h)), "q90_h": float(np.quantile(h, 0.9)),
                    "median_pred": float(np.median(p)), "q90_pred": float(np.quantile(p, 0.9)),
                    "theo_rate_h": th, "theo_rate_pred": tp})
    return out


def _slope_or_nan(pairs):
    try:
        return fit_slope(pairs)
    except ValidationError:
        return math.nan


def run_convergence(config: ExperimentConfig, jobs: int | None = None) -> RateReport:
    model = model_from_config(config.model)
    filt = filters.from_config(config.filter, s=model.kappa ** 2)
    phi, b = model.phi, model.b
    lams, clipped = _lambdas(config, phi, b)

    annotations = []
    if config.lambda_rule["rule"] == "apriori":
        annotations += _saturation_notes(phi, filt)
    if clipped:
        annotations.append(f"lambda clipped to 1 for n in {clipped}")

    tasks = [(config.model, config.filter, n, rep, config.seed, lams[n], config.eta)
             for n in config.n_grid for rep in range(config.replicates)]
    workers = config.jobs if jobs is None else jobs
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, *zip(*tasks)))
    else:
        results = [_run_job(*t) for t in tasks]
    results.sort(key=lambda r: (r["n"], r["replicate"]))

    failed = [(r["n"], r["replicate"], r["failed"]) for r in results if "failed" in r]
    rows = [r for r in results if "failed" not in r]
    if len(failed) > MAX_FAILED_FRACTION * len(results):
        raise ExperimentError(f"{len(failed)} of {len(results)} replicates failed")
    for n, rep, msg in failed:
        log.warning("replicate (n=%d, rep=%d) failed: %s", n, rep, msg)

    theo_rates = {}
    for n in config.n_grid:
        lam = lams[n]
        theo_rates[n] = (float(phi(lam)), math.sqrt(lam) * float(phi(lam)))
    summary = summarize(rows, config.n_grid, theo_rates)

    fitted_h = _slope_or_nan([(s["n"], s["median_h"]) for s in summary])
    fitted_p = _slope_or_nan([(s["n"], s["median_pred"]) for s in summary])
    theo_h = _slope_or_nan([(n, theo_rates[n][0]) for n in config.n_grid])
    theo_p = _slope_or_nan([(n, theo_rates[n][1]) for n in config.n_grid])
    return RateReport(rows, failed, summary, theo_rates, fitted_h, fitted_p, theo_h, theo_p,
                      config.slope_tolerance, list(config.gates), annotations)


# -- report files --------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _csv_text(header, records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for rec in records:
        w.writerow([_fmt(rec[k]) for k in header])
    return buf.getvalue()


def format_summary_csv(summary: Sequence[Mapping[str, Any]]) -> str:
    return _csv_text(SUMMARY_HEADER, summary)


def format_errors_csv(rows: Sequence[Mapping[str, Any]]) -> str:
    return _csv_text(ERRORS_HEADER, rows)


def read_errors_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [{"n": int(r["n"]), "replicate": int(r["replicate"]), "lambda": float(r["lambda"]),
                 "admissible": r["admissible"] == "true", "err_h": float(r["err_h"]),
                 "err_pred": float(r["err_pred"])} for r in reader]


def emit_report(report: RateReport, path) -> dict[str, Path]:
    """Write ``errors.csv``, ``summary.csv`` and ``slopes.json`` under ``path``.

    Nothing is written unless the report has at least one replicate row.
    """
    if not report.rows:
        raise ExperimentError("report has no replicate rows; nothing written")
    out = Path(path)
    texts = {
        "errors.csv": format_errors_csv(report.rows),
        "summary.csv": format_summary_csv(report.summary),
        "slopes.json": json.dumps(report.slopes_dict(), indent=2, sort_keys=True) + "\n",
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = {}
        for name, text in texts.items():
            target = out / name
            tmp = out / f".{name}.tmp"
            tmp.write_text(text)
            os.replace(tmp, target)
            written[name] = target
    except OSError as exc:
        raise ExperimentError(f"could not write report to {out}: {exc}") from exc
    return written
