"""Experiment driver, error metrics and reference statistics.

An experiment builds a surrogate with one of four methods at a geometric
schedule of budgets (25, 50, 100, ... up to ``B``), reusing one evaluation
cache across the schedule, and records the cross-validation RMS error plus
relative errors of the post-processed statistics at every checkpoint.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .distributions import ProductDistribution, sample
from .exceptions import ConfigurationError, NumericalError
from .hierarchical import HierSurrogate, adapt_hier
from .models import Model, evaluate_points, external_model, get_model
from .multiindex import td_set
from .pce import PceSurrogate, adapt_pce, pce_from_set, transform_to_pce
from .postprocess import sobol_indices
from .serialization import save_surrogate

logger = logging.getLogger(__name__)

METHODS = ("hier", "pce_direct", "pce_transform", "td_fixed")
OUTPUT_ENV = "LEJAPCE_OUTPUT_DIR"
FIRST_CHECKPOINT = 25


# ---------------------------------------------------------------- metrics


def cv_rms(surrogate, model, Q: int = 10_000, seed: int = 0, n_jobs: int = 1) -> float:
    """Root-mean-square surrogate error on ``Q`` seeded samples of the inputs."""
    if Q < 1:
        raise ConfigurationError("Q must be >= 1")
    y = sample(surrogate.pdist, Q, seed)
    return _rms(surrogate(y), evaluate_points(model, y, n_jobs))


def _rms(approx, exact) -> float:
    d = np.asarray(approx, dtype=float) - np.asarray(exact, dtype=float)
    # math.fsum fixes the reduction order for reproducible output.
    return math.sqrt(math.fsum(d * d) / d.size)


def rel_error(estimate: float, reference: float) -> float:
    """``|(reference - estimate) / reference|``."""
    if reference == 0:
        raise NumericalError("relative error is undefined for a zero reference")
    return abs((reference - estimate) / reference)


# ---------------------------------------------------------------- references


def _ishigami_reference(a: float = 7.0, b: float = 0.1) -> dict:
    pi4, pi8 = math.pi**4, math.pi**8
    v1 = 0.5 * (1 + b * pi4 / 5) ** 2
    v2 = a**2 / 8
    v13 = b**2 * pi8 * (1 / 18 - 1 / 50)
    var = v1 + v2 + v13
    return {
        "mean": a / 2,
        "variance": var,
        "first_order": {"y1": v1 / var, "y2": v2 / var, "y3": 0.0},
        "total_order": {"y1": (v1 + v13) / var, "y2": v2 / var, "y3": v13 / var},
        "source": "analytic",
    }


# Moments: scrambled Sobol' points (scipy.stats.qmc, seed 20240101), 10 * 2**20
# samples mapped through the input quantiles. Sobol bars: published reference plots.
_REFERENCES = {
    "borehole": {
        "mean": 73.34726242617656,
        "variance": 705.0545874590894,
        "first_order": {"r_w": 0.745, "N_u": 0.072, "N_l": 0.072, "L": 0.069, "K_w": 0.017},
        "total_order": {"r_w": 0.768, "N_u": 0.08, "N_l": 0.08, "L": 0.077, "K_w": 0.019},
        "source": "qmc moments, published Sobol bars",
    },
    "steel_column": {
        "mean": 222.13530133328877,
        "variance": 1910.6842626173368,
        "first_order": {"F_s": 0.624, "P_d": 0.015, "P_1": 0.051, "P_2": 0.051, "D": 0.186, "F_0": 0.068},
        "total_order": {"F_s": 0.624, "P_d": 0.015, "P_1": 0.052, "P_2": 0.052, "D": 0.188, "F_0": 0.07},
        "source": "qmc moments, published Sobol bars",
    },
    "meromorphic16": {
        "first_order": {"y1": 0.6972, "y2": 0.2671},
        "total_order": {"y1": 0.7212, "y2": 0.2906},
        "source": "published Sobol bars",
    },
}


def reference_oracles(name: str) -> dict:
    """Reference mean, variance and Sobol indices of a built-in model.

    Keys present depend on the model; Sobol entries map parameter names to values.
    """
    if name == "ishigami":
        return _ishigami_reference()
    try:
        ref = _REFERENCES[name]
    except KeyError:
        raise ConfigurationError(f"no reference statistics for model {name!r}") from None
    return json.loads(json.dumps(ref))


def qmc_moments(model: Model, log2_chunk: int = 20, chunks: int = 10, seed: int = 20240101):
    """Mean and variance of a model by scrambled Sobol' integration.

    This regenerates the pinned moment references (at the default sizes it
    takes a few seconds per model).
    """
    from scipy.stats import qmc

    engine = qmc.Sobol(model.dim, scramble=True, seed=seed)
    vals = []
    for _ in range(chunks):
        u = engine.random(2**log2_chunk)
        y = np.column_stack([model.input_spec[n].quantile(u[:, n]) for n in range(model.dim)])
        vals.append(model.evaluate(y))
    v = np.concatenate(vals)
    return float(v.mean()), float(v.var(ddof=1))


# ---------------------------------------------------------------- experiments


@dataclass
class ExperimentConfig:
    """Settings of one convergence experiment.

    Exactly one of ``model`` (a built-in name) or ``command`` (an external
    simulator) is required; external models also need ``distributions``.
    """

    model: str | None = None
    command: str | list | None = None
    distributions: list | None = None
    method: str = "hier"
    p_max: int | None = None
    budget: int = 100
    tol: float = 0.0
    cv_size: int = 10_000
    seed: int = 0
    output_dir: str | None = None
    n_jobs: int = 1
    timeout: float = 60.0

    def __post_init__(self):
        if (self.model is None) == (self.command is None):
            raise ConfigurationError("give exactly one of 'model' and 'command'")
        if self.command is not None and not self.distributions:
            raise ConfigurationError("external models need 'distributions'")
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method == "td_fixed":
            if self.p_max is None or self.p_max < 0:
                raise ConfigurationError("td_fixed needs p_max >= 0")
        elif self.budget < 2:
            raise ConfigurationError("budget must be >= 2")
        if self.cv_size < 1:
            raise ConfigurationError("cv_size must be >= 1")
        if self.tol < 0:
            raise ConfigurationError("tolerance must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> ExperimentConfig:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    @property
    def label(self) -> str:
        name = self.model or "external"
        return f"{name}_{self.method}" + (f"{self.p_max}" if self.method == "td_fixed" else "")

    def resolve_output_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV, "results"))

    def build_model(self):
        if self.model is not None:
            model = get_model(self.model)
            if self.distributions:
                model = Model(
                    model.name, model.func, ProductDistribution.from_list(self.distributions),
                    model.param_names, model.description,
                )
            return model
        return external_model(
            self.command, ProductDistribution.from_list(self.distributions),
            timeout=self.timeout, pool_size=self.n_jobs,
        )


@dataclass
class ConvergenceRecord:
    model_evaluations: int
    cv_rms: float
    mean_rel_err: float | None = None
    var_rel_err: float | None = None
    sobol_rel_errs: dict = field(default_factory=dict)

    @property
    def err_sf_max(self):
        vals = [v for k, v in self.sobol_rel_errs.items() if k.startswith("S_f")]
        return max(vals) if vals else None

    @property
    def err_st_max(self):
        vals = [v for k, v in self.sobol_rel_errs.items() if k.startswith("S_t")]
        return max(vals) if vals else None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    surrogate: object
    report: object | None
    model_calls: int
    paths: dict = field(default_factory=dict)


class _Counting:
    """Wraps a model and counts the points it is asked to evaluate."""

    def __init__(self, model, n_jobs=1):
        self.model = model
        self.n_jobs = n_jobs
        self.calls = 0

    def evaluate(self, y):
        y = np.atleast_2d(y)
        self.calls += y.shape[0]
        return evaluate_points(self.model, y, self.n_jobs)


def checkpoints(budget: int, first: int = FIRST_CHECKPOINT) -> list[int]:
    """Doubling budgets from ``first`` below ``budget``, then ``budget`` itself."""
    out = []
    b = first
    while b < budget:
        out.append(b)
        b *= 2
    out.append(budget)
    return out


def _build(method, model, pdist, budget, tol, cache, n_jobs):
    if method == "hier":
        return adapt_hier(model, pdist, tol=tol, budget=budget, cache=cache, n_jobs=n_jobs)
    if method == "pce_direct":
        return adapt_pce(model, pdist, tol=tol, budget=budget, cache=cache, n_jobs=n_jobs)
    if method == "pce_transform":
        return transform_to_pce(adapt_hier(model, pdist, tol=tol, budget=budget, cache=cache, n_jobs=n_jobs))
    raise ConfigurationError(f"method {method!r} has no budget schedule")


def _as_pce(s):
    return transform_to_pce(s) if isinstance(s, HierSurrogate) else s


def _stopped_early(s, budget, tol) -> bool:
    hist = s.history if isinstance(s, HierSurrogate) else s.diagnostics.get("history", [])
    return bool(hist) and hist[-1][0] < budget and hist[-1][1] <= tol


def _record(s, names, cv_y, cv_g, refs) -> tuple[ConvergenceRecord, object]:
    rec = ConvergenceRecord(s.n_evaluations, _rms(s(cv_y), cv_g))
    report = None
    if refs is not None:
        try:
            report = sobol_indices(_as_pce(s), names=names)
        except NumericalError:
            return rec, None
        if "mean" in refs:
            rec.mean_rel_err = rel_error(report.mean, refs["mean"])
            rec.var_rel_err = rel_error(report.variance, refs["variance"])
        pos = {name: k for k, name in enumerate(names)}
        for key, arr in (("first_order", report.first_order), ("total_order", report.total_order)):
            tag = "S_f" if key == "first_order" else "S_t"
            for name, ref in refs.get(key, {}).items():
                if ref != 0:
                    rec.sobol_rel_errs[f"{tag}({name})"] = rel_error(float(arr[pos[name]]), ref)
    return rec, report


def _fmt(v):
    return "" if v is None else repr(float(v))


def write_records(records, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["evals", "cv_rms", "err_mean", "err_var", "err_Sf_max", "err_St_max"])
        for r in records:
            w.writerow([r.model_evaluations, _fmt(r.cv_rms), _fmt(r.mean_rel_err),
                        _fmt(r.var_rel_err), _fmt(r.err_sf_max), _fmt(r.err_st_max)])
    return path


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run one convergence experiment and (optionally) write its reports.

    Files written to the output directory, prefixed by ``cfg.label``:
    ``.csv`` (one row per checkpoint), ``_report.json`` (final statistics
    and per-checkpoint Sobol errors) and ``_surrogate.json``.
    """
    model = cfg.build_model()
    try:
        pdist = model.input_spec
        names = list(model.param_names)
        counted = _Counting(model, cfg.n_jobs)
        cv_y = sample(pdist, cfg.cv_size, cfg.seed)
        cv_g = evaluate_points(model, cv_y, cfg.n_jobs)
        refs = None
        if cfg.model is not None and not cfg.distributions:
            try:
                refs = reference_oracles(cfg.model)
            except ConfigurationError:
                refs = None
        cache: dict = {}
        records, final, report = [], None, None
        if cfg.method == "td_fixed":
            final = pce_from_set(counted, pdist, td_set(pdist.dim, cfg.p_max).indices, cache, cfg.n_jobs)
            rec, report = _record(final, names, cv_y, cv_g, refs)
            records.append(rec)
        else:
            minimum = pdist.dim + 1
            for b in checkpoints(cfg.budget):
                if b < minimum:
                    continue
                s = _build(cfg.method, counted, pdist, b, cfg.tol, cache, cfg.n_jobs)
                if records and s.n_evaluations <= records[-1].model_evaluations:
                    final = s
                    continue
                rec, report = _record(s, names, cv_y, cv_g, refs)
                records.append(rec)
                final = s
                logger.info("%s: %d evaluations, cv_rms %.3e", cfg.label, rec.model_evaluations, rec.cv_rms)
                if _stopped_early(s, b, cfg.tol):
                    break
            if final is None:
                raise ConfigurationError(f"budget {cfg.budget} is below the minimum {minimum}")
        if report is None:
            try:
                report = sobol_indices(_as_pce(final), names=names)
            except NumericalError:
                report = None
        if len(cache) != counted.calls:
            raise AssertionError("evaluation cache and model-call counter disagree")
    finally:
        if hasattr(model, "close"):
            model.close()
    result = ExperimentResult(cfg, records, final, report, counted.calls)
    if write:
        out = cfg.resolve_output_dir()
        result.paths["csv"] = write_records(records, out / f"{cfg.label}.csv")
        result.paths["surrogate"] = save_surrogate(final, out / f"{cfg.label}_surrogate.json")
        summary = {
            "config": asdict(cfg),
            "model_calls": counted.calls,
            "records": [
                {**asdict(r), "err_Sf_max": r.err_sf_max, "err_St_max": r.err_st_max} for r in records
            ],
            "report": report.to_dict() if report is not None else None,
            "reference": refs,
        }
        path = out / f"{cfg.label}_report.json"
        path.write_text(json.dumps(summary, indent=2))
        result.paths["report"] = path
    return result
