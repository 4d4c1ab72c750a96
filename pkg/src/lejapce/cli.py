"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 model error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .distributions import distribution_from_dict
from .exceptions import ConfigurationError, ContractError, ModelEvaluationError, NumericalError
from .harness import METHODS, ExperimentConfig, cv_rms, run_experiment
from .hierarchical import HierSurrogate
from .leja import leja_nodes
from .models import BUILTIN_MODELS, get_model
from .pce import transform_to_pce
from .postprocess import sobol_indices
from .serialization import load_surrogate

EXIT_OK, EXIT_CONFIG, EXIT_MODEL, EXIT_NUMERICAL = 0, 2, 3, 4

logger = logging.getLogger("lejapce")


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_points(path: str, dim: int) -> np.ndarray:
    src = sys.stdin if path == "-" else open(path)
    try:
        pts = np.loadtxt(src, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse points from {path}: {exc}") from exc
    finally:
        if src is not sys.stdin:
            src.close()
    if pts.shape[1] != dim:
        raise ConfigurationError(f"points have {pts.shape[1]} columns, surrogate needs {dim}")
    return pts


def _config(args, **overrides) -> ExperimentConfig:
    data = {}
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text())
    for key in ("model", "command", "method", "p_max", "budget", "tol", "seed", "cv_size", "n_jobs"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "out", None):
        data["output_dir"] = args.out
    data.update(overrides)
    if "distributions" not in data and getattr(args, "dists", None):
        data["distributions"] = json.loads(Path(args.dists).read_text())
    return ExperimentConfig.from_dict(data)


def cmd_fit(args) -> int:
    result = run_experiment(_config(args))
    for r in result.records:
        print(f"evals={r.model_evaluations:6d}  cv_rms={r.cv_rms:.6e}")
    for key, path in result.paths.items():
        print(f"{key}: {path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    s = load_surrogate(args.surrogate)
    values = s(_read_points(args.points, s.dim))
    _write("".join(f"{v!r}\n" for v in np.atleast_1d(values).tolist()), args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    s = load_surrogate(args.surrogate)
    pce = transform_to_pce(s) if isinstance(s, HierSurrogate) else s
    names = args.names.split(",") if args.names else None
    report = sobol_indices(pce, interactions=args.interactions, names=names)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    _write(report.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_cv(args) -> int:
    s = load_surrogate(args.surrogate)
    model = get_model(args.model)
    print(repr(cv_rms(s, model, args.Q, args.seed)))
    return EXIT_OK


def cmd_leja(args) -> int:
    spec = json.loads(args.dist)
    if not isinstance(spec, dict):
        raise ConfigurationError("--dist must be a JSON object")
    nodes = leja_nodes(distribution_from_dict(spec), args.n)
    _write("".join(f"{k},{x:.17g}\n" for k, x in enumerate(nodes)), args.out)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    budget = args.budget or (1000 if args.full else 200)
    cv_size = 100_000 if args.full else 2_000
    rows = []
    for method in ("hier", "pce_direct"):
        cfg = ExperimentConfig(model=args.model, method=method, budget=budget, cv_size=cv_size,
                               seed=args.seed, output_dir=args.out)
        result = run_experiment(cfg, write=args.out is not None)
        rows.append((method, result.records[-1]))
        if result.report is not None:
            print(f"[{method}] mean={result.report.mean:.6g} variance={result.report.variance:.6g}")
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["method", "evals", "cv_rms", "err_mean", "err_var", "err_Sf_max", "err_St_max"])
    for method, r in rows:
        w.writerow([method, r.model_evaluations, f"{r.cv_rms:.6e}", r.mean_rel_err, r.var_rel_err,
                    r.err_sf_max, r.err_st_max])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lejapce",
        description="Adaptive interpolating polynomial chaos on weighted Leja grids.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command_name", required=True)

    p = sub.add_parser("fit", help="run an adaptive build with convergence checkpoints")
    p.add_argument("--config", help="JSON experiment config; flags override its entries")
    p.add_argument("--model", choices=BUILTIN_MODELS)
    p.add_argument("--command", dest="command", help="external simulator command line")
    p.add_argument("--dists", help="JSON file with a list of distribution specs")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--p-max", dest="p_max", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("-Q", "--cv-size", dest="cv_size", type=int)
    p.add_argument("--n-jobs", dest="n_jobs", type=int)
    p.add_argument("--out", help="output directory (default: $LEJAPCE_OUTPUT_DIR or ./results)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="evaluate a saved surrogate at points from a CSV file")
    p.add_argument("--surrogate", required=True)
    p.add_argument("--points", required=True, help="CSV file, one point per row ('-' for stdin)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="moments and Sobol indices of a saved surrogate")
    p.add_argument("--surrogate", required=True)
    p.add_argument("--names", help="comma-separated parameter names")
    p.add_argument("--interactions", action="store_true", help="also report interaction shares")
    p.add_argument("--csv", help="write dimension,S_f,S_t rows here")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("cv", help="cross-validation RMS error of a saved surrogate")
    p.add_argument("--surrogate", required=True)
    p.add_argument("--model", required=True, choices=BUILTIN_MODELS)
    p.add_argument("-Q", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("leja", help="print weighted Leja nodes of a distribution")
    p.add_argument("--dist", required=True, help='JSON spec, e.g. \'{"kind": "uniform", "a": -1, "b": 1}\'')
    p.add_argument("-n", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_leja)

    p = sub.add_parser("benchmark", help="compare both adaptive algorithms on a built-in model")
    p.add_argument("--model", required=True, choices=BUILTIN_MODELS)
    p.add_argument("--full", action="store_true", help="full-scale budget (1000) and CV sample (1e5)")
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigurationError, ContractError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelEvaluationError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
