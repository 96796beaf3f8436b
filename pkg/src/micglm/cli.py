"""Command-line front end: fit models on CSV data, run simulation studies,
sweep the dent sharpness, and run the exhaustive subset search.

Reports are JSON (the machine contract, ``schema_version`` 1) or aligned
plain-text tables; JSON output is byte-identical for a fixed seed.  Output
files are written to a temporary name and renamed, so failures never leave
partial files.  Exit codes: 0 success, 2 malformed input CSV, 3 fitting
failure, 4 invalid simulation design.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile

import numpy as np

from .baselines import best_subset
from .glm import Dataset, Family, SingularDesignError, fit_mle, \
    standardize_columns
from .inference import _invert_information, se_beta_nonzero
from .mic import AnnealerConfig, MicConfig, solve_mic
from .simlab import SimDesign, a_robustness_study, run_simulation

EXIT_OK = 0
EXIT_BAD_CSV = 2
EXIT_FIT_FAILURE = 3
EXIT_BAD_DESIGN = 4

DEFAULT_A_GRID = (1,) + tuple(range(5, 101, 5))


class CsvFormatError(ValueError):
    pass


def _read_csv(path):
    """Strict numeric CSV reader; errors name the offending row/column."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file, header row required") \
                from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise CsvFormatError(f"{path}: duplicate column names")
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvFormatError(
                    f"{path}: row {i} has {len(row)} cells, expected "
                    f"{len(header)}")
            parsed = []
            for name, cell in zip(header, row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise CsvFormatError(
                        f"{path}: row {i}, column {name!r}: "
                        f"non-numeric cell {cell!r}") from None
            rows.append(parsed)
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    return header, np.array(rows, dtype=float)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _write_text(path, text):
    """Write via a temporary file and rename, so no partial output file can
    survive an error."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".micglm-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _emit(report, table, args):
    text = table if args.format == "table" else \
        json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    if args.output:
        _write_text(args.output, text)
    else:
        sys.stdout.write(text)


def _resolve_seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MIC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CsvFormatError(f"MIC_SEED must be an integer, got {env!r}") \
                from None
    return 0


def _resolve_lambda0(text, n):
    if text == "bic":
        return None, math.log(n)
    if text == "aic":
        return 2.0, 2.0
    try:
        val = float(text)
    except ValueError:
        raise CsvFormatError(
            f"--lambda0 must be 'bic', 'aic', or a number, got {text!r}") \
            from None
    return val, val


def _mic_config(args, lambda0):
    return MicConfig(
        a=args.a,
        lambda0=lambda0,
        penalize_intercept=not args.no_penalize_intercept,
        annealer=AnnealerConfig(max_evals=args.max_evals),
        seed=_resolve_seed(args),
        refit_on_support=args.refit,
    )


def _load_fit_dataset(args):
    header, data = _read_csv(args.input)
    if args.response not in header:
        raise CsvFormatError(
            f"{args.input}: response column {args.response!r} not found")
    family = Family.from_string(args.family)

    names = [h for h in header if h != args.response]
    cols = {h: data[:, j] for j, h in enumerate(header)}
    y = cols.pop(args.response)
    for pair in args.interaction or ():
        parts = pair.split(":")
        if len(parts) != 2 or any(pt not in cols for pt in parts):
            raise CsvFormatError(
                f"--interaction {pair!r} must name two existing columns as "
                f"'left:right'")
        cols[pair] = cols[parts[0]] * cols[parts[1]]
        names.append(pair)

    X = np.column_stack([cols[h] for h in names])
    Xs, _, _ = standardize_columns(X)
    if args.intercept == "auto":
        add_intercept = family is not Family.GAUSSIAN
    else:
        add_intercept = args.intercept == "yes"
    response_standardized = family is Family.GAUSSIAN
    if response_standardized:
        y = (y - y.mean()) / y.std(ddof=1)
    if add_intercept:
        Xs = np.column_stack([Xs, np.ones(Xs.shape[0])])
        names = names + ["intercept"]
    dataset = Dataset(X=Xs, y=y, family=family, has_intercept=add_intercept,
                      standardized=True, column_names=tuple(names))
    return dataset, response_standardized


def _display_names(dataset):
    """Intercept first in human-facing tables, as is conventional."""
    names = list(dataset.column_names)
    if dataset.has_intercept:
        names.remove("intercept")
        names.insert(0, "intercept")
    return names


def _full_block(dataset, lam_value):
    fit = fit_mle(dataset)
    cov = _invert_information(fit.neg_hessian, dataset.column_names)
    ses = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    k = dataset.p
    coef = {name: {"beta": float(fit.beta_hat[j]), "se": float(ses[j])}
            for j, name in enumerate(dataset.column_names)}
    return {"bic": -2.0 * fit.loglik + lam_value * k, "coefficients": coef}


def _bss_block(dataset, lam_value, penalize_intercept):
    search = best_subset(dataset, lam_value,
                         penalize_intercept=penalize_intercept)
    refit = fit_mle(dataset, search.best_support)
    idx = list(search.best_support)
    ses = {}
    if idx:
        cov = _invert_information(
            refit.neg_hessian[np.ix_(idx, idx)],
            tuple(dataset.column_names[j] for j in idx))
        ses = {j: float(s) for j, s in
               zip(idx, np.sqrt(np.clip(np.diag(cov), 0.0, None)))}
    coef = {dataset.column_names[j]: {"beta": float(refit.beta_hat[j]),
                                      "se": ses[j]} for j in idx}
    return {
        "bic": float(search.best_criterion),
        "support": [dataset.column_names[j] for j in search.best_support],
        "coefficients": coef,
        "models_evaluated": search.models_evaluated,
        "rank_deficient_skipped": search.rank_deficient_skipped,
    }


def _mic_block(dataset, config):
    fit = solve_mic(dataset, config)
    se_beta = se_beta_nonzero(dataset, fit) if fit.support else {}
    coef = {}
    for j, name in enumerate(dataset.column_names):
        coef[name] = {
            "gamma": float(fit.gamma_tilde[j]),
            "se_gamma": float(fit.se_gamma[j]),
            "p_value": float(fit.p_values[j]),
            "beta": float(fit.beta_tilde[j]),
            "se_beta": se_beta.get(j),
        }
    return {
        "bic": fit.bic_equivalent,
        "objective": fit.objective,
        "support": [dataset.column_names[j] for j in fit.support],
        "coefficients": coef,
        "converged": fit.converged,
        "refit_applied": fit.refit_applied,
        "n_objective_evals": fit.n_objective_evals,
        "warnings": list(fit.warnings),
    }


def _fit_table(report, dataset):
    names = _display_names(dataset)
    methods = report["methods"]
    header = f"{'':12s}"
    for label in ("full", "best_subset", "mic"):
        if label in methods:
            header += {"full": f"{'beta':>9s}{'se':>8s}",
                       "best_subset": f"{'beta':>9s}{'se':>8s}",
                       "mic": f"{'gamma':>9s}{'se':>8s}{'p':>7s}"
                              f"{'beta':>9s}{'se':>8s}"}[label]
    lines = [header]

    def cell(value, width, digits=3):
        if value is None:
            return " " * width
        return f"{value:>{width}.{digits}f}"

    for name in names:
        row = f"{name:12s}"
        if "full" in methods:
            c = methods["full"]["coefficients"][name]
            row += cell(c["beta"], 9) + cell(c["se"], 8)
        if "best_subset" in methods:
            c = methods["best_subset"]["coefficients"].get(name)
            row += (cell(c["beta"], 9) + cell(c["se"], 8)) if c \
                else " " * 17
        if "mic" in methods:
            c = methods["mic"]["coefficients"][name]
            row += cell(c["gamma"], 9) + cell(c["se_gamma"], 8) \
                + cell(c["p_value"], 7) \
                + (cell(c["beta"], 9) + cell(c["se_beta"], 8)
                   if c["beta"] != 0.0 else " " * 17)
        lines.append(row)
    bic_row = f"{'BIC':12s}"
    if "full" in methods:
        bic_row += f"{methods['full']['bic']:>17.2f}"
    if "best_subset" in methods:
        bic_row += f"{methods['best_subset']['bic']:>17.2f}"
    if "mic" in methods:
        bic_row += f"{methods['mic']['bic']:>24.2f}"
    lines.append(bic_row)
    return "\n".join(lines) + "\n"


def cmd_fit(args):
    dataset, response_standardized = _load_fit_dataset(args)
    lambda0, lam_value = _resolve_lambda0(args.lambda0, dataset.n)
    requested = [m.strip().lower() for m in args.methods.split(",") if m.strip()]
    unknown = set(requested) - {"full", "bss", "mic"}
    if unknown:
        raise CsvFormatError(f"unknown methods {sorted(unknown)}")

    report = {
        "schema_version": 1,
        "command": "fit",
        "input": args.input,
        "response": args.response,
        "family": args.family,
        "n": dataset.n,
        "p": dataset.p,
        "columns": list(dataset.column_names),
        "intercept": dataset.has_intercept,
        "response_standardized": response_standardized,
        "a": args.a,
        "lambda0": lam_value,
        "seed": _resolve_seed(args),
        "methods": {},
    }
    if "full" in requested:
        report["methods"]["full"] = _full_block(dataset, lam_value)
    if "bss" in requested:
        report["methods"]["best_subset"] = _bss_block(
            dataset, lam_value, not args.no_penalize_intercept)
    if "mic" in requested:
        report["methods"]["mic"] = _mic_block(
            dataset, _mic_config(args, lambda0))
    _emit(report, _fit_table(report, dataset), args)
    return EXIT_OK


def _simulate_table(report):
    lines = [f"{'Method':8s}{'ME':>12s}{'Size':>8s}{'FP':>8s}{'FN':>8s}"
             f"{'C':>8s}"]
    for method, mm in report["methods"].items():
        lines.append(
            f"{method:8s}{mm['me_mean']:>12.4f}{mm['size_mean']:>8.2f}"
            f"{mm['fp_mean']:>8.2f}{mm['fn_mean']:>8.2f}"
            f"{mm['c_rate']:>8.3f}")
    lines.append(f"reps completed {report['reps_completed']}, "
                 f"failed {report['reps_failed']}")
    return "\n".join(lines) + "\n"


def cmd_simulate(args):
    fields = {"p": 12, "reps": 100, "test_n": 500, "alpha": 0.05,
              "rho": 0.5, "methods": ("MIC", "Oracle")}
    if args.config:
        # a JSON design file supplies values; explicit flags still win
        try:
            fields.update(json.loads(open(args.config, encoding="utf-8")
                                     .read()))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"invalid design: cannot read {args.config}: {exc}",
                  file=sys.stderr)
            return EXIT_BAD_DESIGN
    for key in ("model", "n", "p", "reps", "test_n", "alpha", "rho"):
        value = getattr(args, key)
        if value is not None:
            fields[key] = value
    if args.methods is not None:
        fields["methods"] = tuple(m.strip() for m in args.methods.split(",")
                                  if m.strip())
    if args.seed is not None or "seed" not in fields \
            or os.environ.get("MIC_SEED") is not None:
        fields["seed"] = _resolve_seed(args)
    try:
        design = SimDesign.from_dict(fields)
    except (TypeError, ValueError) as exc:
        print(f"invalid design: {exc}", file=sys.stderr)
        return EXIT_BAD_DESIGN
    lambda0, _ = _resolve_lambda0(args.lambda0, design.n)
    cfg = _mic_config(args, lambda0)
    sim = run_simulation(design, mic_config=cfg, n_jobs=args.threads)

    names = [f"x{j + 1}" for j in range(design.p)]
    report = {
        "schema_version": 1,
        "command": "simulate",
        "design": {
            "model": design.model, "n": design.n, "p": design.p,
            "beta0": list(design.resolved_beta0()), "rho": design.rho,
            "reps": design.reps, "test_n": design.test_n,
            "alpha": design.alpha, "methods": list(design.methods),
            "seed": design.seed,
        },
        "a": args.a,
        "methods": {
            meth: {"me_mean": mm.me_mean, "size_mean": mm.size_mean,
                   "fp_mean": mm.fp_mean, "fn_mean": mm.fn_mean,
                   "c_rate": mm.c_rate}
            for meth, mm in sim.methods.items()},
        "empirical_size": {names[j]: v for j, v in sim.empirical_size.items()},
        "empirical_power": {names[j]: v
                            for j, v in sim.empirical_power.items()},
        "se_calibration": {
            meth: {names[j]: {"mad_estimates": c.mad_estimates,
                              "median_se": c.median_se, "mad_se": c.mad_se}
                   for j, c in calib.items()}
            for meth, calib in sim.se_calibration.items()},
        "gamma_ci_coverage": {names[j]: v
                              for j, v in sim.gamma_ci_coverage.items()},
        "reps_completed": sim.reps_completed,
        "reps_failed": sim.reps_failed,
        "failed_rep_indices": list(sim.failed_rep_indices),
        "redraws": sim.redraws,
    }
    _emit(report, _simulate_table(report), args)
    return EXIT_OK


def cmd_sweep_a(args):
    dataset, response_standardized = _load_fit_dataset(args)
    lambda0, lam_value = _resolve_lambda0(args.lambda0, dataset.n)
    cfg = _mic_config(args, lambda0)
    grid = [float(v) for v in args.grid.split(",")] if args.grid \
        else list(DEFAULT_A_GRID)
    study = a_robustness_study(dataset, grid, cfg)
    names = dataset.column_names
    entries = [{
        "a": e["a"],
        "support": [names[j] for j in e["support"]],
        "gamma": {names[j]: e["gamma"][j] for j in range(dataset.p)},
        "beta": {names[j]: e["beta"][j] for j in range(dataset.p)},
    } for e in study.entries]
    report = {
        "schema_version": 1,
        "command": "sweep-a",
        "input": args.input,
        "response": args.response,
        "family": args.family,
        "grid": grid,
        "seed": _resolve_seed(args),
        "response_standardized": response_standardized,
        "entries": entries,
        "stability": study.stability,
        "modal_support": [names[j] for j in study.modal_support],
    }
    lines = [f"{'a':>6s}  {'support':s}"]
    for e in entries:
        lines.append(f"{e['a']:>6g}  {{{', '.join(e['support'])}}}")
    lines.append(f"stability {study.stability:.3f}")
    _emit(report, "\n".join(lines) + "\n", args)
    return EXIT_OK


def cmd_best_subset(args):
    dataset, response_standardized = _load_fit_dataset(args)
    _, lam_value = _resolve_lambda0(args.lambda0, dataset.n)
    search = best_subset(dataset, lam_value, max_p=args.max_p,
                         penalize_intercept=not args.no_penalize_intercept)
    names = dataset.column_names
    report = {
        "schema_version": 1,
        "command": "best-subset",
        "input": args.input,
        "response": args.response,
        "family": args.family,
        "lambda0": lam_value,
        "response_standardized": response_standardized,
        "best_support": [names[j] for j in search.best_support],
        "best_criterion": search.best_criterion,
        "per_size_best": [
            {"size": size, "support": [names[j] for j in sup],
             "criterion": crit}
            for size, sup, crit in search.per_size_best],
        "models_evaluated": search.models_evaluated,
        "rank_deficient_skipped": search.rank_deficient_skipped,
    }
    lines = [f"best support {{{', '.join(report['best_support'])}}} "
             f"criterion {search.best_criterion:.4f}"]
    for row in report["per_size_best"]:
        lines.append(f"size {row['size']:2d}: {row['criterion']:12.4f}  "
                     f"{{{', '.join(row['support'])}}}")
    _emit(report, "\n".join(lines) + "\n", args)
    return EXIT_OK


def _add_common(parser):
    parser.add_argument("--a", type=float, default=10.0,
                        help="dent sharpness (default 10)")
    parser.add_argument("--lambda0", default="bic",
                        help="'bic' (ln n), 'aic' (2), or a number")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed (falls back to MIC_SEED, then 0)")
    parser.add_argument("--output", default=None,
                        help="report file (stdout when omitted)")
    parser.add_argument("--format", choices=("json", "table"),
                        default="json")
    parser.add_argument("--no-penalize-intercept", action="store_true",
                        help="exclude the intercept from the complexity "
                             "penalty")
    parser.add_argument("--refit", action="store_true",
                        help="replace selected coefficients by the "
                             "support-restricted MLE")
    parser.add_argument("--max-evals", type=int, default=None,
                        help="annealer evaluation budget")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker processes for simulate (never changes "
                             "results)")


def _add_input(parser):
    parser.add_argument("input", help="CSV file with a header row")
    parser.add_argument("--response", required=True,
                        help="response column name")
    parser.add_argument("--family", required=True,
                        choices=("gaussian", "binomial", "poisson"))
    parser.add_argument("--intercept", choices=("auto", "yes", "no"),
                        default="auto",
                        help="'auto' adds one except for gaussian fits")
    parser.add_argument("--interaction", action="append", default=[],
                        metavar="LEFT:RIGHT",
                        help="append a product column (repeatable)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="micglm",
        description="Sparse GLM estimation by minimizing a smooth "
                    "approximation of BIC.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit models on CSV data")
    _add_input(p_fit)
    p_fit.add_argument("--methods", default="full,bss,mic",
                       help="comma list from {full,bss,mic}")
    _add_common(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo study")
    p_sim.add_argument("--model", default=None,
                       help="reference design: A, B, or C")
    p_sim.add_argument("--n", type=int, default=None)
    p_sim.add_argument("--p", type=int, default=None)
    p_sim.add_argument("--reps", type=int, default=None)
    p_sim.add_argument("--test-n", type=int, default=None)
    p_sim.add_argument("--alpha", type=float, default=None)
    p_sim.add_argument("--rho", type=float, default=None)
    p_sim.add_argument("--methods", default=None,
                       help="comma list from {MIC,BSS,Oracle,Full} "
                            "(default MIC,Oracle)")
    p_sim.add_argument("--config", default=None,
                       help="JSON file of design fields; explicit flags win")
    _add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep-a",
                             help="solve over a grid of a values")
    _add_input(p_sweep)
    p_sweep.add_argument("--grid", default=None,
                         help="comma list of a values "
                              "(default 1,5,10,...,100)")
    _add_common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep_a)

    p_bss = sub.add_parser("best-subset",
                           help="exhaustive subset search only")
    _add_input(p_bss)
    p_bss.add_argument("--max-p", type=int, default=20)
    _add_common(p_bss)
    p_bss.set_defaults(func=cmd_best_subset)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CsvFormatError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_BAD_CSV
    except (SingularDesignError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"fitting failed: {exc}", file=sys.stderr)
        return EXIT_FIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
