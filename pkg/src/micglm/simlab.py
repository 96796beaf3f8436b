"""Monte Carlo harness: data generators for the three reference designs,
variable-selection metrics (model error, size, false positives/negatives,
correct-selection rate), standard-error calibration, and empirical
size/power of the gamma-scale Wald tests.

Replications are seeded independently from the master seed, so they can run
in parallel with no shared state and aggregation never depends on worker
count.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, replace

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import norm

from .baselines import best_subset, full_mle, oracle_fit
from .glm import Dataset, Family, SingularDesignError, fit_mle
from .inference import _invert_information, se_beta_nonzero
from .mic import MicConfig, solve_mic
from .reparam import gamma_of_beta

POISSON_MEAN_BOUND = 1.0e6
MAD_SCALE = 1.4826  # consistent-for-normal scaling

_MODEL_FAMILY = {"A": Family.GAUSSIAN, "B": Family.BINOMIAL,
                 "C": Family.POISSON}
METHODS = ("MIC", "BSS", "Oracle", "Full")


def default_beta0(model, p):
    """Reference coefficient vectors: (3, 1.5, 0, 0, 2, 0, ...) for the
    Gaussian and logistic designs, (1.2, 0.6, 0, 0, 0.8, 0, ...) for the
    log-linear one."""
    beta = np.zeros(p)
    lead = (3.0, 1.5, 0.0, 0.0, 2.0) if model in ("A", "B") \
        else (1.2, 0.6, 0.0, 0.0, 0.8)
    beta[:min(p, 5)] = lead[:min(p, 5)]
    return beta


@dataclass(frozen=True)
class SimDesign:
    """One simulation configuration; ``beta0=None`` uses the reference
    vector for the model."""

    model: str
    n: int
    p: int = 12
    beta0: tuple | None = None
    rho: float = 0.5
    reps: int = 100
    test_n: int = 500
    alpha: float = 0.05
    methods: tuple = ("MIC", "Oracle")
    seed: int = 0

    def __post_init__(self):
        if self.model not in _MODEL_FAMILY:
            raise ValueError("model must be one of 'A', 'B', 'C'")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.beta0 is not None and len(self.beta0) != self.p:
            raise ValueError("beta0 length must equal p")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        object.__setattr__(self, "methods", tuple(self.methods))

    @classmethod
    def from_dict(cls, mapping):
        """Build a design from a plain mapping (e.g. a parsed JSON config
        file); unknown keys are rejected."""
        allowed = {f.name for f in dataclasses.fields(cls)}
        unknown = set(mapping) - allowed
        if unknown:
            raise ValueError(f"unknown design fields {sorted(unknown)}")
        clean = dict(mapping)
        for key in ("beta0", "methods"):
            if key in clean and clean[key] is not None:
                clean[key] = tuple(clean[key])
        return cls(**clean)

    @property
    def family(self):
        return _MODEL_FAMILY[self.model]

    def resolved_beta0(self):
        if self.beta0 is None:
            return default_beta0(self.model, self.p)
        return np.asarray(self.beta0, dtype=float)

    def true_support(self):
        return tuple(int(j) for j in np.flatnonzero(self.resolved_beta0()))


def _ar1_cholesky(p, rho):
    j = np.arange(p)
    sigma = rho ** np.abs(j[:, None] - j[None, :])
    return np.linalg.cholesky(sigma)


def _binarize_columns(p):
    # odd predictors x1, x3, ..., x11 (1-based) become indicators
    return [j for j in range(0, min(p, 12), 2)][:6]


def _mvn_rows(chol, rng, m):
    return rng.standard_normal((m, chol.shape[0])) @ chol.T


def gen_covariates(design, rng):
    """Rows i.i.d. N(0, Sigma) with Sigma_jk = rho^|j-k|; for model B the
    six odd predictors are replaced by the indicators I(x < 0)."""
    chol = _ar1_cholesky(design.p, design.rho)
    X = _mvn_rows(chol, rng, design.n)
    if design.model == "B":
        for j in _binarize_columns(design.p):
            X[:, j] = (X[:, j] < 0.0).astype(float)
    return X


class PoissonOverflowError(RuntimeError):
    """A log-linear mean exceeded the overflow bound."""


def gen_response(design, X, rng):
    """Model A: X beta0 + N(0,1); model B: Bernoulli(expit(X beta0));
    model C: Poisson(exp(X beta0)), erroring if any mean exceeds 1e6."""
    eta = X @ design.resolved_beta0()
    if design.model == "A":
        return eta + rng.standard_normal(X.shape[0])
    if design.model == "B":
        return (rng.random(X.shape[0]) < 1.0 / (1.0 + np.exp(-eta))) \
            .astype(float)
    mu = np.exp(eta)
    if np.any(mu > POISSON_MEAN_BOUND):
        raise PoissonOverflowError(
            f"{int((mu > POISSON_MEAN_BOUND).sum())} rows exceed the "
            f"Poisson mean bound {POISSON_MEAN_BOUND:g}")
    return rng.poisson(mu).astype(float)


def _draw_X(design, rng, m):
    """Covariate block of m rows with the model-C overflow rows redrawn;
    returns (X, redraw_count)."""
    chol = _ar1_cholesky(design.p, design.rho)
    X = _mvn_rows(chol, rng, m)
    if design.model == "B":
        for j in _binarize_columns(design.p):
            X[:, j] = (X[:, j] < 0.0).astype(float)
        return X, 0
    redraws = 0
    if design.model == "C":
        beta0 = design.resolved_beta0()
        for _ in range(50):
            bad = np.flatnonzero(X @ beta0 > math.log(POISSON_MEAN_BOUND))
            if bad.size == 0:
                return X, redraws
            X[bad] = _mvn_rows(chol, rng, bad.size)
            redraws += bad.size
        raise PoissonOverflowError(
            "log-linear means keep exceeding the overflow bound; "
            "the coefficient vector is too large for this design")
    return X, redraws


def draw_dataset(design, rng):
    """One replication's training data plus an independent test covariate
    block; returns (Dataset, X_test, redraw_count)."""
    X, redraws = _draw_X(design, rng, design.n)
    y = gen_response(design, X, rng)
    X_test, redraws_test = _draw_X(design, rng, design.test_n)
    data = Dataset(X=X, y=y, family=design.family, has_intercept=False,
                   standardized=False)
    return data, X_test, redraws + redraws_test


def _mean_response(family, eta):
    if family is Family.GAUSSIAN:
        return eta
    if family is Family.BINOMIAL:
        return 1.0 / (1.0 + np.exp(-eta))
    return np.exp(eta)


def model_error(fit_beta, test_X, design):
    """Mean squared error between true and fitted mean responses on the
    test covariates."""
    beta0 = design.resolved_beta0()
    mu = _mean_response(design.family, test_X @ beta0)
    mu_hat = _mean_response(design.family, test_X @ np.asarray(fit_beta))
    return float(np.mean((mu - mu_hat) ** 2))


def _support_metrics(support, true_support, p):
    support = set(support)
    true = set(true_support)
    fp = len(support - true)
    fn = len(true - support)
    return {"size": len(support), "fp": fp, "fn": fn,
            "c": int(fp == 0 and fn == 0)}


def _restricted_ses(fit):
    idx = list(fit.support)
    if not idx:
        return {}
    cov = _invert_information(fit.neg_hessian[np.ix_(idx, idx)])
    return {j: float(s) for j, s in
            zip(fit.support, np.sqrt(np.clip(np.diag(cov), 0.0, None)))}


def _mic_rep_seed(design, rep):
    return int(np.random.SeedSequence(
        (design.seed, rep, 1)).generate_state(1)[0])


def _run_rep(design, rep, mic_config):
    rng = np.random.default_rng(np.random.SeedSequence((design.seed, rep)))
    try:
        data, X_test, redraws = draw_dataset(design, rng)
    except PoissonOverflowError:
        return {"failed": True, "rep": rep, "redraws": 0}
    true_support = design.true_support()
    out = {"failed": False, "rep": rep, "redraws": redraws, "methods": {}}
    lam = math.log(design.n)
    try:
        for method in design.methods:
            if method == "MIC":
                cfg = replace(mic_config, seed=_mic_rep_seed(design, rep))
                fit = solve_mic(data, cfg)
                beta = fit.beta_tilde
                support = fit.support
                try:
                    se_beta = se_beta_nonzero(data, fit) if support else {}
                except SingularDesignError:
                    se_beta = {}
                extras = {
                    "gamma": fit.gamma_tilde.tolist(),
                    "se_gamma": fit.se_gamma.tolist(),
                    "p_values": fit.p_values.tolist(),
                    "beta": beta.tolist(),
                    "se_beta": se_beta,
                    "bic": fit.bic_equivalent,
                }
            elif method == "BSS":
                search = best_subset(data, lam)
                refit = fit_mle(data, search.best_support)
                beta = refit.beta_hat
                support = search.best_support
                extras = {"beta": beta.tolist(),
                          "se_beta": _restricted_ses(refit),
                          "bic": search.best_criterion}
            elif method == "Oracle":
                refit = oracle_fit(data, true_support)
                beta = refit.beta_hat
                support = true_support
                extras = {"beta": beta.tolist(),
                          "se_beta": _restricted_ses(refit)}
            else:  # Full
                refit = full_mle(data)
                beta = refit.beta_hat
                support = tuple(range(design.p))
                extras = {"beta": beta.tolist(),
                          "se_beta": _restricted_ses(refit)}
            rec = _support_metrics(support, true_support, design.p)
            rec["me"] = model_error(beta, X_test, design)
            rec.update(extras)
            out["methods"][method] = rec
    except Exception as exc:  # noqa: BLE001 - a failed rep is data, not a crash
        return {"failed": True, "rep": rep, "redraws": redraws,
                "error": repr(exc)}
    return out


@dataclass(frozen=True)
class MethodMetrics:
    me_mean: float
    size_mean: float
    fp_mean: float
    fn_mean: float
    c_rate: float


@dataclass(frozen=True)
class CoefCalibration:
    """Spread of the estimates vs. the reported standard errors for one
    nonzero coefficient: scaled MAD of the estimates, median SE, MAD of
    the SEs."""

    mad_estimates: float
    median_se: float
    mad_se: float


@dataclass(frozen=True)
class SimReport:
    design: SimDesign
    methods: dict
    empirical_size: dict
    empirical_power: dict
    se_calibration: dict
    gamma_ci_coverage: dict
    reps_completed: int
    reps_failed: int
    failed_rep_indices: tuple
    redraws: int


def _mad(x):
    x = np.asarray(x, dtype=float)
    return MAD_SCALE * float(np.median(np.abs(x - np.median(x))))


def run_simulation(design, mic_config=None, n_jobs=1):
    """Run every replication, fit the requested methods, and aggregate.

    Failed replications (non-convergence, degenerate draws) are recorded
    and excluded from the averages.
    """
    if mic_config is None:
        mic_config = MicConfig()
    if n_jobs == 1:
        raw = [_run_rep(design, r, mic_config) for r in range(design.reps)]
    else:
        raw = Parallel(n_jobs=n_jobs)(
            delayed(_run_rep)(design, r, mic_config)
            for r in range(design.reps))
    raw.sort(key=lambda r: r["rep"])

    completed = [r for r in raw if not r["failed"]]
    failed = [r["rep"] for r in raw if r["failed"]]
    beta0 = design.resolved_beta0()
    true_support = set(design.true_support())

    methods = {}
    se_calibration = {}
    for method in design.methods:
        recs = [r["methods"][method] for r in completed]
        if not recs:
            continue
        methods[method] = MethodMetrics(
            me_mean=float(np.mean([r["me"] for r in recs])),
            size_mean=float(np.mean([r["size"] for r in recs])),
            fp_mean=float(np.mean([r["fp"] for r in recs])),
            fn_mean=float(np.mean([r["fn"] for r in recs])),
            c_rate=float(np.mean([r["c"] for r in recs])),
        )
        calib = {}
        for j in sorted(true_support):
            estimates = [r["beta"][j] for r in recs]
            ses = [r["se_beta"][j] for r in recs if j in r["se_beta"]]
            if not ses:
                continue
            calib[j] = CoefCalibration(
                mad_estimates=_mad(estimates),
                median_se=float(np.median(ses)),
                mad_se=_mad(ses),
            )
        se_calibration[method] = calib

    gamma_ci_coverage = {}
    if "MIC" in design.methods and completed:
        q = norm.ppf(1.0 - design.alpha / 2.0)
        gam = np.array([r["methods"]["MIC"]["gamma"] for r in completed])
        seg = np.array([r["methods"]["MIC"]["se_gamma"] for r in completed])
        for j in sorted(true_support):
            g0 = gamma_of_beta(float(beta0[j]), mic_config.a)
            valid = ~np.isnan(seg[:, j])
            if valid.any():
                hit = np.abs(gam[valid, j] - g0) <= q * seg[valid, j]
                gamma_ci_coverage[j] = float(hit.mean())

    empirical_size = {}
    empirical_power = {}
    if "MIC" in design.methods and completed:
        pvals = np.array([r["methods"]["MIC"]["p_values"] for r in completed])
        # reps whose information was singular carry NaN p-values; rates are
        # taken over the valid reps per coordinate
        valid = ~np.isnan(pvals)
        with np.errstate(invalid="ignore"):
            rates = np.where(valid, pvals <= design.alpha, 0.0).sum(axis=0) \
                / np.maximum(valid.sum(axis=0), 1)
        for j in range(design.p):
            if beta0[j] == 0.0:
                empirical_size[j] = float(rates[j])
            else:
                empirical_power[j] = float(rates[j])

    return SimReport(
        design=design,
        methods=methods,
        empirical_size=empirical_size,
        empirical_power=empirical_power,
        se_calibration=se_calibration,
        gamma_ci_coverage=gamma_ci_coverage,
        reps_completed=len(completed),
        reps_failed=len(failed),
        failed_rep_indices=tuple(failed),
        redraws=int(sum(r["redraws"] for r in raw)),
    )


@dataclass(frozen=True)
class SizePowerResult:
    rejection_rates: dict
    empirical_size: dict
    empirical_power: dict


def size_power_study(design, mic_config=None, n_jobs=1):
    """Wald-test every gamma coordinate at ``design.alpha`` in each
    replication and report per-coefficient rejection rates."""
    if "MIC" not in design.methods:
        design = replace(design, methods=("MIC",))
    report = run_simulation(design, mic_config=mic_config, n_jobs=n_jobs)
    rates = dict(report.empirical_size)
    rates.update(report.empirical_power)
    return SizePowerResult(
        rejection_rates=dict(sorted(rates.items())),
        empirical_size=report.empirical_size,
        empirical_power=report.empirical_power,
    )


@dataclass(frozen=True)
class ARobustnessResult:
    """Per-a supports and coefficient trajectories on one dataset, with the
    share of grid points agreeing with the modal support."""

    entries: tuple
    stability: float
    modal_support: tuple


def a_robustness_study(dataset, a_grid, config=None):
    """Re-solve MIC over a grid of dent sharpness values ``a``."""
    if config is None:
        config = MicConfig()
    entries = []
    for a in a_grid:
        fit = solve_mic(dataset, replace(config, a=float(a)))
        entries.append({
            "a": float(a),
            # sharpness at or below 1 sits on the unstable boundary of the
            # recommended range
            "boundary": bool(float(a) <= 1.0),
            "support": fit.support,
            "gamma": fit.gamma_tilde.tolist(),
            "beta": fit.beta_tilde.tolist(),
        })
    counts = {}
    for e in entries:
        counts[e["support"]] = counts.get(e["support"], 0) + 1
    modal = max(counts, key=lambda s: (counts[s], s))
    return ARobustnessResult(
        entries=tuple(entries),
        stability=counts[modal] / len(entries),
        modal_support=modal,
    )
