"""Canonical-link GLM families: log-likelihood, score, observed information,
and maximum-likelihood fitting on arbitrary coefficient supports.

Three families are supported, each with its canonical link: Gaussian with
identity link (the nuisance variance is profiled out), Bernoulli with logit
link, and Poisson with log link.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit, gammaln

logger = logging.getLogger("micglm")

# Linear predictors are clamped to this magnitude inside Bernoulli/Poisson
# mean evaluation so that global-optimizer proposals cannot overflow exp().
ETA_CLAMP = 30.0

_LOG_2PI = math.log(2.0 * math.pi)

SCORE_TOL = 1e-8
MAX_NEWTON_ITER = 100


class SingularDesignError(np.linalg.LinAlgError):
    """Design submatrix is rank deficient on the requested support."""


class Family(Enum):
    """GLM family tag; the canonical link is implied by the tag."""

    GAUSSIAN = "gaussian"
    BINOMIAL = "binomial"
    POISSON = "poisson"

    @classmethod
    def from_string(cls, name):
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(
                f"unknown family {name!r}; expected one of "
                f"{[f.value for f in cls]}"
            ) from None


def _readonly(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Dataset:
    """Design matrix, response, and family tag; the unit of all fitting.

    Columns of ``X`` are expected standardized (mean 0, unit sample sd)
    unless ``standardized`` is False; an intercept, when present, is an
    unstandardized all-ones column named ``"intercept"``.
    """

    X: np.ndarray
    y: np.ndarray
    family: Family
    has_intercept: bool = False
    standardized: bool = True
    column_names: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "X", _readonly(self.X))
        object.__setattr__(self, "y", _readonly(self.y))
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        if self.y.ndim != 1 or self.y.shape[0] != self.X.shape[0]:
            raise ValueError("y must be 1-d with one entry per row of X")
        if not np.all(np.isfinite(self.X)) or not np.all(np.isfinite(self.y)):
            raise ValueError("X and y must be finite")
        if not self.column_names:
            object.__setattr__(
                self, "column_names",
                tuple(f"x{j + 1}" for j in range(self.X.shape[1])),
            )
        if len(self.column_names) != self.X.shape[1]:
            raise ValueError("column_names length must match X columns")
        object.__setattr__(self, "column_names", tuple(self.column_names))
        if self.standardized:
            for j in range(self.p):
                if self.has_intercept and j == self.intercept_index:
                    continue
                col = self.X[:, j]
                if abs(col.mean()) >= 1e-10:
                    raise ValueError(f"column {self.column_names[j]!r} not centered")
                if abs(col.std(ddof=1) - 1.0) >= 1e-8:
                    raise ValueError(f"column {self.column_names[j]!r} not unit scale")
        if self.family is Family.BINOMIAL:
            if not np.all(np.isin(self.y, (0.0, 1.0))):
                raise ValueError("binomial response must be 0/1")
        elif self.family is Family.POISSON:
            if np.any(self.y < 0) or np.any(self.y != np.round(self.y)):
                raise ValueError("poisson response must be nonnegative integers")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def intercept_index(self):
        """Column index of the intercept, or None."""
        if not self.has_intercept:
            return None
        return self.column_names.index("intercept")


def standardize_columns(X):
    """Center columns and scale to unit sample sd; returns (Xs, means, sds)."""
    X = np.asarray(X, dtype=float)
    means = X.mean(axis=0)
    sds = X.std(axis=0, ddof=1)
    if np.any(sds <= 0):
        bad = int(np.argmin(sds))
        raise ValueError(f"column {bad} is constant and cannot be standardized")
    return (X - means) / sds, means, sds


def make_dataset(X, y, family, standardize=True, add_intercept=False,
                 column_names=None):
    """Build a :class:`Dataset`, standardizing predictor columns and
    optionally appending an all-ones intercept column."""
    if isinstance(family, str):
        family = Family.from_string(family)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if column_names is None:
        column_names = [f"x{j + 1}" for j in range(X.shape[1])]
    names = list(column_names)
    if standardize:
        X, _, _ = standardize_columns(X)
    if add_intercept:
        X = np.column_stack([X, np.ones(X.shape[0])])
        names.append("intercept")
    return Dataset(X=X, y=y, family=family, has_intercept=add_intercept,
                   standardized=standardize, column_names=tuple(names))


# -- family kernels on the linear predictor -------------------------------
#
# The kernels take the raw linear predictor eta = X @ beta.  Bernoulli and
# Poisson saturate eta at +-ETA_CLAMP; the derivative of the clamp is zero
# beyond the knot, and score/information apply the same mask so analytic
# derivatives stay consistent with finite differences of the clamped
# log-likelihood.


def _clamped(eta):
    mask = np.abs(eta) <= ETA_CLAMP
    if not mask.all():
        logger.debug("clamped %d linear predictors to |eta|<=%g",
                     int((~mask).sum()), ETA_CLAMP)
        eta = np.clip(eta, -ETA_CLAMP, ETA_CLAMP)
    return eta, mask


def _gaussian_rss(y, eta):
    r = y - eta
    return float(r @ r), r


def _loglik_eta(family, y, eta):
    n = y.shape[0]
    if family is Family.GAUSSIAN:
        rss, _ = _gaussian_rss(y, eta)
        rss = max(rss, 1e-300)
        return -0.5 * n * (math.log(rss / n) + 1.0 + _LOG_2PI)
    eta, _ = _clamped(eta)
    if family is Family.BINOMIAL:
        return float(y @ eta - np.logaddexp(0.0, eta).sum())
    # Poisson
    return float(y @ eta - np.exp(eta).sum() - gammaln(y + 1.0).sum())


def _mu_eta(family, eta):
    if family is Family.GAUSSIAN:
        return eta
    eta, _ = _clamped(eta)
    if family is Family.BINOMIAL:
        return expit(eta)
    return np.exp(eta)


def log_likelihood(dataset, beta):
    """Exact canonical-family log-likelihood at ``beta``.

    The Gaussian value is the profile form -n/2 * {ln(RSS/n) + 1 + ln 2*pi}
    with the variance maximized out.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (dataset.p,):
        raise ValueError(f"beta must have length {dataset.p}")
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta must be finite")
    return _loglik_eta(dataset.family, dataset.y, dataset.X @ beta)


def score(dataset, beta):
    """Gradient of the log-likelihood at ``beta``."""
    beta = np.asarray(beta, dtype=float)
    X, y = dataset.X, dataset.y
    eta = X @ beta
    if dataset.family is Family.GAUSSIAN:
        rss, r = _gaussian_rss(y, eta)
        rss = max(rss, 1e-300)
        return (y.shape[0] / rss) * (X.T @ r)
    eta, mask = _clamped(eta)
    mu = expit(eta) if dataset.family is Family.BINOMIAL else np.exp(eta)
    return X.T @ ((y - mu) * mask)


def neg_hessian(dataset, beta):
    """Observed information -grad^2 L(beta), totalled over observations."""
    beta = np.asarray(beta, dtype=float)
    X, y = dataset.X, dataset.y
    n = y.shape[0]
    eta = X @ beta
    if dataset.family is Family.GAUSSIAN:
        rss, r = _gaussian_rss(y, eta)
        rss = max(rss, 1e-300)
        g = X.T @ r
        # profile likelihood: -d2L = n/RSS * X'X - 2n/RSS^2 * g g'
        return (n / rss) * (X.T @ X) - (2.0 * n / rss**2) * np.outer(g, g)
    eta, mask = _clamped(eta)
    if dataset.family is Family.BINOMIAL:
        mu = expit(eta)
        d = mu * (1.0 - mu) * mask
    else:
        d = np.exp(eta) * mask
    return (X.T * d) @ X


@dataclass(frozen=True)
class MleFit:
    """Maximum-likelihood fit on a coefficient support.

    ``beta_hat`` has length p with exact zeros off the support;
    ``score_at_solution`` is the full-length score at ``beta_hat`` (only the
    support coordinates vanish at an interior maximum), and ``neg_hessian``
    is the full p x p observed information there.
    """

    beta_hat: np.ndarray
    loglik: float
    score_at_solution: np.ndarray
    neg_hessian: np.ndarray
    converged: bool
    iterations: int
    support: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "beta_hat", _readonly(self.beta_hat))
        object.__setattr__(self, "score_at_solution",
                           _readonly(self.score_at_solution))
        object.__setattr__(self, "neg_hessian", _readonly(self.neg_hessian))


def _check_support(p, support):
    if support is None:
        return tuple(range(p))
    support = tuple(sorted(int(j) for j in support))
    if len(set(support)) != len(support):
        raise ValueError("support has duplicate indices")
    if support and (support[0] < 0 or support[-1] >= p):
        raise ValueError(f"support indices must lie in [0, {p})")
    return support


def fit_mle(dataset, support=None, start=None):
    """Maximize the log-likelihood over coefficients restricted to
    ``support``; remaining coefficients are exact zeros.

    Gaussian fits use least squares in closed form; Bernoulli and Poisson
    use Newton steps with step-halving, stopping when the restricted score
    has sup-norm below 1e-8 or after 100 iterations.  A rank-deficient
    design submatrix raises :class:`SingularDesignError`; logistic
    separation surfaces as ``converged=False`` after the iteration cap.
    """
    p = dataset.p
    support = _check_support(p, support)
    k = len(support)
    beta = np.zeros(p)
    if k == 0:
        ll = log_likelihood(dataset, beta)
        return MleFit(beta, ll, score(dataset, beta),
                      neg_hessian(dataset, beta), True, 0, support)

    Xs = dataset.X[:, support]
    if np.linalg.matrix_rank(Xs) < k:
        raise SingularDesignError(
            f"design is rank deficient on support {support}")

    if dataset.family is Family.GAUSSIAN:
        sol, *_ = np.linalg.lstsq(Xs, dataset.y, rcond=None)
        beta[list(support)] = sol
        ll = log_likelihood(dataset, beta)
        return MleFit(beta, ll, score(dataset, beta),
                      neg_hessian(dataset, beta), True, 1, support)

    idx = list(support)
    b = np.zeros(k)
    if start is not None:
        b = np.asarray(start, dtype=float)[idx].copy()
    beta[idx] = b
    ll = log_likelihood(dataset, beta)
    converged = False
    it = 0
    for it in range(1, MAX_NEWTON_ITER + 1):
        g = score(dataset, beta)[idx]
        if np.max(np.abs(g)) < SCORE_TOL:
            converged = True
            it -= 1
            break
        H = neg_hessian(dataset, beta)[np.ix_(idx, idx)]
        try:
            direction = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            direction, *_ = np.linalg.lstsq(H, g, rcond=None)
        # step-halving on likelihood decrease
        lam = 1.0
        for _ in range(30):
            trial = beta.copy()
            trial[idx] = b + lam * direction
            ll_trial = log_likelihood(dataset, trial)
            if ll_trial >= ll - 1e-12:
                break
            lam *= 0.5
        b = b + lam * direction
        beta[idx] = b
        ll = ll_trial
    g_final = score(dataset, beta)
    if not converged:
        converged = np.max(np.abs(g_final[idx])) < SCORE_TOL
    if converged and np.any(np.abs(Xs @ b) >= ETA_CLAMP - 1e-9):
        # the score vanished only because the clamp flattened the
        # likelihood: a separation-style boundary solution, not an
        # interior maximum
        converged = False
    return MleFit(beta, ll, g_final, neg_hessian(dataset, beta),
                  converged, it, support)


def information_criterion(fit, n, k, lambda0):
    """-2 * loglik + lambda0 * k; lambda0 = ln(n) gives BIC, 2 gives AIC."""
    return -2.0 * fit.loglik + lambda0 * k
