"""Scikit-learn style front end so the sparse GLM solver composes with
pipelines, cloning, and grid search.

The estimator standardizes predictor columns internally (the selection
criterion and the default dent sharpness assume unit-scale predictors) and
reports ``coef_``/``intercept_`` back on the original feature scale;
selection, gamma estimates, and gamma-scale inference live on the
standardized scale and are exposed with a ``_standardized`` suffix where
they differ.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .glm import Dataset, Family
from .inference import se_beta_nonzero
from .mic import AnnealerConfig, MicConfig, solve_mic


class MicGlm(BaseEstimator):
    """Sparse generalized linear model fitted by minimizing the smooth
    information-criterion surrogate.

    Parameters
    ----------
    family : {"gaussian", "binomial", "poisson"}
        Response family with its canonical link.
    a : float
        Dent sharpness; values in [10, 50] are sensible for standardized
        predictors.
    lambda0 : float or None
        Complexity penalty per selected coefficient; None means ln(n)
        (BIC), 2.0 gives AIC behaviour.
    zero_threshold : float
        |beta| below this is reported as an exact zero.
    fit_intercept : bool
        Append an unpenalizable-by-flag intercept column.
    penalize_intercept : bool
        Whether the intercept counts toward the complexity penalty.
    standardize : bool
        Standardize predictor columns before fitting.
    n_starts : int
        Number of polish starts beside the annealer's best point.
    max_evals : int or None
        Annealer objective-evaluation budget; None uses the per-dimension
        default.
    refit : bool
        Replace selected coefficients by the support-restricted MLE.
    seed : int
        Seed for the annealer and any random starts.
    """

    def __init__(self, family="gaussian", a=10.0, lambda0=None,
                 zero_threshold=1e-4, fit_intercept=True,
                 penalize_intercept=True, standardize=True, n_starts=5,
                 max_evals=None, refit=False, seed=0):
        self.family = family
        self.a = a
        self.lambda0 = lambda0
        self.zero_threshold = zero_threshold
        self.fit_intercept = fit_intercept
        self.penalize_intercept = penalize_intercept
        self.standardize = standardize
        self.n_starts = n_starts
        self.max_evals = max_evals
        self.refit = refit
        self.seed = seed

    def _config(self):
        return MicConfig(
            a=self.a, lambda0=self.lambda0,
            zero_threshold=self.zero_threshold,
            penalize_intercept=self.penalize_intercept,
            n_starts=self.n_starts,
            annealer=AnnealerConfig(max_evals=self.max_evals),
            seed=self.seed, refit_on_support=self.refit,
        )

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        family = Family.from_string(self.family) \
            if isinstance(self.family, str) else self.family
        self.n_features_in_ = X.shape[1]

        if self.standardize:
            self._means = X.mean(axis=0)
            self._scales = X.std(axis=0, ddof=1)
            if np.any(self._scales <= 0):
                raise ValueError("constant column cannot be standardized")
        else:
            self._means = np.zeros(X.shape[1])
            self._scales = np.ones(X.shape[1])
        Xs = (X - self._means) / self._scales

        names = [f"x{j + 1}" for j in range(X.shape[1])]
        if self.fit_intercept:
            Xs = np.column_stack([Xs, np.ones(X.shape[0])])
            names.append("intercept")
        data = Dataset(X=Xs, y=np.asarray(y, dtype=float), family=family,
                       has_intercept=self.fit_intercept,
                       standardized=self.standardize, column_names=names)

        fit = solve_mic(data, self._config())
        self.mic_fit_ = fit
        self.family_ = family

        beta_std = fit.beta_tilde[:self.n_features_in_]
        self.coef_standardized_ = beta_std.copy()
        self.coef_ = beta_std / self._scales
        icpt = fit.beta_tilde[-1] if self.fit_intercept else 0.0
        self.intercept_ = float(icpt - self.coef_ @ self._means)
        self.support_ = tuple(j for j in fit.support
                              if j < self.n_features_in_)
        self.gamma_ = fit.gamma_tilde.copy()
        self.se_gamma_ = fit.se_gamma.copy()
        self.p_values_ = fit.p_values.copy()
        self.objective_ = fit.objective
        self.bic_ = fit.bic_equivalent
        self.converged_ = fit.converged
        self.se_beta_ = se_beta_nonzero(data, fit) if fit.support else {}
        return self

    def _eta(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.coef_ + self.intercept_

    def predict(self, X):
        """Predicted mean response (identity, expit, or exp of the linear
        predictor depending on the family)."""
        eta = self._eta(X)
        if self.family_ is Family.GAUSSIAN:
            return eta
        if self.family_ is Family.BINOMIAL:
            return 1.0 / (1.0 + np.exp(-np.clip(eta, -30.0, 30.0)))
        return np.exp(np.clip(eta, -30.0, 30.0))

    def predict_proba(self, X):
        """Class probabilities for the binomial family."""
        if self.family_ is not Family.BINOMIAL:
            raise AttributeError("predict_proba is only defined for the "
                                 "binomial family")
        p1 = self.predict(X)
        return np.column_stack([1.0 - p1, p1])
