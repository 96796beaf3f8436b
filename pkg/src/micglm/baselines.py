"""Comparison methods: exhaustive best-subset search under an information
criterion, the oracle fit on the true support, and the full-model MLE.

The subset search enumerates all 2^p supports in Gray-code order with
warm-started Newton fits, so it is only sensible at desk scale; it refuses
to run past ``max_p`` predictors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .glm import SingularDesignError, fit_mle

TIE_TOL = 1e-12


@dataclass(frozen=True)
class SubsetSearchResult:
    """Outcome of the exhaustive enumeration.

    ``models_evaluated`` counts supports actually fitted;
    ``rank_deficient_skipped`` counts supports skipped for rank deficiency,
    so the two sum to 2^p_search.  ``per_size_best`` lists the best
    (size, support, criterion) for each total support size.
    """

    best_support: tuple
    best_criterion: float
    per_size_best: tuple
    models_evaluated: int
    rank_deficient_skipped: int


def best_subset(dataset, lambda0, max_p=20, penalize_intercept=True):
    """Minimize -2 L(MLE on S) + lambda0 * k over every support S.

    The intercept column, when present, belongs to every candidate support;
    it is excluded from k when ``penalize_intercept`` is False.  Ties within
    1e-12 go to the lexicographically smallest support.
    """
    p = dataset.p
    intercept = dataset.intercept_index
    free = [j for j in range(p) if j != intercept]
    m = len(free)
    if m > max_p:
        raise ValueError(
            f"exhaustive search over 2^{m} supports refused (max_p={max_p}); "
            f"the enumeration is infeasible for moderately large p")

    base = () if intercept is None else (intercept,)
    best_support = None
    best_criterion = np.inf
    per_size = {}
    evaluated = 0
    skipped = 0
    warm = None

    for i in range(2 ** m):
        gray = i ^ (i >> 1)
        support = tuple(sorted(base + tuple(
            free[b] for b in range(m) if gray >> b & 1)))
        try:
            fit = fit_mle(dataset, support, start=warm)
        except SingularDesignError:
            skipped += 1
            continue
        evaluated += 1
        warm = fit.beta_hat
        k = len(support)
        if not penalize_intercept and intercept is not None:
            k -= 1
        crit = -2.0 * fit.loglik + lambda0 * k
        size = len(support)
        if size not in per_size or crit < per_size[size][1] - TIE_TOL or (
                abs(crit - per_size[size][1]) <= TIE_TOL
                and support < per_size[size][0]):
            per_size[size] = (support, crit)
        if crit < best_criterion - TIE_TOL or (
                abs(crit - best_criterion) <= TIE_TOL
                and (best_support is None or support < best_support)):
            best_support = support
            best_criterion = crit

    per_size_best = tuple((size, sup, crit) for size, (sup, crit)
                          in sorted(per_size.items()))
    return SubsetSearchResult(
        best_support=best_support,
        best_criterion=float(best_criterion),
        per_size_best=per_size_best,
        models_evaluated=evaluated,
        rank_deficient_skipped=skipped,
    )


def oracle_fit(dataset, true_support):
    """MLE restricted to the true support (simulation benchmark)."""
    return fit_mle(dataset, tuple(true_support))


def full_mle(dataset):
    """MLE on the full support."""
    return fit_mle(dataset)
