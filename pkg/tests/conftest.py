import csv
import os

import numpy as np
import pytest

from micglm.glm import Dataset, Family, standardize_columns

DATA_DIR = os.path.join(os.path.dirname(__file__), "..", "src", "micglm",
                        "data")


def fd_gradient(f, x, h=1e-6):
    """Central-difference gradient, the ground-truth oracle for every
    analytic derivative in the package."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h * max(1.0, abs(x[i]))
        g[i] = (f(x + e) - f(x - e)) / (2.0 * e[i])
    return g


def fd_jacobian(f, x, h=1e-6):
    """Central-difference Jacobian of a vector-valued function."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h * max(1.0, abs(x[i]))
        cols.append((f(x + e) - f(x - e)) / (2.0 * e[i]))
    return np.column_stack(cols)


def max_rel_err(analytic, reference, floor=1.0):
    """Componentwise |a - r| / max(|r|, floor); the floor keeps near-zero
    components from blowing up the ratio at generic points."""
    analytic = np.asarray(analytic, dtype=float)
    reference = np.asarray(reference, dtype=float)
    denom = np.maximum(np.abs(reference), floor)
    return float(np.max(np.abs(analytic - reference) / denom))


def random_dataset(family, n=40, p=4, seed=0, beta=None):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    if beta is None:
        beta = rng.uniform(-1.0, 1.0, p)
    eta = X @ beta
    if family is Family.GAUSSIAN:
        y = eta + rng.standard_normal(n)
    elif family is Family.BINOMIAL:
        y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    else:
        y = rng.poisson(np.exp(np.clip(eta, -20, 3))).astype(float)
    return Dataset(X=X, y=y, family=family, standardized=False)


def load_diabetes_dataset():
    path = os.path.join(DATA_DIR, "diabetes.csv")
    rows = list(csv.reader(open(path, newline="", encoding="utf-8")))
    header, data = rows[0], np.array(rows[1:], dtype=float)
    X, _, _ = standardize_columns(data[:, :10])
    y = data[:, 10]
    y = (y - y.mean()) / y.std(ddof=1)
    return Dataset(X=X, y=y, family=Family.GAUSSIAN, standardized=True,
                   column_names=tuple(header[:10]))


@pytest.fixture(scope="session")
def diabetes():
    return load_diabetes_dataset()


@pytest.fixture(scope="session")
def diabetes_names():
    return ("age", "sex", "bmi", "map", "tc", "ldl", "hdl", "tch", "ltg",
            "glu")
