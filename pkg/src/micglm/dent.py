"""Unit dent functions: smooth (or piecewise) surrogates for the indicator
I(beta != 0).

A unit dent function is even, vanishes at 0, tends to 1 at +-infinity
(reaching 1 exactly beyond a knot for the truncated members), and is
nondecreasing on the nonnegative half-line.  Only the hyperbolic tangent
member carries analytic derivatives; the others expose numeric derivatives
and exist for axiom checks and plotting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DentFunction:
    """Base class; numeric central-difference derivatives by default."""

    def value(self, gamma):
        raise NotImplementedError

    def d1(self, gamma, h=1e-6):
        return (self.value(gamma + h) - self.value(gamma - h)) / (2.0 * h)

    def d2(self, gamma, h=1e-4):
        return (self.value(gamma + h) - 2.0 * self.value(gamma)
                + self.value(gamma - h)) / h**2

    def power(self, k):
        """gamma -> w(gamma)**k; closed within the unit dent family."""
        if int(k) != k or k < 1:
            raise ValueError("power must be a positive integer")
        return PowerDent(self, int(k))


@dataclass(frozen=True)
class PowerDent(DentFunction):
    base: DentFunction
    k: int

    def value(self, gamma):
        return self.base.value(gamma) ** self.k


@dataclass(frozen=True)
class HyperbolicTangent(DentFunction):
    """w(gamma) = tanh(a * gamma^2); larger a sharpens the dent."""

    a: float

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("a must be positive")

    def value(self, gamma):
        gamma = np.asarray(gamma, dtype=float)
        return np.tanh(self.a * gamma**2)

    def d1(self, gamma):
        gamma = np.asarray(gamma, dtype=float)
        w = np.tanh(self.a * gamma**2)
        return 2.0 * self.a * gamma * (1.0 - w**2)

    def d2(self, gamma):
        gamma = np.asarray(gamma, dtype=float)
        w = np.tanh(self.a * gamma**2)
        return 2.0 * self.a * (1.0 - w**2) * (1.0 - 4.0 * self.a * gamma**2 * w)


@dataclass(frozen=True)
class TruncatedLr(DentFunction):
    """w(gamma) = (|gamma|/a)^r for |gamma| <= a, and 1 beyond the knot."""

    a: float
    r: float

    def __post_init__(self):
        if self.a <= 0 or self.r <= 0:
            raise ValueError("a and r must be positive")

    def value(self, gamma):
        g = np.abs(np.asarray(gamma, dtype=float))
        return np.where(g <= self.a, (g / self.a) ** self.r, 1.0)


@dataclass(frozen=True)
class ModifiedScad(DentFunction):
    """SCAD-style dent: linear, then quadratic blend reaching 1 at the knot
    (2 - a^2)/a; requires 0 < a < sqrt(2/3)."""

    a: float

    def __post_init__(self):
        if not 0.0 < self.a < math.sqrt(2.0 / 3.0):
            raise ValueError("a must lie in (0, sqrt(2/3))")

    def value(self, gamma):
        a = self.a
        g = np.abs(np.asarray(gamma, dtype=float))
        knot = (2.0 - a**2) / a
        mid = (2.0 * a * (2.0 - a**2) * g - a**4 - a**2 * g**2) \
            / (4.0 * (1.0 - a**2))
        return np.where(g <= a, a * g, np.where(g < knot, mid, 1.0))


@dataclass(frozen=True)
class ModifiedMcp(DentFunction):
    """MCP-style dent: a|gamma| - a^2 gamma^2 / 4 up to the knot 2/a, then
    1; requires 0 < a < sqrt(2)."""

    a: float

    def __post_init__(self):
        if not 0.0 < self.a < math.sqrt(2.0):
            raise ValueError("a must lie in (0, sqrt(2))")

    def value(self, gamma):
        a = self.a
        g = np.abs(np.asarray(gamma, dtype=float))
        return np.where(g <= 2.0 / a, a * g - a**2 * g**2 / 4.0, 1.0)


@dataclass(frozen=True)
class ConverseMollifier(DentFunction):
    """w(gamma) = 1 - exp{-gamma^2/(b^2 - gamma^2)} inside |gamma| < b and
    exactly 1 beyond; the complement of a normalized mollifier bump."""

    b: float

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("b must be positive")

    def value(self, gamma):
        g = np.abs(np.asarray(gamma, dtype=float))
        inside = g < self.b
        denom = np.where(inside, self.b**2 - g**2, 1.0)
        bump = np.where(inside, np.exp(-(g**2) / denom), 0.0)
        return 1.0 - bump


def dent_value(f, gamma):
    return f.value(gamma)


def dent_d1(f, gamma):
    return f.d1(gamma)


def dent_d2(f, gamma):
    return f.d2(gamma)


def dent_power(f, k):
    return f.power(k)
