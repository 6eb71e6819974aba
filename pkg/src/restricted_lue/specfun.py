"""Scalar special functions used by the kernels, densities and checks.

Everything Gamma-laden is evaluated in log space and exponentiated once;
``N(N+alpha)`` exponents overflow doubles already for N around 14.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special as sps

from .errors import DomainError, RangeError

AIRY_RANGE = 20.0
MAX_GAMMA_RATIO_TERMS = 24


def log_gamma(x: float) -> float:
    """Return ``ln Gamma(x)`` for finite ``x > 0``."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"log_gamma needs a finite positive argument, got {x!r}")
    return math.lgamma(x)


# --- Gamma ratio expansion -------------------------------------------------


def _bernoulli_taylor(n):
    """Taylor coefficients of t/(e^t - 1) as exact fractions."""
    b = [Fraction(1)]
    for m in range(1, n):
        b.append(-sum(math.comb(m + 1, k) * b[k] for k in range(m)) / (m + 1))
    return [b[k] / math.factorial(k) for k in range(n)]


def norlund_at_zero(order, n):
    """Norlund generalized Bernoulli numbers ``B_s^{(order)}(0)``, s < n.

    ``(t/(e^t-1))**order = sum_s B_s^{(order)}(0) t^s / s!``; the power of the
    series is built with the J.C.P. Miller recursion in exact arithmetic.
    """
    order = Fraction(order)
    f = _bernoulli_taylor(n)
    g = [Fraction(1)]
    for m in range(1, n):
        acc = sum(((order + 1) * k - m) * f[k] * g[m - k] for k in range(1, m + 1))
        g.append(acc / m)
    return [g[s] * math.factorial(s) for s in range(n)]


def _as_fraction(a):
    if isinstance(a, Fraction):
        return a
    if isinstance(a, int):
        return Fraction(a)
    return Fraction(repr(float(a)))


@dataclass(frozen=True)
class GammaRatioSeries:
    """Asymptotic series for ``Gamma(x) / (x**a Gamma(x - a))``.

    ``coefficients[s]`` holds ``L_s(a) = a(a-1)...(a-s+1) B_s^{(a+1)}(0)``;
    the series is ``sum_s L_s(a) / (s! x**s)``.
    """

    a: float
    max_terms: int = 12
    coefficients: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if not (0 <= self.a) or not math.isfinite(self.a):
            raise DomainError(f"exponent a must be >= 0, got {self.a!r}")
        if not (1 <= self.max_terms <= MAX_GAMMA_RATIO_TERMS):
            raise RangeError(f"max_terms must lie in [1, {MAX_GAMMA_RATIO_TERMS}]")
        object.__setattr__(self, "coefficients", _ratio_coefficients(_as_fraction(self.a), self.max_terms))

    def evaluate(self, x: float, terms: int | None = None) -> tuple[float, float]:
        """Truncated sum and the magnitude of its last term (error estimate)."""
        terms = self.max_terms if terms is None else terms
        if not (1 <= terms <= self.max_terms):
            raise RangeError(f"terms must lie in [1, {self.max_terms}]")
        if not x > self.a + 1:
            raise DomainError(f"expansion needs x > a + 1 (x={x!r}, a={self.a!r})")
        total = 0.0
        last = 0.0
        inv = 1.0 / x
        power = 1.0
        for s in range(terms):
            last = self.coefficients[s] / math.factorial(s) * power
            total += last
            power *= inv
        return total, abs(last)


@lru_cache(maxsize=64)
def _ratio_coefficients(a, n):
    bern = norlund_at_zero(a + 1, n)
    out = []
    falling = Fraction(1)
    for s in range(n):
        out.append(float(falling * bern[s]))
        falling *= a - s
    return tuple(out)


@lru_cache(maxsize=64)
def _series_for(a, max_terms):
    return GammaRatioSeries(a, max_terms)


def gamma_ratio(x: float, a: float, terms: int) -> float:
    """``Gamma(x) / (x**a Gamma(x-a))`` from ``terms`` terms of its large-x series."""
    series = _series_for(float(a), max(terms, 12))
    return series.evaluate(x, terms)[0]


# --- Bessel and Airy -------------------------------------------------------


def bessel_j(alpha: float, z):
    """Bessel function of the first kind and its z-derivative.

    Returns ``(J_alpha(z), J_alpha'(z))`` for ``z >= 0`` and ``alpha > -1``.
    Accepts scalars or arrays of ``z``.
    """
    if not alpha > -1:
        raise DomainError(f"Bessel index must exceed -1, got {alpha!r}")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or not np.all(np.isfinite(z)):
        raise DomainError("Bessel argument must be finite and nonnegative")
    value = sps.jv(alpha, z)
    deriv = sps.jvp(alpha, z)
    if value.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


def airy(z):
    """``(Ai(z), Ai'(z))`` on the supported range ``|z| <= 20``."""
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)) or np.any(np.abs(z) > AIRY_RANGE):
        raise RangeError(f"Airy argument outside [-{AIRY_RANGE}, {AIRY_RANGE}]")
    ai, aip, _, _ = sps.airy(z)
    if ai.ndim == 0:
        return float(ai), float(aip)
    return ai, aip


# --- trace law -------------------------------------------------------------


def gamma_density(n_alpha: float, x):
    """Density ``e^{-x} x^{n_alpha-1} / Gamma(n_alpha)`` of the unconstrained trace.

    ``n_alpha = N(N+alpha)``; the trace of an LUE matrix with unit scale has
    this law. Evaluated in log space so it underflows cleanly to zero.
    """
    if not n_alpha > 0:
        raise DomainError(f"n_alpha must be positive, got {n_alpha!r}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("gamma_density is supported on x >= 0")
    lg = log_gamma(n_alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        logv = -x + (n_alpha - 1.0) * np.log(x) - lg
        out = np.exp(logv)
    if n_alpha == 1.0:
        out = np.where(x == 0, 1.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def phi_char(n: int, alpha: float, y):
    """Characteristic function of the centred, rescaled trace law.

    ``phi_N(y) = exp(i y (N+alpha)) (1 + i y/N)^{-N(N+alpha)}`` with the
    principal branch; accepts complex ``y`` off the cut ``y in i[N, inf)``.
    """
    if n < 1:
        raise DomainError("n must be a positive integer")
    if not alpha > -1:
        raise DomainError("alpha must exceed -1")
    y = np.asarray(y)
    n_alpha = n * (n + alpha)
    out = np.exp(1j * y * (n + alpha) - n_alpha * np.log(1.0 + 1j * y / n))
    if out.ndim == 0:
        return complex(out)
    return out


def log_abs_phi_char(n: int, alpha: float, y):
    """``ln |phi_N(y)|`` for real y: ``-(N(N+alpha)/2) ln(1 + y^2/N^2)``."""
    y = np.asarray(y, dtype=float)
    return -0.5 * n * (n + alpha) * np.log1p((y / n) ** 2)
