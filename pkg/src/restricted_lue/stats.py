"""Empirical statistics of sampled spectra and their exact counterparts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import Spectrum, SpectrumBatch, entropy_values
from .errors import ContractError, DomainError, NumericError
from .laguerre import KernelContext, LimitingKernel, kernel_cd, limiting_kernel_eval, mp_density, phi_all

# --- histograms -------------------------------------------------------------


@dataclass(frozen=True)
class Histogram:
    """Pooled eigenvalue counts over ``bins`` equal bins of ``range``.

    Bins are half-open ``[lo, lo + h)`` except the last, which is closed
    (the numpy convention).  Eigenvalues outside the range go to ``overflow``.
    """

    range: tuple
    bins: int
    counts: np.ndarray
    total_draws: int
    n: int
    overflow: int

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.range[0], self.range[1], self.bins + 1)

    @property
    def width(self) -> float:
        return (self.range[1] - self.range[0]) / self.bins

    def density(self) -> np.ndarray:
        """Per-draw eigenvalue density; integrates to (in-range count)/draws."""
        return self.counts / (self.total_draws * self.width)

    def standard_errors(self, expected_prob) -> np.ndarray:
        """Binomial standard error of each count given per-eigenvalue bin probabilities."""
        p = np.asarray(expected_prob, dtype=float)
        trials = self.total_draws * self.n
        return np.sqrt(trials * p * (1.0 - p))


def _as_matrix(samples):
    if isinstance(samples, SpectrumBatch):
        return samples.values
    if isinstance(samples, Spectrum):
        return np.atleast_2d(samples.values)
    rows = [np.asarray(s.values if isinstance(s, Spectrum) else s, dtype=float) for s in samples]
    if not rows:
        raise ContractError("empty sample set")
    if len({r.size for r in rows}) != 1:
        raise ContractError("all spectra must share N")
    return np.vstack(rows)


def histogram(samples, range, bins: int) -> Histogram:
    """Pool every eigenvalue of every spectrum into a fixed-range histogram."""
    lo, hi = map(float, range)
    if not bins >= 1 or not lo < hi:
        raise DomainError("need bins >= 1 and lo < hi")
    vals = _as_matrix(samples)
    if vals.size == 0:
        raise ContractError("empty sample set")
    counts, _ = np.histogram(vals.ravel(), bins=int(bins), range=(lo, hi))
    inside = int(counts.sum())
    return Histogram((lo, hi), int(bins), counts, vals.shape[0], vals.shape[1], vals.size - inside)


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance ``sup |F_n - F|`` over the sample points."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise ContractError("empty sample set")
    f = np.asarray(cdf(x), dtype=float)
    n = x.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


# --- counting statistics ----------------------------------------------------


@dataclass(frozen=True)
class CountingMoments:
    mean: float
    variance: float
    error: float


_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


def _gram(ctx, a, b, panels):
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    x = (mids[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    phi = phi_all(ctx, x)[: ctx.n]
    return (phi * w) @ phi.T


def counting_moments_exact(ctx: KernelContext, interval, *, rtol: float = 1e-10, max_panels: int = 4096) -> CountingMoments:
    """Mean and variance of the number of eigenvalues in ``(a, b)``.

    With ``G_jk = int_a^b phi_j phi_k`` the determinantal identities give
    ``mean = tr G`` and ``variance = mean - int int K^2 = tr G - tr G^2``.
    G is assembled by composite 32-point Gauss-Legendre, doubling the panel
    count until both moments move by less than ``rtol``; ``error`` is the
    last change.
    """
    if not ctx.is_real:
        raise DomainError("counting moments need a real scale")
    a, b = map(float, interval)
    if not (0 <= a < b and math.isfinite(b)):
        raise DomainError("need 0 <= a < b < inf")
    panels = max(4, ctx.n)
    prev = None
    while panels <= max_panels:
        g = _gram(ctx, a, b, panels)
        mean = float(np.trace(g))
        var = mean - float(np.sum(g * g))
        if prev is not None:
            err = max(abs(mean - prev[0]), abs(var - prev[1]))
            if err <= rtol * max(1.0, abs(mean)):
                return CountingMoments(mean, max(var, 0.0), err)
        prev = (mean, var)
        panels *= 2
    raise NumericError(f"counting quadrature did not settle within {max_panels} panels")


def counting_moments_mc(samples, interval):
    """Sample mean/variance of window counts with their standard errors."""
    vals = _as_matrix(samples)
    a, b = interval
    counts = np.count_nonzero((vals > a) & (vals < b), axis=1).astype(float)
    n = counts.size
    mean = counts.mean()
    dev = counts - mean
    var = dev.var(ddof=1)
    m4 = np.mean(dev**4)
    se_mean = math.sqrt(var / n)
    se_var = math.sqrt(max(m4 - var * var, 0.0) / n)
    return mean, se_mean, var, se_var


# --- kernel convergence -----------------------------------------------------


@dataclass(frozen=True)
class Regime:
    """``bulk`` (with its point ``u`` in (0, 1)), ``soft`` or ``hard``."""

    kind: str
    u: float | None = None

    def __post_init__(self):
        if self.kind not in ("bulk", "soft", "hard"):
            raise DomainError(f"unknown regime {self.kind!r}")
        if self.kind == "bulk" and not (self.u is not None and 0 < self.u < 1):
            raise DomainError("bulk regime needs u in (0, 1)")

    def __str__(self):
        return f"bulk({self.u:g})" if self.kind == "bulk" else self.kind


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    regime: Regime
    window: str
    sup_error: float
    points_checked: int


DEFAULT_WINDOWS = {
    "bulk": np.linspace(-2.0, 2.0, 17),
    "soft": np.linspace(-4.0, 2.0, 31),
    "hard": np.linspace(0.5, 20.0, 40),
}


def kernel_convergence(regime: Regime, n: int, alpha: float = 0.0, window_grid=None) -> ConvergenceRow:
    """Sup distance between the locally rescaled finite-N kernel and its limit.

    All kernels use ``s = 1/(4N)`` so the global law lives on (0, 1]:

    * bulk: ``x = u + t/(N psi(u))``; ``|K/(N psi)|`` against ``|sinc|`` off
      the diagonal (the finite-N kernel carries a phase that cancels in
      determinants) and exact values on it;
    * soft: ``x = 1 + t/(2N)^{2/3}`` against the Airy kernel;
    * hard: ``x = t/(16N^2)`` against the Bessel kernel of index alpha.

    Every ordered pair ``(t_i, t_j)`` of the grid is compared.
    """
    grid = DEFAULT_WINDOWS[regime.kind] if window_grid is None else np.asarray(window_grid, dtype=float)
    if grid.size < 4:
        raise DomainError("window grid needs at least 4 points")
    ctx = KernelContext(n, alpha, 1.0 / (4 * n))
    ti, tj = np.meshgrid(grid, grid, indexing="ij")
    if regime.kind == "bulk":
        c = n * float(mp_density(regime.u))
        fin = kernel_cd(ctx, regime.u + ti / c, regime.u + tj / c) / c
        lim = limiting_kernel_eval(LimitingKernel("sine"), ti, tj)
        diag = ti == tj
        err = np.where(diag, np.abs(fin - lim), np.abs(np.abs(fin) - np.abs(lim)))
    elif regime.kind == "soft":
        c = (2.0 * n) ** (2.0 / 3.0)
        fin = kernel_cd(ctx, 1.0 + ti / c, 1.0 + tj / c) / c
        err = np.abs(fin - limiting_kernel_eval(LimitingKernel("airy"), ti, tj))
    else:
        if np.any(grid <= 0):
            raise DomainError("hard-edge grid must be positive")
        c = 16.0 * n * n
        fin = kernel_cd(ctx, ti / c, tj / c) / c
        err = np.abs(fin - limiting_kernel_eval(LimitingKernel("bessel", alpha), ti, tj))
    if not np.all(np.isfinite(err)):
        raise NumericError(f"non-finite kernel comparison in regime {regime}")
    window = f"t in [{grid.min():g}, {grid.max():g}] x {grid.size} points"
    return ConvergenceRow(n, regime, window, float(err.max()), int(err.size))


# --- entropy ----------------------------------------------------------------


@dataclass(frozen=True)
class PageAverage:
    mean: float
    std_error: float
    paper_approx: float


def page_exact(n: int, m: int) -> float:
    """Exact mean entropy ``sum_{k=M+1}^{MN} 1/k - (N-1)/(2M)`` for ``N <= M``."""
    if not (1 <= n <= m):
        raise DomainError("need 1 <= N <= M")
    return math.fsum(1.0 / k for k in range(m + 1, m * n + 1)) - (n - 1) / (2.0 * m)


def page_average(samples) -> PageAverage:
    """Monte Carlo mean entropy of trace-one spectra with its standard error."""
    if isinstance(samples, SpectrumBatch):
        specs = {samples.spec}
    else:
        samples = list(samples)
        if not samples:
            raise ContractError("empty sample set")
        specs = {s.spec for s in samples}
    if len(specs) != 1:
        raise ContractError("samples mix different ensembles")
    spec = specs.pop()
    if spec.constraint != "fixed" or spec.param != 1.0:
        raise ContractError("page_average needs fixed(1) spectra")
    ent = entropy_values(_as_matrix(samples))
    k = ent.size
    se = float(ent.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0
    approx = math.log(spec.n) - spec.n / (2.0 * spec.m)
    return PageAverage(math.fsum(ent) / k, se, approx)
