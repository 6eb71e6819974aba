"""Exact one-point functions of the fixed- and bounded-trace ensembles.

Three independent routes:

* series: the LUE one-point function at scale ``1/(4N)`` is
  ``x^a e^{-4Nx} sum_l c_l x^l``; inverting the Laplace transform term by
  term turns every monomial into a Beta-type factor ``x^{l'} (r-x)^{...}``.
* fourier: inverse Fourier transform in the trace variable of
  ``phi_N(y) R_1^{LUE, 1/(4N(1+iy/N))}(x)``, using the complex-scale kernel.
* radial: the bounded-trace density is the fixed-trace density mixed over
  the radial law ``N_a u^{N_a-1}`` on [0, 1].

The monomial coefficients alternate in sign and cancel heavily (about 19
digits in the bulk at N = 24), so they live in mpmath at extended
precision and sums are evaluated with precision raised until the observed
cancellation is covered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath as mp
import numpy as np
from scipy import integrate

from .ensembles import EnsembleSpec
from .errors import DomainError, NumericError, RangeError
from .laguerre import KernelContext, _phi_table, kernel_cd
from .specfun import gamma_density, log_gamma

MAX_SERIES_N = 24
MAX_FOURIER_N = 12
_EVAL_DPS = 30
_TARGET_DIGITS = 17


def _coef_dps(n):
    return 60 + 3 * n


@dataclass(frozen=True)
class PolyExpansion:
    """Monomial coefficients of the weight-stripped LUE one-point function.

    ``R_1^{LUE, 1/(4N)}(x) = x^alpha e^{-4Nx} sum_{l=0}^{2N-2} c_l x^l``.
    ``z_coefficients`` are the same polynomial in ``z = 4Nx`` without the
    prefactor, ``c_l = (4N)^{1+alpha+l} z_coefficients[l]``, kept as mpf.
    """

    n: int
    alpha: float
    z_coefficients: tuple = field(repr=False)
    dps: int = field(repr=False)

    @property
    def coefficients(self) -> np.ndarray:
        base = 4 * self.n
        with mp.workdps(self.dps):
            return np.array(
                [float(c * mp.power(base, 1 + mp.mpf(self.alpha) + l)) for l, c in enumerate(self.z_coefficients)]
            )

    @property
    def n_alpha(self) -> float:
        return self.n * (self.n + self.alpha)

    def density(self, x):
        """Reconstructed ``R_1^{LUE, 1/(4N)}`` at x (scalar or array)."""
        xs = np.asarray(x, dtype=float)
        out = np.array([self._density_one(v) for v in xs.ravel()]).reshape(xs.shape)
        return out.item() if out.ndim == 0 else out

    def _density_one(self, x):
        if x < 0:
            return 0.0
        z = 4.0 * self.n * x
        poly = _stable_sum(lambda: [c * mp.power(mp.mpf(z), l) for l, c in enumerate(self.z_coefficients)], self.dps)
        with mp.workdps(self.dps):
            pref = 4 * self.n * mp.exp(-mp.mpf(z)) * (mp.power(mp.mpf(z), mp.mpf(self.alpha)) if self.alpha else 1)
            return float(pref * poly)

    def normalization(self) -> float:
        """``int R_1 dx`` by term-wise Gamma integrals (should equal N)."""
        with mp.workdps(self.dps):
            a = mp.mpf(self.alpha)
            return float(mp.fsum(c * mp.gamma(a + l + 1) for l, c in enumerate(self.z_coefficients)))


def _stable_sum(make_terms, max_dps):
    """Sum mp terms, raising precision until cancellation is covered."""
    dps = _EVAL_DPS
    while True:
        with mp.workdps(dps):
            terms = make_terms()
            total = mp.fsum(terms)
            size = mp.fsum(abs(t) for t in terms)
            if size == 0:
                return mp.mpf(0)
            lost = 0 if total == 0 else max(0, int(mp.ceil(mp.log10(size / abs(total)))))
            if total == 0:
                lost = dps
        if dps - lost >= _TARGET_DIGITS:
            return total
        if dps >= max_dps:
            # the sum sits at (or near) a zero: the absolute error is already
            # below size * 10^-max_dps, far under any double-precision scale
            return total
        dps = min(lost + _TARGET_DIGITS + 5, max_dps)


def lue_poly_expansion(n: int, alpha: float) -> PolyExpansion:
    """Coefficients of ``R_1^{LUE, 1/(4N)}`` via ``sum_k h_k(z)^2``, ``N <= 24``."""
    if int(n) != n or not (1 <= n <= MAX_SERIES_N):
        raise RangeError(f"N must lie in [1, {MAX_SERIES_N}]")
    if not alpha > -1:
        raise DomainError("alpha must exceed -1")
    return _poly_expansion(int(n), float(alpha))


@lru_cache(maxsize=128)
def _poly_expansion(n, alpha):
    dps = _coef_dps(n)
    with mp.workdps(dps):
        a = mp.mpf(alpha)
        # eta_{k,j} eta_{k,i} = (-1)^{i+j} G(k+a+1) k! / ((k-i)!(k-j)! G(a+i+1) G(a+j+1) i! j!)
        inv_g = [1 / (mp.gamma(a + j + 1) * mp.factorial(j)) for j in range(n)]
        zc = [mp.mpf(0)] * (2 * n - 1)
        for k in range(n):
            lead = mp.gamma(k + a + 1) * mp.factorial(k)
            row = [(-1) ** (k - j) * inv_g[j] / mp.factorial(k - j) for j in range(k + 1)]
            for i in range(k + 1):
                for j in range(k + 1):
                    zc[i + j] += lead * row[i] * row[j]
        return PolyExpansion(n, alpha, tuple(zc), dps)


@lru_cache(maxsize=128)
def _ftlue_weights(n, alpha):
    """``A_l = zc_l Gamma(N_a) / Gamma(N_a - 1 - l')`` in mp."""
    pe = _poly_expansion(n, alpha)
    n_alpha = n * (n + alpha)
    with mp.workdps(pe.dps):
        na = mp.mpf(n) * (n + mp.mpf(alpha))
        lg = mp.loggamma(na)
        out = []
        for l, c in enumerate(pe.z_coefficients):
            arg = na - 1 - l - mp.mpf(alpha)
            if arg <= 0:
                raise DomainError(
                    f"Gamma argument N_a - 1 - l' = {float(arg):g} <= 0 for term l={l} "
                    f"(N={n}, alpha={alpha}, N_a={n_alpha:g})"
                )
            out.append(c * mp.exp(lg - mp.loggamma(arg)))
        return tuple(out), pe.dps


def ftlue_density_series(pe: PolyExpansion, r: float, x):
    """Fixed-trace one-point function ``R_1^{delta, r}(x)`` (series route).

    ``R_1^{delta,r}(x) = (1/r) sum_l A_l q^{l'} (1-q)^{N_a - 2 - l'}``,
    ``q = x/r``, zero outside ``[0, r]``.
    """
    if not r > 0:
        raise DomainError("trace r must be positive")
    weights, dps = _ftlue_weights(pe.n, pe.alpha)
    xs = np.asarray(x, dtype=float)
    out = np.array([_ftlue_one(pe, weights, dps, r, v) for v in xs.ravel()]).reshape(xs.shape)
    return out.item() if out.ndim == 0 else out


def _ftlue_one(pe, weights, dps, r, x):
    q = x / r
    if q < 0 or q > 1:
        return 0.0
    alpha = pe.alpha
    top = len(weights) - 1
    edge_exp = pe.n_alpha - 2 - alpha - top  # exponent of (1-q) on the highest term
    if q == 1.0:
        if edge_exp < 0:
            return math.inf
        if edge_exp > 0:
            return 0.0
    if q == 0.0 and alpha != 0:
        return 0.0 if alpha > 0 else math.inf

    def terms():
        qq = mp.mpf(q)
        pp = 1 - qq
        # sum_l A_l q^l (1-q)^{top-l}
        out = []
        qpow = mp.mpf(1)
        for l in range(top + 1):
            out.append(weights[l] * qpow * mp.power(pp, top - l))
            qpow *= qq
        return out

    inner = _stable_sum(terms, dps)
    with mp.workdps(_EVAL_DPS):
        qq = mp.mpf(q)
        pref = mp.power(1 - qq, mp.mpf(edge_exp)) if edge_exp != 0 else mp.mpf(1)
        if alpha:
            pref *= mp.power(qq, mp.mpf(alpha))
        return float(pref * inner / r)


# --- Fourier route -------------------------------------------------------------


@dataclass(frozen=True)
class FourierResult:
    value: float
    imag_residue: float
    angle: float
    t_max: float
    tail_bound: float


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def ftlue_density_fourier(n: int, alpha: float, x: float, *, tol: float = 1e-12, angle: float | None = None,
                          full_output: bool = False):
    """``R_1^{delta, (N+alpha)/4}(x)`` by inverting the trace Fourier transform.

    ``R_1^{delta} N gamma(N_a) = (1/2pi) int phi_N(y) R_1^{LUE, 1/(4N(1+iy/N))}(x) dy``.
    The integrand is analytic in the upper half plane (for ``x < (N+alpha)/4``)
    and carries ``e^{i y (N + alpha - 4x)}``, so the line is deformed onto the
    rays ``arg y = angle`` and ``arg y = pi - angle`` where it decays
    exponentially; with ``N = 2`` it only decays like ``1/y`` on the line.
    """
    if int(n) != n or not (1 <= n <= MAX_FOURIER_N):
        raise RangeError(f"N must lie in [1, {MAX_FOURIER_N}]")
    if not alpha > -1:
        raise DomainError("alpha must exceed -1")
    r0 = (n + alpha) / 4.0
    if x > r0:
        # e^{i y (N + alpha - 4x)} decays in the lower half plane, which holds
        # no singularity: the integral vanishes (outside the support)
        return FourierResult(0.0, 0.0, 0.0, 0.0, 0.0) if full_output else 0.0
    if x == r0 or x < 0 or (x == 0 and alpha < 0):
        raise DomainError(f"Fourier route needs 0 <= x < {r0:g} (x > 0 when alpha < 0)")
    n_alpha = n * (n + alpha)
    omega = n + alpha - 4.0 * x
    if angle is None:
        # keep |1 + iy/N|^{-N_a} amplification along the ray below 10
        angle = min(math.pi / 4, math.acos(10.0 ** (-1.0 / n_alpha)))
    unit = KernelContext(n, alpha, 1.0)
    rays = (np.exp(1j * angle), -np.exp(-1j * angle))
    jac = (np.exp(1j * angle), np.exp(-1j * angle))

    def g(t, ray, dj):
        y = t * ray
        w = 1.0 + 1j * y / n
        z = 4.0 * n * x * w
        log_phi = 1j * y * (n + alpha) - n_alpha * np.log(w)
        log_s = -math.log(4.0 * n) - np.log(w)
        table = _phi_table(unit, z, n, log_shift=0.5 * (log_phi - log_s))
        return np.sum(table * table, axis=0) * dj

    decay = omega * math.sin(angle)
    width = min(0.5, math.pi / (2.0 * max(omega * math.cos(angle), 1.0)))
    batch = 64
    totals = [0j, 0j]
    t0 = 0.0
    t_cap = 1e5
    tail = math.inf
    while True:
        edges = t0 + width * np.arange(batch + 1)
        mids = 0.5 * (edges[1:] + edges[:-1])
        nodes = (mids[:, None] + 0.5 * width * _GL_NODES[None, :]).ravel()
        wts = np.tile(0.5 * width * _GL_WEIGHTS, batch)
        end_mag = 0.0
        for idx in range(2):
            vals = g(nodes, rays[idx], jac[idx])
            if not np.all(np.isfinite(vals)):
                raise NumericError(f"non-finite Fourier integrand near t={t0:g}")
            totals[idx] += np.sum(vals * wts)
            end_mag = max(end_mag, float(np.max(np.abs(vals[-_GL_NODES.size:]))))
        t0 = edges[-1]
        scale = max(abs(totals[0] + totals[1]), 1e-300)
        # exponential envelope from the ray tilt, algebraic decay at worst 1/t
        tail = end_mag * (1.0 / decay + width) if decay > 0 else end_mag * t0
        if tail < tol * scale:
            break
        if t0 > t_cap:
            raise NumericError(f"Fourier tail bound {tail:.3e} above tolerance at t={t0:g}")
    integral = (totals[0] + totals[1]) / (2.0 * math.pi)
    norm = n * gamma_density(n_alpha, n_alpha)
    value = integral.real / norm
    residue = abs(integral.imag) / norm
    if residue > 1e-8 * max(abs(value), 1e-12):
        raise NumericError(f"imaginary residue {residue:.3e} too large relative to {value:.3e}")
    if full_output:
        return FourierResult(value, residue, angle, t0, tail / norm)
    return value


# --- bounded trace -------------------------------------------------------------


def btlue_density_radial(n: int, alpha: float, r: float, x, *, tol: float = 1e-11):
    """Bounded-trace one-point function ``R_1^{theta, r}(x)``.

    ``R_1^{theta,r}(x) = int_0^1 N_a u^{N_a - 2} R_1^{delta,r}(x/u) du``.  The
    radial weight concentrates within ``10 ln(N_a)/N_a`` of ``u = 1``; the
    mass below that window is ``u0^{N_a}`` and is bounded against the
    density's maximum before being dropped.
    """
    if not r > 0:
        raise DomainError("trace r must be positive")
    xs = np.asarray(x, dtype=float)
    n_alpha = n * (n + alpha)
    if n == 1:
        q = np.clip(xs / r, 0.0, None)
        out = np.where((xs >= 0) & (xs <= r), n_alpha * np.power(q, n_alpha - 1.0) / r, 0.0)
        return out.item() if out.ndim == 0 else out
    pe = lue_poly_expansion(n, alpha)
    width = 10.0 * math.log(n_alpha) / n_alpha
    u0 = max(0.0, 1.0 - width)
    peak = None
    if u0 > 0:
        grid = np.linspace(0.0, r, 257)[1:-1]
        peak = 2.0 * float(np.max(ftlue_density_series(pe, r, grid)))

    def one(xv):
        if xv < 0 or xv > r:
            return 0.0
        lo = xv / r
        start = lo
        if u0 > lo:
            remainder = n_alpha * u0 ** (n_alpha - 1) * peak * (u0 - lo)
            if remainder < tol:
                start = u0

        def f(u):
            return n_alpha * u ** (n_alpha - 2) * ftlue_density_series(pe, r, xv / u)

        if start >= 1.0:
            return 0.0
        val, err = integrate.quad(f, start, 1.0, epsabs=tol, epsrel=1e-12, limit=200)
        if not math.isfinite(val) or err > 1e3 * tol + 1e-9 * abs(val):
            raise NumericError(f"radial quadrature failed at x={xv:g} (error {err:.2e})")
        return val

    out = np.array([one(v) for v in xs.ravel()]).reshape(xs.shape)
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class ConstrainedDensity:
    """Density samples of a constrained ensemble along a grid."""

    spec: EnsembleSpec
    grid: np.ndarray
    values: np.ndarray
    route: str


def constrained_density(spec: EnsembleSpec, grid, route: str = "series") -> ConstrainedDensity:
    """Evaluate one exact route on a grid (series/fourier/radial)."""
    grid = np.asarray(grid, dtype=float)
    n, a, r = spec.n, spec.alpha, spec.param
    if spec.constraint == "fixed":
        if route == "series":
            vals = ftlue_density_series(lue_poly_expansion(n, a), r, grid)
        elif route == "fourier":
            r0 = (n + a) / 4.0
            ratio = r0 / r
            vals = np.array([
                ftlue_density_fourier(n, a, v * ratio) * ratio if 0 < v < r else 0.0 for v in grid
            ])
        else:
            raise DomainError(f"route {route!r} does not apply to fixed trace")
    elif spec.constraint == "bounded":
        if route != "radial":
            raise DomainError(f"route {route!r} does not apply to bounded trace")
        vals = btlue_density_radial(n, a, r, grid)
    else:
        raise DomainError("constrained densities need a fixed or bounded ensemble")
    return ConstrainedDensity(spec, grid, np.asarray(vals, dtype=float), route)


# --- transform identities -------------------------------------------------------


def prop2_check(n: int, alpha: float, s: float, x: float) -> tuple[float, float]:
    """Both sides of ``R_1^{LUE,s}(x) = int_0^inf R_1^{delta,u}(x) gamma(u/s) du/s``."""
    if int(n) != n or not (1 <= n <= 8):
        raise RangeError("N must lie in [1, 8]")
    if not (s > 0 and x > 0):
        raise DomainError("s and x must be positive")
    lhs = float(kernel_cd(KernelContext(n, alpha, s), x, x))
    n_alpha = n * (n + alpha)
    if n == 1:
        return lhs, float(gamma_density(n_alpha, x / s) / s)
    pe = lue_poly_expansion(n, alpha)

    def f(u):
        return ftlue_density_series(pe, u, x) * gamma_density(n_alpha, u / s) / s

    mode = max(x, (n_alpha - 1.0) * s)
    spread = math.sqrt(n_alpha) * s
    hi = mode + (40.0 + 12.0 * math.sqrt(n_alpha)) * spread + 40.0 * s
    pts = sorted({p for p in (mode, mode - 3 * spread, mode + 3 * spread) if x < p < hi})
    val, err = integrate.quad(f, x, hi, points=pts or None, epsabs=0.0, epsrel=1e-12, limit=400)
    if not math.isfinite(val) or err > 1e-9 * abs(val):
        raise NumericError(f"integral-identity quadrature error {err:.2e} too large")
    return lhs, val


@dataclass(frozen=True)
class TailEstimate:
    log_tail: float
    predicted: float

    @property
    def ratio(self) -> float:
        return self.log_tail / self.predicted


def concentration_tail(n: int, alpha: float, b: float, mode: str) -> TailEstimate:
    """Exact log tail quantity versus its leading-order prediction.

    ``fixed``: ``ln[gamma(N_a(1-b)) N_a (1-b)]``, the bound on the trace law
    below ``(1-b)`` times its mean; predicted ``-N^2 b^2/2``.
    ``bounded``: ``ln (1-b)^{N_a}``, the radial mass below ``1-b``;
    predicted ``-N^2 b``.
    """
    if not (0 < b < 1):
        raise DomainError("b must lie in (0, 1)")
    n_alpha = n * (n + alpha)
    if mode == "fixed":
        v = n_alpha * (1.0 - b)
        log_tail = -v + n_alpha * math.log(v) - log_gamma(n_alpha)
        return TailEstimate(log_tail, -0.5 * n * n * b * b)
    if mode == "bounded":
        return TailEstimate(n_alpha * math.log1p(-b), -float(n * n) * b)
    raise DomainError(f"unknown mode {mode!r}")
