"""Orthonormal Laguerre functions, the finite-N LUE kernel and its limits.

Conventions follow the positive-leading-coefficient normalization: the
Laguerre polynomial ``L_k^alpha`` has leading coefficient ``+1/k!`` (the
common convention times ``(-1)^k``), and

    phi_k(x) = x^{alpha/2} e^{-x/2} h_k(x),   int_0^inf phi_j phi_k = delta_jk.

With scale ``s`` the functions are ``phi_k(x, s) = s^{-1/2} phi_k(x/s)`` and
the kernel is ``K_N(x, y, s) = sum_{k<N} phi_k(x, s) phi_k(y, s)``.  The
scale may be complex; powers use the principal branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import BranchError, DomainError, NumericError, RangeError
from .specfun import airy, bessel_j, log_gamma

MAX_COEFF_DEGREE = 64
# |x - y| below this fraction of max(|x|, |y|) switches to the direct sum.
CD_SWITCH = 1e-3
_RESCALE = 1e200
_LOG_RESCALE = math.log(_RESCALE)


def laguerre_coeffs(k: int, alpha: float) -> list[float]:
    """Monomial coefficients of ``L_k^alpha`` (index = power), leading ``1/k!``."""
    if not (0 <= k <= MAX_COEFF_DEGREE):
        raise RangeError(f"degree must lie in [0, {MAX_COEFF_DEGREE}], got {k}")
    if not alpha > -1:
        raise DomainError("alpha must exceed -1")
    coeffs = [0.0] * (k + 1)
    c = 1.0 / math.factorial(k)
    coeffs[k] = c
    for j in range(k, 0, -1):
        c = -c * j * (alpha + j) / (k - j + 1)
        coeffs[j - 1] = c
    return coeffs


@dataclass(frozen=True)
class KernelContext:
    """Recurrence data for ``phi_0 .. phi_n`` at fixed ``alpha`` and scale."""

    n: int
    alpha: float = 0.0
    scale: complex = 1.0
    diag: np.ndarray = field(init=False, repr=False, compare=False)
    offdiag: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        if not self.alpha > -1:
            raise DomainError(f"alpha must exceed -1, got {self.alpha!r}")
        s = complex(self.scale)
        if not s.real > 0:
            raise DomainError(f"scale must have positive real part, got {self.scale!r}")
        if s.imag == 0:
            object.__setattr__(self, "scale", s.real)
        k = np.arange(self.n + 2, dtype=float)
        # x h_k = a_{k+1} h_{k+1} + b_k h_k + a_k h_{k-1}
        object.__setattr__(self, "diag", 2.0 * k + self.alpha + 1.0)
        object.__setattr__(self, "offdiag", np.sqrt(k * (k + self.alpha)))

    @property
    def is_real(self) -> bool:
        return not isinstance(self.scale, complex)

    def with_scale(self, scale) -> "KernelContext":
        return KernelContext(self.n, self.alpha, scale)

    def h0(self) -> float:
        return math.exp(-0.5 * log_gamma(self.alpha + 1.0))

    def h1(self, x):
        """Closed form of the degree-one orthonormal polynomial at unit scale."""
        return (np.asarray(x) - self.alpha - 1.0) * math.exp(-0.5 * log_gamma(self.alpha + 2.0))


def _is_integer(a):
    return float(a).is_integer()


def _phi_table(ctx, x, count, log_shift=0.0):
    """``phi_k(x, s)`` for k < count, shape ``(count,) + x.shape``.

    The recurrence runs on the bare polynomials with a per-point log scale
    that absorbs both the weight ``x^{alpha/2} e^{-x/2}`` and periodic
    rescaling, so neither the weight nor the polynomials under/overflow.
    ``log_shift`` is added to every log scale (used to fold a common factor
    into the product before exponentiating).
    """
    s = ctx.scale
    x = np.asarray(x)
    complex_mode = np.iscomplexobj(x) or not ctx.is_real or np.iscomplexobj(log_shift)
    z = x / s
    if complex_mode:
        z = z.astype(complex)
        if not _is_integer(ctx.alpha):
            on_cut = (z.imag == 0) & (z.real < 0)
            if np.any(on_cut):
                raise BranchError("x/s on the negative real axis with non-integer alpha")
    else:
        z = z.astype(float)
        if np.any(z < 0):
            if not _is_integer(ctx.alpha):
                raise BranchError("negative argument with non-integer alpha has no principal value")
            z = z.astype(complex)
            complex_mode = True
    dtype = complex if complex_mode else float
    with np.errstate(divide="ignore", invalid="ignore"):
        if ctx.alpha == 0:
            logw = -0.5 * z
        else:
            logw = 0.5 * ctx.alpha * np.log(z) - 0.5 * z
    logw = logw - 0.5 * np.log(s) - 0.5 * log_gamma(ctx.alpha + 1.0) + log_shift
    b = ctx.diag
    a = ctx.offdiag
    out = np.empty((count,) + z.shape, dtype=dtype)
    logscale = np.zeros(z.shape)
    prev = np.zeros(z.shape, dtype=dtype)
    cur = np.ones(z.shape, dtype=dtype)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        out[0] = np.exp(logw)
        for k in range(count - 1):
            nxt = ((z - b[k]) * cur - a[k] * prev) / a[k + 1]
            prev, cur = cur, nxt
            big = np.abs(cur) > _RESCALE
            if np.any(big):
                cur = np.where(big, cur / _RESCALE, cur)
                prev = np.where(big, prev / _RESCALE, prev)
                logscale = logscale + np.where(big, _LOG_RESCALE, 0.0)
            out[k + 1] = cur * np.exp(logw + logscale)
    # x = 0 with alpha = 0: exp(logw) is finite; alpha > 0 gives exp(-inf)=0.
    return out


def phi_eval(ctx: KernelContext, k: int, x):
    """``phi_k(x, s)`` for ``0 <= k <= ctx.n`` (scalar or array x)."""
    if not (0 <= k <= ctx.n):
        raise RangeError(f"k must lie in [0, {ctx.n}]")
    val = _phi_table(ctx, x, k + 1)[k]
    return val.item() if np.ndim(val) == 0 else val


def phi_all(ctx: KernelContext, x):
    """Stacked ``phi_0 .. phi_n`` at x, shape ``(n+1,) + shape(x)``."""
    return _phi_table(ctx, x, ctx.n + 1)


def kernel_sum(ctx: KernelContext, x, y):
    """Kernel by the direct sum over ``k < N``."""
    x, y = np.broadcast_arrays(np.asarray(x), np.asarray(y))
    px = _phi_table(ctx, x, ctx.n)
    py = _phi_table(ctx, y, ctx.n)
    return np.sum(px * py, axis=0)


def kernel_cd_formula(ctx: KernelContext, x, y):
    """Two-term Christoffel-Darboux expression; undefined at x = y."""
    x, y = np.broadcast_arrays(np.asarray(x), np.asarray(y))
    n = ctx.n
    px = _phi_table(ctx, x, n + 1)
    py = _phi_table(ctx, y, n + 1)
    a_n = math.sqrt(n * (n + ctx.alpha))
    with np.errstate(divide="ignore", invalid="ignore"):
        return a_n * (px[n] * py[n - 1] - py[n] * px[n - 1]) * ctx.scale / (x - y)


def kernel_cd(ctx: KernelContext, x, y):
    """Finite-N kernel ``K_N(x, y, s)``.

    Christoffel-Darboux form away from the diagonal; direct sum when
    ``|x - y| <= CD_SWITCH * max(|x|, |y|)``.
    """
    x, y = np.broadcast_arrays(np.asarray(x), np.asarray(y))
    n = ctx.n
    px = _phi_table(ctx, x, n + 1)
    py = _phi_table(ctx, y, n + 1)
    diff = x - y
    near = np.abs(diff) <= CD_SWITCH * np.maximum(np.abs(x), np.abs(y))
    a_n = math.sqrt(n * (n + ctx.alpha))
    with np.errstate(divide="ignore", invalid="ignore"):
        cd = a_n * (px[n] * py[n - 1] - py[n] * px[n - 1]) * ctx.scale / diff
    if np.any(near):
        direct = np.sum(px[:n] * py[:n], axis=0)
        cd = np.where(near, direct, cd)
    return cd.item() if cd.ndim == 0 else cd


def kernel_integral_rep(ctx: KernelContext, x: float, y: float, *, rtol: float = 1e-12) -> float:
    """Kernel from its integral representation (independent of the CD formula).

    ``K_N(x, y) = sqrt(N(N+a))/2 int_0^inf [S1(x+z) S2(y+z) + S1(y+z) S2(x+z)] dz``
    with ``S1 = (sqrt(N) phi_N + sqrt(N+a) phi_{N-1}) / x`` and ``S2`` the
    same with the square roots exchanged; scale s enters as
    ``K_N(x, y, s) = K_N(x/s, y/s) / s``.
    """
    if not ctx.is_real:
        raise DomainError("integral representation needs a real scale")
    if not (x > 0 and y > 0):
        raise DomainError("integral representation needs x, y > 0")
    n, a = ctx.n, ctx.alpha
    unit = ctx.with_scale(1.0)
    xs, ys = x / ctx.scale, y / ctx.scale
    rn, rna = math.sqrt(n), math.sqrt(n + a)

    def s12(t):
        p = _phi_table(unit, np.asarray(t, dtype=float), n + 1)
        return (rn * p[n] + rna * p[n - 1]) / t, (rna * p[n] + rn * p[n - 1]) / t

    def integrand(z):
        s1x, s2x = s12(xs + z)
        s1y, s2y = s12(ys + z)
        return float(s1x * s2y + s1y * s2x)

    # oscillations live below ~4N + 2a + 2 past the larger argument
    knee = max(0.0, 4.0 * n + 2.0 * a + 10.0 - min(xs, ys))
    total = 0.0
    err = 0.0
    for lo, hi in ((0.0, knee), (knee, np.inf)):
        if hi == lo:
            continue
        val, e, info = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=rtol, limit=500, full_output=True)[:3]
        total += val
        err += e
    value = math.sqrt(n * (n + a)) / 2.0 * total / ctx.scale
    bound = math.sqrt(n * (n + a)) / 2.0 * err / ctx.scale
    if not math.isfinite(value) or bound > 1e-8 * max(abs(value), 1e-300):
        raise NumericError(f"integral representation did not converge: value={value}, error bound={bound}")
    return value


# --- limiting kernels -------------------------------------------------------


@dataclass(frozen=True)
class LimitingKernel:
    """One of the universal kernels: ``sine``, ``airy`` or ``bessel`` (with alpha)."""

    kind: str
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("sine", "airy", "bessel"):
            raise DomainError(f"unknown limiting kernel {self.kind!r}")
        if self.kind == "bessel" and not self.alpha > -1:
            raise DomainError("Bessel index must exceed -1")


# pairs closer than this (relative) use the diagonal formula at the midpoint
_LIMIT_DIAG_TOL = 1e-6


def _airy_diag(u):
    ai, aip = airy(u)
    return aip * aip - u * ai * ai


def _bessel_diag(alpha, u):
    r = np.sqrt(u)
    j, jp = bessel_j(alpha, r)
    return 0.25 * (jp * jp + (1.0 - alpha * alpha / u) * j * j)


def limiting_kernel_eval(k: LimitingKernel, u, v):
    """Evaluate a limiting kernel, including its diagonal limit.

    Airy uses the sign convention ``(Ai(u)Ai'(v) - Ai'(u)Ai(v))/(u-v)``,
    whose diagonal is ``Ai'(u)^2 - u Ai(u)^2 >= 0``.
    """
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    if k.kind == "sine":
        out = np.sinc(u - v)
    else:
        if k.kind == "bessel" and (np.any(u <= 0) or np.any(v <= 0)):
            raise DomainError("Bessel kernel needs positive arguments")
        near = np.abs(u - v) <= _LIMIT_DIAG_TOL * np.maximum(1.0, np.maximum(np.abs(u), np.abs(v)))
        mid = 0.5 * (u + v)
        if k.kind == "airy":
            au, apu = airy(u)
            av, apv = airy(v)
            with np.errstate(divide="ignore", invalid="ignore"):
                off = (au * apv - apu * av) / (u - v)
            diag = _airy_diag(mid)
        else:
            su, sv = np.sqrt(u), np.sqrt(v)
            ju, jpu = bessel_j(k.alpha, su)
            jv_, jpv = bessel_j(k.alpha, sv)
            with np.errstate(divide="ignore", invalid="ignore"):
                off = (ju * sv * jpv - jv_ * su * jpu) / (2.0 * (u - v))
            diag = _bessel_diag(k.alpha, mid)
        out = np.where(near, diag, off)
    out = np.asarray(out, dtype=float)
    return out.item() if out.ndim == 0 else out


# --- correlation functions --------------------------------------------------

MAX_CORRELATION_ORDER = 8


def correlation_lue(ctx: KernelContext, points) -> float | complex:
    """n-point correlation ``det[K_N(x_i, x_j, s)]`` for ``n <= 8``."""
    pts = np.asarray(points).ravel()
    if pts.size < 1 or pts.size > MAX_CORRELATION_ORDER:
        raise RangeError(f"correlation order must lie in [1, {MAX_CORRELATION_ORDER}]")
    xi, xj = np.meshgrid(pts, pts, indexing="ij")
    mat = np.asarray(kernel_cd(ctx, xi, xj))
    det = np.linalg.det(mat)  # LU with partial pivoting
    return complex(det) if np.iscomplexobj(det) else float(det)


# --- Marchenko-Pastur --------------------------------------------------------


def mp_density(x):
    """``psi(x) = (2/pi) sqrt((1-x)/x)`` on (0, 1], zero elsewhere."""
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x <= 1)
    safe = np.where(inside, x, 0.5)
    out = np.where(inside, (2.0 / np.pi) * np.sqrt((1.0 - safe) / safe), 0.0)
    return out.item() if out.ndim == 0 else out


def mp_cdf(x):
    """Closed-form cdf: ``(2/pi)(theta + sin theta cos theta)``, ``theta = asin sqrt(x)``."""
    x = np.asarray(x, dtype=float)
    c = np.clip(x, 0.0, 1.0)
    th = np.arcsin(np.sqrt(c))
    out = (2.0 / np.pi) * (th + np.sin(th) * np.cos(th))
    out = np.where(x >= 1.0, 1.0, out)
    return out.item() if out.ndim == 0 else out
