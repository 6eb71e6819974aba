import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from restricted_lue.errors import BranchError, DomainError, RangeError
from restricted_lue.laguerre import (
    KernelContext,
    LimitingKernel,
    correlation_lue,
    kernel_cd,
    kernel_cd_formula,
    kernel_integral_rep,
    kernel_sum,
    laguerre_coeffs,
    limiting_kernel_eval,
    mp_cdf,
    mp_density,
    phi_all,
    phi_eval,
)


def phi_reference(k, alpha, x):
    """phi_k at unit scale from scipy's Laguerre polynomials (sign (-1)^k)."""
    norm = math.exp(0.5 * (math.lgamma(k + 1) - math.lgamma(k + alpha + 1)))
    return (-1) ** k * norm * special.eval_genlaguerre(k, alpha, x) * x ** (alpha / 2) * np.exp(-x / 2)


# --- coefficients ------------------------------------------------------------


def test_coeffs_low_degree():
    assert laguerre_coeffs(0, 1.3) == [1.0]
    assert laguerre_coeffs(1, 2.0) == [-3.0, 1.0]


def test_coeffs_recurrence_k2():
    # sign convention (-1)^k: 2 L_2(x) = (x - 3) L_1(x) - L_0(x), alpha = 0
    def ev(c, x):
        return sum(ci * x**i for i, ci in enumerate(c))

    for x in (0.0, 1.0, 5.0):
        assert 2 * ev(laguerre_coeffs(2, 0.0), x) == pytest.approx(
            (x - 3) * ev(laguerre_coeffs(1, 0.0), x) - ev(laguerre_coeffs(0, 0.0), x)
        )


def test_coeffs_match_scipy_up_to_sign():
    for k in (3, 7, 12):
        c = laguerre_coeffs(k, 0.7)
        ref = special.genlaguerre(k, 0.7).coeffs[::-1]
        assert np.allclose(c, (-1) ** k * ref, rtol=1e-12, atol=0)


def test_coeffs_range():
    with pytest.raises(RangeError):
        laguerre_coeffs(65, 0.0)
    with pytest.raises(DomainError):
        laguerre_coeffs(2, -1.0)


# --- phi ---------------------------------------------------------------------


def test_context_closed_forms():
    ctx = KernelContext(3, 1.5)
    x = np.linspace(0.1, 6.0, 7)
    w = x ** (1.5 / 2) * np.exp(-x / 2)
    assert np.allclose(phi_eval(ctx, 0, x), ctx.h0() * w, rtol=1e-14)
    assert np.allclose(phi_eval(ctx, 1, x), ctx.h1(x) * w, rtol=1e-14)


def test_context_rejects_bad_scale():
    with pytest.raises(DomainError):
        KernelContext(3, 0.0, -1.0)
    with pytest.raises(DomainError):
        KernelContext(3, 0.0, -1.0 + 1j)


def test_phi_values():
    assert phi_eval(KernelContext(1, 0.0), 0, 1.0) == pytest.approx(math.exp(-0.5), rel=1e-15)
    ctx = KernelContext(6, 2.0)
    assert np.all(phi_all(ctx, 0.0) == 0.0)


def test_phi_norm_gauss_laguerre():
    x, w = special.roots_laguerre(128)
    # phi_5^2 = e^{-x} * polynomial, so divide the weight back out
    vals = phi_eval(KernelContext(5, 0.0), 5, x) ** 2 * np.exp(x)
    assert np.sum(w * vals) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 3.0])
def test_phi_matches_scipy(alpha):
    ctx = KernelContext(30, alpha)
    x = np.linspace(0.05, 150.0, 300)
    table = phi_all(ctx, x)
    for k in (0, 1, 7, 30):
        assert np.max(np.abs(table[k] - phi_reference(k, alpha, x))) < 1e-12


def test_phi_large_argument_no_overflow():
    ctx = KernelContext(200, 0.0)
    vals = phi_all(ctx, np.array([800.0, 5000.0]))
    assert np.all(np.isfinite(vals))


def test_phi_branch_rules():
    with pytest.raises(BranchError):
        phi_eval(KernelContext(3, 0.5), 2, -1.0)
    # integer alpha: polynomial continuation is fine
    assert np.isfinite(phi_eval(KernelContext(3, 1.0), 2, -1.0))


# --- kernels -----------------------------------------------------------------


def test_kernel_n1():
    ctx = KernelContext(1, 0.0)
    assert kernel_cd(ctx, 0.3, 1.7) == pytest.approx(math.exp(-1.0), rel=1e-14)


def test_kernel_symmetry():
    rng = np.random.default_rng(1)
    ctx = KernelContext(12, 0.5, 0.7)
    x, y = rng.uniform(0, 30, (2, 50))
    assert np.max(np.abs(kernel_cd(ctx, x, y) - kernel_cd(ctx, y, x))) < 1e-12


def test_kernel_trace_n20():
    ctx = KernelContext(20, 1.0)
    val, _ = integrate.quad(lambda x: kernel_cd(ctx, x, x), 0, 300, points=[81.0], limit=400)
    assert val == pytest.approx(20.0, abs=1e-7)


def test_kernel_branches_agree():
    ctx = KernelContext(16, 0.3)
    x = np.linspace(2.0, 50.0, 25)
    for rel in (1e-7, 1e-6, 1e-5):
        y = x * (1 + rel)
        err = np.max(np.abs(kernel_cd_formula(ctx, x, y) / kernel_sum(ctx, x, y) - 1))
        # the two-term difference cancels to about eps/rel
        assert err < 50 * np.finfo(float).eps / rel
        if rel >= 1e-6:
            assert err < 1e-9
        # the production kernel switches to the direct sum here
        assert np.allclose(kernel_cd(ctx, x, y), kernel_sum(ctx, x, y), rtol=1e-12, atol=0)


@pytest.mark.parametrize("n", [4, 16])
def test_kernel_scale_relation(n):
    x = np.array([0.05, 0.2, 0.5, 0.9])
    y = x[::-1] * 1.1
    for s in (0.25, 1 / (4 * n), (1 + 0.3j) / (4 * n)):
        got = kernel_cd(KernelContext(n, 0.0, s), x, y)
        ref = kernel_cd(KernelContext(n, 0.0, 1.0), x / s, y / s) / s
        assert np.allclose(got, ref, rtol=1e-12, atol=0)


def test_kernel_psd():
    ctx = KernelContext(10, 1.0, 0.5)
    pts = np.linspace(0.1, 25.0, 16)
    gram = kernel_cd(ctx, pts[:, None], pts[None, :])
    assert np.min(np.linalg.eigvalsh(gram)) >= -1e-8


def test_integral_rep_examples():
    ctx = KernelContext(1, 0.0)
    assert kernel_integral_rep(ctx, 1.0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-10)
    n = 8
    ctx = KernelContext(n, 0.0)
    assert kernel_integral_rep(ctx, 4 * n * 0.3, 4 * n * 0.5) == pytest.approx(
        kernel_cd(ctx, 4 * n * 0.3, 4 * n * 0.5), rel=1e-6
    )
    ctx = KernelContext(n, 2.0)
    assert kernel_integral_rep(ctx, 4 * n * 0.4, 4 * n * 0.4) == pytest.approx(
        kernel_cd(ctx, 4 * n * 0.4, 4 * n * 0.4), rel=1e-6
    )


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 10), alpha=st.floats(0.0, 3.0), x=st.floats(0.2, 30.0), y=st.floats(0.2, 30.0))
def test_integral_rep_property(n, alpha, x, y):
    ctx = KernelContext(n, alpha)
    ref = kernel_cd(ctx, x, y)
    scale = math.sqrt(abs(kernel_cd(ctx, x, x) * kernel_cd(ctx, y, y)))
    assert abs(kernel_integral_rep(ctx, x, y) - ref) <= 1e-8 * max(scale, 1e-300)


# --- limiting kernels --------------------------------------------------------


def test_sine_kernel_values():
    k = LimitingKernel("sine")
    assert limiting_kernel_eval(k, 0.3, 0.3) == 1.0
    assert limiting_kernel_eval(k, 0.0, 0.5) == pytest.approx(2 / math.pi, rel=1e-12)


def test_bessel_kernel_small_diagonal():
    k = LimitingKernel("bessel", 0.0)
    vals = [limiting_kernel_eval(k, 10.0**-e, 10.0**-e) for e in range(2, 9)]
    assert vals[-1] == pytest.approx(0.25, abs=1e-8)


@pytest.mark.parametrize("kind,alpha", [("sine", 0.0), ("airy", 0.0), ("bessel", 0.0), ("bessel", 2.0)])
def test_limit_kernels_symmetric_and_continuous(kind, alpha):
    k = LimitingKernel(kind, alpha)
    u = np.linspace(0.5, 6.0, 12) - (3.0 if kind == "airy" else 0.0)
    v = u[::-1] + 0.13
    assert np.array_equal(limiting_kernel_eval(k, u, v), limiting_kernel_eval(k, v, u))
    for eps in (1e-6, 1e-7, 1e-9):
        jump = np.abs(limiting_kernel_eval(k, u, u + eps) - limiting_kernel_eval(k, u, u))
        assert np.max(jump) <= 10.0 * eps


def test_airy_kernel_diagonal_positive():
    k = LimitingKernel("airy")
    t = np.linspace(-6.0, 4.0, 41)
    assert np.all(limiting_kernel_eval(k, t, t) > 0)


# --- correlations and Marchenko-Pastur ------------------------------------


def test_correlation():
    ctx = KernelContext(2, 0.0)
    assert correlation_lue(ctx, [1.3]) == pytest.approx(kernel_cd(ctx, 1.3, 1.3))
    k11, k22, k12 = kernel_cd(ctx, 1, 1), kernel_cd(ctx, 2, 2), kernel_cd(ctx, 1, 2)
    assert correlation_lue(ctx, [1.0, 2.0]) == pytest.approx(k11 * k22 - k12**2, rel=1e-12)
    ctx = KernelContext(6, 0.0)
    vals = [abs(correlation_lue(ctx, [2.0, 2.0 + eps])) for eps in (1e-3, 1e-5, 1e-7)]
    assert vals[0] > vals[1] > vals[2]
    with pytest.raises(RangeError):
        correlation_lue(ctx, np.ones(9))


def test_mp_law():
    assert mp_density(0.5) == pytest.approx(2 / math.pi)
    assert mp_density(1.5) == 0.0
    assert mp_cdf(1.0) == pytest.approx(1.0, abs=1e-10)
    val, _ = integrate.quad(mp_density, 0, 1)
    assert val == pytest.approx(1.0, abs=1e-8)
    x = np.linspace(0.01, 0.99, 9)
    num = [integrate.quad(mp_density, 0, v)[0] for v in x]
    assert np.allclose(mp_cdf(x), num, atol=1e-8)
