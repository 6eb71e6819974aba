import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sst

from restricted_lue.ensembles import (
    EnsembleSpec,
    entropy,
    entropy_values,
    sample_batch,
    sample_btlue,
    sample_ftlue,
    sample_lue,
    tridiag_eigenvalues,
)
from restricted_lue.errors import ContractError, DomainError, NumericError
from restricted_lue.laguerre import KernelContext, mp_cdf
from restricted_lue.stats import counting_moments_exact, counting_moments_mc, ks_distance


def z_score(sample, expected):
    return abs(np.mean(sample) - expected) / (np.std(sample, ddof=1) / math.sqrt(len(sample)))


# --- spec --------------------------------------------------------------------


def test_spec_validation():
    assert EnsembleSpec.fixed(4, 6.5).alpha == 2.5
    assert EnsembleSpec.fixed(4, 6).n_alpha == 24
    with pytest.raises(DomainError):
        EnsembleSpec.free(4, 2.9)
    with pytest.raises(DomainError):
        EnsembleSpec.fixed(4, 4, 0.0)
    with pytest.raises(DomainError):
        EnsembleSpec(4, 4, "weird")
    with pytest.raises(DomainError):
        EnsembleSpec.fixed(4, 4, 1 + 1j)
    with pytest.raises(DomainError):
        EnsembleSpec.free(4, 4 + 0.5j)


# --- tridiagonal eigensolver ---------------------------------------------------


def test_tridiag_examples():
    assert np.allclose(tridiag_eigenvalues([2.0], []), [2.0])
    assert np.allclose(tridiag_eigenvalues([0.0, 0.0], [1.0]), [-1.0, 1.0])
    r2 = math.sqrt(2)
    assert np.allclose(tridiag_eigenvalues([2.0, 2.0, 2.0], [1.0, 1.0]), [2 - r2, 2, 2 + r2], atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 2**32 - 1))
def test_tridiag_matches_lapack(n, seed):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=n) * 10
    e = rng.normal(size=n - 1)
    ref = np.linalg.eigvalsh(np.diag(d) + np.diag(e, 1) + np.diag(e, -1))
    got = tridiag_eigenvalues(d, e)
    assert np.all(np.diff(got) >= 0)
    assert np.allclose(got, ref, atol=1e-12 * np.max(np.abs(ref)), rtol=0)


def test_tridiag_batch_and_errors():
    d = np.array([[2.0, 2.0], [0.0, 0.0]])
    e = np.array([[0.0], [1.0]])
    assert np.allclose(tridiag_eigenvalues(d, e), [[2.0, 2.0], [-1.0, 1.0]])
    with pytest.raises(DomainError):
        tridiag_eigenvalues([1.0, 2.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        tridiag_eigenvalues([1.0, np.nan], [1.0])


# --- samplers ----------------------------------------------------------------


def test_lue_n1_mean():
    b = sample_batch(EnsembleSpec.free(1, 1, 1.0), 11, 100_000)
    assert z_score(b.values[:, 0], 1.0) < 3


def test_lue_n2_trace_mean():
    b = sample_batch(EnsembleSpec.free(2, 2, 1.0), 12, 100_000)
    assert z_score(b.traces, 4.0) < 3


def test_lue_trace_law_is_gamma():
    spec = EnsembleSpec.free(5, 6.5, 1.0)
    b = sample_batch(spec, 13, 20_000)
    assert sst.kstest(b.traces, sst.gamma(spec.n_alpha).cdf).pvalue > 1e-3


def test_samples_sorted_nonnegative():
    for spec in (EnsembleSpec.free(7, 7.3), EnsembleSpec.fixed(7, 9), EnsembleSpec.bounded(7, 7, 3.0)):
        v = sample_batch(spec, 3, 5000).values
        assert np.all(v >= 0)
        assert np.all(np.diff(v, axis=1) >= 0)


def test_single_draw_wrappers():
    sp = sample_lue(EnsembleSpec.free(3, 3), 5)
    assert sp.values.shape == (3,)
    assert sample_ftlue(EnsembleSpec.fixed(3, 3, 2.0), 5).trace == pytest.approx(2.0, rel=1e-12)
    assert sample_btlue(EnsembleSpec.bounded(3, 3, 2.0), 5).trace <= 2.0
    with pytest.raises(ContractError):
        sample_ftlue(EnsembleSpec.free(3, 3), 5)
    with pytest.raises(ContractError):
        sample_batch(EnsembleSpec.free(3, 3), 5, 0)


def test_determinism_across_threads():
    spec = EnsembleSpec.fixed(6, 7)
    ref = sample_batch(spec, 99, 9000, threads=1).values
    for threads in (2, 3, 8):
        assert np.array_equal(sample_batch(spec, 99, 9000, threads=threads).values, ref)
    assert not np.array_equal(sample_batch(spec, 100, 9000).values, ref)


def test_prefix_stability():
    # chunked streams: a longer run extends a shorter one
    spec = EnsembleSpec.free(4, 4)
    short = sample_batch(spec, 5, 5000).values
    long = sample_batch(spec, 5, 12000).values
    assert np.array_equal(long[:4096], short[:4096])


def test_scale_covariance_is_exact():
    a = sample_batch(EnsembleSpec.free(6, 6, 1.0), 21, 2000).values
    b = sample_batch(EnsembleSpec.free(6, 6, 2.5), 21, 2000).values
    assert np.max(np.abs(b[:, -1] - 2.5 * a[:, -1])) < 1e-12


def test_ftlue_n1_is_r():
    b = sample_batch(EnsembleSpec.fixed(1, 1, 3.0), 1, 100)
    assert np.all(b.values == 3.0)


@pytest.mark.parametrize("r", [1.0, 0.37, 12.5])
def test_ftlue_trace_invariant(r):
    b = sample_batch(EnsembleSpec.fixed(9, 11, r), 2, 20_000)
    assert np.max(np.abs(b.traces - r)) <= 1e-12 * r


def test_ftlue_n2_marginal():
    b = sample_batch(EnsembleSpec.fixed(2, 2, 1.0), 7, 1_000_000)
    # density 6(2x-1)^2 / 2 per eigenvalue; cdf of the pooled eigenvalues
    cdf = lambda x: 0.5 * ((2 * x - 1) ** 3 + 1)
    assert ks_distance(b.values, cdf) < 0.005


def test_ftlue_global_law():
    n = 64
    b = sample_batch(EnsembleSpec.fixed(n, n, n / 4), 8, 100)
    assert ks_distance(b.values, mp_cdf) < 0.03


def test_btlue_n1_uniform():
    b = sample_batch(EnsembleSpec.bounded(1, 1, 1.0), 9, 20_000)
    assert sst.kstest(b.values[:, 0], "uniform").pvalue > 1e-3


def test_btlue_radial_law():
    spec = EnsembleSpec.bounded(4, 4, 2.0)
    b = sample_batch(spec, 10, 100_000)
    assert np.all(b.traces <= 2.0)
    u = b.traces / 2.0
    assert z_score(u, 16 / 17) < 3
    assert sst.kstest(u, lambda t: np.clip(t, 0, 1) ** spec.n_alpha).pvalue > 1e-3


def test_btlue_matches_ftlue_globally():
    n = 64
    f = sample_batch(EnsembleSpec.fixed(n, n, n / 4), 31, 100).values.ravel()
    b = sample_batch(EnsembleSpec.bounded(n, n, n / 4), 32, 100).values.ravel()
    assert sst.ks_2samp(f, b).statistic < 0.03


def test_counting_mean_against_kernel():
    n = 16
    b = sample_batch(EnsembleSpec.free(n, n, 1.0), 14, 100_000)
    ctx = KernelContext(n, 0.0, 1.0)
    for w in ((0.0, 4.0), (10.0, 25.0), (30.0, 60.0)):
        mean, se, _, _ = counting_moments_mc(b, w)
        assert abs(counting_moments_exact(ctx, w).mean - mean) < 3 * se


# --- entropy -----------------------------------------------------------------


def test_entropy_examples():
    spec = EnsembleSpec.fixed(4, 4)
    from restricted_lue.ensembles import Spectrum

    assert entropy(Spectrum(np.array([0.0, 0.0, 0.0, 1.0]), spec, 0)) == 0.0
    assert entropy(Spectrum(np.full(4, 0.25), spec, 0)) == pytest.approx(math.log(4), rel=1e-15)
    with pytest.raises(ContractError):
        entropy_values(np.array([[0.5, 0.6]]))


def test_entropy_page_value():
    ent = entropy_values(sample_batch(EnsembleSpec.fixed(8, 8), 15, 100_000).values)
    assert abs(ent.mean() - 1.588) < 0.02
    assert abs(ent.mean() - (math.log(8) - 0.5)) < 0.02
