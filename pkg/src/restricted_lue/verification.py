"""Registry of acceptance checks with their tolerances.

Each check returns a :class:`CriterionResult`; ``run_criteria`` runs a
selection and is shared by the ``verify`` subcommand and the test-suite.
Seeds are fixed so every Monte Carlo check is reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .constrained import (
    btlue_density_radial,
    concentration_tail,
    ftlue_density_fourier,
    ftlue_density_series,
    lue_poly_expansion,
    prop2_check,
)
from .ensembles import EnsembleSpec, sample_batch
from .laguerre import KernelContext, kernel_cd, kernel_integral_rep, mp_cdf, phi_all
from .specfun import GammaRatioSeries, log_gamma
from .stats import (
    Regime,
    counting_moments_exact,
    counting_moments_mc,
    histogram,
    kernel_convergence,
    ks_distance,
    page_average,
    page_exact,
)

SEED = 20240607


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f}s)"


def _gl(nodes):
    return np.polynomial.legendre.leggauss(nodes)


def orthonormality_defect(n: int, alpha: float, scale: float = 1.0, panels: int = 64) -> float:
    """``max |int phi_j phi_k - delta_jk|`` over ``j, k < n``.

    Integrates in ``t = sqrt(x)`` so the ``x^alpha`` endpoint behaviour becomes
    a smooth power of t, then composite 32-point Gauss-Legendre.
    """
    ctx = KernelContext(n, alpha, scale)
    top = math.sqrt(scale * (4.0 * n + 2.0 * alpha + 200.0))
    gx, gw = _gl(32)
    edges = np.linspace(0.0, top, panels + 1)
    half = 0.5 * np.diff(edges)
    t = ((0.5 * (edges[1:] + edges[:-1]))[:, None] + half[:, None] * gx).ravel()
    w = (half[:, None] * gw).ravel() * 2.0 * t
    phi = phi_all(ctx, t * t)[:n]
    gram = (phi * w) @ phi.T
    return float(np.max(np.abs(gram - np.eye(n))))


def _kernel_trace(n, alpha, s):
    ctx = KernelContext(n, alpha, s)
    top = s * (4.0 * n + 2.0 * alpha + 200.0)
    f = lambda x: kernel_cd(ctx, x, x)
    val, _ = integrate.quad(f, 0.0, top, points=[s * (4.0 * n + alpha)], limit=400, epsabs=1e-12, epsrel=1e-12)
    return val


# --- individual checks ------------------------------------------------------


def c01():
    worst = 0.0
    for alpha in (0.0, 0.5, 3.0):
        worst = max(worst, orthonormality_defect(40, alpha))
    return worst < 1e-8, f"max |<phi_j,phi_k> - delta| = {worst:.2e} (N<=40)"


def c02():
    errs = []
    for n, alpha, s in ((8, 0.0, 1.0), (20, 1.0, 1.0), (20, 0.0, 1.0 / 80)):
        errs.append(abs(_kernel_trace(n, alpha, s) - n))
    return max(errs) < 1e-7, "trace errors " + ", ".join(f"{e:.1e}" for e in errs)


def c03():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for n in (4, 8):
        ctx = KernelContext(n, 0.5, 1.0)
        pts = rng.uniform(0.1, 4.0 * n, size=(10, 2))
        for x, y in pts:
            ref = kernel_cd(ctx, x, y)
            worst = max(worst, abs(kernel_integral_rep(ctx, x, y) - ref) / abs(ref))
    return worst < 1e-6, f"max relative error {worst:.2e} over 20 pairs"


def c04():
    pe = lue_poly_expansion(2, 0.0)
    x = np.linspace(0.0, 1.0, 101)
    exact = 6.0 * (2.0 * x - 1.0) ** 2
    e_series = float(np.max(np.abs(ftlue_density_series(pe, 1.0, x) - exact)))
    xi = x[1:-1]
    # Fourier route lives at r0 = (N + alpha)/4 = 1/2; map by homogeneity
    four = np.array([0.5 * ftlue_density_fourier(2, 0.0, 0.5 * v) for v in xi])
    e_four = float(np.max(np.abs(four - exact[1:-1])))
    ok = e_series < 1e-10 and e_four < 1e-6
    return ok, f"series {e_series:.1e}, fourier {e_four:.1e}"


def _bin_probabilities(pe, r, edges, nodes=8):
    gx, gw = _gl(nodes)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    x = (0.5 * (hi + lo))[:, None] + half[:, None] * gx
    dens = ftlue_density_series(pe, r, x.ravel()).reshape(x.shape)
    return (dens * gw).sum(axis=1) * half / pe.n


def c05(draws=1_000_000, bins=50):
    worst_abs = 0.0
    worst_z = 0.0
    for n in (4, 8):
        for alpha in (0.0, 1.0):
            pe = lue_poly_expansion(n, alpha)
            r0 = (n + alpha) / 4.0
            edges = np.linspace(0.0, 1.0, bins + 1)
            mids = 0.5 * (edges[1:] + edges[:-1])
            series = ftlue_density_series(pe, 1.0, mids)
            four = np.array([r0 * ftlue_density_fourier(n, alpha, r0 * v) for v in mids])
            worst_abs = max(worst_abs, float(np.max(np.abs(series - four))))
            batch = sample_batch(EnsembleSpec.fixed(n, n + alpha, 1.0), SEED + n + int(10 * alpha), draws)
            h = histogram(batch, (0.0, 1.0), bins)
            p = _bin_probabilities(pe, 1.0, edges)
            expected = draws * n * p
            se = h.standard_errors(p)
            z = np.abs(h.counts - expected) / np.where(se > 0, se, 1.0)
            worst_z = max(worst_z, float(np.max(z)))
    ok = worst_abs <= 1e-6 and worst_z <= 3.0
    return ok, f"series-fourier {worst_abs:.1e}, Monte Carlo max |z| = {worst_z:.2f} over 200 bins"


def c06():
    worst = 0.0
    for n in (2, 4):
        for alpha in (0.0, 1.0):
            s = 1.0 / (4 * n)
            for x in (0.2, 0.5, 0.8):
                lhs, rhs = prop2_check(n, alpha, s, x)
                worst = max(worst, abs(lhs - rhs) / lhs)
    return worst < 1e-6, f"max relative gap {worst:.2e}"


def _ladder(regime, alpha=0.0):
    return [kernel_convergence(regime, n, alpha).sup_error for n in (50, 100, 200)]


def _decreasing(v):
    return all(b < a for a, b in zip(v, v[1:]))


def c07():
    ok = True
    parts = []
    for u in (0.3, 0.5, 0.7):
        e = _ladder(Regime("bulk", u))
        ok &= _decreasing(e) and e[-1] < 5e-2
        parts.append(f"u={u}: " + "/".join(f"{v:.4f}" for v in e))
    return ok, "; ".join(parts) + " (N=50/100/200)"


def c08():
    ok = True
    parts = []
    for alpha in (0.0, 2.0):
        e = _ladder(Regime("hard"), alpha)
        ok &= _decreasing(e) and e[1] < 2e-2
        parts.append(f"alpha={alpha:g}: " + "/".join(f"{v:.1e}" for v in e))
    return ok, "; ".join(parts)


def c09():
    e = _ladder(Regime("soft"))
    return _decreasing(e) and e[1] < 5e-2, "/".join(f"{v:.4f}" for v in e)


def c10(draws=200):
    ok = True
    parts = []
    for kind in ("fixed", "bounded"):
        d = []
        for n in (32, 64, 128):
            spec = EnsembleSpec(n, n, kind, n / 4.0)
            d.append(ks_distance(sample_batch(spec, SEED + n, draws).values, mp_cdf))
        ok &= _decreasing(d) and d[-1] < 0.03
        parts.append(f"{kind}: " + "/".join(f"{v:.4f}" for v in d))
    return ok, "; ".join(parts)


def c11(draws=100_000):
    avg = page_average(sample_batch(EnsembleSpec.fixed(8, 8, 1.0), SEED, draws))
    exact = page_exact(8, 8)
    ok = abs(avg.mean - exact) < 3 * avg.std_error and abs(avg.mean - avg.paper_approx) < 0.02
    return ok, f"<S> = {avg.mean:.5f} +- {avg.std_error:.5f}, exact {exact:.5f}, approx {avg.paper_approx:.5f}"


COUNT_WINDOWS = ((0.0, 5.0), (5.0, 20.0), (10.0, 40.0))


def c12(draws=100_000):
    worst = 0.0
    for n in (8, 16):
        batch = sample_batch(EnsembleSpec.free(n, n, 1.0), SEED + n, draws)
        ctx = KernelContext(n, 0.0, 1.0)
        for w in COUNT_WINDOWS:
            ex = counting_moments_exact(ctx, w)
            mean, se_m, var, se_v = counting_moments_mc(batch, w)
            worst = max(worst, abs(ex.mean - mean) / se_m, abs(ex.variance - var) / se_v)
    return worst < 3.0, f"max |z| = {worst:.2f} over 12 moments"


def c13():
    n = 20
    fixed = concentration_tail(n, 0.0, n ** -0.8, "fixed")
    bounded = concentration_tail(n, 0.0, n ** -1.5, "bounded")
    ok = abs(fixed.ratio - 1) < 0.25 and abs(bounded.ratio - 1) < 0.25
    return ok, f"fixed ratio {fixed.ratio:.3f}, bounded ratio {bounded.ratio:.4f}"


def c14():
    worst = 0.0
    where = None
    for a in (1, 3, 10):
        series = GammaRatioSeries(a, 8)
        for x in (50.0, 100.0, 500.0):
            ref = math.exp(log_gamma(x) - a * math.log(x) - log_gamma(x - a))
            err = abs(series.evaluate(x, 8)[0] / ref - 1.0)
            if err > worst:
                worst, where = err, (a, x)
    return worst < 1e-10, f"max relative error {worst:.1e} at (a, x) = {where}"


def c15(draws=10_000):
    specs = (
        EnsembleSpec.free(8, 9, 1.0),
        EnsembleSpec.fixed(8, 8, 1.0),
        EnsembleSpec.bounded(6, 7.5, 2.0),
    )
    ok = True
    for spec in specs:
        ref = sample_batch(spec, SEED, draws, threads=1).values.tobytes()
        for threads in (1, 2, 5):
            ok &= sample_batch(spec, SEED, draws, threads=threads).values.tobytes() == ref
    return ok, "byte-identical across reruns and threads in {1, 2, 5}" if ok else "outputs differ"


REGISTRY = {
    1: ("orthonormality", c01),
    2: ("kernel trace", c02),
    3: ("integral representation", c03),
    4: ("N=2 closed form", c04),
    5: ("three-way FTLUE density", c05),
    6: ("LUE-FTLUE integral identity", c06),
    7: ("bulk sine limit", c07),
    8: ("hard-edge Bessel limit", c08),
    9: ("soft-edge Airy limit", c09),
    10: ("Marchenko-Pastur KS", c10),
    11: ("Page entropy", c11),
    12: ("counting statistics", c12),
    13: ("concentration tails", c13),
    14: ("Gamma ratio expansion", c14),
    15: ("determinism", c15),
}


def run_criterion(number: int) -> CriterionResult:
    title, fn = REGISTRY[number]
    t0 = time.perf_counter()
    passed, detail = fn()
    return CriterionResult(number, title, bool(passed), detail, time.perf_counter() - t0)


def run_criteria(numbers=None):
    for k in sorted(REGISTRY) if numbers is None else numbers:
        yield run_criterion(k)
