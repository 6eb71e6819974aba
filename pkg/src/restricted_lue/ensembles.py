"""Exact samplers for LUE, fixed-trace and bounded-trace eigenvalues.

An LUE draw comes from the bidiagonal beta=2 Laguerre model: a lower
bidiagonal ``B`` with ``B_ii^2 ~ Gamma(M - i + 1)`` and
``B_{i+1,i}^2 ~ Gamma(N - i)`` (i = 1..N), so ``B B^T`` is symmetric
tridiagonal with the LUE spectrum for weight ``x^alpha e^{-x}``.

Fixed trace uses the factorization of the LUE law into (trace) x (trace-one
configuration): normalizing an LUE draw is exact.  Bounded trace mixes
fixed-trace draws over the radial law ``N_a u^{N_a - 1}`` on [0, 1].

Random streams: draws are produced in fixed-size chunks; chunk ``j`` uses a
Philox generator keyed by ``SeedSequence(seed, spawn_key=(j,))``.  Output is
therefore independent of how chunks are spread over threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ContractError, DomainError, NumericError

CHUNK = 4096
QL_MAX_ITER = 60


@dataclass(frozen=True)
class EnsembleSpec:
    """Dimensions plus trace constraint.

    ``constraint`` is ``"free"`` (parameter = scale s), ``"fixed"``
    (parameter = trace r) or ``"bounded"`` (parameter = trace bound r).
    ``m`` may be a real surrogate; ``alpha = m - n > -1``.
    """

    n: int
    m: float
    constraint: str = "free"
    param: float = 1.0

    def __post_init__(self):
        # samplers take real parameters only
        for name in ("n", "m", "param"):
            if not isinstance(getattr(self, name), (int, float, np.integer, np.floating)):
                raise DomainError(f"{name} must be real, got {getattr(self, name)!r}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not self.m - self.n > -1:
            raise DomainError(f"alpha = m - n must exceed -1 (n={self.n}, m={self.m})")
        if self.constraint not in ("free", "fixed", "bounded"):
            raise DomainError(f"unknown constraint {self.constraint!r}")
        if not (math.isfinite(self.param) and self.param > 0):
            raise DomainError(f"scale/trace parameter must be positive, got {self.param!r}")

    @classmethod
    def free(cls, n, m, scale=1.0):
        return cls(n, m, "free", scale)

    @classmethod
    def fixed(cls, n, m, trace=1.0):
        return cls(n, m, "fixed", trace)

    @classmethod
    def bounded(cls, n, m, trace=1.0):
        return cls(n, m, "bounded", trace)

    @property
    def alpha(self) -> float:
        return self.m - self.n

    @property
    def n_alpha(self) -> float:
        return self.n * self.m


@dataclass(frozen=True)
class Spectrum:
    """One ascending eigenvalue configuration with its provenance."""

    values: np.ndarray
    spec: EnsembleSpec
    seed: int
    index: int = 0

    @property
    def trace(self) -> float:
        return math.fsum(self.values)


@dataclass(frozen=True)
class SpectrumBatch:
    """Many draws stored row-wise (``values.shape == (draws, N)``)."""

    values: np.ndarray
    spec: EnsembleSpec
    seed: int
    traces: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, i):
        return Spectrum(self.values[i], self.spec, self.seed, int(i) % len(self))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


# --- tridiagonal eigensolver --------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _tql_inplace(d, e, maxiter):
    """Implicit-shift QL on (d, e); e[i] couples rows i and i+1, e[n-1] = 0.

    Returns 0 on success, 1 if some eigenvalue needed more than ``maxiter``
    sweeps.
    """
    n = d.shape[0]
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= 2.220446049250313e-16 * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > maxiter:
                return 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0


@numba.njit(cache=True, nogil=True)
def _tql_batch(diag, off, maxiter):
    rows, n = diag.shape
    out = np.empty((rows, n))
    d = np.empty(n)
    e = np.empty(n)
    for k in range(rows):
        for i in range(n):
            d[i] = diag[k, i]
            e[i] = off[k, i] if i < n - 1 else 0.0
        if _tql_inplace(d, e, maxiter) != 0:
            return out, k
        out[k, :] = np.sort(d)
    return out, -1


def tridiag_eigenvalues(diag, offdiag):
    """Ascending eigenvalues of a symmetric tridiagonal matrix.

    Implicit-shift QL; ``diag`` has length N and ``offdiag`` length N-1.
    Both may carry leading batch dimensions (``(..., N)`` and
    ``(..., N-1)``), in which case each row is solved independently.
    """
    d = np.asarray(diag, dtype=float)
    e = np.asarray(offdiag, dtype=float)
    if d.ndim == 0 or e.shape[:-1] != d.shape[:-1] or e.shape[-1] != d.shape[-1] - 1:
        raise DomainError("offdiag must have one entry fewer than diag")
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
        raise DomainError("tridiagonal entries must be finite")
    batch = d.shape[:-1]
    n = d.shape[-1]
    d2 = np.ascontiguousarray(d.reshape(-1, n))
    e2 = np.zeros_like(d2)
    if n > 1:
        e2[:, : n - 1] = e.reshape(-1, n - 1)
    vals, bad = _tql_batch(d2, e2, QL_MAX_ITER)
    if bad >= 0:
        raise NumericError(f"implicit QL did not converge within {QL_MAX_ITER} sweeps (row {bad})")
    return vals.reshape(batch + (n,))


# --- random streams -----------------------------------------------------------


def _chunk_rng(seed, chunk):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(chunk),))
    return np.random.Generator(np.random.Philox(ss))


def _lue_unit_chunk(n, alpha, rng, rows):
    """LUE eigenvalues with unit scale, plus the exact trace of each draw."""
    i = np.arange(1, n + 1)
    diag_sq = rng.gamma(n + alpha - i + 1.0, size=(rows, n))
    off_sq = rng.gamma(np.arange(n - 1, 0, -1, dtype=float), size=(rows, n - 1))
    # (B B^T)_ii = d_i^2 + e_{i-1}^2, (B B^T)_{i,i+1} = d_i e_i
    tdiag = diag_sq.copy()
    tdiag[:, 1:] += off_sq
    toff = np.sqrt(diag_sq[:, :-1] * off_sq)
    if n == 1:
        vals = diag_sq.copy()
    else:
        vals = tridiag_eigenvalues(tdiag, toff)
    np.maximum(vals, 0.0, out=vals)
    return vals, rng


@numba.njit(cache=True, nogil=True)
def _fsum_rows(a):
    """Neumaier-compensated sum of each row."""
    rows, n = a.shape
    out = np.empty(rows)
    for k in range(rows):
        total = 0.0
        comp = 0.0
        for i in range(n):
            v = a[k, i]
            t = total + v
            if abs(total) >= abs(v):
                comp += (total - t) + v
            else:
                comp += (v - t) + total
            total = t
        out[k] = total + comp
    return out


@numba.njit(cache=True, nogil=True)
def _clamp_rows(a, bound):
    """Nudge rows whose compensated sum exceeds ``bound`` just below it."""
    sums = _fsum_rows(a)
    for k in range(a.shape[0]):
        if sums[k] > bound:
            scale = bound / sums[k]
            for i in range(a.shape[1]):
                a[k, i] *= scale
            total = _fsum_rows(a[k : k + 1])[0]
            while total > bound:
                for i in range(a.shape[1]):
                    a[k, i] = np.nextafter(a[k, i], 0.0)
                total = _fsum_rows(a[k : k + 1])[0]


def _sample_chunk(spec, seed, chunk, rows):
    rng = _chunk_rng(seed, chunk)
    n, alpha = spec.n, spec.alpha
    vals, rng = _lue_unit_chunk(n, alpha, rng, rows)
    if spec.constraint == "free":
        return vals * spec.param
    if n == 1:
        unit = np.ones((rows, 1))
    else:
        sums = _fsum_rows(vals)
        while np.any(sums <= 0):  # probability zero; redraw from the same stream
            bad = np.flatnonzero(sums <= 0)
            redo, rng = _lue_unit_chunk(n, alpha, rng, bad.size)
            vals[bad] = redo
            sums = _fsum_rows(vals)
        unit = vals / sums[:, None]
    if spec.constraint == "fixed":
        return unit * spec.param
    radial = rng.random(rows) ** (1.0 / spec.n_alpha)
    out = unit * (radial * spec.param)[:, None]
    _clamp_rows(out, spec.param)
    return out


def sample_batch(spec: EnsembleSpec, seed: int, draws: int, threads: int = 1) -> SpectrumBatch:
    """``draws`` independent spectra; identical for every value of ``threads``."""
    if draws < 1:
        raise ContractError("draws must be positive")
    sizes = [min(CHUNK, draws - start) for start in range(0, draws, CHUNK)]
    jobs = list(enumerate(sizes))
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: _sample_chunk(spec, seed, job[0], job[1]), jobs))
    else:
        parts = [_sample_chunk(spec, seed, j, rows) for j, rows in jobs]
    values = np.concatenate(parts, axis=0)
    return SpectrumBatch(values, spec, int(seed), _fsum_rows(values))


def _sample_one(spec, seed, expected):
    if spec.constraint != expected:
        raise ContractError(f"expected a {expected} ensemble, got {spec.constraint}")
    return sample_batch(spec, seed, 1)[0]


def sample_lue(spec: EnsembleSpec, rng_seed: int) -> Spectrum:
    return _sample_one(spec, rng_seed, "free")


def sample_ftlue(spec: EnsembleSpec, rng_seed: int) -> Spectrum:
    return _sample_one(spec, rng_seed, "fixed")


def sample_btlue(spec: EnsembleSpec, rng_seed: int) -> Spectrum:
    return _sample_one(spec, rng_seed, "bounded")


def entropy_values(values, *, trace_tol=1e-10):
    """Von Neumann entropy ``-sum x ln x`` of trace-one rows (0 ln 0 = 0)."""
    x = np.atleast_2d(np.asarray(values, dtype=float))
    tr = _fsum_rows(x)
    if np.any(np.abs(tr - 1.0) > trace_tol):
        raise ContractError("entropy needs trace-one spectra")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(x > 0, -x * np.log(np.where(x > 0, x, 1.0)), 0.0)
    return terms.sum(axis=1)


def entropy(sp: Spectrum) -> float:
    """Entanglement entropy of a trace-one Schmidt spectrum."""
    if sp.spec.constraint != "fixed" or sp.spec.param != 1.0:
        if abs(sp.trace - 1.0) > 1e-10:
            raise ContractError("entropy needs a fixed(1) spectrum")
    return float(entropy_values(sp.values)[0])
