"""chi(t), spectral form factor samples and the partial-sum walk.

Phases ``t * E_j`` reach ~1e7 rad for the default sampling windows, where
a plain double product leaves only ~1e-9 absolute phase accuracy.  The
product is therefore formed exactly as a double-double and reduced modulo
2 pi against a double-double 2 pi before any sine or cosine is taken.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .spectra import OneParticleSpectrum, WeightedSpectrum

DEFAULT_SFF_WINDOW = (1e5, 2e5)
DEFAULT_WALK_WINDOW = (1.0, 2e5)
CHUNK = 4096  # time samples per sub-seeded chunk; fixes results regardless of worker count
_MAX_CELLS = 1 << 22  # times x energies evaluated per block

# 2 pi as an unevaluated sum hi + lo
_TWO_PI_HI = 6.283185307179586
_TWO_PI_LO = 2.4492935982947064e-16
_SPLIT = 134217729.0  # 2**27 + 1


def _split(a):
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    """Exact product a*b = p + e (Dekker)."""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def reduced_phase(t, E) -> np.ndarray:
    """(t * E) mod 2 pi in [-pi, pi], accurate to a few ulp of pi.

    ``t`` and ``E`` broadcast against each other.
    """
    t, E = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(E, dtype=float))
    p, e = _two_prod(t, E)
    k = np.rint(p / _TWO_PI_HI)
    q, qe = _two_prod(k, _TWO_PI_HI)
    # p - q is exact (Sterbenz) whenever k != 0
    return (p - q) + (e - qe - k * _TWO_PI_LO)


def threads_from_env(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("SPECWALK_THREADS")
    return max(1, int(env)) if env else 1


def _time_blocks(n_times, n_energies):
    step = max(1, _MAX_CELLS // max(1, n_energies))
    for start in range(0, n_times, step):
        yield slice(start, min(n_times, start + step))


def chi_many(spec: WeightedSpectrum, times) -> np.ndarray:
    """chi(t) = sum_j d_j exp(-i t E_j) for every t in ``times``."""
    times = np.asarray(times, dtype=float).ravel()
    out = np.empty(times.size, dtype=complex)
    E, d = spec.energies, spec.weights
    for sl in _time_blocks(times.size, E.size):
        ph = reduced_phase(times[sl, None], E[None, :])
        out[sl] = np.cos(ph) @ d - 1j * (np.sin(ph) @ d)
    return out


def chi(spec: WeightedSpectrum, t: float) -> complex:
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    return complex(chi_many(spec, [t])[0])


def sff(spec: WeightedSpectrum, times) -> np.ndarray:
    return np.abs(chi_many(spec, times)) ** 2


@dataclass(frozen=True, eq=False)
class WalkPath:
    """Partial sums Z_0 = 0, Z_n = sum_{j<=n} d_j exp(-i t E_j) at fixed t."""

    t: float
    points: np.ndarray
    norm: float  # sqrt(sum d_j^2) = Delta Z_{N_B}

    @property
    def n_steps(self) -> int:
        return self.points.size - 1

    @property
    def endpoint(self) -> complex:
        return complex(self.points[-1])

    def normalized(self) -> np.ndarray:
        """Y_n = Z_n / Delta Z_n for n >= 1."""
        return self.points[1:] / np.sqrt(np.cumsum(self._steps_sq()))

    def _steps_sq(self):
        return np.abs(np.diff(self.points)) ** 2


def walk_path(spec: WeightedSpectrum, t: float) -> WalkPath:
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    ph = reduced_phase(t, spec.energies)
    steps = spec.weights * (np.cos(ph) - 1j * np.sin(ph))
    points = np.concatenate(([0j], np.cumsum(steps)))
    return WalkPath(float(t), points, float(np.sqrt(np.sum(spec.weights**2))))


def _floor_index(N: int, s: float) -> int:
    x = N * s
    r = round(x)
    return int(r) if abs(x - r) <= 1e-9 * max(1.0, abs(x)) else math.floor(x)


def rescaled_process(spec: WeightedSpectrum, N: int, s: float, t: float) -> complex:
    """W_s^N = (1/Delta Z_N) sum_{j <= floor(N s)} d_j exp(-i t E_j)."""
    if not 1 <= N <= spec.n_blocks:
        raise IndexError(f"N must lie in [1, {spec.n_blocks}], got {N}")
    n = _floor_index(N, s)
    if not 0 <= n <= spec.n_blocks:
        raise IndexError(f"floor(N s) = {n} outside [0, {spec.n_blocks}]")
    if n == 0:
        return 0j
    norm = math.sqrt(float(np.sum(spec.weights[:N] ** 2)))
    ph = reduced_phase(t, spec.energies[:n])
    return complex(np.sum(spec.weights[:n] * (np.cos(ph) - 1j * np.sin(ph)))) / norm


# --- sampling -----------------------------------------------------------------


def sample_times(window, n: int, seed: int) -> np.ndarray:
    """``n`` uniform times in ``window``, drawn in fixed-size sub-seeded chunks."""
    t0, t1 = map(float, window)
    if not t1 > t0:
        raise ValueError(f"empty time window [{t0}, {t1}]")
    if n < 1:
        raise ValueError("n must be >= 1")
    n_chunks = -(-n // CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    parts = []
    for i, ss in enumerate(children):
        size = min(CHUNK, n - i * CHUNK)
        parts.append(np.random.default_rng(ss).uniform(t0, t1, size))
    return np.concatenate(parts)


def map_chunks(fn, times: np.ndarray, threads: int | None = None) -> np.ndarray:
    """Apply ``fn`` to CHUNK-sized pieces of ``times`` and concatenate."""
    pieces = [times[i : i + CHUNK] for i in range(0, times.size, CHUNK)]
    workers = threads_from_env(threads)
    if workers == 1 or len(pieces) == 1:
        return np.concatenate([fn(p) for p in pieces])
    with ThreadPoolExecutor(workers) as pool:
        return np.concatenate(list(pool.map(fn, pieces)))


@dataclass(frozen=True, eq=False)
class SffSampleSet:
    times: np.ndarray
    values: np.ndarray
    window: tuple[float, float]
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def stderr(self) -> float:
        if self.n < 2:
            return 0.0
        return float(np.std(self.values, ddof=1) / math.sqrt(self.n))

    def normalized(self, by: float | None = None) -> np.ndarray:
        """Values divided by the sample mean, or by ``by`` if given."""
        return self.values / (self.mean if by is None else by)


def sample_sff(
    spec: WeightedSpectrum,
    window=DEFAULT_SFF_WINDOW,
    n: int = 100_000,
    seed: int = 0,
    threads: int | None = None,
) -> SffSampleSet:
    times = sample_times(window, n, seed)
    values = map_chunks(lambda ts: sff(spec, ts), times, threads)
    return SffSampleSet(times, values, (float(window[0]), float(window[1])), int(seed))


# --- free fermions ----------------------------------------------------------------


def free_fermion_log_chi_abs2(ops: OneParticleSpectrum, beta: float, times) -> np.ndarray:
    """ln |chi(t)|^2 from the mode product, O(L) per time.

    beta = 0:  |chi|^2 = prod_j (2 cos(t eps_j / 2))^(2 g_j)
    beta > 0:  |chi|^2 = |exp(-z E_0) prod_k (1 + exp(-z Lambda_k))|^2, z = beta + i t
    Zeros of chi give -inf.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    times = np.asarray(times, dtype=float).ravel()
    eps = ops.levels
    g = ops.degeneracies.astype(float)
    out = np.empty(times.size)
    with np.errstate(divide="ignore"):
        for sl in _time_blocks(times.size, eps.size):
            ph = reduced_phase(times[sl, None], eps[None, :])
            if beta == 0:
                # |1 + e^{-i phi}|^2 = (2 cos(phi/2))^2, phi in [-pi, pi]
                out[sl] = (2.0 * np.log(2.0 * np.cos(0.5 * ph))) @ g
            else:
                r = np.exp(-beta * eps)[None, :]
                mod2 = 1.0 + 2.0 * r * np.cos(ph) + r * r
                out[sl] = np.log(mod2) @ g - 2.0 * beta * ops.offset
    return out


def free_fermion_chi_abs2(ops: OneParticleSpectrum, beta: float, t) -> np.ndarray | float:
    vals = np.exp(free_fermion_log_chi_abs2(ops, beta, np.atleast_1d(t)))
    return float(vals[0]) if np.ndim(t) == 0 else vals


def sample_free_fermion_log_sff(
    ops: OneParticleSpectrum,
    beta: float = 0.0,
    window=DEFAULT_SFF_WINDOW,
    n: int = 100_000,
    seed: int = 0,
    threads: int | None = None,
):
    """(times, ln|chi|^2) sampled uniformly in ``window``."""
    times = sample_times(window, n, seed)
    logs = map_chunks(lambda ts: free_fermion_log_chi_abs2(ops, beta, ts), times, threads)
    return times, logs
