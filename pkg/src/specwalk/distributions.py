"""Goodness-of-fit checks for SFF samples and walk increments.

KS statistics are reported as raw distances.  Samples at different
times of one spectrum are not independent draws, so no p-values are
attached.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .lyapunov import r_windowed
from .spectra import WeightedSpectrum
from .walker import DEFAULT_SFF_WINDOW, _floor_index, map_chunks, sample_times, sff

PI2_3 = math.pi**2 / 3


@dataclass(frozen=True, eq=False)
class DistTestReport:
    law: str  # exp1 | normal_pi2_3 | exp_mean_h
    n: int
    ks: float
    histogram: tuple[np.ndarray, np.ndarray]  # (edges, densities)
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        edges, dens = self.histogram
        return {
            "law": self.law,
            "n": self.n,
            "ks": self.ks,
            "params": dict(self.params),
            "histogram": {"edges": edges.tolist(), "density": dens.tolist()},
        }

    def histogram_rows(self):
        edges, dens = self.histogram
        for lo, hi, p in zip(edges[:-1], edges[1:], dens):
            yield float(lo), float(hi), float(p)


def _clean(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample set")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite sample")
    return x


def fd_histogram(x, bins="fd"):
    """Density histogram, Freedman-Diaconis bins unless ``bins`` says otherwise."""
    x = np.asarray(x, dtype=float)
    if np.ptp(x) == 0:
        bins = 1
    dens, edges = np.histogram(x, bins=bins, density=True)
    return edges, dens


def _report(law, x, cdf, params, bins):
    ks = float(stats.kstest(x, cdf).statistic)
    return DistTestReport(law, int(x.size), ks, fd_histogram(x, bins), params)


def ks_exp1(samples, *, normalize: bool = False, bins="fd") -> DistTestReport:
    """KS distance of ``samples`` to Exp(1).

    With ``normalize=True`` the samples are divided by their mean first.
    """
    x = _clean(samples)
    if np.any(x < 0):
        raise ValueError("samples must be nonnegative")
    params = {}
    if normalize:
        m = float(np.mean(x))
        x = x / m
        params["normalized_by"] = m
    return _report("exp1", x, stats.expon.cdf, params, bins)


def ks_lognormal_free(samples, degeneracies, *, log_input: bool = False, variance: float = PI2_3, bins="fd") -> DistTestReport:
    """KS distance of ln|chi|^2 / sqrt(sum g_j^2) to Normal(0, variance).

    ``samples`` are raw |chi|^2 values, or their logarithms when
    ``log_input`` is set (needed once |chi|^2 leaves double range).
    The maximum-likelihood variance of the transformed sample is reported
    alongside.
    """
    x = _clean(samples) if not log_input else np.asarray(samples, dtype=float).ravel()
    if log_input:
        if x.size == 0:
            raise ValueError("empty sample set")
        if np.any(~np.isfinite(x)):
            raise ValueError("non-finite log sample (a zero of chi?)")
        logs = x
    else:
        if np.any(x <= 0):
            raise ValueError("samples must be positive")
        logs = np.log(x)
    g = np.asarray(degeneracies, dtype=float)
    y = logs / math.sqrt(float(np.sum(g * g)))
    sigma = math.sqrt(variance)
    params = {"variance": variance, "mle_variance": float(np.mean(y * y)), "sum_g2": float(np.sum(g * g))}
    return _report("normal_pi2_3", y, stats.norm(0.0, sigma).cdf, params, bins)


def increment_samples(spec: WeightedSpectrum, N: int, s: float, h: float, times, threads=None) -> np.ndarray:
    """|W^N_{s+h}(t) - W^N_s(t)|^2 for each t."""
    if s < 0 or h < 0:
        raise ValueError("s and h must be nonnegative")
    if not 1 <= N <= spec.n_blocks:
        raise IndexError(f"N must lie in [1, {spec.n_blocks}], got {N}")
    lo, hi = _floor_index(N, s), _floor_index(N, s + h)
    if hi > spec.n_blocks:
        raise IndexError(f"window end {hi} exceeds {spec.n_blocks} blocks")
    times = np.asarray(times, dtype=float)
    if hi == lo:
        return np.zeros(times.size)
    norm2 = float(np.sum(spec.weights[:N] ** 2))
    sub = WeightedSpectrum(spec.energies[lo:hi], spec.weights[lo:hi])
    return map_chunks(lambda ts: sff(sub, ts), times, threads) / norm2


def wiener_increment_test(
    spec: WeightedSpectrum,
    N: int,
    s: float,
    h: float,
    n_samples: int = 10_000,
    seed: int = 0,
    window=DEFAULT_SFF_WINDOW,
    threads=None,
    bins="fd",
) -> DistTestReport:
    """KS of |W_{s+h} - W_s|^2 against Exp with mean h.

    The exact finite-N mean is R_1^N(h, s); it is reported together with
    the sample mean and its standard error.
    """
    times = sample_times(window, n_samples, seed)
    x = increment_samples(spec, N, s, h, times, threads)
    exact = r_windowed(spec.weights, 1.0, N, h, s)
    mean = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    params = {"N": N, "s": s, "h": h, "mean": mean, "stderr": se, "exact_mean": exact,
              "mean_over_h": mean / h if h > 0 else float("nan")}
    if h == 0:
        return DistTestReport("exp_mean_h", int(x.size), 0.0, fd_histogram(x, bins), params)
    return _report("exp_mean_h", x, stats.expon(scale=h).cdf, params, bins)
