"""Lyapunov-type ratios controlling the CLT for the spectral walk."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectra import WeightedSpectrum

DEFAULT_QS = (1.5, 2.0, 3.0)
DEFAULT_GRID = (0.1, 0.2, 0.3, 0.4, 0.5)


def _weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0 or np.any(~(w > 0)):
        raise ValueError("weights must be a non-empty positive list")
    # ratios are scale invariant; normalizing keeps d^{2q} in range
    return w / w.max()


def _floor(x: float) -> int:
    r = round(x)
    return int(r) if abs(x - r) <= 1e-9 * max(1.0, abs(x)) else math.floor(x)


def r_ratio(weights, q: float, n: int | None = None) -> float:
    """R_q^n = sum_{j<=n} d_j^{2q} / (sum_{j<=n} d_j^2)^q."""
    w = _weights(weights)
    n = w.size if n is None else int(n)
    if not 1 <= n <= w.size:
        raise IndexError(f"n must lie in [1, {w.size}], got {n}")
    if q < 1:
        raise ValueError("q must be >= 1")
    w2 = w[:n] ** 2
    return math.fsum((w2**q).tolist()) / math.fsum(w2.tolist()) ** q


def r_prefix(weights, q: float) -> np.ndarray:
    """R_q^n for every n = 1..N_B."""
    w2 = _weights(weights) ** 2
    return np.cumsum(w2**q) / np.cumsum(w2) ** q


def r_windowed(weights, q: float, N: int, h: float, s: float) -> float:
    """sum_{k=floor(Ns)+1}^{floor(N(s+h))} d_k^{2q} / (sum_{k<=N} d_k^2)^q."""
    w = _weights(weights)
    if s < 0 or h < 0:
        raise ValueError("s and h must be nonnegative")
    if not 1 <= N <= w.size:
        raise IndexError(f"N must lie in [1, {w.size}], got {N}")
    lo, hi = _floor(N * s), _floor(N * (s + h))
    if hi > w.size:
        raise IndexError(f"window end {hi} exceeds {w.size} blocks")
    w2 = w**2
    num = math.fsum((w2[lo:hi] ** q).tolist())
    return num / math.fsum(w2[:N].tolist()) ** q


def s_ratio(degeneracies, q: float) -> float:
    """S_q = sum g_j^q / (sum g_j^2)^{q/2} for one-particle degeneracies, q > 2."""
    if not q > 2:
        raise ValueError("q must be > 2")
    g = _weights(degeneracies)
    return math.fsum((g**q).tolist()) / math.fsum((g**2).tolist()) ** (q / 2)


@dataclass(frozen=True, eq=False)
class LyapunovReport:
    qs: tuple[float, ...]
    by_L: dict  # L -> {q: R_q^{N_B}}
    by_n: dict  # q -> array R_q^n at the largest L
    windowed: dict = field(default_factory=dict)  # (s, h) -> R_1^N(h, s)
    s_ratios: dict = field(default_factory=dict)  # q -> S_q

    def rows(self):
        for L in sorted(self.by_L):
            for q in self.qs:
                yield L, q, self.by_L[L][q]

    def windowed_rows(self):
        for (s, h), r in sorted(self.windowed.items()):
            yield s, h, r

    def to_dict(self) -> dict:
        return {
            "qs": list(self.qs),
            "by_L": [{"L": L, "q": q, "R": r} for L, q, r in self.rows()],
            "windowed": [{"s": s, "h": h, "R1": r} for s, h, r in self.windowed_rows()],
            "s_ratios": {str(q): v for q, v in self.s_ratios.items()},
        }


def wiener_grid(weights, N: int | None = None, grid=DEFAULT_GRID) -> dict:
    """R_1^N(h, s) over all (s, h) pairs from ``grid``, with N = N_B by default."""
    w = np.asarray(weights, dtype=float)
    N = w.size if N is None else N
    return {(s, h): r_windowed(w, 1.0, N, h, s) for s in grid for h in grid if _floor(N * (s + h)) <= w.size}


def wiener_deviation(windowed: dict) -> float:
    """max |s R_1^N(h,s) - s h| over a windowed table."""
    return max(abs(s * r - s * h) for (s, h), r in windowed.items())


def lyapunov_scan(spectra, qs=DEFAULT_QS, *, sizes=None, grid=DEFAULT_GRID, degeneracies=None) -> LyapunovReport:
    """Tabulate R_q^{N_B} across a family of spectra.

    ``sizes`` labels the spectra (defaults to ``model_meta["L"]``).  The
    prefix curves and the (s, h) table are taken from the largest size.
    """
    spectra = list(spectra)
    if not spectra:
        raise ValueError("no spectra given")
    if sizes is None:
        sizes = [s.model_meta.get("L", i) for i, s in enumerate(spectra)]
    qs = tuple(float(q) for q in qs)
    by_L = {L: {q: r_ratio(sp.weights, q) for q in qs} for L, sp in zip(sizes, spectra)}
    big = spectra[int(np.argmax(sizes))]
    by_n = {q: r_prefix(big.weights, q) for q in qs}
    s_ratios = {}
    if degeneracies is not None:
        s_ratios = {q: s_ratio(degeneracies, q) for q in qs if q > 2}
    return LyapunovReport(qs, by_L, by_n, wiener_grid(big.weights, grid=grid), s_ratios)


def scan_spectrum(spec: WeightedSpectrum, qs=DEFAULT_QS) -> dict:
    return {q: r_ratio(spec.weights, q) for q in qs}
