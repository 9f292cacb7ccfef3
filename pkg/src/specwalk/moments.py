"""Infinite-time moments I_m of |chi(t)|^2.

For a spectrum that is p-ND (no nontrivial coincidences among sums of
at most p energies) the time average of |chi|^{2p} depends only on the
power sums X_n = sum_j d_j^{2n}:

    I_p = sum_{q=1}^{p} C(p-1, q-1) p!/(p-q)! a_q X_q I_{p-q},   I_0 = 1,

with a_n the cumulants of a variable whose moments are 1/n! (the Taylor
coefficients of ln I_0(2 sqrt z)).  The multinomial form

    I_m = (m!)^2 sum_{n_1+...+n_N = m} prod_i (d_i^{n_i} / n_i!)^2

is kept as an independent oracle.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Integral

import numpy as np

from .spectra import BudgetError, WeightedSpectrum
from .walker import DEFAULT_SFF_WINDOW, map_chunks, sample_times, sff

A_MAX = 64
MULTINOMIAL_BUDGET = 10_000_000


def _as_weights(weights) -> list:
    w = list(weights.tolist() if isinstance(weights, np.ndarray) else weights)
    if not w:
        raise ValueError("empty weight list")
    if any(not x > 0 for x in w):
        raise ValueError("weights must be positive")
    return w


def _all_integral(w) -> bool:
    return all(isinstance(x, Integral) or (isinstance(x, float) and x.is_integer()) for x in w)


def power_sums(weights, p_max: int, *, exact: bool = False) -> list:
    """X_n = sum_j d_j^{2n} for n = 1..p_max.

    With ``exact=True`` and integer weights the sums are Python ints;
    otherwise they are correctly rounded floats (math.fsum).
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    w = _as_weights(weights)
    if exact:
        if not _all_integral(w):
            raise ValueError("exact power sums need integer weights")
        w = [int(x) for x in w]
        return [sum(x ** (2 * n) for x in w) for n in range(1, p_max + 1)]
    w = [float(x) for x in w]
    return [math.fsum(x ** (2 * n) for x in w) for n in range(1, p_max + 1)]


@lru_cache(maxsize=None)
def _cumulants(p_max: int) -> tuple[Fraction, ...]:
    mu = [Fraction(1, math.factorial(n)) for n in range(p_max + 1)]
    a = [Fraction(0)]
    for n in range(1, p_max + 1):
        s = sum(math.comb(n - 1, k - 1) * a[k] * mu[n - k] for k in range(1, n))
        a.append(mu[n] - s)
    return tuple(a[1:])


def log_bessel_cumulants(p_max: int, *, exact: bool = False) -> list:
    """a_1..a_{p_max}: cumulants of moments 1/k!, from the moment-cumulant recursion."""
    if not 1 <= p_max <= A_MAX:
        raise ValueError(f"p_max must lie in [1, {A_MAX}]")
    a = _cumulants(p_max)
    return list(a) if exact else [float(x) for x in a]


def _recursion(X, a, p_max, one, add):
    I = [one]
    for p in range(1, p_max + 1):
        terms = [
            math.comb(p - 1, q - 1) * (math.factorial(p) // math.factorial(p - q)) * a[q - 1] * X[q - 1] * I[p - q]
            for q in range(1, p + 1)
        ]
        I.append(add(terms))
    return I[1:]


def exact_moments_recursion(weights, p_max: int, *, exact: bool | None = None) -> list:
    """I_1..I_{p_max} from the power-sum recursion.

    ``exact=None`` picks big-integer arithmetic when every weight is an
    integer and floating point otherwise.  The result is the time average
    only if the spectrum is p_max-ND; that is the caller's responsibility.
    Raises OverflowError if a float moment leaves double range; use
    :func:`log_moments_recursion` then.
    """
    w = _as_weights(weights)
    if exact is None:
        exact = _all_integral(w)
    if exact:
        X = power_sums(w, p_max, exact=True)
        a = log_bessel_cumulants(p_max, exact=True)
        I = _recursion(X, a, p_max, Fraction(1), sum)
        if any(x.denominator != 1 for x in I):
            raise ArithmeticError("non-integer moment in exact mode")
        return [int(x) for x in I]
    X = power_sums(w, p_max)
    a = log_bessel_cumulants(p_max)
    try:
        I = _recursion(X, a, p_max, 1.0, math.fsum)
    except OverflowError:
        raise OverflowError("moment exceeds double range; use log_moments_recursion") from None
    if not all(math.isfinite(x) for x in I):
        raise OverflowError("moment exceeds double range; use log_moments_recursion")
    return I


def log_moments_recursion(weights, p_max: int) -> list[float]:
    """ln I_1..ln I_{p_max}, computed on weights rescaled to X_1 = 1.

    Uses homogeneity I_m(c d) = c^{2m} I_m(d), so only the order-one
    moments of the normalized weights are ever formed.
    """
    w = np.asarray(_as_weights(weights), dtype=float)
    top = float(w.max())
    u = w / top
    ln_x1 = 2.0 * math.log(top) + math.log(math.fsum((u * u).tolist()))
    norm = u / math.sqrt(math.fsum((u * u).tolist()))
    I = exact_moments_recursion(norm, p_max, exact=False)
    return [math.log(v) + m * ln_x1 for m, v in enumerate(I, start=1)]


def _compositions(n_parts: int, m: int):
    """All (n_1..n_N) with n_i >= 0 summing to m."""
    for bars in itertools.combinations(range(m + n_parts - 1), n_parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(m + n_parts - 2 - prev)
        yield out


def exact_moments_multinomial(weights, m: int, *, exact: bool | None = None, budget: int = MULTINOMIAL_BUDGET):
    """I_m by direct summation over compositions of m (oracle scale only)."""
    w = _as_weights(weights)
    if m < 1:
        raise ValueError("m must be >= 1")
    n_comp = math.comb(len(w) + m - 1, m)
    if n_comp > budget:
        raise BudgetError(f"{n_comp} compositions exceed budget {budget}")
    if exact is None:
        exact = _all_integral(w)
    mf = math.factorial(m)
    if exact:
        w = [int(x) for x in w]
        total = 0
        for ns in _compositions(len(w), m):
            coef = mf
            prod = 1
            for d, n in zip(w, ns):
                coef //= math.factorial(n)
                prod *= d ** (2 * n)
            total += coef * coef * prod
        return total
    w = [float(x) for x in w]
    terms = []
    for ns in _compositions(len(w), m):
        t = float(mf) ** 2
        for d, n in zip(w, ns):
            if n:
                t *= (d**n / math.factorial(n)) ** 2
        terms.append(t)
    return math.fsum(terms)


def gaussian_moments(weights, m: int):
    """m! X_1^m: the moment of an Exp-distributed |chi|^2 with mean X_1."""
    w = _as_weights(weights)
    X1 = power_sums(w, 1, exact=_all_integral(w))[0]
    return math.factorial(m) * X1**m


def free_fermion_moments(degeneracies, M: int) -> int:
    """prod_j C(2 g_j M, g_j M): time average of |chi|^{2M} for a quasi-free spectrum."""
    if M < 0:
        raise ValueError("M must be >= 0")
    out = 1
    for g in degeneracies:
        g = int(g)
        if g < 1:
            raise ValueError("degeneracies must be positive integers")
        out *= math.comb(2 * g * M, g * M)
    return out


def log_free_fermion_moments(degeneracies, M: int) -> float:
    """ln prod_j C(2 g_j M, g_j M) via lgamma; safe for any number of modes."""
    if M < 0:
        raise ValueError("M must be >= 0")
    total = []
    for g in degeneracies:
        k = int(g) * M
        total.append(math.lgamma(2 * k + 1) - 2.0 * math.lgamma(k + 1))
    return math.fsum(total)


@dataclass(frozen=True, eq=False)
class MCMoments:
    mean: np.ndarray  # estimates of I_1..I_m
    stderr: np.ndarray
    n_samples: int
    window: tuple[float, float]
    seed: int

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "stderr": self.stderr.tolist(), "n": self.n_samples}


def moments_from_samples(values, m_max: int):
    """(means, stderrs) of values^m for m = 1..m_max."""
    v = np.asarray(values, dtype=float)
    powers = np.stack([v**m for m in range(1, m_max + 1)])
    mean = powers.mean(axis=1)
    se = powers.std(axis=1, ddof=1) / math.sqrt(v.size) if v.size > 1 else np.zeros(m_max)
    return mean, se


def mc_moments(
    spec: WeightedSpectrum,
    m_max: int,
    n_samples: int = 10_000,
    window=DEFAULT_SFF_WINDOW,
    seed: int = 0,
    threads: int | None = None,
) -> MCMoments:
    """Sample means of |chi(t)|^{2m} over uniform t in ``window``."""
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    times = sample_times(window, n_samples, seed)
    vals = map_chunks(lambda ts: sff(spec, ts), times, threads)
    mean, se = moments_from_samples(vals, m_max)
    return MCMoments(mean, se, int(n_samples), (float(window[0]), float(window[1])), int(seed))


@dataclass(frozen=True, eq=False)
class MomentReport:
    p_max: int
    X: list
    a: list
    I_exact: list
    I_gauss: list
    mc: MCMoments | None = None
    meta: dict = field(default_factory=dict)

    @property
    def K(self) -> list[float]:
        I1 = self.I_exact[0]
        return [float(Fraction(I) / Fraction(I1) ** m) if isinstance(I, int) else I / I1**m
                for m, I in enumerate(self.I_exact, start=1)]

    @property
    def gaussian_deviation(self) -> list[float]:
        """|K_m - m!| / m!: relative error of the Gaussian prediction."""
        return [abs(k - math.factorial(m)) / math.factorial(m) for m, k in enumerate(self.K, start=1)]

    def to_dict(self) -> dict:
        out = {
            "p_max": self.p_max,
            "X": [float(x) for x in self.X],
            "a": [float(x) for x in self.a],
            "I_exact": [float(x) for x in self.I_exact],
            "I_gauss": [float(x) for x in self.I_gauss],
            "K": self.K,
        }
        if self.mc is not None:
            out["mc"] = self.mc.to_dict()
        if self.meta:
            out["meta"] = dict(self.meta)
        return out


def moment_report(weights, p_max: int, mc: MCMoments | None = None, meta: dict | None = None) -> MomentReport:
    w = _as_weights(weights)
    exact = _all_integral(w)
    I = exact_moments_recursion(w, p_max, exact=exact)
    return MomentReport(
        p_max=p_max,
        X=power_sums(w, p_max, exact=exact),
        a=log_bessel_cumulants(p_max),
        I_exact=I,
        I_gauss=[gaussian_moments(w, m) for m in range(1, p_max + 1)],
        mc=mc,
        meta=dict(meta or {}),
    )
