"""Model Hamiltonians, exact diagonalization and weighted spectra.

The walk generator is a :class:`WeightedSpectrum`: distinct ascending
energies ``E_j`` with positive weights ``d_j = tr(rho P_j)`` for
``rho = exp(-beta H)``.  Builders return dense matrices in the
computational (sigma^z) basis; site ``j`` is bit ``j`` of the basis index.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

DEFAULT_TOL = 1e-8
MAX_DENSE_SITES = 14
MAX_SYK_QUBITS = 10
MAX_FREE_MODES = 20
MULTISET_BUDGET = 10_000  # C(D+M-1, M); squared this is the pair budget of 1e8

SYK_PRNG = "numpy.random.PCG64/standard_normal"


class BudgetError(ValueError):
    """Requested size exceeds the dense/enumeration budget."""


@dataclass(frozen=True, eq=False)
class WeightedSpectrum:
    energies: np.ndarray
    weights: np.ndarray
    beta: float = 0.0
    model_meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        e = np.array(self.energies, dtype=float).ravel()
        d = np.array(self.weights, dtype=float).ravel()
        if e.size == 0 or e.size != d.size:
            raise ValueError("energies and weights must be non-empty and of equal length")
        if not (np.all(np.isfinite(e)) and np.all(np.isfinite(d))):
            raise ValueError("non-finite energy or weight")
        if np.any(d <= 0):
            raise ValueError("weights must be strictly positive")
        if np.any(np.diff(e) <= 0):
            raise ValueError("energies must be strictly ascending")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        e.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "weights", d)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "model_meta", dict(self.model_meta))

    @property
    def n_blocks(self) -> int:
        return int(self.energies.size)

    def __len__(self):
        return self.n_blocks

    def __eq__(self, other):
        if not isinstance(other, WeightedSpectrum):
            return NotImplemented
        return (
            np.array_equal(self.energies, other.energies)
            and np.array_equal(self.weights, other.weights)
            and self.beta == other.beta
            and self.model_meta == other.model_meta
        )


@dataclass(frozen=True, eq=False)
class OneParticleSpectrum:
    """Free-fermion levels grouped into distinct values with degeneracies.

    Many-body energies are ``E_0 + sum_k n_k Lambda_k`` with ``n_k in {0, 1}``.
    """

    levels: np.ndarray
    degeneracies: np.ndarray
    offset: float = 0.0
    model_meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        eps = np.array(self.levels, dtype=float).ravel()
        g = np.array(self.degeneracies).ravel()
        if eps.size == 0 or eps.size != g.size:
            raise ValueError("levels and degeneracies must be non-empty and of equal length")
        if not np.all(np.isfinite(eps)):
            raise ValueError("non-finite level")
        if np.any(np.diff(eps) <= 0):
            raise ValueError("levels must be strictly ascending")
        if not np.all(g == np.round(g)) or np.any(g < 1):
            raise ValueError("degeneracies must be positive integers")
        g = g.astype(np.int64)
        eps.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "levels", eps)
        object.__setattr__(self, "degeneracies", g)
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "model_meta", dict(self.model_meta))

    @property
    def n_modes(self) -> int:
        return int(self.degeneracies.sum())

    @property
    def n_levels(self) -> int:
        return int(self.levels.size)

    def mode_energies(self) -> np.ndarray:
        """All ``L`` one-particle energies, each level repeated ``g_j`` times."""
        return np.repeat(self.levels, self.degeneracies)

    def __eq__(self, other):
        if not isinstance(other, OneParticleSpectrum):
            return NotImplemented
        return (
            np.array_equal(self.levels, other.levels)
            and np.array_equal(self.degeneracies, other.degeneracies)
            and self.offset == other.offset
            and self.model_meta == other.model_meta
        )


def _check_finite(**params):
    for name, value in params.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


def _spins(n_sites: int) -> np.ndarray:
    """(n_sites, 2**n_sites) array of sigma^z eigenvalues +1/-1 per basis state."""
    states = np.arange(1 << n_sites)
    bits = (states[None, :] >> np.arange(n_sites)[:, None]) & 1
    return 1 - 2 * bits


def _add_bond(H, spins, i, j, coupling, Delta):
    """Add coupling*(XX + YY + Delta ZZ) on sites i, j to H in place."""
    dim = H.shape[0]
    if i == j:
        # sigma^a sigma^a = 1 on a single site
        H[np.diag_indices(dim)] += coupling * (2.0 + Delta)
        return
    states = np.arange(dim)
    zz = spins[i] * spins[j]
    H[states, states] += coupling * Delta * zz
    flip = np.flatnonzero(zz < 0)
    # XX + YY = 2 (S+S- + S-S+): swaps antiparallel neighbours with amplitude 2
    H[flip ^ ((1 << i) | (1 << j)), flip] += 2.0 * coupling


def build_xxz_nnn(L: int, Delta: float, alpha: float) -> np.ndarray:
    """XXZ chain with next-nearest-neighbour coupling, periodic boundaries.

    H = sum_j (XX + YY + Delta ZZ)_{j,j+1} + alpha sum_j (XX + YY + Delta ZZ)_{j,j+2}

    The matrix is real symmetric in the sigma^z basis and is returned as
    float64 of shape (2**L, 2**L).
    """
    if not (isinstance(L, (int, np.integer)) and 2 <= L <= MAX_DENSE_SITES):
        raise BudgetError(f"L must be an integer in [2, {MAX_DENSE_SITES}], got {L!r}")
    _check_finite(Delta=Delta, alpha=alpha)
    L = int(L)
    dim = 1 << L
    H = np.zeros((dim, dim))
    spins = _spins(L)
    for j in range(L):
        _add_bond(H, spins, j, (j + 1) % L, 1.0, Delta)
    if alpha != 0.0:
        for j in range(L):
            _add_bond(H, spins, j, (j + 2) % L, alpha, Delta)
    return H


def xy_dispersion(k, h: float, gamma: float) -> np.ndarray:
    c = np.cos(k)
    # (h + cos k)^2 + gamma^2 sin^2 k, written in the expanded form
    arg = gamma**2 + h**2 + (1.0 - gamma**2) * c**2 + 2.0 * h * c
    return 2.0 * np.sqrt(np.clip(arg, 0.0, None))


def group_levels(values, tol: float = DEFAULT_TOL):
    """Sort ``values`` and merge runs whose consecutive gaps are <= tol.

    Returns (cluster means, multiplicities).
    """
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("no values to group")
    starts = np.concatenate(([0], np.flatnonzero(np.diff(v) > tol) + 1))
    counts = np.diff(np.concatenate((starts, [v.size])))
    means = np.add.reduceat(v, starts) / counts
    return means, counts


def build_xy_one_particle(L: int, h: float, gamma: float, tol: float = DEFAULT_TOL) -> OneParticleSpectrum:
    """One-particle spectrum of the periodic XY chain in a transverse field.

    Lambda_k = 2 sqrt(gamma^2 + h^2 + (1 - gamma^2) cos^2 k + 2 h cos k)
    on k = 2 pi n / L, n = 0..L-1, with E_0 = -sum(Lambda_k) / 2.
    """
    if not (isinstance(L, (int, np.integer)) and L >= 2):
        raise ValueError(f"L must be an integer >= 2, got {L!r}")
    _check_finite(h=h, gamma=gamma)
    if not tol > 0:
        raise ValueError("tol must be positive")
    k = 2.0 * np.pi * np.arange(L) / L
    lam = xy_dispersion(k, h, gamma)
    levels, g = group_levels(lam, tol)
    meta = {"name": "xy", "L": int(L), "h": float(h), "gamma": float(gamma), "tol": float(tol)}
    return OneParticleSpectrum(levels, g, offset=-0.5 * float(np.sum(lam)), model_meta=meta)


# --- SYK ---------------------------------------------------------------------
#
# Pauli strings are stored as (phase, x, z) meaning phase * X^x Z^z with, on
# every site, X applied after Z (X^x Z^z |b> = (-1)^{|z & b|} |b ^ x>).


def _popcount_parity(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64).copy()
    p = np.zeros_like(a)
    while np.any(a):
        p ^= a & 1
        a >>= 1
    return p


def _majorana_strings(n_qubits: int):
    """Jordan-Wigner Majoranas: Z..Z X_j and Z..Z Y_j with Y = i X Z."""
    out = []
    for j in range(n_qubits):
        below = (1 << j) - 1
        out.append((1.0 + 0j, 1 << j, below))
        out.append((1j, 1 << j, below | (1 << j)))
    return out


def _pauli_product(a, b):
    pa, xa, za = a
    pb, xb, zb = b
    sign = -1.0 if bin(za & xb).count("1") % 2 else 1.0
    return (pa * pb * sign, xa ^ xb, za ^ zb)


def pauli_to_dense(phase: complex, x: int, z: int, n_qubits: int) -> np.ndarray:
    dim = 1 << n_qubits
    b = np.arange(dim)
    M = np.zeros((dim, dim), dtype=complex)
    M[b ^ x, b] = phase * (1 - 2 * _popcount_parity(z & b))
    return M


def majorana_operators(n_majorana: int) -> list[np.ndarray]:
    """Dense Majorana matrices chi_1..chi_n (chi_i^2 = 1)."""
    if n_majorana % 2:
        raise ValueError("n_majorana must be even")
    n = n_majorana // 2
    return [pauli_to_dense(p, x, z, n) for p, x, z in _majorana_strings(n)]


def _check_syk_args(n_majorana, k):
    if n_majorana <= 0 or n_majorana % 2:
        raise ValueError(f"n_majorana must be a positive even integer, got {n_majorana!r}")
    if k <= 0 or k % 2 or k > n_majorana:
        raise ValueError(f"k must be a positive even integer <= n_majorana, got {k!r}")
    if n_majorana // 2 > MAX_SYK_QUBITS:
        raise BudgetError(f"n_majorana={n_majorana} exceeds the dense budget of {2 * MAX_SYK_QUBITS}")


def syk_couplings(n_majorana: int, k: int, J: float = 1.0, seed: int = 0) -> np.ndarray:
    """Gaussian couplings, one per index tuple i_1 < ... < i_k in lexicographic order.

    Variance (k-1)! J / n_majorana^(k-1).
    """
    _check_syk_args(n_majorana, k)
    if not J > 0:
        raise ValueError("J must be positive")
    var = math.factorial(k - 1) * J / n_majorana ** (k - 1)
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.standard_normal(math.comb(n_majorana, k)) * math.sqrt(var)


def build_syk(n_majorana: int, k: int, J: float = 1.0, seed: int = 0) -> np.ndarray:
    """Dense SYK-k Hamiltonian i^{k/2} sum J_{i1..ik} chi_i1 ... chi_ik."""
    _check_syk_args(n_majorana, k)
    n = n_majorana // 2
    dim = 1 << n
    couplings = syk_couplings(n_majorana, k, J, seed)
    chis = _majorana_strings(n)
    prefactor = 1j ** (k // 2)

    # accumulate sum over terms grouped by X-mask: column b of X^x Z^z has
    # one entry at row b ^ x with value (-1)^{|z & b|}
    b = np.arange(dim)
    by_x: dict[int, np.ndarray] = {}
    for J_c, idx in zip(couplings, itertools.combinations(range(n_majorana), k)):
        term = chis[idx[0]]
        for i in idx[1:]:
            term = _pauli_product(term, chis[i])
        phase, x, z = term
        col = by_x.setdefault(x, np.zeros(dim, dtype=complex))
        col += (prefactor * J_c * phase) * (1 - 2 * _popcount_parity(z & b))
    H = np.zeros((dim, dim), dtype=complex)
    for x, col in by_x.items():
        H[b ^ x, b] += col
    return H


# --- diagonalization and weights -----------------------------------------------


def is_hermitian(H: np.ndarray, rtol: float = 1e-12) -> bool:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        return False
    scale = np.linalg.norm(H)
    return bool(np.linalg.norm(H - H.conj().T) <= rtol * max(scale, np.finfo(float).tiny))


def diagonalize(H: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """All eigenvalues of a dense Hermitian matrix, ascending."""
    H = np.asarray(H)
    if not is_hermitian(H, rtol):
        raise ValueError("matrix is not Hermitian within tolerance")
    return np.linalg.eigvalsh(H)


def make_weighted_spectrum(
    eigenvalues,
    beta: float = 0.0,
    tol: float = DEFAULT_TOL,
    *,
    energy_ref: float | None = 0.0,
    model_meta: dict | None = None,
) -> WeightedSpectrum:
    """Cluster an ascending eigenvalue list into blocks with thermal weights.

    Consecutive eigenvalues closer than ``tol`` (absolute) share a block; the
    block energy is the member mean and its weight is
    ``m_j exp(-beta (E_j - energy_ref))``.  ``energy_ref=None`` measures
    energies from the lowest block, which keeps low-temperature weights in
    floating-point range; all weight ratios are unaffected by the reference.
    Blocks whose weight underflows to zero are dropped and counted in
    ``model_meta["n_underflow"]``.
    """
    ev = np.asarray(eigenvalues, dtype=float).ravel()
    if ev.size == 0:
        raise ValueError("empty eigenvalue list")
    if np.any(np.diff(ev) < 0):
        raise ValueError("eigenvalues must be ascending")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not (beta >= 0 and math.isfinite(beta)):
        raise ValueError("beta must be finite and nonnegative")
    energies, mult = group_levels(ev, tol)
    ref = energies[0] if energy_ref is None else float(energy_ref)
    with np.errstate(over="raise", under="ignore"):
        try:
            weights = mult * np.exp(-beta * (energies - ref))
        except FloatingPointError:
            raise OverflowError("thermal weights overflow; use energy_ref=None") from None
    meta = dict(model_meta or {})
    meta.setdefault("tol", float(tol))
    meta["energy_ref"] = float(ref)
    keep = weights > 0
    if not np.all(keep):
        meta["n_underflow"] = int(np.count_nonzero(~keep))
        energies, weights = energies[keep], weights[keep]
    return WeightedSpectrum(energies, weights, beta=beta, model_meta=meta)


def free_many_body_energies(ops: OneParticleSpectrum) -> np.ndarray:
    """All 2**L energies E_0 + sum_k n_k Lambda_k (unsorted)."""
    if ops.n_modes > MAX_FREE_MODES:
        raise BudgetError(f"{ops.n_modes} modes exceed the 2**{MAX_FREE_MODES} enumeration budget")
    e = np.array([ops.offset])
    for lam in ops.mode_energies():
        e = np.concatenate((e, e + lam))
    return e


def enumerate_free_many_body(
    ops: OneParticleSpectrum, beta: float = 0.0, tol: float = DEFAULT_TOL, *, energy_ref: float | None = 0.0
) -> WeightedSpectrum:
    ev = np.sort(free_many_body_energies(ops))
    meta = dict(ops.model_meta)
    meta["many_body"] = True
    meta["L"] = ops.n_modes
    return make_weighted_spectrum(ev, beta, tol, energy_ref=energy_ref, model_meta=meta)


# --- non-degeneracy at order M ---------------------------------------------------


@dataclass(frozen=True)
class NDResult:
    """Outcome of an order-M non-degeneracy check.

    ``witness`` holds two distinct occupation vectors with equal M-fold sums.
    """

    ok: bool
    order: int
    witness: tuple[tuple[int, ...], tuple[int, ...]] | None = None

    def __bool__(self):
        return self.ok


def check_nondegeneracy_order(energies, M: int, tol: float = DEFAULT_TOL) -> NDResult:
    """True iff equal M-fold sums (within tol) only come from equal multisets."""
    E = np.asarray(energies, dtype=float).ravel()
    D = E.size
    if M < 1:
        raise ValueError("M must be >= 1")
    n_multisets = math.comb(D + M - 1, M)
    if n_multisets > MULTISET_BUDGET:
        raise BudgetError(f"{n_multisets} multisets exceed the budget of {MULTISET_BUDGET}")
    idx = np.array(list(itertools.combinations_with_replacement(range(D), M)), dtype=np.int64)
    sums = E[idx].sum(axis=1)
    order = np.argsort(sums, kind="stable")
    close = np.flatnonzero(np.diff(sums[order]) <= tol)
    if close.size == 0:
        return NDResult(True, M)
    a, b = idx[order[close[0]]], idx[order[close[0] + 1]]
    occ = lambda s: tuple(int(c) for c in np.bincount(s, minlength=D))
    return NDResult(False, M, (occ(a), occ(b)))
