"""Spectral form factors of many-body spectra read as planar random walks."""
from .spectra import (
    BudgetError,
    OneParticleSpectrum,
    WeightedSpectrum,
    build_syk,
    build_xxz_nnn,
    build_xy_one_particle,
    diagonalize,
    make_weighted_spectrum,
)
from .walker import chi, sff, walk_path

__all__ = [
    "BudgetError",
    "OneParticleSpectrum",
    "WeightedSpectrum",
    "build_syk",
    "build_xxz_nnn",
    "build_xy_one_particle",
    "chi",
    "diagonalize",
    "make_weighted_spectrum",
    "sff",
    "walk_path",
]
