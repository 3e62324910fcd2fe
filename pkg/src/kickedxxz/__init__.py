"""Kicked Heisenberg XXZ ring: exact Floquet dynamics of one and two spin flips,
two-magnon Bethe ansatz, free-fermion closed forms and the kicked-rotor image."""

from .chain import (
    ChainParams,
    OneExcitationState,
    TwoExcitationState,
    build_one_excitation_h,
    build_two_excitation_h,
    total_momentum_blocks,
)
from .floquet import apply_floquet, build_floquet, chebyshev_apply, evolve
from .bethe import enumerate_spectrum, solve_root
from .rotor import RotorParams, image_parameters

__version__ = "0.1.0"

__all__ = [
    "ChainParams",
    "OneExcitationState",
    "TwoExcitationState",
    "build_one_excitation_h",
    "build_two_excitation_h",
    "total_momentum_blocks",
    "build_floquet",
    "apply_floquet",
    "chebyshev_apply",
    "evolve",
    "enumerate_spectrum",
    "solve_root",
    "RotorParams",
    "image_parameters",
    "__version__",
]
