"""Damped-oscillator Liouvillian as semi-infinite non-Hermitian chains.

Spectra under open/periodic/twisted truncations, spectral winding numbers,
semi-infinite skin modes and their dynamics, and the same analysis for the
bare annihilation operator.
"""

from fockskin.lattice import (
    OBC,
    PBC,
    Boundary,
    ChainSpec,
    OscillatorParams,
    block_decompose,
    build_chain_matrix,
    build_liouvillian,
    hopping,
    onsite,
)

__version__ = "0.1.0"

__all__ = [
    "OBC",
    "PBC",
    "Boundary",
    "ChainSpec",
    "OscillatorParams",
    "block_decompose",
    "build_chain_matrix",
    "build_liouvillian",
    "hopping",
    "onsite",
    "__version__",
]
