"""Fock-space lattice for the damped harmonic oscillator.

The vectorized Lindblad generator acts on the two-mode basis ``|m n>``.  Its
only hopping term couples ``(m, n)`` to ``(m+1, n+1)``, so it splits into
decoupled chains labelled by ``nu = m - n``.  Site ``j`` of chain ``nu`` is
the basis state ``(j + (|nu|+nu)/2, j + (|nu|-nu)/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from fockskin.errors import StructureError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class OscillatorParams:
    """Oscillator frequency and damping rate (hbar = 1)."""

    omega: float = 1.0
    kappa: float = 0.1

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")


@dataclass(frozen=True)
class Boundary:
    """Boundary condition of a truncated chain.

    ``kind`` is one of ``"obc"``, ``"pbc"``, ``"tbc"``.  For ``"tbc"`` the
    twist angle is stored reduced to ``[0, 2 pi)``.
    """

    kind: str
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("obc", "pbc", "tbc"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind != "tbc" and self.theta != 0.0:
            raise ValueError(f"{self.kind} takes no twist angle")
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)

    @classmethod
    def twisted(cls, theta: float) -> "Boundary":
        return cls("tbc", theta)

    @classmethod
    def parse(cls, text: str) -> "Boundary":
        """Parse ``obc``, ``pbc`` or ``tbc=<theta>``."""
        text = text.strip().lower()
        if text in ("obc", "pbc"):
            return cls(text)
        if text.startswith("tbc="):
            return cls.twisted(float(text[4:]))
        raise ValueError(f"cannot parse boundary condition {text!r}")

    @property
    def is_periodic(self) -> bool:
        return self.kind != "obc"

    @property
    def wrap_phase(self) -> complex:
        """Factor multiplying the wrap hopping; 0 for open chains."""
        if self.kind == "obc":
            return 0.0
        if self.kind == "pbc":
            return 1.0
        return complex(math.cos(self.theta), -math.sin(self.theta))

    def __str__(self):
        return f"tbc={self.theta!r}" if self.kind == "tbc" else self.kind


OBC = Boundary("obc")
PBC = Boundary("pbc")


@dataclass(frozen=True)
class ChainSpec:
    """One truncated chain: sites ``j = 0..dim`` of chain ``nu``."""

    params: OscillatorParams = field(default_factory=OscillatorParams)
    nu: int = 0
    dim: int = 50
    bc: Boundary = OBC

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be an integer >= 1, got {self.dim}")
        if int(self.nu) != self.nu:
            raise ValueError(f"nu must be an integer, got {self.nu}")

    @property
    def n_sites(self) -> int:
        return self.dim + 1

    def with_bc(self, bc: Boundary) -> "ChainSpec":
        return ChainSpec(self.params, self.nu, self.dim, bc)


def _onsite(params: OscillatorParams, nu: int, j):
    j = np.asarray(j)
    return nu * params.omega - 1j * params.kappa * (2 * j + abs(nu)) / 2


def _hopping(params: OscillatorParams, nu: int, j):
    j = np.asarray(j)
    return 1j * params.kappa * np.sqrt((j + 1.0) * (j + abs(nu) + 1.0))


def onsite(spec: ChainSpec, j: int) -> complex:
    """Onsite energy ``nu*omega - i*kappa*(2j + |nu|)/2``."""
    if j < 0:
        raise ValueError("site index must be non-negative")
    return complex(_onsite(spec.params, spec.nu, j))


def hopping(spec: ChainSpec, j: int) -> complex:
    """Hopping from site ``j+1`` to site ``j``: ``i*kappa*sqrt((j+1)(j+|nu|+1))``."""
    if j < 0:
        raise ValueError("site index must be non-negative")
    return complex(_hopping(spec.params, spec.nu, j))


def chain_diagonals(spec: ChainSpec) -> tuple[np.ndarray, np.ndarray]:
    """Onsite energies for ``j = 0..D`` and hoppings ``t_j`` for ``j = 0..D``.

    ``t_D`` is the hopping that closes a periodic chain; open chains ignore it.
    """
    j = np.arange(spec.dim + 1)
    return _onsite(spec.params, spec.nu, j), _hopping(spec.params, spec.nu, j)


def build_chain_matrix(spec: ChainSpec) -> np.ndarray:
    """Dense ``(D+1) x (D+1)`` chain generator.

    Upper bidiagonal with onsite energies on the diagonal and ``t_j`` at
    ``(j, j+1)``.  Periodic and twisted chains get ``phase * t_D`` at
    ``(D, 0)``, the twist entering as ``exp(-i theta)``.
    """
    if spec.dim < 1:
        raise ValueError("dim must be >= 1")
    h, t = chain_diagonals(spec)
    mat = np.diag(h).astype(complex)
    mat[np.arange(spec.dim), np.arange(1, spec.dim + 1)] = t[:-1]
    if spec.bc.is_periodic:
        mat[spec.dim, 0] = spec.bc.wrap_phase * t[-1]
    return mat


def annihilation_operator(cutoff: int) -> np.ndarray:
    """Truncated ``a`` on Fock states ``|0>..|cutoff>``."""
    n = np.arange(1, cutoff + 1)
    return np.diag(np.sqrt(n).astype(float), k=1)


def liouvillian_from_operators(hamiltonian, annihilation, kappa: float) -> np.ndarray:
    """Vectorized generator ``i d|rho>/dt = L |rho>`` for one damping channel.

    Row-major vectorization: ``|m n>`` sits at index ``m * dim + n``.
    """
    hamiltonian = np.asarray(hamiltonian, dtype=complex)
    a = np.asarray(annihilation, dtype=complex)
    eye = np.eye(a.shape[0])
    n_op = a.conj().T @ a
    return (
        np.kron(hamiltonian, eye)
        - np.kron(eye, hamiltonian.T)
        + 0.5j * kappa * (2 * np.kron(a, a.conj()) - np.kron(n_op, eye) - np.kron(eye, n_op))
    )


def build_liouvillian(params: OscillatorParams, cutoff: int) -> np.ndarray:
    """Generator of the damped oscillator truncated at Fock level ``cutoff``.

    The result is ``(cutoff+1)**2`` square on the basis ``|m n>``,
    ``0 <= m, n <= cutoff``.
    """
    if cutoff < 1:
        raise ValueError("Fock cutoff must be >= 1")
    # Same terms as liouvillian_from_operators, but with a^dag a = diag(n) and
    # a (x) a* = sqrt((m+1)(n+1)) formed exactly, so that the blocks agree
    # bit for bit with build_chain_matrix.
    levels = np.arange(cutoff + 1, dtype=float)
    n_op = np.diag(levels)
    eye = np.eye(cutoff + 1)
    ham = params.omega * (n_op + 0.5 * eye)
    sq = np.diag(levels[1:], k=1)
    cross = np.sqrt(np.kron(sq, sq))
    return (
        np.kron(ham, eye)
        - np.kron(eye, ham.T)
        + 0.5j * params.kappa * (2 * cross - np.kron(n_op, eye) - np.kron(eye, n_op))
    )


def chain_indices(nu: int, cutoff: int) -> np.ndarray:
    """Flat basis indices of the sites of chain ``nu`` inside the cutoff, by ``j``."""
    j = np.arange(cutoff - abs(nu) + 1)
    m = j + (abs(nu) + nu) // 2
    n = j + (abs(nu) - nu) // 2
    return m * (cutoff + 1) + n


def block_decompose(liouvillian: np.ndarray, cutoff: int) -> dict[int, np.ndarray]:
    """Split a truncated generator into its ``nu = m - n`` blocks.

    Raises :class:`StructureError` if anything couples different ``nu``.
    """
    size = (cutoff + 1) ** 2
    if liouvillian.shape != (size, size):
        raise ValueError(f"expected a {size}x{size} matrix for cutoff {cutoff}")
    m, n = np.divmod(np.arange(size), cutoff + 1)
    grade = m - n
    off = liouvillian[grade[:, None] != grade[None, :]]
    if np.any(off != 0):
        mass = float(np.sqrt(np.sum(np.abs(off) ** 2)))
        raise StructureError(f"off-block Frobenius mass {mass:.3e} is not zero")
    return {
        nu: liouvillian[np.ix_(chain_indices(nu, cutoff), chain_indices(nu, cutoff))]
        for nu in range(-cutoff, cutoff + 1)
    }


def interior_chain_block(params: OscillatorParams, nu: int, cutoff: int) -> np.ndarray:
    """What ``block_decompose`` should return for chain ``nu``: the open chain
    with ``dim = cutoff - |nu|`` (a single site when ``|nu| == cutoff``)."""
    dim = cutoff - abs(nu)
    if dim == 0:
        return np.array([[_onsite(params, nu, 0)]], dtype=complex)
    return build_chain_matrix(ChainSpec(params, nu, dim, OBC))
