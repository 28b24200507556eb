"""Point-gap topology of the truncated annihilation operator.

The operator is a weighted shift with ``t_j = sqrt(j+1)`` and no onsite term.
Closing the chain with ``t_D = sqrt(D+1)`` gives a cyclic matrix whose
characteristic polynomial is ``(-E)**(D+1) - (-1)**(D+1) sqrt((D+1)!)``, so
the spectrum is the circle of roots of ``E**(D+1) = sqrt((D+1)!)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln

from fockskin.errors import AmbiguousWindingError, DomainError, NumericalFailure, TruncationError
from fockskin.lattice import OBC, PBC, Boundary
from fockskin.topology import OFF_BAND_EPS, ComplexSpectrum, ModeVector, WindingResult, unwrap_winding

TAIL_TOL = 1e-12


@dataclass(frozen=True)
class AnnihilationSpec:
    """Sites ``0..dim`` of ``a`` raised to ``power``."""

    dim: int
    bc: Boundary = OBC
    power: int = 1

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be an integer >= 1, got {self.dim}")
        if int(self.power) != self.power or self.power < 1:
            raise ValueError(f"power must be an integer >= 1, got {self.power}")


def build_annihilation(spec: AnnihilationSpec) -> np.ndarray:
    """Matrix of ``a`` (not its power) on sites ``0..D``.

    A twist spreads its phase over every link: each hopping, the wrap
    included, is multiplied by ``exp(-i theta/(D+1))``.
    """
    D = spec.dim
    t = np.sqrt(np.arange(1, D + 2, dtype=float))
    mat = np.zeros((D + 1, D + 1), dtype=complex)
    mat[np.arange(D), np.arange(1, D + 1)] = t[:-1]
    if spec.bc.is_periodic:
        mat[D, 0] = t[-1]
    if spec.bc.kind == "tbc":
        mat *= np.exp(-1j * spec.bc.theta / (D + 1))
    return mat


def pbc_radius(D: int) -> float:
    """``((D+1)!)**(1/(2(D+1)))``, the modulus of every periodic eigenvalue."""
    return math.exp(gammaln(D + 2) / (2 * (D + 1)))


def pbc_roots_analytic(D: int) -> ComplexSpectrum:
    """Roots of ``E**(D+1) = sqrt((D+1)!)``, one of them real and positive."""
    if D < 1:
        raise ValueError("D must be >= 1")
    n = D + 1
    roots = pbc_radius(D) * np.exp(2j * np.pi * np.arange(n) / n)
    return ComplexSpectrum(roots, AnnihilationSpec(D, PBC), "analytic-roots")


def annihilation_spectrum(spec: AnnihilationSpec) -> ComplexSpectrum:
    """Eigenvalues of ``a**p`` from the dense eigensolver."""
    mat = np.linalg.matrix_power(build_annihilation(spec), spec.power)
    try:
        vals = np.linalg.eigvals(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from None
    return ComplexSpectrum(vals, spec, "numeric-eigensolver")


def coherent_tail(alpha: complex, length: int) -> float:
    """Probability weight ``exp(-|a|^2) sum_{j>L} |a|^(2j)/j!`` beyond site ``L``."""
    x = abs(alpha) ** 2
    if x == 0:
        return 0.0
    return float(gammainc(length + 1, x))


def min_length(alpha: complex, tol: float = TAIL_TOL) -> int:
    """Smallest ``L`` whose coherent tail weight is below ``tol``."""
    L = max(1, int(abs(alpha) ** 2))
    while coherent_tail(alpha, L) >= tol:
        L += max(1, L // 8)
    while L > 1 and coherent_tail(alpha, L - 1) < tol:
        L -= 1
    return L


def _coherent_amplitudes(alpha: complex, length: int) -> np.ndarray:
    j = np.arange(length + 1)
    if alpha == 0:
        out = np.zeros(length + 1, dtype=complex)
        out[0] = 1.0
        return out
    log_mag = -abs(alpha) ** 2 / 2 + j * math.log(abs(alpha)) - gammaln(j + 1) / 2
    return np.exp(log_mag + 1j * j * np.angle(alpha))


def coherent_mode(alpha: complex, length: int) -> ModeVector:
    """Coherent state truncated to sites ``0..length``.

    Raises :class:`TruncationError` if the discarded weight is not below
    ``1e-12``.  ``residual`` is ``|a v - alpha v| / |v|`` with the open
    truncated ``a``.
    """
    alpha = complex(alpha)
    tail = coherent_tail(alpha, length)
    if tail >= TAIL_TOL:
        raise TruncationError(
            f"length {length} leaves tail weight {tail:.3e} for |alpha|={abs(alpha):.4g}; "
            f"need at least {min_length(alpha)}"
        )
    v = _coherent_amplitudes(alpha, length)
    a = build_annihilation(AnnihilationSpec(length, OBC))
    residual = float(np.linalg.norm(a @ v - alpha * v) / np.linalg.norm(v))
    return ModeVector(v, alpha, "coherent", normalization="coherent", admissible=True, residual=residual)


def winding_power(p: int, D: int, omega: complex, n_theta: int = 256) -> WindingResult:
    """Winding of ``det(a(theta)**p - omega)`` over one twist period.

    ``a(theta)`` is the twisted operator of :func:`build_annihilation`.  Its
    ``p``-th power has eigenvalues ``x**p`` on the circle of radius ``r**p``,
    so the winding is ``-p`` inside that circle and 0 outside.
    ``log_abs_r`` holds the radial margin ``ln|omega| - p ln r``.
    """
    if int(p) != p or p < 1:
        raise ValueError(f"power must be an integer >= 1, got {p}")
    omega = complex(omega)
    margin = (math.log(abs(omega)) if omega != 0 else -math.inf) - p * math.log(pbc_radius(D))
    if abs(margin) < OFF_BAND_EPS:
        raise AmbiguousWindingError(f"omega={omega} lies within the ambiguity band of the spectral circle")
    base = build_annihilation(AnnihilationSpec(D, PBC))
    power = np.linalg.matrix_power(base, p)
    eye = np.eye(D + 1)

    def phase_of(theta):
        # a(theta) = exp(-i theta/(D+1)) a(0), so the power only picks up a scalar phase
        out = np.empty(len(theta))
        for k, th in enumerate(theta):
            sign, _ = np.linalg.slogdet(np.exp(-1j * p * th / (D + 1)) * power - omega * eye)
            if sign == 0:
                raise AmbiguousWindingError(f"determinant vanishes at theta={th}")
            out[k] = np.angle(sign)
        return out

    w, used = unwrap_winding(phase_of, n_theta)
    return WindingResult(omega, w, margin < 0, used, margin)


def degenerate_modes(p: int, E: complex, length: int | None = None) -> list[ModeVector]:
    """The ``p`` coherent states with ``alpha**p = E``.

    Each is checked against ``|a^p v - E v| < 1e-6 |v|``, and the set against
    linear dependence (smallest singular value above ``1e-8``).
    """
    if int(p) != p or p < 1:
        raise ValueError(f"power must be an integer >= 1, got {p}")
    E = complex(E)
    if E == 0:
        raise DomainError("E = 0 gives the single vacuum state, not p distinct modes")
    mag = abs(E) ** (1.0 / p)
    alphas = [mag * np.exp(1j * (np.angle(E) + 2 * np.pi * q) / p) for q in range(p)]
    if length is None:
        length = min_length(mag) + 4 * p
    modes = [coherent_mode(a, length) for a in alphas]
    ap = np.linalg.matrix_power(build_annihilation(AnnihilationSpec(length, OBC)), p)
    out = []
    for m in modes:
        v = m.amplitudes
        res = float(np.linalg.norm(ap @ v - E * v) / np.linalg.norm(v))
        if res >= 1e-6:
            raise NumericalFailure(f"mode alpha={m.energy:.6g} has a^p residual {res:.3e}")
        out.append(ModeVector(v, E, "coherent", normalization="coherent", admissible=True, residual=res))
    smin = np.linalg.svd(np.stack([m.amplitudes for m in out], axis=1), compute_uv=False)[-1]
    if smin <= 1e-8:
        raise NumericalFailure(f"modes are numerically dependent (smallest singular value {smin:.3e})")
    return out
