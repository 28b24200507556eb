"""Characteristic function, boundary-condition spectra, winding numbers and
skin modes of the truncated chains.

Everything is built on the single-site factors

    gamma_j(E) = (E - h_j) / t_j = (w + c_j) / s_j,

with ``w = -i (E - nu*omega) / kappa``, ``c_j = j + |nu|/2`` and
``s_j = sqrt((j+1)(j+|nu|+1))``.  Writing the factors in these reduced
variables keeps the telescoping identities (``gamma_j(i kappa) = 1`` on the
``nu = 0`` chain) exact in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import xlogy

from fockskin.errors import AmbiguousWindingError, DomainError, NumericalFailure
from fockskin.lattice import (
    OBC,
    Boundary,
    ChainSpec,
    OscillatorParams,
    build_chain_matrix,
    chain_diagonals,
)

TWO_PI = 2.0 * math.pi
EPS = np.finfo(float).eps

#: Reference energies with ``|log|R|| below this are considered on the loop.
OFF_BAND_EPS = 1e-3


# -- log-domain numbers ------------------------------------------------------


@dataclass(frozen=True)
class LogComplex:
    """``exp(log_mag + i*phase)`` with an explicit zero flag.

    ``phase`` is accumulated, never reduced modulo 2 pi.
    """

    log_mag: float
    phase: float
    is_zero: bool = False

    def __mul__(self, other: "LogComplex") -> "LogComplex":
        if self.is_zero or other.is_zero:
            return LogComplex(-math.inf, 0.0, True)
        return LogComplex(self.log_mag + other.log_mag, self.phase + other.phase)

    @classmethod
    def from_complex(cls, z: complex) -> "LogComplex":
        if z == 0:
            return cls(-math.inf, 0.0, True)
        return cls(math.log(abs(z)), math.atan2(z.imag, z.real))

    def to_complex(self) -> complex:
        """Plain complex value; overflows to inf for huge magnitudes."""
        if self.is_zero:
            return 0j
        with np.errstate(over="ignore"):
            mag = np.exp(self.log_mag)
        return complex(mag * math.cos(self.phase), mag * math.sin(self.phase))

    def phase_mod_2pi(self) -> float:
        """Phase folded into ``(-pi, pi]``."""
        folded = math.remainder(self.phase, TWO_PI)
        return math.pi if folded == -math.pi else folded


# -- characteristic function -------------------------------------------------


def _chain_scales(nu: int, D: int) -> tuple[np.ndarray, np.ndarray]:
    j = np.arange(D + 1, dtype=float)
    shift = j + abs(nu) / 2
    scale = np.sqrt((j + 1.0) * (j + abs(nu) + 1.0))
    return shift, scale


def _reduced_energy(params: OscillatorParams, nu: int, E) -> np.ndarray:
    # real divisions keep i*kappa/kappa exactly 1 (complex division may not)
    d = np.asarray(E, dtype=complex) - nu * params.omega
    return d.imag / params.kappa - 1j * (d.real / params.kappa)


def gamma_factors(params: OscillatorParams, nu: int, D: int, E: complex) -> np.ndarray:
    """The ``D + 1`` factors ``(E - h_j) / t_j``."""
    shift, scale = _chain_scales(nu, D)
    w = complex(_reduced_energy(params, nu, E))
    numer = w + shift
    # an OBC eigenvalue only reproduces -c_j up to rounding of (E - nu*omega)/kappa
    numer[np.abs(numer) <= 4 * EPS * np.maximum(abs(w), shift)] = 0.0
    # componentwise: numpy's complex/real array division is not correctly rounded
    return numer.real / scale + 1j * (numer.imag / scale)


def r_product(params: OscillatorParams, nu: int, D: int, E: complex) -> LogComplex:
    """``R(E) = prod_{j=0}^{D} (E - h_j)/t_j`` in the log domain."""
    if D < 0:
        raise ValueError("D must be >= 0")
    g = gamma_factors(params, nu, D, E)
    if np.any(g == 0):
        return LogComplex(-math.inf, 0.0, True)
    return LogComplex(
        math.fsum(np.log(np.abs(g))), math.fsum(np.arctan2(g.imag, g.real))
    )


def log_abs_r(params: OscillatorParams, nu: int, D: int, E) -> np.ndarray:
    """Vectorized ``log|R(E)|``; ``-inf`` where ``E`` hits an onsite energy."""
    shift, scale = _chain_scales(nu, D)
    w = _reduced_energy(params, nu, E)
    numer = np.abs(w[..., None] + shift)
    numer[numer <= 4 * EPS * np.maximum(np.abs(w)[..., None], shift)] = 0.0
    with np.errstate(divide="ignore"):
        return np.sum(np.log(numer), axis=-1) - np.sum(np.log(scale))


def _f(A: complex, a: float, b: float) -> float:
    return A.real * math.log(abs(A)) - A.imag * math.atan2(A.imag, A.real) - (
        xlogy(a, a) + xlogy(b, b)
    ) / 2


def scaled_log_r(params: OscillatorParams, nu: int, D: int, E: complex) -> float:
    """Continuum approximation of ``log|R(E)| / D``.

    Replaces the sum over sites by an integral, which gives
    ``f(1 + A, 1 + |nu|/D, 1 + 1/D) - f(A, |nu|/D, 1/D)`` with
    ``A = Etilde / D``, ``Etilde = (E + i|nu|kappa - nu*omega) / (i kappa)`` and
    ``f(A, a, b) = Re(A) ln|A| - Im(A) arg(A) - (a ln a + b ln b)/2``.

    Raises
    ------
    DomainError
        If ``A`` is 0 or -1, where the logarithms are singular.
    """
    if D < 2:
        raise ValueError("D must be >= 2")
    k = params.kappa
    etilde = (complex(E) + 1j * abs(nu) * k - nu * params.omega) / (1j * k)
    A = etilde / D
    for point in (A, 1 + A):
        if abs(point) <= 4 * EPS:
            raise DomainError(f"scaled energy {A} lies on a logarithm singularity")
    return _f(1 + A, 1 + abs(nu) / D, 1 + 1 / D) - _f(A, abs(nu) / D, 1 / D)


# -- spectra -----------------------------------------------------------------


@dataclass(frozen=True)
class ComplexSpectrum:
    """Eigenvalues in canonical order (real part, then imaginary part).

    ``max_residual`` is the largest ``|R(E) exp(i theta) - 1|``-type defect
    measured on the returned values (NaN when not measured).
    """

    values: np.ndarray
    spec: object
    method: str
    max_residual: float = math.nan

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        # snap real parts so rounding noise around equal values cannot reorder
        key_re = np.round(vals.real, 12)
        object.__setattr__(self, "values", vals[np.lexsort((vals.imag, key_re))])

    def __len__(self):
        return len(self.values)

    def nearest(self, z: complex) -> complex:
        return self.values[np.argmin(np.abs(self.values - z))]


def _twist_target(spec: ChainSpec) -> complex:
    # det(H - E) = 0  <=>  R(E) = exp(-i theta)
    return complex(spec.bc.wrap_phase)


def characteristic_defect(spec: ChainSpec, values) -> np.ndarray:
    """``|log|R(E)||`` plus the distance of ``arg R(E) + theta`` to ``2 pi Z``."""
    out = []
    for e in np.atleast_1d(values):
        R = r_product(spec.params, spec.nu, spec.dim, e)
        if R.is_zero:
            out.append(math.inf)
            continue
        twist = math.atan2(_twist_target(spec).imag, _twist_target(spec).real)
        ph = abs(math.remainder(R.phase - twist, TWO_PI))
        out.append(abs(R.log_mag) + ph)
    return np.array(out)


def aberth_refine(spec: ChainSpec, seeds, tol: float = 1e-14, maxiter: int = 1000) -> np.ndarray:
    """Simultaneously refine all roots of ``R(E) = exp(-i theta)``.

    Aberth-Ehrlich iteration on ``F(E) = prod(E - h_j) - exp(-i theta) prod t_j``.
    The Newton quotient is evaluated as ``(1 - exp(-i theta)/R) / sum 1/(E - h_j)``,
    which stays finite for any ``D``.  Needs exactly ``D + 1`` seeds.
    """
    h, t = chain_diagonals(spec)
    z = np.array(seeds, dtype=complex)
    if z.shape != (spec.dim + 1,):
        raise ValueError(f"need {spec.dim + 1} seeds, got {z.shape}")
    target = _twist_target(spec)
    scale = spec.params.kappa
    for _ in range(maxiter):
        diff = z[:, None] - h[None, :]
        diff[diff == 0] = EPS * scale
        S = np.sum(1.0 / diff, axis=1)
        with np.errstate(over="ignore"):
            inv_r = target * np.exp(-np.sum(np.log(diff / t[None, :]), axis=1))
        newton = (1.0 - inv_r) / S
        pair = z[:, None] - z[None, :]
        np.fill_diagonal(pair, np.inf)
        pair[pair == 0] = EPS * scale
        step = newton / (1.0 - newton * np.sum(1.0 / pair, axis=1))
        if not np.all(np.isfinite(step)):
            raise NumericalFailure(f"root refinement produced non-finite steps for {spec}")
        z = z - step
        if np.max(np.abs(step) / np.maximum(np.abs(z), scale)) < tol:
            return z
    raise NumericalFailure(f"root refinement did not converge in {maxiter} sweeps for {spec}")


def pbc_spectrum_numeric(spec: ChainSpec, refine: bool = True) -> ComplexSpectrum:
    """All eigenvalues of the periodic (or twisted) chain.

    LAPACK's dense eigensolver alone loses accuracy quickly here: the chain is
    so non-normal that at ``D = 100`` some eigenvalues are off by ``O(1)``.
    With ``refine=True`` (default) its output seeds :func:`aberth_refine`,
    which converges to machine precision for ``D`` in the hundreds.
    """
    if not spec.bc.is_periodic:
        raise ValueError("pbc_spectrum_numeric needs a periodic or twisted chain")
    raw = _numeric_spectrum(spec).values
    vals = aberth_refine(spec, raw) if refine else raw
    _check_distinct(spec, vals)
    return ComplexSpectrum(
        vals, spec, "numeric-eigensolver", float(np.max(characteristic_defect(spec, vals)))
    )


def pbc_spectrum_roots(spec: ChainSpec) -> ComplexSpectrum:
    """Periodic spectrum from the characteristic equation alone.

    Seeds are spread on a circle around the open-spectrum centroid; no matrix
    is diagonalized.
    """
    if not spec.bc.is_periodic:
        raise ValueError("pbc_spectrum_roots needs a periodic or twisted chain")
    n = spec.dim + 1
    anchor = loop_anchor(spec.params, spec.nu, spec.dim)
    radius = 0.65 * spec.params.kappa * (spec.dim + abs(spec.nu) + 4)
    seeds = anchor + radius * np.exp(2j * np.pi * (np.arange(n) + 0.25) / n)
    vals = aberth_refine(spec, seeds)
    _check_distinct(spec, vals)
    return ComplexSpectrum(
        vals, spec, "analytic-roots", float(np.max(characteristic_defect(spec, vals)))
    )


def _check_distinct(spec: ChainSpec, vals: np.ndarray) -> None:
    if len(vals) < 2:
        return
    gaps = np.abs(vals[:, None] - vals[None, :])
    np.fill_diagonal(gaps, np.inf)
    if np.min(gaps) < 1e-9 * spec.params.kappa:
        raise NumericalFailure(f"refined roots collapsed for {spec}")


def _numeric_spectrum(spec: ChainSpec) -> ComplexSpectrum:
    try:
        vals = np.linalg.eigvals(build_chain_matrix(spec))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigensolver failed for {spec}: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise NumericalFailure(f"eigensolver returned non-finite values for {spec}")
    return ComplexSpectrum(vals, spec, "numeric-eigensolver")


def obc_spectrum_numeric(spec: ChainSpec) -> ComplexSpectrum:
    return _numeric_spectrum(spec.with_bc(OBC))


def obc_spectrum_analytic(spec: ChainSpec) -> ComplexSpectrum:
    """``nu*omega - i(2l + |nu|)kappa/2`` for ``l = 0..D``."""
    h, _ = chain_diagonals(spec)
    return ComplexSpectrum(h, spec, "analytic-OBC")


# -- mode vectors ------------------------------------------------------------


@dataclass(frozen=True)
class ModeVector:
    """Amplitudes on sites ``0..L`` of one chain.

    ``normalization`` is ``"unit"`` (Euclidean norm 1) or ``"rho0"``
    (first amplitude fixed to 1; such modes need not be normalizable).
    """

    amplitudes: np.ndarray
    energy: complex
    kind: str
    nu: int = 0
    normalization: str = "unit"
    admissible: bool | None = None
    residual: float | None = None

    def __len__(self):
        return len(self.amplitudes)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _profile_from_factors(g: np.ndarray) -> np.ndarray:
    """``rho_0 = 1``, ``rho_{j+1} = g_j rho_j``, accumulated in the log domain."""
    out = np.zeros(len(g) + 1, dtype=complex)
    out[0] = 1.0
    nonzero = np.cumprod(g != 0)
    safe = np.where(g != 0, g, 1.0)
    log_mag = np.concatenate([[0.0], np.cumsum(np.log(np.abs(safe)))])
    phase = np.concatenate([[0.0], np.cumsum(np.angle(safe))])
    keep = np.concatenate([[True], nonzero.astype(bool)])
    with np.errstate(over="ignore", invalid="ignore"):
        out[keep] = np.exp(log_mag[keep] + 1j * phase[keep])
    return out


def obc_eigenstate(spec: ChainSpec, l: int) -> ModeVector:
    """Unit-norm right eigenvector of the open chain for level ``l``.

    Built from the bidiagonal recurrence ``rho_{j+1} = (E_l - h_j) rho_j / t_j``
    with ``rho_0 = 1``; the ``j = l`` factor vanishes so the support is
    ``0..l``.
    """
    if not 0 <= l <= spec.dim:
        raise ValueError(f"level {l} outside 0..{spec.dim}")
    params, nu = spec.params, spec.nu
    energy = complex(chain_diagonals(spec)[0][l])
    shift, scale = _chain_scales(nu, spec.dim)
    # exact reduced form of (E_l - h_j)/t_j = (j - l)/s_j
    g = (shift[:-1] - shift[l]) / scale[:-1]
    amps = np.zeros(spec.dim + 1, dtype=complex)
    log_mag = np.concatenate([[0.0], np.cumsum(np.log(np.abs(g[:l])))])
    signs = np.concatenate([[1.0], np.cumprod(np.sign(g[:l]))])
    log_mag -= log_mag.max()
    amps[: l + 1] = signs * np.exp(log_mag)
    amps /= np.linalg.norm(amps)
    mat = build_chain_matrix(spec.with_bc(OBC))
    residual = float(np.linalg.norm(mat @ amps - energy * amps))
    return ModeVector(amps, energy, "obc-eigenstate", nu, "unit", True, residual)


def sibc_mode(params: OscillatorParams, nu: int, E: complex, length: int) -> ModeVector:
    """Semi-infinite eigenmode on sites ``0..length`` with ``rho_0 = 1``.

    ``rho_{j+1} = R^{(j)}(E) rho_0``.  The ``admissible`` flag is set when
    ``log|R^{(j)}|`` ends negative and still decreasing, i.e. the profile
    decays towards large ``j``.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    g = gamma_factors(params, nu, length - 1, E)
    amps = _profile_from_factors(g)
    if np.any(g == 0):
        admissible = True
    else:
        logs = np.log(np.abs(g))
        admissible = bool(logs.sum() < 0 and logs[-1] < 0)
    return ModeVector(amps, complex(E), "sibc-skin-mode", nu, "rho0", admissible)


def skin_effect_density(spec: ChainSpec) -> np.ndarray:
    """Sum over all open-chain eigenstates of ``|amplitude|**2`` per site."""
    return sum(obc_eigenstate(spec, l).density for l in range(spec.dim + 1))


# -- loop tracing ------------------------------------------------------------


@dataclass(frozen=True)
class LoopTrace:
    """Points of ``|R(E)| = 1`` found along rays from ``anchor``.

    ``points[k]`` lies on the ray at angle ``angles[k]``; rays whose bracket
    failed carry NaN and are flagged in ``failed``.
    """

    points: np.ndarray
    angles: np.ndarray
    anchor: complex
    failed: np.ndarray
    residuals: np.ndarray = field(repr=False)

    @property
    def valid_points(self) -> np.ndarray:
        return self.points[~self.failed]

    def radius(self) -> float:
        return float(np.max(np.abs(self.valid_points - self.anchor)))


def loop_anchor(params: OscillatorParams, nu: int, D: int) -> complex:
    """Mean of the open-chain spectrum (equal to the mean of any periodic spectrum)."""
    return complex(nu * params.omega - 0.5j * params.kappa * (D + abs(nu)))


def loop_trace(
    params: OscillatorParams, nu: int, D: int, n_angles: int = 256, tol: float = 1e-8
) -> LoopTrace:
    """Trace the periodic spectral loop ``log|R(E)| = 0`` by radial root finding.

    Rays start at the open-spectrum centroid; angles are ``2 pi k / n_angles``
    so any multiple of 4 includes the vertical rays.
    """
    if n_angles < 16:
        raise ValueError("n_angles must be >= 16")
    anchor = loop_anchor(params, nu, D)
    angles = TWO_PI * np.arange(n_angles) / n_angles
    points = np.full(n_angles, np.nan + 0j)
    residuals = np.full(n_angles, np.nan)
    failed = np.zeros(n_angles, dtype=bool)
    r_start = params.kappa * (D + abs(nu) + 2)

    for k, phi in enumerate(angles):
        direction = complex(math.cos(phi), math.sin(phi))

        def g(r, direction=direction):
            val = float(log_abs_r(params, nu, D, anchor + r * direction))
            return max(val, -1e6)

        r_hi = r_start
        for _ in range(64):
            if g(r_hi) > 0:
                break
            r_hi *= 2
        else:
            failed[k] = True
            continue
        if g(0.0) >= 0:
            failed[k] = True
            continue
        r = brentq(g, 0.0, r_hi, xtol=1e-14 * r_hi, rtol=4 * EPS, maxiter=500)
        point = anchor + r * direction
        res = float(log_abs_r(params, nu, D, point))
        residuals[k] = res
        if abs(res) > tol:
            failed[k] = True
        else:
            points[k] = point
    return LoopTrace(points, angles, anchor, failed, residuals)


# -- winding numbers ---------------------------------------------------------


@dataclass(frozen=True)
class WindingResult:
    """Winding of ``det(H(theta) - omega)`` as the twist goes once around."""

    omega: complex
    w: int
    magnitude_test: bool
    n_theta: int
    log_abs_r: float = math.nan


def unwrap_winding(
    phase_of: Callable[[np.ndarray], np.ndarray], n_theta: int, max_theta: int = 1 << 18
) -> tuple[int, int]:
    """Count the turns of a closed phase curve sampled on ``[0, 2 pi]``.

    The grid is doubled until no step between neighbouring samples exceeds
    ``pi/2``, so ``np.unwrap`` cannot skip a turn.  Returns the winding and
    the grid size actually used.
    """
    n = n_theta
    while True:
        theta = np.linspace(0.0, TWO_PI, n + 1)
        phases = phase_of(theta)
        steps = np.angle(np.exp(1j * np.diff(phases)))
        if np.max(np.abs(steps)) <= math.pi / 2 or n >= max_theta:
            break
        n *= 2
    unwrapped = np.unwrap(phases)
    turns = (unwrapped[-1] - unwrapped[0]) / TWO_PI
    w = int(round(turns))
    if abs(turns - w) > 1e-6 or np.max(np.abs(steps)) > math.pi / 2:
        raise NumericalFailure(f"phase curve did not close (turns={turns})")
    return w, n


def twisted_determinant(
    params: OscillatorParams, nu: int, D: int, omega: complex, theta
) -> np.ndarray:
    """``det(H(theta) - omega)`` from its closed form.

    ``prod_j (h_j - omega) + (-1)^D exp(-i theta) prod_j t_j``; see
    ``docs/winding_determinant.md``.  Only usable while the products fit in a
    double, which is the case for ``D`` up to about 100.
    """
    spec = ChainSpec(params, nu, D)
    h, t = chain_diagonals(spec)
    theta = np.asarray(theta, dtype=float)
    return np.prod(h - omega) + (-1) ** D * np.exp(-1j * theta) * np.prod(t)


def winding_number(
    params: OscillatorParams,
    nu: int,
    D: int,
    omega: complex,
    n_theta: int = 256,
    method: str = "closed-form",
) -> WindingResult:
    """Spectral winding of the twisted chain around reference energy ``omega``.

    ``method="closed-form"`` unwraps ``exp(-i theta) - R(omega)``, which is the
    determinant divided by the theta-independent ``(-1)^D prod t_j``.
    ``method="matrix"`` unwraps the phase of a dense ``slogdet`` of the
    twisted matrix instead.

    Raises
    ------
    AmbiguousWindingError
        If ``|log|R(omega)|| < OFF_BAND_EPS``.
    """
    if n_theta < 64:
        raise ValueError("n_theta must be >= 64")
    R = r_product(params, nu, D, omega)
    if abs(R.log_mag) < OFF_BAND_EPS:
        raise AmbiguousWindingError(
            f"omega={omega} is within the band |log|R||={abs(R.log_mag):.2e} of the loop"
        )
    inside = R.log_mag < 0

    if method == "closed-form":
        if inside:
            r_val = R.to_complex()

            def phase_of(theta):
                return np.angle(np.exp(-1j * theta) - r_val)
        else:
            inv = LogComplex(-R.log_mag, -R.phase).to_complex()

            def phase_of(theta):
                return np.angle(np.exp(-1j * theta) * inv - 1.0)
    elif method == "matrix":
        base = ChainSpec(params, nu, D)

        def phase_of(theta):
            out = np.empty(len(theta))
            for i, th in enumerate(theta):
                mat = build_chain_matrix(base.with_bc(Boundary.twisted(th)))
                sign, _ = np.linalg.slogdet(mat - omega * np.eye(D + 1))
                out[i] = np.angle(sign)
            return out
    else:
        raise ValueError(f"unknown method {method!r}")

    w, used = unwrap_winding(phase_of, n_theta)
    return WindingResult(complex(omega), w, bool(inside), used, R.log_mag)


# -- supplementary diagnostics -----------------------------------------------


def ridge_divergence_sum(params: OscillatorParams, nu: int, D: int, E: complex) -> float:
    """Partial sum controlling ``d|R|/d(Im E)`` near the loop ridge.

    Uses the plain reduced energy ``E / kappa`` (not the shifted one of
    :func:`scaled_log_r`).  Grows like ``log D``.
    """
    e = complex(E) / params.kappa
    shift = np.arange(D + 1) + abs(nu) / 2 + e.imag
    offset = e.real - nu * params.omega / params.kappa
    denom = shift**2 + offset**2
    if np.any(denom == 0):
        raise DomainError(f"E={E} coincides with an onsite energy")
    return math.fsum(shift / denom)
