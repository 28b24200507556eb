"""Time evolution of truncated chains and the observables of the amplification
experiments.

Amplitudes obey ``i d rho/dt = H rho`` with ``H`` the open chain.  On the
``nu = 0`` chain the amplitudes are the populations ``rho_jj`` and the
equation reduces to ``d rho_j/dt = -kappa j rho_j + kappa (j+1) rho_{j+1}``.
Population only ever flows from ``j+1`` down to ``j``, so truncating at ``D``
affects site ``j`` only after the disturbance has travelled down from ``D``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.integrate import solve_ivp

from fockskin.errors import CrossCheckMismatch, DegenerateFitError, NumericalFailure
from fockskin.lattice import OBC, ChainSpec, OscillatorParams, build_chain_matrix, chain_diagonals
from fockskin.topology import obc_eigenstate, sibc_mode

#: Default truncation for dynamics runs: j = 0..50.
DEFAULT_TRUNCATION = 50
#: Relative truncation sensitivity above which frames are no longer trusted.
HORIZON_THRESHOLD = 1e-6
EDGE_SITES = 5


# -- initial states ----------------------------------------------------------


@dataclass(frozen=True)
class SibcInit:
    energy: complex


@dataclass(frozen=True)
class ObcInit:
    level: int


@dataclass(frozen=True)
class DeltaInit:
    site: int


@dataclass(frozen=True)
class RandomInit:
    seed: int
    support: int = 10


InitialState = SibcInit | ObcInit | DeltaInit | RandomInit


def parse_initial(text: str) -> InitialState:
    """Parse ``sibc=<re>,<im>``, ``obc=<l>``, ``delta=<j>`` or
    ``random=<seed>[,<support>]``."""
    kind, _, arg = text.partition("=")
    kind = kind.strip().lower()
    try:
        if kind == "sibc":
            re_part, im_part = arg.split(",")
            return SibcInit(complex(float(re_part), float(im_part)))
        if kind == "obc":
            return ObcInit(int(arg))
        if kind == "delta":
            return DeltaInit(int(arg))
        if kind == "random":
            parts = arg.split(",")
            return RandomInit(int(parts[0]), *(int(x) for x in parts[1:2]))
    except ValueError as exc:
        raise ValueError(f"cannot parse initial state {text!r}: {exc}") from None
    raise ValueError(f"unknown initial state kind {kind!r}")


def initial_frame(spec: ChainSpec, init: InitialState) -> np.ndarray:
    """Amplitudes on sites ``0..spec.dim``.

    sIBC modes keep the ``rho_0 = 1`` convention, open-chain eigenstates and
    random states are unit-normalized, delta states have amplitude 1.
    """
    n = spec.n_sites
    if isinstance(init, SibcInit):
        return sibc_mode(spec.params, spec.nu, init.energy, spec.dim).amplitudes
    if isinstance(init, ObcInit):
        return obc_eigenstate(spec, init.level).amplitudes
    if isinstance(init, DeltaInit):
        if not 0 <= init.site < n:
            raise ValueError(f"site {init.site} outside 0..{n - 1}")
        frame = np.zeros(n, dtype=complex)
        frame[init.site] = 1.0
        return frame
    if isinstance(init, RandomInit):
        if not 1 <= init.support <= n:
            raise ValueError(f"support {init.support} outside 1..{n}")
        rng = np.random.default_rng(init.seed)
        vals = rng.uniform(-1, 1, init.support) + 1j * rng.uniform(-1, 1, init.support)
        frame = np.zeros(n, dtype=complex)
        frame[: init.support] = vals / np.linalg.norm(vals)
        return frame
    raise TypeError(f"unsupported initial state {init!r}")


# -- observables -------------------------------------------------------------


def edge_average(frame) -> complex:
    """Mean amplitude of the first five sites."""
    frame = np.asarray(frame)
    if frame.shape[-1] < EDGE_SITES:
        raise ValueError(f"frame needs at least {EDGE_SITES} sites")
    return np.mean(frame[..., :EDGE_SITES], axis=-1)


def particle_number(frame) -> complex:
    """``sum_j j rho_j``; real for a physical ``nu = 0`` frame."""
    frame = np.asarray(frame)
    return frame @ np.arange(frame.shape[-1])


def tail_mass(frame) -> float:
    """``|rho_j|**2`` summed over the last 10% of sites."""
    frame = np.asarray(frame)
    n_tail = max(1, frame.shape[-1] // 10)
    return np.sum(np.abs(frame[..., -n_tail:]) ** 2, axis=-1)


# -- evolution ---------------------------------------------------------------


@dataclass(frozen=True)
class EvolutionTrace:
    """Sampled trajectory and derived observables.

    ``horizon`` is the last sample time at which the edge sites (0..4) still
    agree with a run on a chain twice as long, to relative ``threshold``.
    Later frames are correct for the truncated chain but no longer represent
    the semi-infinite one.
    """

    times: np.ndarray
    frames: np.ndarray
    spec: ChainSpec
    init: object
    horizon: float
    threshold: float = HORIZON_THRESHOLD
    cross_check_error: float = math.nan
    metadata: dict = field(default_factory=dict)

    @property
    def edge_avg(self) -> np.ndarray:
        return edge_average(self.frames)

    @property
    def particle_number(self) -> np.ndarray:
        return particle_number(self.frames)

    @property
    def trace_sum(self) -> np.ndarray:
        return self.frames.sum(axis=1)

    @property
    def tail_mass(self) -> np.ndarray:
        return tail_mass(self.frames)

    @property
    def trusted(self) -> np.ndarray:
        return self.times <= self.horizon


def _integrate(mat: np.ndarray, y0: np.ndarray, times: np.ndarray, rtol: float) -> np.ndarray:
    gen = -1j * mat
    sol = solve_ivp(
        lambda _t, y: gen @ y,
        (0.0, times[-1]),
        y0.astype(complex),
        method="DOP853",
        t_eval=times,
        rtol=rtol,
        atol=rtol * max(1.0, float(np.max(np.abs(y0)))) * 1e-3,
    )
    if not sol.success:
        raise NumericalFailure(f"integration failed: {sol.message}")
    return sol.y.T


def eigen_propagate(spec: ChainSpec, frame0, times, dps: int = 50) -> np.ndarray:
    """Propagate through the eigendecomposition of the open chain.

    Eigenvectors come from the exact bidiagonal recurrence (upper-triangular
    matrix of eigenvectors), so the expansion coefficients follow by back
    substitution.  The eigenbasis is extremely ill-conditioned (binomial
    entries of order ``2**D``), hence the arithmetic runs at ``dps`` digits.
    """
    n = spec.n_sites
    h, t = chain_diagonals(spec)
    with mpmath.workdps(dps):
        k = mpmath.mpf(spec.params.kappa)
        c = [mpmath.mpf(2 * j + abs(spec.nu)) / 2 for j in range(n)]
        s = [mpmath.sqrt(mpmath.mpf((j + 1) * (j + abs(spec.nu) + 1))) for j in range(n)]
        # column l: V[j][l] = prod_{i<j} (c_i - c_l)/s_i, supported on j <= l
        V = [[mpmath.mpf(0)] * n for _ in range(n)]
        for l in range(n):
            V[0][l] = mpmath.mpf(1)
            for j in range(l):
                V[j + 1][l] = V[j][l] * (c[j] - c[l]) / s[j]
        rhs = [mpmath.mpc(complex(x)) for x in frame0]
        coef = [mpmath.mpc(0)] * n
        for l in range(n - 1, -1, -1):
            acc = rhs[l] - mpmath.fsum(V[l][m] * coef[m] for m in range(l + 1, n))
            coef[l] = acc / V[l][l]
        nu_omega = mpmath.mpf(spec.nu * spec.params.omega)
        out = np.empty((len(times), n), dtype=complex)
        for i, time in enumerate(times):
            tm = mpmath.mpf(float(time))
            phase = mpmath.expj(-nu_omega * tm)
            d = [coef[l] * phase * mpmath.exp(-k * c[l] * tm) for l in range(n)]
            for j in range(n):
                out[i, j] = complex(mpmath.fsum(V[j][l] * d[l] for l in range(j, n)))
    return out


def _extended(spec: ChainSpec, init: InitialState) -> tuple[ChainSpec, np.ndarray] | None:
    """The same initial recipe on a chain twice as long, when it differs from
    zero-padding; ``None`` when padding is exact."""
    if not isinstance(init, SibcInit):
        return None
    big = ChainSpec(spec.params, spec.nu, 2 * spec.dim + 1, OBC)
    return big, initial_frame(big, init)


def evolve(
    spec: ChainSpec,
    init: InitialState,
    t_max: float,
    dt_out: float,
    *,
    rtol: float = 1e-10,
    cross_check: bool = True,
    threshold: float = HORIZON_THRESHOLD,
    cross_check_tol: float = 1e-6,
) -> EvolutionTrace:
    """Evolve ``init`` on the open chain of ``spec`` and sample every ``dt_out``.

    The primary route is an adaptive explicit Runge-Kutta integration
    (DOP853) at relative tolerance ``rtol``.  With ``cross_check`` the frames
    inside the validity horizon are recomputed by :func:`eigen_propagate` and
    must agree to ``cross_check_tol`` relative to the frame's largest entry.

    The horizon compares the edge sites against the same initial recipe on a
    chain of ``2D + 2`` sites.  For states with finite support a longer chain
    only zero-pads, which changes nothing, so the horizon is ``t_max``.
    """
    if t_max <= 0 or dt_out <= 0:
        raise ValueError("t_max and dt_out must be positive")
    spec = spec.with_bc(OBC)
    n_steps = int(round(t_max / dt_out))
    times = dt_out * np.arange(n_steps + 1)
    frame0 = initial_frame(spec, init)
    frames = _integrate(build_chain_matrix(spec), frame0, times, rtol)

    horizon = float(times[-1])
    ext = _extended(spec, init)
    if ext is not None:
        big, big0 = ext
        ref = _integrate(build_chain_matrix(big), big0, times, rtol)[:, :EDGE_SITES]
        edge = frames[:, :EDGE_SITES]
        dev = np.max(np.abs(edge - ref), axis=1) / np.max(np.abs(ref), axis=1)
        bad = np.nonzero(dev > threshold)[0]
        if len(bad):
            horizon = float(times[bad[0] - 1]) if bad[0] > 0 else 0.0

    err = math.nan
    if cross_check:
        mask = times <= horizon
        check = eigen_propagate(spec, frame0, times[mask])
        scale = np.maximum(1.0, np.max(np.abs(check), axis=1))
        err = float(np.max(np.max(np.abs(check - frames[mask]), axis=1) / scale))
        if err > cross_check_tol:
            raise CrossCheckMismatch(
                f"integrator and eigen-propagator differ by {err:.2e} > {cross_check_tol:.0e}"
            )
    return EvolutionTrace(
        times,
        frames,
        spec,
        init,
        horizon,
        threshold,
        err,
        {
            "rtol": rtol,
            "method": "DOP853",
            "cross_check": "eigen-mp" if cross_check else None,
            # the tail-mass share the horizon is not based on, for reference
            "tail_fraction_t0": float(tail_mass(frame0) / np.sum(np.abs(frame0) ** 2)),
        },
    )


# -- analysis ----------------------------------------------------------------


def growth_rate_fit(
    trace: EvolutionTrace,
    t_window: tuple[float, float],
    observable: str = "edge_avg",
    check_horizon: bool = True,
) -> float:
    """Least-squares slope of ``ln|edge_avg(t)|`` over ``t_window``.

    ``observable="norm"`` fits the Euclidean norm of the whole frame instead;
    use it for states whose edge average vanishes identically, e.g. open-chain
    eigenstates with ``1 <= l <= 4`` (alternating binomial sums).
    """
    lo, hi = t_window
    if check_horizon and hi > trace.horizon + 1e-12:
        raise ValueError(f"window end {hi} beyond validity horizon {trace.horizon}")
    sel = (trace.times >= lo - 1e-12) & (trace.times <= hi + 1e-12)
    if observable == "edge_avg":
        series = trace.edge_avg
    elif observable == "norm":
        series = np.linalg.norm(trace.frames, axis=1)
    else:
        raise ValueError(f"unknown observable {observable!r}")
    mags = np.abs(series[sel])
    if np.any(mags <= 1e-13 * np.max(np.abs(trace.frames[0]))):
        raise DegenerateFitError(f"{observable} vanishes inside the window")
    if sel.sum() < 4:
        raise DegenerateFitError(f"only {sel.sum()} samples in window {t_window}")
    slope, _ = np.polyfit(trace.times[sel], np.log(mags), 1)
    return float(slope)


def fit_log_slope(times, values) -> float:
    """Slope of ``ln|values|`` against ``times``; same fit as :func:`growth_rate_fit`."""
    times, values = np.asarray(times), np.abs(np.asarray(values))
    if len(times) < 4:
        raise DegenerateFitError("need at least 4 samples")
    return float(np.polyfit(times, np.log(values), 1)[0])


def short_time_predict(frame, params: OscillatorParams, dt: float) -> np.ndarray:
    """One explicit Euler step of the ``nu = 0`` population equation."""
    frame = np.asarray(frame, dtype=complex)
    j = np.arange(len(frame))
    upper = np.append(frame[1:], 0.0)
    return frame + dt * params.kappa * (-j * frame + (j + 1) * upper)
