"""Piecewise-constant matrix-exponential time stepping.

Each step of length dt freezes the noise values, builds H at the midpoint
time, applies exp(-i H dt) and then advances the noise. States are
recorded on the sample grid t = k * sample_stride * dt (k = 0, 1, ...).
The state is never renormalized; a norm drift above 1e-6 raises.

Two backends share the same noise streams and step rule: a compiled
batched kernel for the ``rot_rwa`` frame and a per-step numpy loop (via
:func:`~zfsmag.spinops.matrix_exponential_skew`) for every frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import _kernels, effective, spinops
from .hamiltonians import (
    FRAMES,
    SCHEME_CODES,
    GuardError,
    HamiltonianSpec,
    h_full,
    h_rotating,
)
from .noise import OuProcess

NORM_TOL = 1e-6
CHUNK_STEPS = 8192


class StepGuardError(GuardError):
    guard = "step"


class NormDriftError(ArithmeticError):
    pass


@dataclass(frozen=True)
class IntegrationConfig:
    """Time grid and frame.

    ``dt`` defaults to (1/max_freq_guard) * 2 pi / f_max, i.e.
    ``max_freq_guard`` steps per period of the fastest angular frequency
    f_max of the scenario. ``sample_interval`` (us), when given, overrides
    ``sample_stride``.
    """

    t_end: float
    dt: Optional[float] = None
    sample_stride: int = 1
    frame: str = "rot_rwa"
    max_freq_guard: float = 20.0
    sample_interval: Optional[float] = None
    backend: str = "auto"

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}; expected one of {FRAMES}")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.backend not in ("auto", "kernel", "reference"):
            raise ValueError(f"unknown backend {self.backend!r}")

    def resolve(self, scenario: HamiltonianSpec) -> "Grid":
        f_max = scenario.max_frequency(self.frame)
        if self.dt is None and self.sample_interval is not None:
            return interval_grid(self.t_end, self.sample_interval, f_max, self.max_freq_guard)
        if self.dt is None:
            dt_max = 2.0 * math.pi / (self.max_freq_guard * f_max) if f_max > 0 else self.t_end
            n_steps = max(1, math.ceil(self.t_end / dt_max - 1e-9))
            dt = self.t_end / n_steps
        else:
            dt = self.dt
            n_steps = max(1, int(round(self.t_end / dt)))
        check_step_guard(dt, f_max, self.max_freq_guard)
        stride = self.sample_stride
        if self.sample_interval is not None:
            stride = max(1, int(round(self.sample_interval / dt)))
        stride = min(stride, n_steps)
        return Grid(dt=dt, n_steps=n_steps, stride=stride, f_max=f_max)


def interval_grid(t_end: float, sample_interval: float, f_max: float, guard: float) -> "Grid":
    """Grid whose samples fall exactly every ``sample_interval`` up to ``t_end``.

    The number of intervals is round(t_end / sample_interval); each interval
    is split into the fewest equal steps that satisfy the step guard.
    """
    if not sample_interval > 0:
        raise ValueError("sample_interval must be positive")
    n_int = max(1, int(round(t_end / sample_interval)))
    interval = t_end / n_int
    dt_max = 2.0 * math.pi / (guard * f_max) if f_max > 0 else interval
    per = max(1, math.ceil(interval / dt_max - 1e-9))
    dt = interval / per
    check_step_guard(dt, f_max, guard)
    return Grid(dt=dt, n_steps=n_int * per, stride=per, f_max=f_max)


@dataclass(frozen=True)
class Grid:
    dt: float
    n_steps: int
    stride: int
    f_max: float

    @property
    def n_samples(self) -> int:
        return self.n_steps // self.stride + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.stride * self.dt


def check_step_guard(dt: float, f_max: float, guard: float) -> None:
    """Require dt * f_max / (2 pi) <= 1/guard."""
    if dt * f_max / (2.0 * math.pi) > 1.0 / guard * (1 + 1e-9):
        raise StepGuardError(
            f"step guard violated: dt = {dt:.4g} us but f_max = {f_max:.6g} rad/us needs "
            f"dt <= {2 * math.pi / (guard * f_max):.4g} us ({guard:g} steps per period)"
        )


@dataclass(frozen=True)
class Observable:
    """Hermitian operator, optionally read in the doubly-rotating frame."""

    name: str
    operator: np.ndarray
    frame: str = "first"
    basis_tag: str = ""

    def __post_init__(self):
        if self.frame not in ("first", "doubly_rotating"):
            raise ValueError(f"unknown readout frame {self.frame!r}")

    @property
    def label(self) -> str:
        return f"{self.name}[{self.basis_tag}]" if self.basis_tag else self.name


def population(label: str | int, frame: str = "first") -> Observable:
    tag = "p2" if frame == "doubly_rotating" else ""
    return Observable(f"P({int(label):+d})".replace("+0", "0"),
                      spinops.projector(spinops.ket(label)), frame, tag)


def coherence(basis_tag: str) -> Observable:
    """2 <sigma_x> of a scheme's two-level basis."""
    return Observable("2<sx>", spinops.two_level_sigma_x(effective._BASES[basis_tag]()),
                      basis_tag=basis_tag)


@dataclass
class TrajectoryResult:
    times: np.ndarray
    names: list
    values: np.ndarray          # (n_obs, n_samples)
    leakage_mean: float         # time-averaged P(|-1>)
    final_norm: float
    states: Optional[np.ndarray] = None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[self.names.index(name)]


NoiseSource = Callable[[int, int], tuple[np.ndarray, np.ndarray, np.ndarray]]


def process_noise_source(channel_sets: Sequence[Mapping[str, OuProcess]], dt: float) -> NoiseSource:
    """Pull consecutive noise values from per-trajectory OU processes."""

    def source(k0: int, m: int):
        n = len(channel_sets)
        out = np.zeros((3, n, m))
        for j, channels in enumerate(channel_sets):
            for c, name in enumerate(("strain", "amplitude", "bz")):
                p = channels.get(name)
                if p is not None:
                    out[c, j] = p.path(dt, m)
        return out[0], out[1], out[2]

    return source


def array_noise_source(strain: np.ndarray, amplitude: np.ndarray,
                       bz: Optional[np.ndarray] = None) -> NoiseSource:
    strain = np.atleast_2d(strain)
    amplitude = np.atleast_2d(amplitude)
    bz = np.zeros_like(strain) if bz is None else np.atleast_2d(bz)

    def source(k0: int, m: int):
        return strain[:, k0:k0 + m], amplitude[:, k0:k0 + m], bz[:, k0:k0 + m]

    return source


def _use_kernel(cfg: IntegrationConfig) -> bool:
    if cfg.backend == "reference":
        return False
    if cfg.backend == "kernel" and cfg.frame != "rot_rwa":
        raise ValueError("the compiled kernel only supports the rot_rwa frame")
    return cfg.frame == "rot_rwa"


def _kernel_params(scenario: HamiltonianSpec) -> tuple[np.ndarray, int, float, float, bool]:
    st, dr, sig = scenario.static, scenario.drive, scenario.signal
    params = np.zeros(_kernels.N_PARAMS)
    params[_kernels.P_EX] = st.Ex
    params[_kernels.P_OMEGA1] = dr.omega1_rabi if dr.scheme != "none" else 0.0
    params[_kernels.P_OMEGA2] = dr.omega2_rabi
    if dr.scheme != "none":
        params[_kernels.P_DET1], params[_kernels.P_DET2] = dr.detunings(st)
    has_signal = sig is not None
    if has_signal:
        params[_kernels.P_G] = sig.g
        params[_kernels.P_WAC] = sig.omega_ac
    if dr.scheme == "linear":
        kplus, kminus = 1.0, 0.0
    else:
        kplus = kminus = 1.0 / spinops.SQRT2
    return params, SCHEME_CODES[dr.scheme], kplus, kminus, has_signal


def _reference_hamiltonian(scenario: HamiltonianSpec, frame: str):
    st, dr, sig = scenario.static, scenario.drive, scenario.signal
    if frame == "lab":
        return lambda t, e, w, b: h_full(st, dr, sig, t, e, w, b)
    rwa = frame == "rot_rwa"
    return lambda t, e, w, b: h_rotating(st, dr, sig, e, w, t, rwa=rwa, deltaBz=b)


def integrate_states(psi0: np.ndarray, scenario: HamiltonianSpec, cfg: IntegrationConfig,
                     noise: NoiseSource, grid: Optional["Grid"] = None) -> tuple[np.ndarray, Grid]:
    """Propagate a batch of initial states; returns sampled states (n, n_samples, 3)."""
    grid = grid or cfg.resolve(scenario)
    psi = np.array(np.atleast_2d(psi0), dtype=np.complex128)
    n = psi.shape[0]
    out = np.empty((n, grid.n_samples, 3), dtype=np.complex128)
    out[:, 0] = psi
    sample = 1
    if _use_kernel(cfg):
        params, code, kplus, kminus, has_signal = _kernel_params(scenario)
        for k0 in range(0, grid.n_steps, CHUNK_STEPS):
            m = min(CHUNK_STEPS, grid.n_steps - k0)
            e, w, _ = noise(k0, m)
            e = np.ascontiguousarray(e, dtype=np.float64)
            w = np.ascontiguousarray(w, dtype=np.float64)
            if code == _kernels.NONE:
                w = np.zeros_like(w)
            sample += _kernels.propagate_rwa3(
                psi, 0.0, grid.dt, k0, params, code, kplus, kminus, has_signal,
                e, w, grid.stride, out, sample,
            )
    else:
        ham = _reference_hamiltonian(scenario, cfg.frame)
        for k0 in range(0, grid.n_steps, CHUNK_STEPS):
            m = min(CHUNK_STEPS, grid.n_steps - k0)
            e, w, b = noise(k0, m)
            for step in range(m):
                k = k0 + step
                t = (k + 0.5) * grid.dt
                for j in range(n):
                    u = spinops.matrix_exponential_skew(ham(t, e[j, step], w[j, step], b[j, step]), grid.dt)
                    psi[j] = u @ psi[j]
                if (k + 1) % grid.stride == 0:
                    out[:, sample] = psi
                    sample += 1
    drift = np.abs(np.linalg.norm(psi, axis=1) - 1.0)
    if not drift.max() <= NORM_TOL:  # also catches NaN
        raise NormDriftError(f"norm drifted by {drift.max():.3e} (> {NORM_TOL:g})")
    return out, grid


def measure(states: np.ndarray, times: np.ndarray, observables: Sequence[Observable],
            scenario: HamiltonianSpec) -> np.ndarray:
    """Expectation values for sampled states (..., n_samples, 3) -> (..., n_obs, n_samples)."""
    dressed = None
    values = []
    for obs in observables:
        s = states
        if obs.frame == "doubly_rotating":
            if dressed is None:
                dr = scenario.drive
                if dr.scheme == "none":
                    raise ValueError("doubly-rotating readout needs a drive")
                dressed = effective.to_doubly_rotating(states, times, dr.omega1_rabi,
                                                       dr.omega2_rabi if dr.scheme == "phasemod" else 0.0)
            s = dressed
        val = np.einsum("...i,ij,...j->...", s.conj(), obs.operator, s)
        values.append(val.real)
    return np.stack(values, axis=-2)


def evolve(initial: np.ndarray, scenario: HamiltonianSpec,
           noise_channels: Optional[Mapping[str, OuProcess]], cfg: IntegrationConfig,
           observables: Sequence[Observable], keep_states: bool = False) -> TrajectoryResult:
    """Single noisy trajectory.

    ``noise_channels`` maps "strain", "amplitude" (and optionally "bz") to
    OU processes, which are advanced in place; missing channels are zero.
    """
    initial = np.asarray(initial, dtype=complex)
    if abs(np.linalg.norm(initial) - 1.0) > 1e-9:
        raise ValueError("initial state must be normalized")
    grid = cfg.resolve(scenario)
    states, grid = integrate_states(initial[None], scenario, cfg,
                                    process_noise_source([dict(noise_channels or {})], grid.dt), grid)
    times = grid.times
    values = measure(states[0], times, observables, scenario)
    return TrajectoryResult(
        times=times,
        names=[o.label for o in observables],
        values=values,
        leakage_mean=float(np.mean(np.abs(states[0, :, 2]) ** 2)),
        final_norm=float(np.linalg.norm(states[0, -1])),
        states=states[0] if keep_states else None,
    )


@dataclass
class ConvergenceReport:
    dt_coarse: float
    dt_fine: float
    max_deviation: float
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.max_deviation < self.tolerance


def convergence_check(scenario: HamiltonianSpec, cfg: IntegrationConfig,
                      initial: Optional[np.ndarray] = None,
                      observables: Optional[Sequence[Observable]] = None, seed: int = 0,
                      tolerance: float = 1e-4, refine: int = 2,
                      decimation: str = "mean") -> ConvergenceReport:
    """Compare a run at dt against dt/refine on one noise realization.

    The noise path is sampled once on the fine grid and decimated for the
    coarse run. With ``decimation="mean"`` each coarse step holds the
    average of its ``refine`` fine values, so both runs accumulate the same
    noise integral and the deviation measures the stepping error alone;
    ``"pick"`` holds every ``refine``-th value instead, which adds an O(dt)
    noise-sampling difference. Defaults: the scheme's dephasing initial
    state and its 2<sigma_x>.
    """
    if decimation not in ("mean", "pick"):
        raise ValueError(f"unknown decimation {decimation!r}")
    from .ensemble import make_channels

    tag = effective.SCHEME_BASIS[scenario.scheme]
    if initial is None:
        initial = spinops.two_level_superposition(effective._BASES[tag]())
    if observables is None:
        observables = [coherence(tag)]
    grid = cfg.resolve(scenario)
    fine_grid = Grid(dt=grid.dt / refine, n_steps=grid.n_steps * refine,
                     stride=grid.stride * refine, f_max=grid.f_max)
    channels = make_channels(scenario, seed, 0)
    e, w, b = process_noise_source([channels], fine_grid.dt)(0, fine_grid.n_steps)
    psi0 = np.asarray(initial, dtype=complex)[None]
    if decimation == "mean":
        e_c, w_c, b_c = (x.reshape(x.shape[0], -1, refine).mean(axis=2) for x in (e, w, b))
    else:
        e_c, w_c, b_c = e[:, ::refine], w[:, ::refine], b[:, ::refine]
    coarse, _ = integrate_states(psi0, scenario, cfg, array_noise_source(e_c, w_c, b_c), grid)
    fine, _ = integrate_states(psi0, scenario, cfg, array_noise_source(e, w, b), fine_grid)
    times = grid.times
    dev = np.abs(measure(coarse[0], times, observables, scenario)
                 - measure(fine[0], times, observables, scenario))
    return ConvergenceReport(grid.dt, fine_grid.dt, float(dev.max()), tolerance)


# two-level sensing model ------------------------------------------------------

# Orientation of the doubly-dressed splitting: with the phase modulation
# phi(t) = 2 (W2/W1) sin(2 W1 t) and the frames used here, the
# doubly-rotating Hamiltonian is -2 W2 sigma_z (checked against the full
# 3-level integration in the tests).
SENSING_SZ_SIGN = -1.0


def sensing_two_level_grid(Ex: float, omega1: float, omega2: float, signal, t_end: float,
                           dt: Optional[float] = None, sample_stride: int = 1,
                           max_freq_guard: float = 20.0, noise_std: float = 0.0) -> Grid:
    """Grid for the two-level sensing model (fastest term 2 Ex + w_ac + 2 W1)."""
    f_max = 2.0 * abs(omega2) + 10.0 * noise_std
    if signal is not None:
        # the grid ignores g so that signal and control runs share it
        f_max += 2.0 * Ex + signal.omega_ac + 2.0 * omega1
    f_max = max(f_max, 1e-12)
    if dt is None:
        n_steps = max(1, math.ceil(t_end * max_freq_guard * f_max / (2 * math.pi) - 1e-9))
        dt = t_end / n_steps
    else:
        n_steps = max(1, int(round(t_end / dt)))
    check_step_guard(dt, f_max, max_freq_guard)
    return Grid(dt=dt, n_steps=n_steps, stride=min(sample_stride, n_steps), f_max=f_max)


def integrate_sensing_two_level(psi0: np.ndarray, Ex: float, omega1: float, omega2: float,
                                signal, grid: Grid, noise_x: Optional[NoiseSource] = None,
                                sz_sign: float = SENSING_SZ_SIGN) -> np.ndarray:
    """Doubly-rotating two-level sensing dynamics for a batch of states.

    H = 2 x(t) sigma_x + 2 sz_sign W2 sigma_z
        + g cos(2 Ex t) cos(w_ac t) [sigma_z cos(2 W1 t) - sigma_y sin(2 W1 t)]
    in the basis (|+1>, |0>), where x(t) = dE'(t) + dW1(t) is the
    transverse noise supplied by ``noise_x(k0, m)`` (first element of the
    returned tuple). Returns sampled states of shape (n, n_samples, 2).
    """
    psi = np.array(np.atleast_2d(psi0), dtype=np.complex128)
    n = psi.shape[0]
    out = np.empty((n, grid.n_samples, 2), dtype=np.complex128)
    out[:, 0] = psi
    g = signal.g if signal is not None else 0.0
    wac = signal.omega_ac if signal is not None else 0.0
    sample = 1
    for k0 in range(0, grid.n_steps, CHUNK_STEPS):
        m = min(CHUNK_STEPS, grid.n_steps - k0)
        x = np.zeros((n, m)) if noise_x is None else np.ascontiguousarray(noise_x(k0, m)[0], dtype=np.float64)
        sample += _kernels.propagate_sensing2(psi, 0.0, grid.dt, k0, Ex, omega1, omega2, g, wac,
                                              sz_sign, x, grid.stride, out, sample)
    drift = np.abs(np.linalg.norm(psi, axis=1) - 1.0)
    if not drift.max() <= NORM_TOL:  # also catches NaN
        raise NormDriftError(f"norm drifted by {drift.max():.3e} (> {NORM_TOL:g})")
    return out


def transverse_noise_source(channel_sets: Sequence[Mapping[str, OuProcess]], dt: float,
                            omega1: float) -> NoiseSource:
    """x = dE^2/(2 W1) + dW1 per step, from the strain and amplitude channels."""
    base = process_noise_source(channel_sets, dt)

    def source(k0: int, m: int):
        e, w, b = base(k0, m)
        return effective.delta_e_prime(e, omega1) + w, w, b

    return source
