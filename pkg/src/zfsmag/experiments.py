"""Canned protocols: four-scheme dephasing comparison and AC sensing.

All angular quantities are in rad/us and times in us.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numba
import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from . import effective, spinops
from .ensemble import (
    BLOCK,
    CoherenceFit,
    EnsembleResult,
    _block_summary,
    fit_coherence,
    make_channels,
    pairwise_reduce,
    resolve_threads,
    run_ensemble,
)
from .hamiltonians import (
    SCHEMES,
    TWO_PI,
    DriveParams,
    HamiltonianSpec,
    NoiseSpec,
    ResonanceGuardError,
    SignalParams,
    StaticParams,
)
from .propagator import (
    IntegrationConfig,
    Observable,
    coherence,
    integrate_sensing_two_level,
    interval_grid,
    population,
    sensing_two_level_grid,
    transverse_noise_source,
)

EXPERIMENT_KINDS = ("dephasing_comparison", "ac_sensing_trace", "ac_spectrum")
INITIAL_TAGS = ("superposition_scheme_basis", "ket0")
SENSING_MODELS = ("full", "effective", "both")
RESONANCE_RTOL = 1e-9

# window lengths for the four dephasing panels (us)
DEPHASING_T_END = {"none": 10.0, "linear": 15.0, "orthogonal": 30.0, "phasemod": 110.0}
# panel label of each scheme
PANEL = {"none": "a", "linear": "b", "orthogonal": "c", "phasemod": "d"}


@dataclass(frozen=True)
class SweepSpec:
    variable: str                 # "omega1" (omega2 locked to omega1/ratio) or "omega_ac"
    values: tuple

    def __post_init__(self):
        if self.variable not in ("omega1", "omega_ac"):
            raise ValueError(f"unknown sweep variable {self.variable!r}")
        if len(self.values) < 1:
            raise ValueError("sweep needs at least one value")


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one experiment."""

    kind: str
    static: StaticParams = field(default_factory=StaticParams)
    drive: DriveParams = field(default_factory=DriveParams)
    signal: Optional[SignalParams] = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    n_trials: int = 500
    initial_state_tag: str = "superposition_scheme_basis"
    sweep: Optional[SweepSpec] = None
    base_seed: int = 0
    t_end: Optional[float] = None
    sample_interval: Optional[float] = None
    t_probe: float = 40.0
    ratio: float = 10.0
    model: str = "full"
    frame: str = "rot_rwa"
    max_freq_guard: float = 20.0
    schemes: tuple = SCHEMES

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; expected one of {EXPERIMENT_KINDS}")
        if self.initial_state_tag not in INITIAL_TAGS:
            raise ValueError(f"unknown initial state {self.initial_state_tag!r}")
        if self.model not in SENSING_MODELS:
            raise ValueError(f"unknown sensing model {self.model!r}")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")


def initial_state(tag: str, scheme: str) -> np.ndarray:
    if tag == "ket0":
        return spinops.ket(0)
    return spinops.two_level_superposition(effective._BASES[effective.SCHEME_BASIS[scheme]]())


# dephasing comparison -------------------------------------------------------

@dataclass
class SchemeRun:
    scheme: str
    scenario: HamiltonianSpec
    result: EnsembleResult
    envelope_fit: CoherenceFit
    stretched_fit: CoherenceFit

    @property
    def t2(self) -> float:
        return self.envelope_fit.t2


def dephasing_comparison(Ex: float = TWO_PI * 24.0, omega1: float = TWO_PI * 10.0,
                         omega2: float = TWO_PI * 1.0, t2_star: float = 3.0, tau: float = 20.0,
                         delta_omega: float = 0.01, tau_omega: float = 500.0,
                         n_trials: int = 500, base_seed: int = 0,
                         schemes: Sequence[str] = SCHEMES, t_end: Optional[dict] = None,
                         sample_interval: float = 0.01, noise_start: str = "stationary",
                         frame: str = "rot_rwa", n_threads: Optional[int] = None,
                         max_freq_guard: float = 20.0) -> dict:
    """Coherence of 2<sigma_x> in each scheme's own basis.

    Every scheme starts in (|mu+>_i + |mu->_i)/sqrt2 and sees the same
    strain noise (T2*, tau) and, when driven, the same relative amplitude
    noise (delta_omega, tau_omega). Returns {scheme: SchemeRun}.
    """
    windows = dict(DEPHASING_T_END, **(t_end or {}))
    noise = NoiseSpec(t2_star=t2_star, tau=tau, delta_omega=delta_omega, tau_omega=tau_omega,
                      start=noise_start)
    static = StaticParams(Ex=Ex)
    runs = {}
    for scheme in schemes:
        drive = DriveParams(scheme, omega1 if scheme != "none" else 0.0,
                            omega2 if scheme == "phasemod" else 0.0)
        scenario = HamiltonianSpec(static, drive, None, noise)
        cfg = IntegrationConfig(t_end=windows[scheme], sample_interval=sample_interval, frame=frame,
                                max_freq_guard=max_freq_guard)
        res = run_ensemble(scenario, n_trials, base_seed, cfg, n_threads=n_threads)
        runs[scheme] = SchemeRun(scheme, scenario, res, fit_coherence(res, 0, "envelope_1e"),
                                 fit_coherence(res, 0, "stretched_exp_fit"))
    return runs


# AC sensing -------------------------------------------------------------------

def sensing_observables() -> list[Observable]:
    """P(|0>) in the doubly-rotating frame (primary), then first-frame populations."""
    return [population(0, "doubly_rotating"), population(0), population(1), population(-1)]


@dataclass
class SensingTrace:
    omega1: float
    omega2: float
    detuning: float               # 2 Ex - 2 W1 - 2 W2 - w_ac
    scenario: HamiltonianSpec
    full: Optional[EnsembleResult] = None
    effective: Optional[EnsembleResult] = None

    @property
    def primary(self) -> EnsembleResult:
        return self.full if self.full is not None else self.effective


def sensing_scenario(Ex: float, omega_ac: float, g: float, omega1: float, omega2: float,
                     t2_star: float, delta_omega: float, tau: float = 20.0,
                     tau_omega: float = 500.0, noise_start: str = "stationary") -> HamiltonianSpec:
    signal = SignalParams(g, omega_ac)
    static = StaticParams(Ex=Ex)
    signal.check(static)
    return HamiltonianSpec(
        static,
        DriveParams("phasemod", omega1, omega2),
        signal,
        NoiseSpec(t2_star=t2_star, tau=tau, delta_omega=delta_omega, tau_omega=tau_omega,
                  start=noise_start),
    )


def run_two_level_ensemble(scenario: HamiltonianSpec, n_trials: int, base_seed: int, t_end: float,
                           sample_interval: Optional[float] = None, dt: Optional[float] = None,
                           sweep: Optional[int] = None, n_threads: Optional[int] = None,
                           max_freq_guard: float = 20.0) -> EnsembleResult:
    """Ensemble of the doubly-rotating two-level sensing model, initial |0>.

    Uses the same per-trial noise seeds as :func:`run_ensemble`, so both
    models see identical strain and amplitude paths; the strain enters as
    dE'(t) = dE(t)^2 / (2 W1). Records P(|0>).
    """
    st, dr = scenario.static, scenario.drive
    grid = sensing_two_level_grid(st.Ex, dr.omega1_rabi, dr.omega2_rabi, scenario.signal, t_end,
                                  dt=dt, max_freq_guard=max_freq_guard,
                                  noise_std=scenario.noise.strain_std)
    if sample_interval is not None and dt is None:
        grid = interval_grid(t_end, sample_interval, grid.f_max, max_freq_guard)
    elif sample_interval is not None:
        grid = replace(grid, stride=min(grid.n_steps, max(1, int(round(sample_interval / grid.dt)))))
    numba.set_num_threads(resolve_threads(n_threads))
    summaries = []
    for start in range(0, n_trials, BLOCK):
        trials = range(start, min(start + BLOCK, n_trials))
        channels = [make_channels(scenario, base_seed, j, sweep) for j in trials]
        psi0 = np.zeros((len(trials), 2), dtype=complex)
        psi0[:, 1] = 1.0
        states = integrate_sensing_two_level(psi0, st.Ex, dr.omega1_rabi, dr.omega2_rabi, scenario.signal,
                                             grid, transverse_noise_source(channels, grid.dt, dr.omega1_rabi))
        summaries.append(_block_summary((np.abs(states[:, :, 1]) ** 2)[:, None, :]))
    n, mean, m2 = pairwise_reduce(summaries)
    var = m2 / (n - 1) if n > 1 else np.zeros_like(m2)
    return EnsembleResult(grid.times, mean, np.sqrt(np.maximum(var, 0) / n), n_trials, base_seed,
                          names=["P(0)[p2]"], dt=grid.dt)


def ac_sensing_trace(Ex: float, omega_ac: float, g: float, ratio: float = 10.0,
                     t2_star: float = 0.1, n_trials: int = 100, delta_omega: float = 0.005,
                     tau: float = 20.0, tau_omega: float = 500.0, t_end: float = 100.0,
                     sample_interval: float = 0.1, base_seed: int = 0, model: str = "full",
                     omega1: Optional[float] = None, omega2: Optional[float] = None,
                     require_resonance: bool = True, sweep_index: Optional[int] = None,
                     noise_start: str = "stationary", initial: Optional[np.ndarray] = None,
                     n_threads: Optional[int] = None, max_freq_guard: float = 20.0) -> SensingTrace:
    """P(|0>)(t) under the phase-modulated drive with an AC signal.

    W1, W2 default to the resonant pair for (Ex, w_ac, ratio); explicit
    values must satisfy 2 Ex - 2 W1 - 2 W2 = w_ac to 1e-9 relative unless
    ``require_resonance`` is False (used by spectrum sweeps).
    """
    if model not in SENSING_MODELS:
        raise ValueError(f"unknown sensing model {model!r}")
    w1_res, w2_res = effective.resonant_omegas(Ex, omega_ac, ratio)
    w1 = w1_res if omega1 is None else omega1
    w2 = (w1 / ratio if omega1 is not None else w2_res) if omega2 is None else omega2
    detuning = effective.resonance_detuning(Ex, w1, w2, omega_ac)
    if require_resonance and abs(detuning) > RESONANCE_RTOL * max(abs(omega_ac), 2 * Ex):
        raise ResonanceGuardError(
            f"resonance condition violated: 2Ex - 2W1 - 2W2 - w_ac = {detuning:.3g} rad/us"
        )
    scenario = sensing_scenario(Ex, omega_ac, g, w1, w2, t2_star, delta_omega, tau, tau_omega, noise_start)
    trace = SensingTrace(w1, w2, detuning, scenario)
    if model in ("full", "both"):
        cfg = IntegrationConfig(t_end=t_end, sample_interval=sample_interval, max_freq_guard=max_freq_guard)
        psi0 = spinops.ket(0) if initial is None else initial
        trace.full = run_ensemble(scenario, n_trials, base_seed, cfg, psi0, sensing_observables(),
                                  sweep=sweep_index, n_threads=n_threads)
    if model in ("effective", "both"):
        trace.effective = run_two_level_ensemble(scenario, n_trials, base_seed, t_end, sample_interval,
                                                 sweep=sweep_index, n_threads=n_threads,
                                                 max_freq_guard=max_freq_guard)
    return trace


@dataclass(frozen=True)
class Visibility:
    amplitude: float
    stderr: float
    time: float

    @property
    def significance(self) -> float:
        return self.amplitude / self.stderr if self.stderr > 0 else math.inf


def signal_visibility(signal: EnsembleResult, control: EnsembleResult, index: int = 0) -> Visibility:
    """Largest |signal - control| deviation of one observable.

    ``control`` is the same run with g = 0 (same seeds); the uncertainty is
    the two standard errors added in quadrature.
    """
    diff = np.abs(signal.mean_observables[index] - control.mean_observables[index])
    se = np.hypot(signal.stderr[index], control.stderr[index])
    k = int(np.argmax(diff))
    return Visibility(float(diff[k]), float(se[k]), float(signal.time_grid[k]))


# spectrum -----------------------------------------------------------------------

@dataclass(frozen=True)
class LineFit:
    center: float
    fwhm: float
    depth: float          # negative for a dip
    offset: float
    residual: float


@dataclass
class Spectrum:
    variable: str
    values: np.ndarray
    p0: np.ndarray
    stderr: np.ndarray
    predicted: float
    fit: Optional[LineFit]
    n_trials: int
    t_probe: float

    @property
    def extremum(self) -> float:
        """Sweep value of the feature: fitted center, else the raw extremum."""
        if self.fit is not None:
            return self.fit.center
        k = int(np.argmax(np.abs(self.p0 - np.median(self.p0))))
        return float(self.values[k])

    def rows(self) -> list[tuple[float, float, float]]:
        return [(float(v), float(p), float(s)) for v, p, s in zip(self.values, self.p0, self.stderr)]


def _lorentzian(x, x0, fwhm, depth, offset):
    return offset + depth / (1.0 + ((x - x0) / (0.5 * fwhm)) ** 2)


def fit_line(x: np.ndarray, y: np.ndarray, sigma: Optional[np.ndarray] = None) -> Optional[LineFit]:
    """Lorentzian fit of a single peak or dip; None if it fails."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    offset = float(np.median(np.concatenate([y[:2], y[-2:]])))
    k = int(np.argmax(np.abs(y - offset)))
    depth = float(y[k] - offset)
    span = float(x.max() - x.min())
    if sigma is not None:
        sigma = np.maximum(np.asarray(sigma, float), 1e-6)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OptimizeWarning)  # flat spectra: no covariance
            p, _ = curve_fit(_lorentzian, x, y, p0=(x[k], span / 4, depth, offset), sigma=sigma,
                             bounds=([x.min() - span, 1e-9 * span, -2.0, -1.0],
                                     [x.max() + span, 10 * span, 2.0, 2.0]),
                             maxfev=20000)
    except (RuntimeError, ValueError):
        return None
    resid = float(np.sqrt(np.mean((y - _lorentzian(x, *p)) ** 2)))
    return LineFit(float(p[0]), abs(float(p[1])), float(p[2]), float(p[3]), resid)


def default_sweep(Ex: float, omega_ac: float, ratio: float, half_width: float = TWO_PI * 0.04,
                  n_points: int = 25) -> np.ndarray:
    w1, _ = effective.resonant_omegas(Ex, omega_ac, ratio)
    return np.linspace(w1 - half_width, w1 + half_width, n_points)


def ac_spectrum(Ex: float, omega_ac: float, g: float, ratio: float = 10.0, t_probe: float = 40.0,
                sweep_grid: Optional[Sequence[float]] = None, n_trials: int = 100,
                variable: str = "omega1", t2_star: float = 0.1, delta_omega: float = 0.005,
                tau: float = 20.0, tau_omega: float = 500.0, base_seed: int = 0,
                noise_start: str = "stationary", n_threads: Optional[int] = None,
                max_freq_guard: float = 20.0) -> Spectrum:
    """P(|0>) at ``t_probe`` across a sweep of W1 (W2 = W1/ratio) or w_ac.

    Sweep point i uses noise seeds keyed (base_seed, i, trial, channel).
    The feature is located with a Lorentzian fit; ``predicted`` is where
    the resonance condition holds.
    """
    if not t_probe > 0:
        raise ValueError("t_probe must be positive")
    if variable not in ("omega1", "omega_ac"):
        raise ValueError(f"unknown sweep variable {variable!r}")
    w1_res, w2_res = effective.resonant_omegas(Ex, omega_ac, ratio)
    if sweep_grid is None:
        sweep_grid = default_sweep(Ex, omega_ac, ratio) if variable == "omega1" else \
            np.linspace(omega_ac - TWO_PI * 0.1, omega_ac + TWO_PI * 0.1, 21)
    values = np.asarray(sweep_grid, dtype=float)
    p0 = np.empty(len(values))
    se = np.empty(len(values))
    for i, v in enumerate(values):
        kwargs = dict(omega1=v) if variable == "omega1" else dict(omega1=w1_res, omega2=w2_res)
        wac = omega_ac if variable == "omega1" else v
        trace = ac_sensing_trace(Ex, wac, g, ratio, t2_star, n_trials, delta_omega, tau, tau_omega,
                                 t_end=t_probe, sample_interval=t_probe, base_seed=base_seed,
                                 require_resonance=False, sweep_index=i, noise_start=noise_start,
                                 n_threads=n_threads, max_freq_guard=max_freq_guard, **kwargs)
        p0[i] = trace.full.mean_observables[0, -1]
        se[i] = trace.full.stderr[0, -1]
    predicted = w1_res if variable == "omega1" else 2 * Ex - 2 * w1_res - 2 * w2_res
    return Spectrum(variable, values, p0, se, predicted, fit_line(values, p0, se), n_trials, t_probe)


def sensitivity_ratio(g: float, t2_star: float, Ex: float, t2: float) -> float:
    """Qualitative improvement estimate g sqrt(T2*) / (Ex sqrt(T2))."""
    return g * math.sqrt(t2_star) / (Ex * math.sqrt(t2))
