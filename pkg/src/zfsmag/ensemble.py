"""Monte Carlo averaging over noise realizations and coherence-time fits.

Reduction-order contract
------------------------
Trials are processed in fixed blocks of ``BLOCK`` consecutive trial
indices. Within a block the per-trial observables are reduced to
(count, mean, M2) in trial-index order; block summaries are then merged
by a balanced pairwise tree over block index using the parallel-variance
update. Neither the thread count nor the order in which trajectories
finish affects the arithmetic, so results are bitwise reproducible from
``base_seed`` alone. Memory is O(BLOCK * samples), independent of
``n_trials``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba
import numpy as np
from scipy.optimize import curve_fit

from . import effective, spinops
from .hamiltonians import HamiltonianSpec
from .noise import CHANNEL_IDS, channel_seed, ou_amplitude_channel, ou_from_diffusion
from .propagator import (
    IntegrationConfig,
    Observable,
    coherence,
    integrate_states,
    measure,
    process_noise_source,
)

BLOCK = 64
FIT_METHODS = ("envelope_1e", "stretched_exp_fit")


class TrajectoryError(RuntimeError):
    """A single trajectory failed; ``trial`` is its index in the ensemble."""

    def __init__(self, trial: int, cause: BaseException):
        super().__init__(f"trajectory {trial} failed: {cause}")
        self.trial = trial
        self.cause = cause


def make_channels(scenario: HamiltonianSpec, base_seed: int, trial: int,
                  sweep: Optional[int] = None) -> dict:
    """Independent noise processes for one trajectory.

    Seeds: ``SeedSequence(base_seed, spawn_key=(trial, channel_id))``, or
    ``(sweep, trial, channel_id)`` when ``sweep`` is given; channel ids
    are strain = 0, amplitude = 1, bz = 2.
    """
    nz = scenario.noise
    prefix = (trial,) if sweep is None else (sweep, trial)
    key = lambda name: channel_seed(base_seed, *prefix, CHANNEL_IDS[name])
    channels = {}
    if nz.c > 0:
        channels["strain"] = ou_from_diffusion(nz.c, nz.tau, key("strain"))
    if nz.delta_omega > 0 and scenario.scheme != "none":
        channels["amplitude"] = ou_amplitude_channel(
            scenario.drive.omega1_rabi, nz.delta_omega, nz.tau_omega, key("amplitude"))
    if nz.bz_sigma > 0:
        channels["bz"] = ou_from_diffusion(2.0 * nz.bz_sigma**2 / nz.bz_tau, nz.bz_tau, key("bz"))
    if nz.start == "zero":
        for p in channels.values():
            p.current = 0.0
    return channels


def default_probe(scenario: HamiltonianSpec) -> tuple[np.ndarray, list[Observable]]:
    """Dephasing initial state and 2<sigma_x> of the scheme's own basis."""
    tag = effective.SCHEME_BASIS[scenario.scheme]
    state = spinops.two_level_superposition(effective._BASES[tag]())
    return state, [coherence(tag)]


@dataclass
class EnsembleResult:
    time_grid: np.ndarray
    mean_observables: np.ndarray   # (n_obs, n_samples)
    stderr: np.ndarray             # (n_obs, n_samples)
    n_trials: int
    base_seed: int
    names: list = field(default_factory=list)
    leakage_mean: float = 0.0      # time- and trial-averaged P(|-1>)
    dt: float = 0.0

    def series(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        i = self.names.index(name)
        return self.mean_observables[i], self.stderr[i]


def _merge(a: tuple, b: tuple) -> tuple:
    na, ma, m2a = a
    nb_, mb, m2b = b
    n = na + nb_
    delta = mb - ma
    mean = ma + delta * (nb_ / n)
    m2 = m2a + m2b + delta * delta * (na * nb_ / n)
    return n, mean, m2


def _block_summary(values: np.ndarray) -> tuple:
    """(count, mean, M2) over axis 0, accumulated in index order."""
    n = values.shape[0]
    mean = np.zeros(values.shape[1:])
    m2 = np.zeros(values.shape[1:])
    for k in range(n):
        delta = values[k] - mean
        mean = mean + delta / (k + 1)
        m2 = m2 + delta * (values[k] - mean)
    return n, mean, m2


def pairwise_reduce(summaries: Sequence[tuple]) -> tuple:
    """Balanced pairwise merge in fixed index order."""
    items = list(summaries)
    while len(items) > 1:
        merged = [_merge(items[i], items[i + 1]) for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            merged.append(items[-1])
        items = merged
    return items[0]


def resolve_threads(n_threads: Optional[int] = None) -> int:
    """Thread count: explicit value, else ZFSMAG_THREADS, else all cores."""
    if n_threads is None:
        env = os.environ.get("ZFSMAG_THREADS", "").strip()
        n_threads = int(env) if env and env != "auto" else numba.config.NUMBA_NUM_THREADS
    return max(1, min(int(n_threads), numba.config.NUMBA_NUM_THREADS))


def run_ensemble(scenario: HamiltonianSpec, n_trials: int, base_seed: int, cfg: IntegrationConfig,
                 initial: Optional[np.ndarray] = None,
                 observables: Optional[Sequence[Observable]] = None,
                 sweep: Optional[int] = None, n_threads: Optional[int] = None) -> EnsembleResult:
    """Average observables over ``n_trials`` independent noise realizations."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if initial is None or observables is None:
        s0, obs0 = default_probe(scenario)
        initial = s0 if initial is None else initial
        observables = obs0 if observables is None else observables
    initial = np.asarray(initial, dtype=complex)
    if abs(np.linalg.norm(initial) - 1.0) > 1e-9:
        raise ValueError("initial state must be normalized")
    grid = cfg.resolve(scenario)
    times = grid.times
    numba.set_num_threads(resolve_threads(n_threads))

    summaries = []
    leak = []
    for start in range(0, n_trials, BLOCK):
        trials = range(start, min(start + BLOCK, n_trials))
        channels = [make_channels(scenario, base_seed, j, sweep) for j in trials]
        psi0 = np.repeat(initial[None], len(trials), axis=0)
        try:
            states, _ = integrate_states(psi0, scenario, cfg, process_noise_source(channels, grid.dt), grid)
        except Exception as exc:  # locate the failing trajectory
            raise TrajectoryError(_first_failure(trials, scenario, cfg, initial, base_seed, sweep, exc), exc) from exc
        values = measure(states, times, observables, scenario)
        summaries.append(_block_summary(values))
        leak.append(_block_summary(np.mean(np.abs(states[:, :, 2]) ** 2, axis=1)[:, None]))

    n, mean, m2 = pairwise_reduce(summaries)
    var = m2 / (n - 1) if n > 1 else np.zeros_like(m2)
    stderr = np.sqrt(np.maximum(var, 0.0) / n)
    return EnsembleResult(
        time_grid=times,
        mean_observables=mean,
        stderr=stderr,
        n_trials=n_trials,
        base_seed=base_seed,
        names=[o.label for o in observables],
        leakage_mean=float(pairwise_reduce(leak)[1][0]),
        dt=grid.dt,
    )


def _first_failure(trials, scenario, cfg, initial, base_seed, sweep, exc) -> int:
    from .propagator import NormDriftError

    if not isinstance(exc, NormDriftError):
        return trials[0]
    grid = cfg.resolve(scenario)
    for j in trials:
        try:
            integrate_states(initial[None], scenario, cfg,
                             process_noise_source([make_channels(scenario, base_seed, j, sweep)], grid.dt), grid)
        except NormDriftError:
            return j
    return trials[0]


# coherence fits -------------------------------------------------------------

@dataclass(frozen=True)
class CoherenceFit:
    t2: float
    stretch_exponent: float
    fit_residual: float
    method_tag: str
    lower_bound: bool = False

    def describe(self) -> str:
        bound = "> " if self.lower_bound else ""
        return f"T2 {bound}{self.t2:.4g} us (p = {self.stretch_exponent:.3g}, {self.method_tag})"


def carrier_frequency(t: np.ndarray, y: np.ndarray) -> float:
    """Dominant angular frequency of y (0 when the signal is slow)."""
    n = len(y)
    if n < 8:
        return 0.0
    dt = t[1] - t[0]
    spec = np.abs(np.fft.rfft((y - np.mean(y)) * np.hanning(n)))
    freqs = 2 * np.pi * np.fft.rfftfreq(n, dt)
    k = int(np.argmax(spec))
    if k < 3:  # fewer than ~3 periods in the window: treat as non-oscillatory
        return 0.0
    if 0 < k < len(spec) - 1:  # parabolic peak refinement
        a, b, c = np.log(spec[k - 1:k + 2] + 1e-300)
        denom = a - 2 * b + c
        off = 0.5 * (a - c) / denom if denom != 0 else 0.0
        return float(freqs[k] + off * (freqs[1] - freqs[0]))
    return float(freqs[k])


def envelope(t: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Oscillation envelope of y(t) by carrier demodulation.

    y is multiplied by exp(-i w0 t) at the dominant frequency w0 and
    averaged over a sliding window of one carrier period, which removes
    the 2 w0 image exactly; the envelope is twice the magnitude. The
    point t = 0 keeps |y(0)|. Without a resolvable carrier |y| is used.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    w0 = carrier_frequency(t, y)
    dt = t[1] - t[0]
    if w0 == 0.0:
        return t, np.abs(y)
    width = int(round(2 * np.pi / w0 / dt))
    if width < 2 or width >= len(y):
        return t, np.abs(y)
    z = y * np.exp(-1j * w0 * t)
    csum = np.concatenate([[0], np.cumsum(z)])
    lp = (csum[width:] - csum[:-width]) / width
    env = 2.0 * np.abs(lp)
    centers = t[: len(env)] + 0.5 * (width - 1) * dt
    return np.concatenate([[t[0]], centers]), np.concatenate([[abs(y[0])], env])


def _first_crossing(t: np.ndarray, env: np.ndarray, level: float) -> Optional[float]:
    below = np.nonzero(env < level)[0]
    if len(below) == 0:
        return None
    k = int(below[0])
    if k == 0:
        return float(t[0])
    t0, t1, e0, e1 = t[k - 1], t[k], env[k - 1], env[k]
    return float(t0 + (e0 - level) * (t1 - t0) / (e0 - e1))


def _stretched(t, t2, p):
    return np.exp(-np.power(np.maximum(t, 0.0) / t2, p))


def fit_coherence(result, observable_index: int = 0, method: str = "envelope_1e") -> CoherenceFit:
    """Coherence time of one observable of an :class:`EnsembleResult`.

    ``result`` may also be a ``(times, values)`` pair. ``envelope_1e``
    returns the first 1/e crossing of the envelope; ``stretched_exp_fit``
    least-squares fits exp(-(t/T2)^p) with p in [0.5, 4]. If the envelope
    never crosses 1/e the result is a lower bound T2 > t_end.
    """
    if method not in FIT_METHODS:
        raise ValueError(f"unknown fit method {method!r}; expected one of {FIT_METHODS}")
    if isinstance(result, EnsembleResult):
        t, y = result.time_grid, result.mean_observables[observable_index]
    else:
        t, y = (np.asarray(a, dtype=float) for a in result)
    te, env = envelope(t, y)
    crossing = _first_crossing(te, env, math.exp(-1.0))
    t_end = float(t[-1])

    guess = crossing if crossing else t_end
    try:
        (t2_fit, p_fit), _ = curve_fit(_stretched, te, env, p0=(max(guess, 1e-6), 1.0),
                                       bounds=([1e-9, 0.5], [np.inf, 4.0]), maxfev=20000)
    except (RuntimeError, ValueError):
        t2_fit, p_fit = guess, 1.0
    resid = float(np.sqrt(np.mean((env - _stretched(te, t2_fit, p_fit)) ** 2)))

    if method == "envelope_1e":
        if crossing is None:
            return CoherenceFit(t_end, float(p_fit), resid, method, lower_bound=True)
        return CoherenceFit(crossing, float(p_fit), resid, method)
    return CoherenceFit(float(t2_fit), float(p_fit), resid, method,
                        lower_bound=crossing is None and t2_fit > t_end)
