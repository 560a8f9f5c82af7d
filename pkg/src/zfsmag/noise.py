"""Exact-update Ornstein-Uhlenbeck noise.

The update over a step dt is

    x(t + dt) = x(t) exp(-dt/tau) + n sqrt(c tau / 2 (1 - exp(-2 dt/tau)))

with n a unit Gaussian, which is exact for any dt. The stationary variance
is c tau / 2.

Random numbers
--------------
Every process owns a ``numpy.random.Generator`` (PCG64) seeded from
``numpy.random.SeedSequence(base_seed, spawn_key=key)``. The key for a
trajectory channel is ``(trial_index, channel_id)`` or
``(sweep_index, trial_index, channel_id)`` inside a sweep, see
:func:`channel_seed`. Unit Gaussians come from ``Generator.standard_normal``
(the ziggurat transform of uniform 64-bit draws). The first draw of a fresh
process initializes it from the stationary distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import ou_recursion

CHANNEL_IDS = {"strain": 0, "amplitude": 1, "bz": 2}


def channel_seed(base_seed: int, *key: int) -> np.random.SeedSequence:
    """Seed sequence for one noise channel of one trajectory."""
    return np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in key))


@dataclass
class OuProcess:
    """Single-owner OU generator.

    Attributes
    ----------
    tau : float
        Correlation time in us.
    c : float
        Diffusion constant in (rad/us)^2/us.
    current : float
        Present value in rad/us.
    rng_seed : int or SeedSequence
        Seed the generator was built from, kept for provenance.
    """

    tau: float
    c: float
    current: float = 0.0
    rng_seed: object = 0
    rng: np.random.Generator = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"OU correlation time must be positive, got {self.tau}")
        if self.c < 0:
            raise ValueError(f"OU diffusion constant must be non-negative, got {self.c}")
        if self.rng is None:
            self.rng = np.random.default_rng(self.rng_seed)

    @property
    def stationary_std(self) -> float:
        return math.sqrt(self.c * self.tau / 2.0)

    def coefficients(self, dt: float) -> tuple[float, float]:
        """(decay, amplitude) of the exact update over ``dt``."""
        if not dt > 0:
            raise ValueError(f"OU step must be positive, got dt={dt}")
        decay = math.exp(-dt / self.tau)
        amp = math.sqrt(self.c * self.tau / 2.0 * -math.expm1(-2.0 * dt / self.tau))
        return decay, amp

    def step(self, dt: float) -> float:
        decay, amp = self.coefficients(dt)
        self.current = self.current * decay + self.rng.standard_normal() * amp
        return self.current

    def path(self, dt: float, n: int) -> np.ndarray:
        """Values held during the next ``n`` steps of size ``dt``.

        Element k is the value at the start of step k; the process is left
        at the value after the last step. Bitwise identical to calling
        :meth:`step` ``n`` times.
        """
        decay, amp = self.coefficients(dt)
        normals = self.rng.standard_normal(n)
        out = np.empty(n)
        self.current = ou_recursion(self.current, decay, amp, normals, out)
        return out

    def copy(self) -> "OuProcess":
        clone = OuProcess(self.tau, self.c, self.current, self.rng_seed, rng=np.random.default_rng())
        clone.rng.bit_generator.state = self.rng.bit_generator.state
        return clone


def ou_step(p: OuProcess, dt: float) -> tuple[OuProcess, float]:
    """Advance ``p`` by one exact update; returns the process and its new value."""
    value = p.step(dt)
    return p, value


def _stationary(tau: float, c: float, seed) -> OuProcess:
    p = OuProcess(tau=tau, c=c, current=0.0, rng_seed=seed)
    p.current = p.rng.standard_normal() * p.stationary_std
    return p


def diffusion_from_dephasing(t2_star: float, tau: float) -> float:
    """c = 4 / (T2*^2 tau)."""
    if not (t2_star > 0 and tau > 0):
        raise ValueError("t2_star and tau must be positive")
    if math.isinf(t2_star):
        return 0.0
    return 4.0 / (t2_star**2 * tau)


def ou_from_dephasing(t2_star: float, tau: float, seed=0) -> OuProcess:
    """Strain/electric noise channel for a target dephasing time.

    Uses c = 4/(T2*^2 tau) and starts from the stationary distribution.
    """
    return _stationary(tau, diffusion_from_dephasing(t2_star, tau), seed)


def amplitude_diffusion(omega1: float, delta_rel: float, tau_omega: float) -> float:
    """c_Omega = 2 (delta_rel omega1)^2 / tau_Omega."""
    return 2.0 * (delta_rel * omega1) ** 2 / tau_omega


def ou_amplitude_channel(omega1: float, delta_rel: float, tau_omega: float, seed=0) -> OuProcess:
    """Drive-amplitude noise with stationary std ``delta_rel * omega1``."""
    if not omega1 > 0:
        raise ValueError(f"omega1 must be positive, got {omega1}")
    if delta_rel < 0:
        raise ValueError(f"relative amplitude error must be non-negative, got {delta_rel}")
    if not tau_omega > 0:
        raise ValueError(f"tau_omega must be positive, got {tau_omega}")
    return _stationary(tau_omega, amplitude_diffusion(omega1, delta_rel, tau_omega), seed)


def ou_from_diffusion(c: float, tau: float, seed=0) -> OuProcess:
    """Stationary-start process from an explicit diffusion constant."""
    return _stationary(tau, c, seed)


def transition_moments(x0: float, c: float, tau: float, dt: float) -> tuple[float, float]:
    """Mean and variance of the exact OU transition kernel from ``x0``."""
    return x0 * math.exp(-dt / tau), c * tau / 2.0 * -math.expm1(-2.0 * dt / tau)
