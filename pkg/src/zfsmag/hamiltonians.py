"""Hamiltonian builders for the driven spin-1 color center.

Frames
------
``lab``        H_full(t) as written, including the microwave carriers.
``rot_exact``  exp(i H0' t) (H_full - H0') exp(-i H0' t) with
               H0' = D Sz^2 + Ex (Sx^2 - Sy^2); nothing is dropped.
``rot_rwa``    the same frame after the rotating wave approximation.

In ``rot_rwa`` the Zeeman term is dropped (it oscillates at 2 Ex) and the
AC signal enters as g cos(2 Ex t) cos(w_ac t) (|+1><+1| - |0><0|)/2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from . import spinops
from ._kernels import LINEAR, NONE, ORTHOGONAL, PHASEMOD

TWO_PI = 2.0 * math.pi

SCHEMES = ("none", "linear", "orthogonal", "phasemod")
SCHEME_CODES = {"none": NONE, "linear": LINEAR, "orthogonal": ORTHOGONAL, "phasemod": PHASEMOD}
FRAMES = ("lab", "rot_rwa", "rot_exact")

DEFAULT_D = TWO_PI * 2870.0
NOISE_STARTS = ("stationary", "zero")

_SX = spinops.spin_operator("Sx")
_SY = spinops.spin_operator("Sy")
_SZ = spinops.spin_operator("Sz")
_SZ2 = spinops.spin_operator("Sz2")
_SXY = spinops.spin_operator("SxSqMinusSySq")


class GuardError(ValueError):
    """A physics validity guard was violated."""

    guard = "physics"


class DriveRatioGuardError(GuardError):
    guard = "omega2_ratio"


class BandError(GuardError):
    guard = "band"


class ResonanceGuardError(GuardError):
    guard = "resonance"


class FrameError(ValueError):
    pass


@dataclass(frozen=True)
class StaticParams:
    """Zero-field splittings and Zeeman term, all in rad/us."""

    D: float = DEFAULT_D
    Ex: float = TWO_PI * 24.0
    gamma_Bz: float = 0.0

    def __post_init__(self):
        if not self.Ex > 0:
            raise ValueError(f"transverse ZFS Ex must be positive, got {self.Ex}")
        if self.gamma_Bz and self.Ex < 10 * abs(self.gamma_Bz):
            warnings.warn(
                f"Ex = {self.Ex:.4g} is less than 10 |gamma Bz| = {10 * abs(self.gamma_Bz):.4g}; "
                "outside the clock-transition regime",
                stacklevel=2,
            )


@dataclass(frozen=True)
class DriveParams:
    """Microwave control.

    ``mw_freq1``/``mw_freq2`` default to the resonances D + Ex and D - Ex
    (resolved against a StaticParams by :meth:`resolved`).
    """

    scheme: str = "none"
    omega1_rabi: float = 0.0
    omega2_rabi: float = 0.0
    mw_freq1: Optional[float] = None
    mw_freq2: Optional[float] = None
    max_omega2_ratio: float = 0.2

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown control scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.scheme != "none" and not self.omega1_rabi > 0:
            raise ValueError(f"scheme {self.scheme!r} needs a positive Rabi frequency")
        if self.scheme == "phasemod":
            if self.omega2_rabi < 0:
                raise ValueError("omega2_rabi must be non-negative")
            if self.omega2_rabi > self.max_omega2_ratio * self.omega1_rabi:
                raise DriveRatioGuardError(
                    f"phase modulation needs omega2 << omega1: omega2/omega1 = "
                    f"{self.omega2_rabi / self.omega1_rabi:.3g} > {self.max_omega2_ratio:.3g}"
                )

    def resolved(self, static: StaticParams) -> "DriveParams":
        return replace(
            self,
            mw_freq1=static.D + static.Ex if self.mw_freq1 is None else self.mw_freq1,
            mw_freq2=static.D - static.Ex if self.mw_freq2 is None else self.mw_freq2,
        )

    def detunings(self, static: StaticParams) -> tuple[float, float]:
        d = self.resolved(static)
        return d.mw_freq1 - (static.D + static.Ex), d.mw_freq2 - (static.D - static.Ex)


@dataclass(frozen=True)
class SignalParams:
    """AC field g cos(w_ac t) Sz."""

    g: float = 0.0
    omega_ac: float = 0.0
    warn_factor: float = 20.0

    def __post_init__(self):
        if self.g < 0:
            raise ValueError(f"signal strength must be non-negative, got {self.g}")

    def check(self, static: StaticParams) -> list[str]:
        """Validity warnings for the sensing approximations (empty if fine)."""
        notes = []
        if self.g > 0 and 4 * static.Ex < self.warn_factor * self.g:
            notes.append(f"4 Ex = {4 * static.Ex:.4g} is not >> g = {self.g:.4g}")
        if self.g > 0 and 2 * self.omega_ac < self.warn_factor * self.g:
            notes.append(f"2 w_ac = {2 * self.omega_ac:.4g} is not >> g = {self.g:.4g}")
        for note in notes:
            warnings.warn(note, stacklevel=2)
        return notes


@dataclass(frozen=True)
class NoiseSpec:
    """Stochastic channels of a scenario.

    Strain noise: either ``t2_star`` (c = 4/(T2*^2 tau)) or an explicit
    ``strain_c``. Amplitude noise: relative error ``delta_omega`` of the
    first drive with correlation time ``tau_omega``. ``bz_sigma`` adds a
    Zeeman noise channel (lab and rot_exact frames only). ``start``
    selects the initial noise value: a draw from the stationary
    distribution (default) or exactly zero.
    """

    t2_star: float = math.inf
    tau: float = 20.0
    strain_c: Optional[float] = None
    delta_omega: float = 0.0
    tau_omega: float = 500.0
    bz_sigma: float = 0.0
    bz_tau: float = 20.0
    start: str = "stationary"

    def __post_init__(self):
        if self.start not in NOISE_STARTS:
            raise ValueError(f"unknown noise start {self.start!r}; expected one of {NOISE_STARTS}")

    @property
    def c(self) -> float:
        from .noise import diffusion_from_dephasing

        if self.strain_c is not None:
            return self.strain_c
        return diffusion_from_dephasing(self.t2_star, self.tau)

    @property
    def strain_std(self) -> float:
        return math.sqrt(self.c * self.tau / 2.0)

    def amplitude_std(self, omega1: float) -> float:
        return self.delta_omega * omega1

    def amplitude_c(self, omega1: float) -> float:
        from .noise import amplitude_diffusion

        return amplitude_diffusion(omega1, self.delta_omega, self.tau_omega)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Declarative description of one simulation scenario."""

    static: StaticParams = field(default_factory=StaticParams)
    drive: DriveParams = field(default_factory=DriveParams)
    signal: Optional[SignalParams] = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        if self.signal is not None and self.signal.omega_ac >= 2 * self.static.Ex:
            raise BandError(
                f"frequency above detectable band: w_ac = {self.signal.omega_ac:.6g} >= "
                f"2 Ex = {2 * self.static.Ex:.6g} rad/us"
            )

    @property
    def scheme(self) -> str:
        return self.drive.scheme

    def max_frequency(self, frame: str = "rot_rwa") -> float:
        """Largest angular frequency the stepper has to resolve (rad/us)."""
        st, dr, sig = self.static, self.drive, self.signal
        driven = dr.scheme != "none"
        # coupling scales: Rabi splitting and a 5 sigma strain excursion
        scale = 2.0 * (dr.omega1_rabi * (1.0 + 5.0 * self.noise.delta_omega) if driven else 0.0)
        scale += 2.0 * 5.0 * self.noise.strain_std
        if frame == "rot_rwa":
            f = scale
            if sig is not None:
                f += 2.0 * st.Ex + sig.omega_ac
            if dr.scheme == "phasemod":
                f += 2.0 * dr.omega1_rabi
            if driven:
                f += max(abs(x) for x in dr.detunings(st))
            return f
        if frame in ("lab", "rot_exact"):
            f = 2.0 * (st.D + st.Ex) + scale + abs(st.gamma_Bz) + 5 * self.noise.bz_sigma
            if sig is not None:
                f += 2.0 * st.Ex + sig.omega_ac
            if dr.scheme == "phasemod":
                f += 2.0 * dr.omega1_rabi
            return f
        raise FrameError(f"unknown frame {frame!r}; expected one of {FRAMES}")


def phase(t, omega1: float, omega2: float):
    """Phase modulation 2 (W2/W1) sin(2 W1 t)."""
    if not omega1 > 0:
        raise ValueError("omega1 must be positive")
    return 2.0 * omega2 / omega1 * np.sin(2.0 * omega1 * t)


def h_lab(p: StaticParams, deltaE: float = 0.0, deltaBz: float = 0.0) -> np.ndarray:
    """D Sz^2 + (Ex + dE)(Sx^2 - Sy^2) + (gamma Bz + dBz) Sz."""
    return p.D * _SZ2 + (p.Ex + deltaE) * _SXY + (p.gamma_Bz + deltaBz) * _SZ


def h0_prime(p: StaticParams) -> np.ndarray:
    return p.D * _SZ2 + p.Ex * _SXY


def drive_lab(d: DriveParams, t: float, deltaOmega1: float = 0.0) -> np.ndarray:
    """Microwave term of the lab-frame Hamiltonian (rad/us)."""
    if d.scheme == "none":
        return np.zeros((3, 3), dtype=complex)
    if d.mw_freq1 is None or d.mw_freq2 is None:
        raise ValueError("drive frequencies must be resolved; call DriveParams.resolved(static)")
    amp = d.omega1_rabi + deltaOmega1
    if d.scheme == "linear":
        return 2.0 * amp * math.cos(d.mw_freq1 * t) * _SX
    phi = float(phase(t, d.omega1_rabi, d.omega2_rabi)) if d.scheme == "phasemod" else 0.0
    return spinops.SQRT2 * amp * (
        math.cos(d.mw_freq1 * t + phi) * _SX + math.sin(d.mw_freq2 * t + phi) * _SY
    )


def h_full(p: StaticParams, d: DriveParams, s: Optional[SignalParams], t: float,
           deltaE: float = 0.0, deltaOmega1: float = 0.0, deltaBz: float = 0.0) -> np.ndarray:
    """Complete lab-frame Hamiltonian at time t."""
    h = h_lab(p, deltaE, deltaBz) + drive_lab(d.resolved(p), t, deltaOmega1)
    if s is not None:
        h = h + s.g * math.cos(s.omega_ac * t) * _SZ
    return h


def _frame_rotation(p: StaticParams, t: float) -> np.ndarray:
    """exp(i H0' t) from the known eigen-system of H0'."""
    mu_p, mu_m = spinops.clock_basis()
    vecs = np.column_stack([mu_p, spinops.ket(0), mu_m])
    vals = np.array([p.D + p.Ex, 0.0, p.D - p.Ex])
    return (vecs * np.exp(1j * vals * t)) @ vecs.conj().T


def _rwa_couplings(p: StaticParams, d: DriveParams, t: float, amp: float) -> tuple[complex, complex]:
    """RWA matrix elements <+1|H|0> and <-1|H|0>."""
    if d.scheme == "none":
        return 0j, 0j
    det1, det2 = d.detunings(p)
    phi = float(phase(t, d.omega1_rabi, d.omega2_rabi)) if d.scheme == "phasemod" else 0.0
    if d.scheme == "linear":
        kplus, kminus = 1.0, 0.0
    else:
        kplus = kminus = 1.0 / spinops.SQRT2
    cp = kplus * amp * np.exp(-1j * (det1 * t + phi))
    cm = -kminus * amp * np.exp(-1j * (det2 * t + phi))
    return (cp - cm) / spinops.SQRT2, (cp + cm) / spinops.SQRT2


def h_rotating(p: StaticParams, d: DriveParams, s: Optional[SignalParams] = None,
               deltaE: float = 0.0, deltaOmega1: float = 0.0, t: float = 0.0,
               rwa: bool = True, deltaBz: float = 0.0, frame: Optional[str] = None) -> np.ndarray:
    """Hamiltonian in the frame of H0' = D Sz^2 + Ex (Sx^2 - Sy^2).

    With ``rwa`` the result is the rotating-wave form: for resonant drives
    the linear scheme gives W/sqrt2 couplings of |0> to |+-1>, the
    orthogonal scheme a single coupling W between |+1> and |0>, and phase
    modulation multiplies that coupling by exp(-i phi(t)). The strain noise
    always couples |+1> and |-1> with strength dE. Without ``rwa`` the
    exact transform of the full Hamiltonian is returned.
    """
    if frame is not None:
        expected = "rot_rwa" if rwa else "rot_exact"
        if frame != expected:
            raise FrameError(f"frame {frame!r} is inconsistent with rwa={rwa}")
    if not rwa:
        u = _frame_rotation(p, t)
        h = h_full(p, d, s, t, deltaE, deltaOmega1, deltaBz) - h0_prime(p)
        return u @ h @ u.conj().T

    h = np.zeros((3, 3), dtype=complex)
    a, b = _rwa_couplings(p, d, t, d.omega1_rabi + deltaOmega1)
    h[0, 1], h[1, 0] = a, np.conj(a)
    h[2, 1], h[1, 2] = b, np.conj(b)
    h[0, 2] = h[2, 0] = deltaE
    if s is not None:
        half = 0.5 * s.g * math.cos(2.0 * p.Ex * t) * math.cos(s.omega_ac * t)
        h[0, 0], h[1, 1] = half, -half
    return h


class Eigensystem(NamedTuple):
    values: np.ndarray     # (w_+1, w_0, w_-1)
    vectors: np.ndarray    # columns psi_+, psi_0, psi_-
    theta: float
    degenerate: bool


def analytic_eigensystem(p: StaticParams, deltaE: float = 0.0, deltaBz: float = 0.0) -> Eigensystem:
    """Closed-form eigen-system of :func:`h_lab`.

    theta is the mixing angle with cos(theta) = (gamma Bz + dBz)/r and
    sin(theta) = (Ex + dE)/r, r = sqrt((Ex + dE)^2 + (gamma Bz + dBz)^2).
    At r = 0 the levels |+-1> are degenerate and the result is flagged.
    """
    a = p.Ex + deltaE
    b = p.gamma_Bz + deltaBz
    r = math.hypot(a, b)
    if r == 0.0:
        return Eigensystem(np.array([p.D, 0.0, p.D]), np.eye(3, dtype=complex), math.nan, True)
    theta = math.atan2(a, b)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    plus, zero, minus = spinops.ket(1), spinops.ket(0), spinops.ket(-1)
    psi_p = c * plus + s * minus
    psi_m = -s * plus + c * minus
    vectors = np.column_stack([psi_p, zero, psi_m])
    return Eigensystem(np.array([p.D + r, 0.0, p.D - r]), vectors, theta, False)


def linear_rwa_eigenvalues(omega: float, deltaE: float) -> np.ndarray:
    """Closed-form eigenvalues of the linearly driven RWA matrix.

    Order: ((dE - R)/2, (dE + R)/2, -dE) with R = sqrt(4 W^2 + dE^2).
    """
    root = math.sqrt(4 * omega**2 + deltaE**2)
    return np.array([0.5 * (deltaE - root), 0.5 * (deltaE + root), -deltaE])


def linear_rwa_eigenvectors(omega: float, deltaE: float) -> np.ndarray:
    """Eigenvectors paired with :func:`linear_rwa_eigenvalues` (columns).

    Built from the angle with sin(eta) = r+/sqrt(2 + r+^2),
    cos(eta) = r-/sqrt(2 + r-^2), r+- = (R -+ dE)/(sqrt2 W). The vector
    cos(eta)(|+1>+|-1>)/sqrt2 + sin(eta)|0> belongs to the upper root
    (dE + R)/2 and sin(eta)(|+1>+|-1>)/sqrt2 - cos(eta)|0> to the lower one.
    """
    root = math.sqrt(4 * omega**2 + deltaE**2)
    rp = (root - deltaE) / (spinops.SQRT2 * omega)
    rm = (root + deltaE) / (spinops.SQRT2 * omega)
    sin_eta = rp / math.sqrt(2 + rp**2)
    cos_eta = rm / math.sqrt(2 + rm**2)
    plus, zero, minus = spinops.ket(1), spinops.ket(0), spinops.ket(-1)
    sym = (plus + minus) / spinops.SQRT2
    upper = cos_eta * sym + sin_eta * zero
    lower = sin_eta * sym - cos_eta * zero
    anti = (minus - plus) / spinops.SQRT2
    return np.column_stack([lower, upper, anti])
