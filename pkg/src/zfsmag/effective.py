"""Closed-form effective two-level models.

Each model is H = sx * sigma_x + sy * sigma_y + sz * sigma_z with
sigma = Pauli/2 on an embedded pair (|mu_+>, |mu_->). These serve as fast
oracles for the full 3-level integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spinops
from .hamiltonians import BandError, SignalParams, phase

BASIS_TAGS = ("clock_c", "linear_l", "orthogonal_o", "phasemod_p")

_BASES = {
    "clock_c": spinops.clock_basis,
    "linear_l": spinops.linear_basis,
    "orthogonal_o": spinops.orthogonal_basis,
    "phasemod_p": spinops.phasemod_basis,
}

SCHEME_BASIS = {"none": "clock_c", "linear": "linear_l", "orthogonal": "orthogonal_o", "phasemod": "phasemod_p"}

PAULI_HALF = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex) / 2,
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex) / 2,
    "z": np.array([[1, 0], [0, -1]], dtype=complex) / 2,
}


@dataclass(frozen=True)
class TwoLevelModel:
    basis_tag: str
    sigma_z_coefficient: float
    sigma_x_coefficient: float = 0.0
    sigma_y_coefficient: float = 0.0

    def __post_init__(self):
        if self.basis_tag not in BASIS_TAGS:
            raise ValueError(f"unknown basis tag {self.basis_tag!r}")

    @property
    def basis_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        return _BASES[self.basis_tag]()

    @property
    def gap(self) -> float:
        return math.sqrt(self.sigma_x_coefficient**2 + self.sigma_y_coefficient**2
                         + self.sigma_z_coefficient**2)

    def matrix(self) -> np.ndarray:
        return (self.sigma_x_coefficient * PAULI_HALF["x"]
                + self.sigma_y_coefficient * PAULI_HALF["y"]
                + self.sigma_z_coefficient * PAULI_HALF["z"])

    def embedded(self) -> np.ndarray:
        """The model as a 3x3 operator on the spin-1 space."""
        a, b = self.basis_vectors
        frame = np.column_stack([a, b])
        return frame @ self.matrix() @ frame.conj().T


def gap_clock(Ex: float, deltaE: float = 0.0, deltaBz: float = 0.0) -> float:
    """Splitting of |mu_pm>_c: 2 (Ex + dE) at zero field.

    With a Zeeman term b the exact splitting is 2 sqrt((Ex + dE)^2 + b^2),
    which is flat to first order in b at b = 0.
    """
    if deltaBz == 0.0:
        return 2.0 * (Ex + deltaE)
    return 2.0 * math.copysign(math.hypot(Ex + deltaE, deltaBz), Ex + deltaE)


def gap_linear(Omega: float, deltaE):
    """-(3/2) dE - sqrt(4 W^2 + dE^2)/2."""
    if not Omega > 0:
        raise ValueError("Omega must be positive")
    return -1.5 * deltaE - 0.5 * np.sqrt(4.0 * Omega**2 + deltaE**2)


def gap_linear_expansion(Omega: float, deltaE):
    return -1.5 * deltaE - Omega - deltaE**2 / (8.0 * Omega)


def gap_orthogonal(Omega: float, deltaE):
    """2 sqrt(W^2 + dE^2); even in dE."""
    if not Omega > 0:
        raise ValueError("Omega must be positive")
    return 2.0 * np.sqrt(Omega**2 + deltaE**2)


def gap_orthogonal_expansion(Omega: float, deltaE):
    return 2.0 * Omega + deltaE**2 / Omega


def delta_e_prime(deltaE, Omega1: float):
    """Second-order strain shift dE^2 / (2 W1)."""
    return deltaE**2 / (2.0 * Omega1)


def gap_phasemod(Omega1: float, Omega2: float, deltaE=0.0, deltaOmega1=0.0):
    return 2.0 * np.sqrt(Omega2**2 + (delta_e_prime(deltaE, Omega1) + deltaOmega1) ** 2)


def effective_clock(Ex: float, deltaE: float) -> TwoLevelModel:
    return TwoLevelModel("clock_c", gap_clock(Ex, deltaE))


def effective_linear(Omega: float, deltaE: float) -> TwoLevelModel:
    return TwoLevelModel("linear_l", float(gap_linear(Omega, deltaE)))


def effective_orthogonal(Omega: float, deltaE: float) -> TwoLevelModel:
    return TwoLevelModel("orthogonal_o", float(gap_orthogonal(Omega, deltaE)))


def effective_phasemod(Omega1: float, Omega2: float, deltaE: float = 0.0,
                       deltaOmega1: float = 0.0) -> TwoLevelModel:
    """Doubly-dressed model 2 (dE' + dW1) sigma_x + 2 W2 sigma_z."""
    if Omega2 >= Omega1:
        raise ValueError(f"phase modulation needs Omega2 < Omega1, got {Omega2} >= {Omega1}")
    x = delta_e_prime(deltaE, Omega1) + deltaOmega1
    return TwoLevelModel("phasemod_p", sigma_z_coefficient=2.0 * Omega2, sigma_x_coefficient=2.0 * x)


def resonant_omegas(Ex: float, omega_ac: float, ratio: float) -> tuple[float, float]:
    """(W1, W2) satisfying 2 Ex - 2 W1 - 2 W2 = w_ac with W1 = ratio * W2."""
    if not ratio > 0:
        raise ValueError("ratio must be positive")
    omega1 = (2.0 * Ex - omega_ac) / (2.0 * (1.0 + 1.0 / ratio))
    if not omega1 > 0:
        raise BandError(
            f"frequency above detectable band: w_ac = {omega_ac:.6g} >= 2 Ex = {2 * Ex:.6g} rad/us"
        )
    return omega1, omega1 / ratio


def resonance_detuning(Ex: float, omega1: float, omega2: float, omega_ac: float) -> float:
    """2 Ex - 2 W1 - 2 W2 - w_ac (zero on resonance)."""
    return 2.0 * Ex - 2.0 * omega1 - 2.0 * omega2 - omega_ac


def effective_sensing(Omega1: float, Omega2: float, signal: SignalParams, Ex: float,
                      deltaE: float = 0.0, deltaOmega1: float = 0.0, t: float = 0.0) -> np.ndarray:
    """Doubly-rotating sensing Hamiltonian at time t (2x2, basis |+1>, |0>)."""
    base = effective_phasemod(Omega1, Omega2, deltaE, deltaOmega1).matrix()
    s = signal.g * math.cos(2.0 * Ex * t) * math.cos(signal.omega_ac * t)
    return base + s * (PAULI_HALF["z"] * math.cos(2.0 * Omega1 * t)
                       - PAULI_HALF["y"] * math.sin(2.0 * Omega1 * t))


# second interaction picture -------------------------------------------------

def block(h3: np.ndarray) -> np.ndarray:
    """{|+1>, |0>} block of a 3x3 operator."""
    return np.asarray(h3)[:2, :2]


def dressing_rotation(t: float, Omega1: float) -> np.ndarray:
    """exp(-i 2 W1 sigma_x t) on the {|+1>, |0>} pair."""
    c, s = math.cos(Omega1 * t), math.sin(Omega1 * t)
    return np.array([[c, -1j * s], [-1j * s, c]])


def second_frame_hamiltonian(h2: np.ndarray, t: float, Omega1: float) -> np.ndarray:
    """U^dagger H U - 2 W1 sigma_x with U = exp(-i 2 W1 sigma_x t)."""
    u = dressing_rotation(t, Omega1)
    return u.conj().T @ h2 @ u - 2.0 * Omega1 * PAULI_HALF["x"]


def modulated_first_frame(Omega1: float, Omega2: float, t: float, deltaE: float = 0.0,
                          deltaOmega1: float = 0.0, small_phase: bool = True) -> np.ndarray:
    """Two-level phase-modulated drive in the first frame.

    2 (W1 + dE' + dW1)[cos(phi) sigma_x + sin(phi) sigma_y]; with
    ``small_phase`` cos(phi) -> 1 and sin(phi) -> phi.
    """
    amp = 2.0 * (Omega1 + delta_e_prime(deltaE, Omega1) + deltaOmega1)
    phi = float(phase(t, Omega1, Omega2))
    if small_phase:
        return amp * PAULI_HALF["x"] + 2.0 * Omega1 * phi * PAULI_HALF["y"]
    return amp * (math.cos(phi) * PAULI_HALF["x"] + math.sin(phi) * PAULI_HALF["y"])


def to_doubly_rotating(states: np.ndarray, times: np.ndarray, Omega1: float,
                       Omega2: float) -> np.ndarray:
    """Map first-frame spin-1 states into the doubly-rotating frame.

    Applies exp(i phi(t) sigma_z) (removing the phase modulation exactly)
    followed by exp(i 2 W1 sigma_x t) on the {|+1>, |0>} pair; |-1> is
    untouched. ``states`` has shape (..., n_times, 3).
    """
    states = np.asarray(states)
    phi = np.asarray(phase(times, Omega1, Omega2)) if Omega2 else np.zeros_like(times)
    a = states[..., 0] * np.exp(0.5j * phi)
    b = states[..., 1] * np.exp(-0.5j * phi)
    c, s = np.cos(Omega1 * times), np.sin(Omega1 * times)
    out = np.empty_like(states)
    out[..., 0] = c * a + 1j * s * b
    out[..., 1] = 1j * s * a + c * b
    out[..., 2] = states[..., 2]
    return out
