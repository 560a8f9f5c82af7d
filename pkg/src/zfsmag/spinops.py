"""Spin-1 operators, basis states and small dense linear algebra.

Basis ordering is fixed as (|+1>, |0>, |-1>) throughout the package.
Frequencies are angular (rad/us) and times are in us.
"""

from __future__ import annotations

import numpy as np

SQRT2 = np.sqrt(2.0)

HERMITIAN_RTOL = 1e-12
UNITARY_ATOL = 1e-9
EXPECTATION_IMAG_TOL = 1e-10

# basis indices
PLUS, ZERO, MINUS = 0, 1, 2

_SX = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / SQRT2
_SY = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / SQRT2
_SZ = np.diag([1.0, 0.0, -1.0]).astype(complex)

_OPERATORS = {
    "Sx": _SX,
    "Sy": _SY,
    "Sz": _SZ,
    "Sz2": _SZ @ _SZ,
    "SxSqMinusSySq": _SX @ _SX - _SY @ _SY,
}


class NotHermitianError(ValueError):
    """Raised when an operation requires a Hermitian matrix."""


def spin_operator(which: str) -> np.ndarray:
    """Return a spin-1 operator as a fresh 3x3 complex array.

    Parameters
    ----------
    which : {"Sx", "Sy", "Sz", "Sz2", "SxSqMinusSySq"}
    """
    try:
        return _OPERATORS[which].copy()
    except KeyError:
        raise ValueError(
            f"unknown spin operator {which!r}; expected one of {sorted(_OPERATORS)}"
        ) from None


def ket(label: str | int) -> np.ndarray:
    """Basis ket |+1>, |0> or |-1> (labels "+1", "0", "-1" or m = 1, 0, -1)."""
    m = int(label)
    if m not in (1, 0, -1):
        raise ValueError(f"spin-1 projection must be +1, 0 or -1, got {label!r}")
    v = np.zeros(3, dtype=complex)
    v[1 - m] = 1.0
    return v


def projector(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    return np.outer(state, state.conj())


def normalize(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    norm = np.linalg.norm(state)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return state / norm


def is_hermitian(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    m = np.asarray(m)
    scale = max(np.linalg.norm(m), 1.0)
    return bool(np.linalg.norm(m - m.conj().T) <= rtol * scale)


def unitarity_error(u: np.ndarray) -> float:
    """Frobenius norm of U^dagger U - I."""
    u = np.asarray(u)
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def expectation(state: np.ndarray, op: np.ndarray) -> float:
    """Real expectation value <psi|op|psi>.

    Raises
    ------
    NotHermitianError
        If the imaginary part exceeds ``EXPECTATION_IMAG_TOL``, which only
        happens for a non-Hermitian ``op``.
    """
    state = np.asarray(state, dtype=complex)
    value = np.vdot(state, np.asarray(op) @ state)
    if abs(value.imag) > EXPECTATION_IMAG_TOL:
        raise NotHermitianError(
            f"expectation has imaginary part {value.imag:.3e}; operator is not Hermitian"
        )
    return float(value.real)


def matrix_exponential_skew(h: np.ndarray, dt: float) -> np.ndarray:
    """Propagator exp(-i h dt) of a Hermitian matrix.

    Uses the Hermitian eigendecomposition, so the result is unitary up to
    roundoff. Works for any square Hermitian size (3x3 and 2x2 in practice).
    """
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise NotHermitianError("matrix_exponential_skew requires a Hermitian matrix")
    evals, evecs = np.linalg.eigh(h)
    u = (evecs * np.exp(-1j * evals * dt)) @ evecs.conj().T
    err = unitarity_error(u)
    if err >= UNITARY_ATOL:
        raise ArithmeticError(f"propagator lost unitarity: |U'U - I| = {err:.3e}")
    return u


# Two-level bases used by the control schemes, embedded in the spin-1 space.
# Each entry is (|mu_+>, |mu_->); the observable 2<sigma_x> is
# |mu_+><mu_-| + h.c. and the dephasing experiments start in (|mu_+>+|mu_->)/sqrt2.

def clock_basis() -> tuple[np.ndarray, np.ndarray]:
    """|mu_pm>_c = (|-1> pm |+1>)/sqrt2, eigenstates of the transverse ZFS term."""
    p, m = ket(1), ket(-1)
    return (m + p) / SQRT2, (m - p) / SQRT2


def orthogonal_basis() -> tuple[np.ndarray, np.ndarray]:
    """|mu_pm>_o = (|0> pm |+1>)/sqrt2."""
    p, z = ket(1), ket(0)
    return (z + p) / SQRT2, (z - p) / SQRT2


def phasemod_basis() -> tuple[np.ndarray, np.ndarray]:
    """|mu_+>_p = |+1>, |mu_->_p = |0>."""
    return ket(1), ket(0)


def linear_basis() -> tuple[np.ndarray, np.ndarray]:
    """Dressed pair of the linearly driven system at zero strain noise.

    The first vector is the antisymmetric state (|-1> - |+1>)/sqrt2, which
    carries eigenvalue -dE. The second is the dressed state
    (|+1> + |-1>)/2 + |0>/sqrt2 whose eigenvalue (dE + sqrt(4 W^2 + dE^2))/2
    enters the gap -(3/2) dE - sqrt(4 W^2 + dE^2)/2.
    """
    p, z, m = ket(1), ket(0), ket(-1)
    anti = (m - p) / SQRT2
    upper = 0.5 * (p + m) + z / SQRT2
    return anti, upper


def two_level_sigma_x(basis: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    """2 sigma_x = |a><b| + |b><a| for an embedded pair (a, b)."""
    a, b = basis
    return np.outer(a, b.conj()) + np.outer(b, a.conj())


def two_level_superposition(basis: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    a, b = basis
    return normalize(a + b)
