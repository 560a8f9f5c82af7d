import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zfsmag import spinops
from zfsmag.hamiltonians import (
    BandError,
    DriveParams,
    DriveRatioGuardError,
    FrameError,
    HamiltonianSpec,
    NoiseSpec,
    SignalParams,
    StaticParams,
    analytic_eigensystem,
    h_full,
    h_lab,
    h_rotating,
    linear_rwa_eigenvalues,
    linear_rwa_eigenvectors,
    phase,
)

TWO_PI = 2 * math.pi
SQ2 = math.sqrt(2)


def test_lab_hamiltonian_matrix_form():
    p = StaticParams(D=5.0, Ex=1.5, gamma_Bz=0.1)
    h = h_lab(p, deltaE=0.1, deltaBz=0.05)
    expected = np.array([[5.15, 0, 1.6], [0, 0, 0], [1.6, 0, 4.85]])
    assert np.allclose(h, expected)


def test_rotating_frame_rwa_matrix_forms():
    p = StaticParams(D=100.0, Ex=10.0)
    w = 2.0
    lin = h_rotating(p, DriveParams("linear", w), deltaE=0.3)
    assert np.allclose(lin, [[0, w / SQ2, 0.3], [w / SQ2, 0, w / SQ2], [0.3, w / SQ2, 0]])
    orth = h_rotating(p, DriveParams("orthogonal", w), deltaE=0.3)
    assert np.allclose(orth, [[0, w, 0.3], [w, 0, 0], [0.3, 0, 0]], atol=1e-15)


def test_phase_modulated_coupling_carries_phase():
    p = StaticParams(D=100.0, Ex=10.0)
    d = DriveParams("phasemod", 2.0, 0.2)
    t = 0.37
    h = h_rotating(p, d, t=t)
    phi = phase(t, 2.0, 0.2)
    assert h[0, 1] == pytest.approx(2.0 * np.exp(-1j * phi))
    assert abs(h[2, 1]) < 1e-15


def test_signal_term_in_rotating_frame():
    p = StaticParams(D=100.0, Ex=10.0)
    s = SignalParams(g=0.4, omega_ac=3.0)
    t = 0.21
    h = h_rotating(p, DriveParams(), s, t=t)
    half = 0.2 * math.cos(20.0 * t) * math.cos(3.0 * t)
    assert np.allclose(np.diag(h), [half, -half, 0])


def test_phase_examples():
    assert phase(0.0, 1.0, 0.1) == 0.0
    assert phase(math.pi / 4, 1.0, 0.1) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        phase(0.1, 0.0, 0.1)


@settings(max_examples=1000, deadline=None)
@given(
    D=st.floats(100, 20000),
    Ex=st.floats(0.1, 1000),
    bz=st.floats(-100, 100),
    dE=st.floats(-10, 10),
)
def test_analytic_eigensystem_matches_numerics(D, Ex, bz, dE):
    p = StaticParams(D=D, Ex=Ex, gamma_Bz=bz) if Ex >= 10 * abs(bz) else None
    if p is None:
        return
    es = analytic_eigensystem(p, deltaE=dE)
    h = h_lab(p, deltaE=dE)
    scale = D + Ex
    assert np.allclose(np.sort(es.values), np.linalg.eigvalsh(h), atol=1e-10 * scale)
    for k in range(3):
        v = es.vectors[:, k]
        assert np.allclose(h @ v, es.values[k] * v, atol=1e-9 * scale)


def test_degenerate_eigensystem_is_flagged():
    es = analytic_eigensystem(StaticParams(D=10.0, Ex=1.0), deltaE=-1.0)
    assert es.degenerate


@settings(max_examples=200, deadline=None)
@given(w=st.floats(0.01, 100), dE=st.floats(-50, 50))
def test_linear_rwa_eigensystem(w, dE):
    h = h_rotating(StaticParams(D=100.0, Ex=10.0), DriveParams("linear", w), deltaE=dE)
    vals = linear_rwa_eigenvalues(w, dE)
    vecs = linear_rwa_eigenvectors(w, dE)
    assert np.allclose(np.sort(vals), np.linalg.eigvalsh(h), atol=1e-10 * (w + abs(dE)))
    for k in range(3):
        assert np.allclose(h @ vecs[:, k], vals[k] * vecs[:, k], atol=1e-9 * (w + abs(dE)))


@pytest.mark.parametrize("scheme", ["linear", "orthogonal", "phasemod"])
def test_exact_rotating_frame_time_average_matches_rwa(scheme):
    # averaging the exact rotating-frame matrix over many fast periods
    # leaves the slowly varying RWA matrix
    p = StaticParams(D=TWO_PI * 2870.0, Ex=TWO_PI * 24.0)
    d = DriveParams(scheme, 0.5, 0.05 if scheme == "phasemod" else 0.0).resolved(p)
    t0 = 0.4
    ts = t0 + np.linspace(-0.5, 0.5, 40001) * 2.0
    exact = np.mean([h_rotating(p, d, t=t, rwa=False) for t in ts], axis=0)
    rwa = np.mean([h_rotating(p, d, t=t) for t in ts], axis=0)
    assert np.allclose(exact, rwa, atol=0.02)


def test_exact_frame_is_hermitian_and_consistent():
    p = StaticParams(D=100.0, Ex=10.0)
    d = DriveParams("orthogonal", 1.0).resolved(p)
    h = h_rotating(p, d, t=0.3, rwa=False)
    assert spinops.is_hermitian(h)
    assert np.allclose(np.linalg.eigvalsh(h),
                       np.linalg.eigvalsh(h_full(p, d, None, 0.3) - (p.D * np.diag([1, 0, 1]) + p.Ex * spinops.spin_operator("SxSqMinusSySq"))))
    with pytest.raises(FrameError):
        h_rotating(p, d, t=0.3, rwa=True, frame="rot_exact")


def test_guards():
    with pytest.raises(DriveRatioGuardError):
        DriveParams("phasemod", 1.0, 1.0)
    with pytest.raises(BandError):
        HamiltonianSpec(StaticParams(Ex=1.0), signal=SignalParams(0.1, 2.0))
    with pytest.raises(ValueError):
        DriveParams("circular", 1.0)
    with pytest.raises(ValueError):
        NoiseSpec(start="random")
    with pytest.raises(ValueError):
        StaticParams(Ex=0.0)
    with pytest.warns(UserWarning):
        StaticParams(Ex=1.0, gamma_Bz=1.0)
    with pytest.raises(FrameError):
        HamiltonianSpec().max_frequency("lab_rwa")


def test_noise_spec_constants():
    n = NoiseSpec(t2_star=3.0, tau=20.0)
    assert n.c == pytest.approx(4 / 180)
    assert NoiseSpec(t2_star=0.1, tau=20.0).c == pytest.approx(20.0)
    assert n.amplitude_c(TWO_PI * 10) == 0.0
    m = NoiseSpec(delta_omega=0.01, tau_omega=500.0)
    assert m.amplitude_c(TWO_PI * 10) == pytest.approx(2 * (0.01 * TWO_PI * 10) ** 2 / 500)
    assert m.amplitude_std(TWO_PI * 10) == pytest.approx(0.01 * TWO_PI * 10)


def test_control_and_signal_runs_share_step_bound():
    base = dict(static=StaticParams(Ex=TWO_PI * 24.0), drive=DriveParams("phasemod", 10.0, 1.0))
    a = HamiltonianSpec(signal=SignalParams(0.5, 5.0), **base).max_frequency()
    b = HamiltonianSpec(signal=SignalParams(0.0, 5.0), **base).max_frequency()
    assert a == b
