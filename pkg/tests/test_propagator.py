import math

import numpy as np
import pytest

from zfsmag import spinops
from zfsmag.ensemble import make_channels
from zfsmag.hamiltonians import (
    DriveParams,
    HamiltonianSpec,
    NoiseSpec,
    SignalParams,
    StaticParams,
)
from zfsmag.propagator import (
    IntegrationConfig,
    NormDriftError,
    StepGuardError,
    array_noise_source,
    check_step_guard,
    coherence,
    convergence_check,
    evolve,
    integrate_states,
    population,
)

TWO_PI = 2 * math.pi
KET0 = spinops.ket(0)
STATIC = StaticParams(Ex=TWO_PI * 24.0)


def _scenario(scheme="none", w1=0.0, w2=0.0, signal=None, noise=None):
    return HamiltonianSpec(STATIC, DriveParams(scheme, w1, w2), signal, noise or NoiseSpec())


def test_zero_hamiltonian_keeps_state():
    psi = spinops.normalize(np.array([0.3, 0.5j, -0.2]))
    r = evolve(psi, _scenario(), None, IntegrationConfig(t_end=5.0, dt=0.01), [population(1)],
               keep_states=True)
    assert np.allclose(r.states, psi[None, :], atol=1e-14)


@pytest.mark.parametrize("backend", ["kernel", "reference"])
def test_orthogonal_rabi_oscillation(backend):
    w = 1.3
    cfg = IntegrationConfig(t_end=4.0, dt=0.002, sample_stride=10, backend=backend)
    r = evolve(KET0, _scenario("orthogonal", w), None, cfg, [population(1), population(-1)])
    assert np.allclose(r["P(+1)"], np.sin(w * r.times) ** 2, atol=1e-12)
    assert np.allclose(r["P(-1)"], 0.0, atol=1e-14)


def test_linear_rabi_oscillation():
    w = 0.8
    r = evolve(KET0, _scenario("linear", w), None, IntegrationConfig(t_end=4.0, dt=0.002),
               [population(0)])
    assert np.allclose(r["P(0)"], np.cos(w * r.times) ** 2, atol=1e-12)


def test_linear_scheme_spectrum_with_static_strain():
    # |+1> under the linear RWA matrix with a constant strain dE oscillates at
    # the differences of the levels (dE -+ R)/2 and -dE, R = sqrt(4 W^2 + dE^2)
    w, dE = 2.0, 0.9
    dt, n = 0.01, 2**16
    sc = _scenario("linear", w)
    cfg = IntegrationConfig(t_end=n * dt, dt=dt)
    noise = array_noise_source(np.full((1, n), dE), np.zeros((1, n)))
    states, grid = integrate_states(spinops.ket(1)[None], sc, cfg, noise)
    p = np.abs(states[0, :, 0]) ** 2
    spec = np.abs(np.fft.rfft((p - p.mean()) * np.hanning(p.size)))
    omega = TWO_PI * np.fft.rfftfreq(p.size, dt)
    peaks = [i for i in range(1, spec.size - 1)
             if spec[i] > spec[i - 1] and spec[i] > spec[i + 1] and spec[i] > 0.05 * spec.max()]
    found = sorted(omega[peaks])
    r = math.sqrt(4 * w * w + dE * dE)
    expected = sorted([r, abs(1.5 * dE - 0.5 * r), 1.5 * dE + 0.5 * r])
    assert len(found) == 3
    assert np.allclose(found, expected, atol=2 * TWO_PI / (n * dt))


def test_same_seed_is_bitwise_reproducible():
    sc = _scenario("orthogonal", TWO_PI * 10, noise=NoiseSpec(t2_star=3.0, delta_omega=0.01))
    cfg = IntegrationConfig(t_end=2.0)
    obs = [coherence("orthogonal_o")]
    psi = spinops.two_level_superposition(spinops.orthogonal_basis())
    a = evolve(psi, sc, make_channels(sc, 5, 2), cfg, obs)
    b = evolve(psi, sc, make_channels(sc, 5, 2), cfg, obs)
    c = evolve(psi, sc, make_channels(sc, 5, 3), cfg, obs)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_norm_is_preserved_without_renormalization():
    sc = _scenario("phasemod", TWO_PI * 10, TWO_PI, SignalParams(TWO_PI * 0.1, TWO_PI * 5),
                   NoiseSpec(t2_star=0.1, delta_omega=0.005))
    r = evolve(KET0, sc, make_channels(sc, 0, 0), IntegrationConfig(t_end=5.0), [population(0)])
    assert abs(r.final_norm - 1.0) < 1e-9


def test_step_guard():
    sc = _scenario("orthogonal", TWO_PI * 10)
    with pytest.raises(StepGuardError):
        evolve(KET0, sc, None, IntegrationConfig(t_end=1.0, dt=0.05), [population(0)])
    check_step_guard(0.05, 1.0, 20.0)
    with pytest.raises(StepGuardError) as err:
        check_step_guard(0.5, 1.0, 20.0)
    assert err.value.guard == "step"


def test_default_step_meets_guard():
    sc = _scenario("phasemod", TWO_PI * 10, TWO_PI, SignalParams(0.5, 3.0))
    grid = IntegrationConfig(t_end=1.0).resolve(sc)
    assert grid.dt * grid.f_max / TWO_PI <= 1 / 20 + 1e-12


def test_sample_interval_lands_on_exact_times():
    sc = _scenario("phasemod", TWO_PI * 10, TWO_PI, SignalParams(0.5, 3.0))
    grid = IntegrationConfig(t_end=2.0, sample_interval=0.1).resolve(sc)
    assert grid.n_samples == 21
    assert np.allclose(grid.times, np.linspace(0, 2, 21))


def test_unnormalized_initial_state_rejected():
    with pytest.raises(ValueError):
        evolve(np.array([1, 1, 0], complex), _scenario(), None, IntegrationConfig(t_end=1.0, dt=0.1),
               [population(0)])


def test_norm_drift_is_reported():
    sc = _scenario("orthogonal", 1.0)
    noise = array_noise_source(np.full((1, 10), np.nan), np.zeros((1, 10)))
    with pytest.raises((NormDriftError, FloatingPointError)):
        integrate_states(KET0[None], sc, IntegrationConfig(t_end=1.0, dt=0.1), noise)


def _phasemod_error(dt, reference):
    sc = _scenario("phasemod", 2.0, 0.3)
    r = evolve(KET0, sc, None, IntegrationConfig(t_end=3.0, dt=dt, sample_stride=round(0.5 / dt)),
               [population(0), population(1)], keep_states=True)
    return np.abs(r.states - reference).max()


def test_midpoint_stepping_is_second_order():
    sc = _scenario("phasemod", 2.0, 0.3)
    ref = evolve(KET0, sc, None, IntegrationConfig(t_end=3.0, dt=0.5 / 4000, sample_stride=4000),
                 [population(0)], keep_states=True).states
    e1 = _phasemod_error(0.5 / 50, ref)
    e2 = _phasemod_error(0.5 / 100, ref)
    assert 3.6 < e1 / e2 < 4.4


def test_dephasing_run_converges_at_default_step():
    sc = _scenario("orthogonal", TWO_PI * 10,
                   noise=NoiseSpec(t2_star=3.0, tau=20.0, delta_omega=0.01, tau_omega=500.0))
    rep = convergence_check(sc, IntegrationConfig(t_end=30.0, sample_interval=0.01))
    assert rep.passed, rep
    assert rep.dt_fine == pytest.approx(rep.dt_coarse / 2)


@pytest.mark.parametrize("scheme,w2,signal", [
    ("linear", 0.0, None),
    ("orthogonal", 0.0, None),
    ("phasemod", TWO_PI, None),
    ("phasemod", TWO_PI, SignalParams(TWO_PI * 0.1, TWO_PI * 5)),
])
def test_kernel_matches_reference_path(scheme, w2, signal):
    sc = _scenario(scheme, TWO_PI * 10, w2, signal)
    rng = np.random.default_rng(4)
    n_traj, t_end = 3, 0.2
    cfg_k = IntegrationConfig(t_end=t_end, backend="kernel")
    grid = cfg_k.resolve(sc)
    e = rng.normal(scale=0.5, size=(n_traj, grid.n_steps))
    w = rng.normal(scale=0.5, size=(n_traj, grid.n_steps))
    psi0 = np.array([spinops.normalize(rng.normal(size=3) + 1j * rng.normal(size=3))
                     for _ in range(n_traj)])
    a, _ = integrate_states(psi0, sc, cfg_k, array_noise_source(e, w), grid)
    b, _ = integrate_states(psi0, sc, IntegrationConfig(t_end=t_end, backend="reference"),
                            array_noise_source(e, w), grid)
    assert np.abs(a - b).max() < 1e-11
