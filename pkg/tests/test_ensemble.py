import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zfsmag.ensemble import (
    BLOCK,
    EnsembleResult,
    _block_summary,
    default_probe,
    fit_coherence,
    make_channels,
    pairwise_reduce,
    run_ensemble,
)
from zfsmag.hamiltonians import DriveParams, HamiltonianSpec, NoiseSpec, StaticParams
from zfsmag.propagator import IntegrationConfig, evolve

TWO_PI = 2 * math.pi


def _clock(t2_star=3.0, tau=20.0, start="stationary"):
    return HamiltonianSpec(StaticParams(Ex=TWO_PI * 24.0), DriveParams(),
                           noise=NoiseSpec(t2_star=t2_star, tau=tau, start=start))


CFG = IntegrationConfig(t_end=2.0, sample_interval=0.05)


def test_single_trial_equals_single_trajectory():
    sc = _clock()
    psi, obs = default_probe(sc)
    ens = run_ensemble(sc, 1, 7, CFG)
    one = evolve(psi, sc, make_channels(sc, 7, 0), CFG, obs)
    assert np.allclose(ens.mean_observables, one.values, atol=1e-14)
    assert np.all(ens.stderr == 0.0)


def test_mean_matches_per_trajectory_average():
    sc = _clock()
    psi, obs = default_probe(sc)
    n = BLOCK * 2 + 3
    ens = run_ensemble(sc, n, 1, CFG)
    vals = np.array([evolve(psi, sc, make_channels(sc, 1, j), CFG, obs).values for j in range(n)])
    assert np.allclose(ens.mean_observables, vals.mean(axis=0), atol=1e-12)
    assert np.allclose(ens.stderr, vals.std(axis=0, ddof=1) / math.sqrt(n), atol=1e-12)


def test_noiseless_ensemble_has_zero_stderr():
    sc = HamiltonianSpec(StaticParams(Ex=TWO_PI * 24.0), DriveParams("orthogonal", 2.0))
    ens = run_ensemble(sc, 10, 0, IntegrationConfig(t_end=1.0, sample_interval=0.1))
    assert np.all(ens.stderr == 0.0)
    assert ens.leakage_mean == pytest.approx(0.0, abs=1e-20)


def test_seed_and_thread_determinism():
    sc = _clock()
    a = run_ensemble(sc, 70, 3, CFG, n_threads=1)
    b = run_ensemble(sc, 70, 3, CFG)
    c = run_ensemble(sc, 70, 4, CFG)
    assert np.array_equal(a.mean_observables, b.mean_observables)
    assert np.array_equal(a.stderr, b.stderr)
    assert not np.array_equal(a.mean_observables, c.mean_observables)


def test_sweep_index_changes_streams():
    sc = _clock()
    a = make_channels(sc, 0, 0)["strain"].current
    b = make_channels(sc, 0, 0, sweep=1)["strain"].current
    assert a != b


def test_zero_start_channels():
    ch = make_channels(_clock(start="zero"), 0, 5)
    assert ch["strain"].current == 0.0


def test_amplitude_channel_only_when_driven():
    sc = HamiltonianSpec(noise=NoiseSpec(t2_star=3.0, delta_omega=0.01))
    assert set(make_channels(sc, 0, 0)) == {"strain"}
    sc = HamiltonianSpec(drive=DriveParams("orthogonal", 1.0), noise=NoiseSpec(t2_star=3.0, delta_omega=0.01))
    assert set(make_channels(sc, 0, 0)) == {"strain", "amplitude"}


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=300), st.integers(1, 70))
def test_pairwise_reduction_matches_numpy(values, block):
    x = np.array(values)[:, None]
    summaries = [_block_summary(x[i:i + block]) for i in range(0, len(x), block)]
    n, mean, m2 = pairwise_reduce(summaries)
    assert n == len(x)
    assert mean[0] == pytest.approx(x.mean(), abs=1e-9)
    assert m2[0] == pytest.approx(((x - x.mean()) ** 2).sum(), rel=1e-9, abs=1e-9)


def test_stderr_scales_as_inverse_sqrt_n():
    # fast, strong noise so that time samples are nearly independent
    sc = _clock(t2_star=0.3, tau=0.5)
    cfg = IntegrationConfig(t_end=40.0, sample_interval=0.5)
    se = {n: np.mean(run_ensemble(sc, n, 11, cfg).stderr[0, 10:]) for n in (100, 400, 1600)}
    assert se[100] / se[400] == pytest.approx(2.0, rel=0.1)
    assert se[400] / se[1600] == pytest.approx(2.0, rel=0.1)


def test_fit_recovers_exponential_decay():
    t = np.arange(0, 30, 0.01)
    fit = fit_coherence((t, np.exp(-t / 5.0) * np.cos(10 * t)))
    assert fit.t2 == pytest.approx(5.0, rel=0.02)
    assert not fit.lower_bound
    sfit = fit_coherence((t, np.exp(-t / 5.0) * np.cos(10 * t)), method="stretched_exp_fit")
    assert sfit.t2 == pytest.approx(5.0, rel=0.02)
    assert sfit.stretch_exponent == pytest.approx(1.0, abs=0.05)


def test_fit_recovers_gaussian_decay():
    t = np.arange(0, 20, 0.01)
    fit = fit_coherence((t, np.exp(-(t / 4.0) ** 2) * np.cos(25 * t)), method="stretched_exp_fit")
    assert fit.t2 == pytest.approx(4.0, rel=0.02)
    assert fit.stretch_exponent == pytest.approx(2.0, abs=0.1)


def test_non_oscillating_decay():
    t = np.arange(0, 20, 0.01)
    assert fit_coherence((t, np.exp(-t / 3.0))).t2 == pytest.approx(3.0, rel=1e-3)


def test_lower_bound_flag():
    t = np.arange(0, 100, 0.01)
    fit = fit_coherence((t, np.exp(-t / 500.0) * np.cos(10 * t)))
    assert fit.lower_bound
    assert fit.t2 == pytest.approx(t[-1])
    assert fit.describe().startswith("T2 > ")


def test_fit_accepts_ensemble_result():
    t = np.linspace(0, 10, 1001)
    y = np.exp(-t / 2.0) * np.cos(30 * t)
    res = EnsembleResult(t, y[None], np.zeros((1, t.size)), 1, 0, ["x"])
    assert fit_coherence(res).t2 == pytest.approx(2.0, rel=0.02)
    with pytest.raises(ValueError):
        fit_coherence(res, method="gaussian")


def test_invalid_ensemble_arguments():
    with pytest.raises(ValueError):
        run_ensemble(_clock(), 0, 0, CFG)
    with pytest.raises(ValueError):
        run_ensemble(_clock(), 1, 0, CFG, initial=np.array([1, 1, 0], complex))


def test_quasi_static_clock_dephasing_matches_gaussian_oracle():
    # with tau >> t the strain is frozen at a N(0, c tau / 2) draw; the clock
    # pair splits by 2 (Ex + dE), so 2<sigma_x> decays as exp(-2 sigma^2 t^2).
    # For c = 4/(T2*^2 tau) that is exp(-4 t^2 / T2*^2): 1/e at T2*/2.
    sc = _clock(t2_star=3.0, tau=2000.0)
    ens = run_ensemble(sc, 400, 2, IntegrationConfig(t_end=8.0, sample_interval=0.01))
    assert fit_coherence(ens).t2 == pytest.approx(1.5, rel=0.1)
    sfit = fit_coherence(ens, method="stretched_exp_fit")
    assert sfit.stretch_exponent == pytest.approx(2.0, abs=0.3)


def test_zero_start_clock_dephasing_matches_diffusive_oracle():
    # from dE(0) = 0 and t << tau the phase variance is 4 c t^3 / 3, so the
    # envelope reaches 1/e at t = (3 / (2 c))^(1/3)
    sc = _clock(t2_star=3.0, tau=2000.0, start="zero")
    c = sc.noise.c
    ens = run_ensemble(sc, 400, 2, IntegrationConfig(t_end=30.0, sample_interval=0.01))
    assert fit_coherence(ens).t2 == pytest.approx((3 / (2 * c)) ** (1 / 3), rel=0.1)
