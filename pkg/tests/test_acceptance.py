"""Acceptance suite: the eight reproduction criteria at their stated tolerances.

Each test prints one PASS/FAIL line (also collected in the terminal summary)
and then asserts the criterion. Runs take several minutes in total.
"""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from zfsmag import effective, spinops
from zfsmag.ensemble import envelope
from zfsmag.experiments import ac_sensing_trace, ac_spectrum, dephasing_comparison, signal_visibility
from zfsmag.hamiltonians import DriveParams, HamiltonianSpec, NoiseSpec, StaticParams, h_rotating
from zfsmag.noise import ou_from_diffusion
from zfsmag.propagator import (
    IntegrationConfig,
    array_noise_source,
    convergence_check,
    integrate_states,
)

pytestmark = pytest.mark.slow

TWO_PI = 2 * math.pi
N_TRIALS = 500
_RUNS = {}


def dephasing_runs(seed: int):
    """Four-scheme comparison at the reference parameters, cached per seed."""
    if seed not in _RUNS:
        _RUNS[seed] = dephasing_comparison(
            Ex=TWO_PI * 24, omega1=TWO_PI * 10, omega2=TWO_PI * 1, t2_star=3.0, tau=20.0,
            delta_omega=0.01, tau_omega=500.0, n_trials=N_TRIALS, base_seed=seed)
    return _RUNS[seed]


def _within(value, target, rel):
    return abs(value - target) <= rel * target


def test_criterion_1_undriven_dephasing_time(acceptance_report):
    t2 = dephasing_runs(0)["none"].t2
    ok = _within(t2, 3.0, 0.20)
    acceptance_report(1, ok, f"undriven T2* = {t2:.3f} us (target 3 us +- 20%)")
    assert ok


def test_criterion_2_linear_drive(acceptance_report):
    runs = dephasing_runs(0)
    a, b = runs["none"].t2, runs["linear"].t2
    ok = _within(b, 4.0, 0.25) and b < 2 * a
    acceptance_report(2, ok, f"linear T2 = {b:.3f} us (target 4 us +- 25%), "
                             f"bound 2*T2*(undriven) = {2 * a:.3f} us")
    assert ok


def test_criterion_3_orthogonal_drive(acceptance_report):
    t2 = dephasing_runs(0)["orthogonal"].t2
    ok = _within(t2, 11.0, 0.30)
    acceptance_report(3, ok, f"orthogonal T2 = {t2:.3f} us (target 11 us +- 30%)")
    assert ok


def test_criterion_4_phase_modulated_drive(acceptance_report):
    run = dephasing_runs(0)["phasemod"]
    t, y = run.result.time_grid, run.result.mean_observables[0]
    te, env = envelope(t, y)
    at_100 = float(np.interp(100.0, te, env))
    ok = at_100 > math.exp(-1) and bool(np.all(env[te <= 100.0] > math.exp(-1)))
    acceptance_report(4, ok, f"phase-modulated envelope at 100 us = {at_100:.3f} "
                             f"(needs > 1/e = 0.368); fit: {run.envelope_fit.describe()}")
    assert ok


def test_criterion_5_resonance_condition(acceptance_report):
    sp = ac_spectrum(TWO_PI * 110, TWO_PI * 5.0, TWO_PI * 0.1, ratio=10, t_probe=40.0,
                     n_trials=100, base_seed=0)
    target = TWO_PI * 97.73
    fit = sp.fit
    ok = fit is not None and abs(sp.extremum - target) < fit.fwhm
    detail = ("line fit failed" if fit is None else
              f"feature at W1/2pi = {sp.extremum / TWO_PI:.5f} MHz vs 97.73 MHz, "
              f"|offset| = {abs(sp.extremum - target) / TWO_PI * 1e3:.2f} kHz, "
              f"FWHM = {fit.fwhm / TWO_PI * 1e3:.2f} kHz")
    acceptance_report(5, ok, detail)
    assert ok


BAND = [(110, 0.1, f) for f in (0.5, 5, 50, 100)] + [(24, 0.3, f) for f in (0.5, 5, 24)]


def test_criterion_6_band_coverage(acceptance_report):
    # T2* from the figure captions: 0.1 us at Ex = 2pi 110, 0.3 us at 2pi 24
    rows, ok = [], True
    for ex, t2s, f in BAND:
        kw = dict(t2_star=t2s, n_trials=100, delta_omega=0.005, t_end=100.0, sample_interval=0.1,
                  base_seed=0, model="full")
        sig = ac_sensing_trace(TWO_PI * ex, TWO_PI * f, TWO_PI * 0.1, **kw).full
        ctl = ac_sensing_trace(TWO_PI * ex, TWO_PI * f, 0.0, **kw).full
        v = signal_visibility(sig, ctl)
        ok &= v.amplitude > 5 * v.stderr
        rows.append(f"{ex}/{f} MHz: {v.significance:.1f} sigma")
    acceptance_report(6, ok, "signal vs control significance (needs > 5): " + "; ".join(rows))
    assert ok


def _property_unitarity(rng):
    worst = 0.0
    for _ in range(200):
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        h = 10 ** rng.uniform(-2, 3) * (a + a.conj().T)
        worst = max(worst, spinops.unitarity_error(spinops.matrix_exponential_skew(h, 0.01)))
    sc = HamiltonianSpec(StaticParams(Ex=TWO_PI * 24), DriveParams("phasemod", TWO_PI * 10, TWO_PI),
                         noise=NoiseSpec(t2_star=3.0, delta_omega=0.01))
    cfg = IntegrationConfig(t_end=20.0, sample_interval=1.0)
    grid = cfg.resolve(sc)
    e = rng.normal(scale=sc.noise.strain_std, size=(4, grid.n_steps))
    w = rng.normal(scale=0.01 * TWO_PI * 10, size=(4, grid.n_steps))
    psi0 = np.tile(spinops.ket(0), (4, 1))
    states, _ = integrate_states(psi0, sc, cfg, array_noise_source(e, w), grid)
    drift = float(np.abs(np.linalg.norm(states, axis=-1) - 1).max())
    return worst < 1e-10 and drift < 1e-6, f"(i) unitarity {worst:.1e}, norm drift {drift:.1e}"


def _property_gaps(rng):
    worst = 0.0
    static = StaticParams(Ex=TWO_PI * 24)
    for _ in range(1000):
        w = rng.uniform(0.1, 200.0)
        de = rng.uniform(-20.0, 20.0)
        lam = np.linalg.eigvalsh(h_rotating(static, DriveParams("orthogonal", w), deltaE=de))
        worst = max(worst, abs((lam[2] - lam[0]) - effective.gap_orthogonal(w, de)))
        vals, vecs = np.linalg.eigh(h_rotating(static, DriveParams("linear", w), deltaE=de))
        k_free = int(np.argmin(np.abs(vecs[1, :])))
        upper = max(v for k, v in enumerate(vals) if k != k_free)
        worst = max(worst, abs((vals[k_free] - upper) - effective.gap_linear(w, de)))
    return worst < 1e-10, f"(ii) gap formulas max error {worst:.1e}"


def _property_derivatives():
    w, h = TWO_PI * 10, 1e-5
    d_orth = (effective.gap_orthogonal(w, h) - effective.gap_orthogonal(w, -h)) / (2 * h)
    d_lin = (effective.gap_linear(w, h) - effective.gap_linear(w, -h)) / (2 * h)
    ok = abs(d_orth) < 1e-6 and abs(d_lin + 1.5) < 1e-6 * 1.5
    return ok, f"(iii) d(gap)/d(dE): orthogonal {d_orth:.1e}, linear {d_lin:.8f}"


def _property_ou_variance():
    c, tau = 4 / (9 * 20.0), 20.0
    p = ou_from_diffusion(c, tau, seed=12345)
    # 1e5 samples spaced 5 tau apart are effectively independent
    x = p.path(5 * tau, 100_000)
    var = c * tau / 2
    sigma_var = var * math.sqrt(2 / x.size)
    dev = abs(x.var() - var) / sigma_var
    return dev < 3, f"(iv) OU variance {x.var():.5f} vs c tau/2 = {var:.5f} ({dev:.1f} sigma)"


def _property_effective_vs_full():
    # phase-modulated drive with static strain and amplitude offsets at
    # W1 / dE >= 10 and W1 / W2 = 10, compared in the doubly-rotating frame
    w1, w2 = TWO_PI * 10, TWO_PI
    sc = HamiltonianSpec(StaticParams(Ex=TWO_PI * 24), DriveParams("phasemod", w1, w2))
    cfg = IntegrationConfig(t_end=3.0, sample_interval=0.01)
    grid = cfg.resolve(sc)
    worst = 0.0
    for de, dw in ((TWO_PI * 1.0, 0.0), (TWO_PI * 1.0, TWO_PI * 0.3), (TWO_PI * 0.5, TWO_PI * 0.5)):
        n = grid.n_steps
        states, _ = integrate_states(spinops.ket(0)[None], sc, cfg,
                                     array_noise_source(np.full((1, n), de), np.full((1, n), dw)), grid)
        dr = effective.to_doubly_rotating(states[0], grid.times, w1, w2)
        p_full = np.abs(dr[:, 1]) ** 2
        h = effective.effective_phasemod(w1, w2, de, dw).matrix()
        p_eff = np.array([abs((expm(-1j * h * t) @ np.array([0, 1]))[1]) ** 2 for t in grid.times])
        worst = max(worst, float(np.sqrt(np.mean((p_full - p_eff) ** 2))))
    return worst < 0.05, f"(v) effective vs full RMS {worst:.3f}"


def _property_convergence():
    sc = HamiltonianSpec(StaticParams(Ex=TWO_PI * 24), DriveParams("orthogonal", TWO_PI * 10),
                         noise=NoiseSpec(t2_star=3.0, tau=20.0, delta_omega=0.01, tau_omega=500.0))
    rep = convergence_check(sc, IntegrationConfig(t_end=30.0, sample_interval=0.01))
    return rep.passed, f"(vi) dt vs dt/2 deviation {rep.max_deviation:.1e}"


def test_criterion_7_property_suite(acceptance_report):
    rng = np.random.default_rng(2024)
    results = [_property_unitarity(rng), _property_gaps(rng), _property_derivatives(),
               _property_ou_variance(), _property_effective_vs_full(), _property_convergence()]
    ok = all(r[0] for r in results)
    acceptance_report(7, ok, "; ".join(r[1] for r in results))
    assert ok


def test_criterion_8_coherence_ordering(acceptance_report):
    rows, ok = [], True
    for seed in (0, 1, 2):
        runs = dephasing_runs(seed)
        b, c, d = (runs[s].envelope_fit for s in ("linear", "orthogonal", "phasemod"))
        holds = d.t2 > c.t2 > b.t2
        ok &= holds
        rows.append(f"seed {seed}: d {'> ' if d.lower_bound else ''}{d.t2:.2f}, "
                    f"c {c.t2:.2f}, b {b.t2:.2f} {'ok' if holds else 'violated'}")
    acceptance_report(8, ok, "T2(d) > T2(c) > T2(b): " + "; ".join(rows))
    assert ok
