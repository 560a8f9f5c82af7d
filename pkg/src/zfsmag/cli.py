"""Command-line front end.

Usage::

    zfsmag run <config> [--threads N] [--output-dir DIR]
    zfsmag validate <config>
    zfsmag list-experiments

Config files are plain ``key = value`` lines; ``#`` starts a comment.
Every physical quantity carries a unit: frequencies in ``MHz``, ``kHz``,
``GHz`` (cyclic, converted to rad/us by 2 pi) or ``rad/us``; times in
``us``, ``ns`` or ``ms``; ratios bare or with ``dimensionless``. A
frequency or time without a unit is rejected.

Exit codes: 0 success, 2 configuration error, 3 physics-guard violation,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import platform
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, effective, experiments
from .ensemble import TrajectoryError, fit_coherence, resolve_threads
from .hamiltonians import (
    SCHEMES,
    TWO_PI,
    DriveParams,
    GuardError,
    HamiltonianSpec,
    NoiseSpec,
    NOISE_STARTS,
    SignalParams,
    StaticParams,
)
from .propagator import IntegrationConfig, NormDriftError

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_NUMERIC = 0, 2, 3, 4
THREADS_ENV = "ZFSMAG_THREADS"
CONFIG_DIR = Path(__file__).resolve().parents[2] / "paper_configs"

FREQ_UNITS = {"mhz": TWO_PI, "khz": TWO_PI * 1e-3, "ghz": TWO_PI * 1e3, "rad/us": 1.0}
TIME_UNITS = {"us": 1.0, "ns": 1e-3, "ms": 1e3}

# key -> (kind, default); kind is freq, time, dimensionless, int, str or list
FIELDS = {
    "experiment": ("str", None),
    "output_dir": ("str", "out"),
    "base_seed": ("int", 0),
    "n_trials": ("int", None),
    "n_threads": ("str", "auto"),
    "emit": ("list", ["csv", "summary"]),
    "D": ("freq", TWO_PI * 2870.0),
    "Ex": ("freq", TWO_PI * 24.0),
    "gamma_Bz": ("freq", 0.0),
    "omega1": ("freq", None),
    "omega2": ("freq", None),
    "max_omega2_ratio": ("dimensionless", 0.2),
    "schemes": ("list", list(SCHEMES)),
    "t2_star": ("time", 3.0),
    "tau": ("time", 20.0),
    "delta_omega": ("dimensionless", 0.0),
    "tau_omega": ("time", 500.0),
    "noise_start": ("str", "stationary"),
    "omega_ac": ("freq", None),
    "g": ("freq", None),
    "ratio": ("dimensionless", 10.0),
    "model": ("str", "full"),
    "control": ("str", "false"),
    "initial_state": ("str", None),
    "t_end": ("time", None),
    "t_end.none": ("time", experiments.DEPHASING_T_END["none"]),
    "t_end.linear": ("time", experiments.DEPHASING_T_END["linear"]),
    "t_end.orthogonal": ("time", experiments.DEPHASING_T_END["orthogonal"]),
    "t_end.phasemod": ("time", experiments.DEPHASING_T_END["phasemod"]),
    "t_probe": ("time", 40.0),
    "sample_interval": ("time", None),
    "frame": ("str", "rot_rwa"),
    "max_freq_guard": ("dimensionless", 20.0),
    "sweep_variable": ("str", "omega1"),
    "sweep_start": ("freq", None),
    "sweep_stop": ("freq", None),
    "sweep_points": ("int", 25),
}

DESCRIPTIONS = {
    "dephasing_comparison": "2<sigma_x> decay under no drive, linear, orthogonal and phase-modulated control",
    "ac_sensing_trace": "P(|0>)(t) with an AC signal at the resonance 2Ex - 2W1 - 2W2 = w_ac",
    "ac_spectrum": "P(|0>) at t_probe across a W1 (or w_ac) sweep",
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, path: str = ""):
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.line = line


@dataclass
class RunConfig:
    values: dict
    lines: dict = field(default_factory=dict)   # key -> line number
    path: str = ""

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def require(self, key):
        if self.values.get(key) is None:
            raise ConfigError(f"missing required key {key!r}", path=self.path)
        return self.values[key]


def parse_quantity(kind: str, text: str, key: str, line: int, path: str):
    text = text.strip()
    if kind in ("str",):
        return text
    if kind == "list":
        return [t.strip() for t in text.split(",") if t.strip()]
    if kind == "int":
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {text!r}", line, path) from None
    parts = text.split()
    try:
        number = float(parts[0])
    except (ValueError, IndexError):
        raise ConfigError(f"{key}: cannot read a number from {text!r}", line, path) from None
    unit = " ".join(parts[1:]).lower()
    if kind == "dimensionless":
        if unit not in ("", "dimensionless"):
            raise ConfigError(f"{key} is dimensionless, got unit {unit!r}", line, path)
        return number
    table = FREQ_UNITS if kind == "freq" else TIME_UNITS
    if not unit:
        raise ConfigError(f"{key} needs a unit ({', '.join(table)})", line, path)
    if unit not in table:
        raise ConfigError(f"{key}: unknown {'frequency' if kind == 'freq' else 'time'} unit {unit!r} "
                          f"(expected one of {', '.join(table)})", line, path)
    return number * table[unit]


def load_config(path: str | os.PathLike) -> RunConfig:
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path=path) from None
    values = {k: d for k, (_, d) in FIELDS.items()}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno, path)
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in FIELDS:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        if key in lines:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno, path)
        values[key] = parse_quantity(FIELDS[key][0], value, key, lineno, path)
        lines[key] = lineno
    cfg = RunConfig(values, lines, path)
    kind = cfg.require("experiment")
    if kind not in experiments.EXPERIMENT_KINDS:
        raise ConfigError(f"unknown experiment {kind!r}; expected one of "
                          f"{', '.join(experiments.EXPERIMENT_KINDS)}", lines.get("experiment"), path)
    for key in ("noise_start", "model", "frame", "sweep_variable"):
        allowed = {"noise_start": NOISE_STARTS,
                   "model": experiments.SENSING_MODELS, "frame": ("lab", "rot_rwa", "rot_exact"),
                   "sweep_variable": ("omega1", "omega_ac")}[key]
        if cfg[key] not in allowed:
            raise ConfigError(f"{key} must be one of {', '.join(allowed)}, got {cfg[key]!r}", lines.get(key), path)
    for s in cfg["schemes"]:
        if s not in SCHEMES:
            raise ConfigError(f"unknown scheme {s!r}", lines.get("schemes"), path)
    if cfg["control"].lower() not in ("true", "false", "yes", "no"):
        raise ConfigError("control must be true or false", lines.get("control"), path)
    return cfg


# resolution -------------------------------------------------------------------

@dataclass
class Resolved:
    """Fully resolved run: the experiment spec plus derived quantities."""

    spec: experiments.ExperimentSpec
    config: RunConfig
    derived: dict
    scenarios: dict        # label -> HamiltonianSpec
    grids: dict            # label -> Grid


def _flag(text: str) -> bool:
    return text.lower() in ("true", "yes")


def resolve(cfg: RunConfig) -> Resolved:
    """Build scenarios and check every guard without running anything."""
    kind = cfg["experiment"]
    static = StaticParams(D=cfg["D"], Ex=cfg["Ex"], gamma_Bz=cfg["gamma_Bz"])
    noise = NoiseSpec(t2_star=cfg["t2_star"], tau=cfg["tau"], delta_omega=cfg["delta_omega"],
                      tau_omega=cfg["tau_omega"], start=cfg["noise_start"])
    derived = {"c": noise.c, "strain_std": noise.strain_std}
    scenarios, grids = {}, {}
    if kind == "dephasing_comparison":
        w1 = cfg.get("omega1", TWO_PI * 10.0)
        w2 = cfg.get("omega2", TWO_PI * 1.0)
        derived["c_omega"] = noise.amplitude_c(w1)
        derived["amplitude_std"] = noise.amplitude_std(w1)
        for scheme in cfg["schemes"]:
            drive = DriveParams(scheme, w1 if scheme != "none" else 0.0,
                                w2 if scheme == "phasemod" else 0.0,
                                max_omega2_ratio=cfg["max_omega2_ratio"])
            sc = HamiltonianSpec(static, drive, None, noise)
            scenarios[scheme] = sc
            grids[scheme] = IntegrationConfig(
                t_end=cfg[f"t_end.{scheme}"], sample_interval=cfg.get("sample_interval", 0.01),
                frame=cfg["frame"], max_freq_guard=cfg["max_freq_guard"]).resolve(sc)
        spec = experiments.ExperimentSpec(kind, static, DriveParams("phasemod", w1, w2), None, noise,
                                          cfg.get("n_trials", 500), cfg.get("initial_state", "superposition_scheme_basis"),
                                          base_seed=cfg["base_seed"], frame=cfg["frame"],
                                          max_freq_guard=cfg["max_freq_guard"], schemes=tuple(cfg["schemes"]))
    else:
        wac = cfg.require("omega_ac")
        g = cfg.require("g")
        ratio = cfg["ratio"]
        w1_res, w2_res = effective.resonant_omegas(static.Ex, wac, ratio)
        w1 = cfg.get("omega1", w1_res)
        w2 = cfg.get("omega2", w1 / ratio if cfg.get("omega1") is not None else w2_res)
        derived.update(omega1_resonant=w1_res, omega2_resonant=w2_res,
                       resonance_detuning=effective.resonance_detuning(static.Ex, w1, w2, wac))
        if cfg["frame"] != "rot_rwa":
            raise ConfigError("sensing experiments run in the rot_rwa frame", cfg.lines.get("frame"), cfg.path)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            sc = experiments.sensing_scenario(static.Ex, wac, g, w1, w2, noise.t2_star, noise.delta_omega,
                                              noise.tau, noise.tau_omega, noise.start)
        derived["warnings"] = [str(w.message) for w in caught]
        sc = HamiltonianSpec(static, DriveParams("phasemod", w1, w2, max_omega2_ratio=cfg["max_omega2_ratio"]),
                             sc.signal, sc.noise)
        derived["c_omega"] = noise.amplitude_c(w1)
        derived["amplitude_std"] = noise.amplitude_std(w1)
        scenarios["sensing"] = sc
        if kind == "ac_sensing_trace":
            if abs(derived["resonance_detuning"]) > experiments.RESONANCE_RTOL * max(abs(wac), 2 * static.Ex):
                from .hamiltonians import ResonanceGuardError
                raise ResonanceGuardError(
                    f"resonance condition violated: 2Ex - 2W1 - 2W2 - w_ac = {derived['resonance_detuning']:.3g} rad/us")
            grids["sensing"] = IntegrationConfig(
                t_end=cfg.get("t_end", 100.0), sample_interval=cfg.get("sample_interval", 0.1),
                max_freq_guard=cfg["max_freq_guard"]).resolve(sc)
            sweep = None
        else:
            values = _sweep_values(cfg, static.Ex, wac, ratio)
            sweep = experiments.SweepSpec(cfg["sweep_variable"], tuple(values))
            # the step guard must hold at the most demanding sweep point
            for v in (values[0], values[-1]):
                if cfg["sweep_variable"] == "omega1":
                    probe = HamiltonianSpec(static, DriveParams("phasemod", v, v / ratio), sc.signal, sc.noise)
                else:
                    probe = HamiltonianSpec(static, sc.drive, SignalParams(g, v), sc.noise)
                grids[f"sweep@{v:.6g}"] = IntegrationConfig(
                    t_end=cfg["t_probe"], sample_interval=cfg["t_probe"],
                    max_freq_guard=cfg["max_freq_guard"]).resolve(probe)
        spec = experiments.ExperimentSpec(kind, static, sc.drive, sc.signal, noise, cfg.get("n_trials", 100),
                                          cfg.get("initial_state", "ket0"), sweep, cfg["base_seed"],
                                          cfg.get("t_end"), cfg.get("sample_interval"), cfg["t_probe"], ratio,
                                          cfg["model"], max_freq_guard=cfg["max_freq_guard"])
    return Resolved(spec, cfg, derived, scenarios, grids)


def _sweep_values(cfg: RunConfig, Ex: float, wac: float, ratio: float) -> np.ndarray:
    start, stop = cfg.get("sweep_start"), cfg.get("sweep_stop")
    n = cfg["sweep_points"]
    if n < 1:
        raise ConfigError("sweep_points must be >= 1", cfg.lines.get("sweep_points"), cfg.path)
    if start is None or stop is None:
        if cfg["sweep_variable"] == "omega1":
            return experiments.default_sweep(Ex, wac, ratio, n_points=n)
        return np.linspace(wac - TWO_PI * 0.1, wac + TWO_PI * 0.1, n)
    return np.linspace(start, stop, n)


# output -----------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_series_csv(path: Path, times, names, means, stderrs) -> None:
    """Columns: time, observables in declaration order, then their stderr."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_us"] + list(names) + [f"stderr {n}" for n in names])
        for k, t in enumerate(times):
            w.writerow([_fmt(t)] + [_fmt(m[k]) for m in means] + [_fmt(s[k]) for s in stderrs])


def _summary_header(res: Resolved, threads: int) -> list[str]:
    cfg = res.config
    lines = [
        "# run summary; this file is itself a valid config that reproduces the run",
        f"# zfsmag {__version__}, python {platform.python_version()}, numpy {np.__version__}",
        f"# source config: {cfg.path}",
        f"# threads used: {threads} (results do not depend on the thread count)",
        "# RNG: PCG64 seeded by SeedSequence(base_seed, spawn_key=(trial, channel)) or"
        " (sweep, trial, channel); channels strain=0, amplitude=1, bz=2",
    ]
    for k, v in res.derived.items():
        if k == "warnings":
            for msg in v:
                lines.append(f"# warning: {msg}")
            continue
        unit = {"c": "(rad/us)^2/us", "c_omega": "(rad/us)^2/us"}.get(k, "rad/us")
        lines.append(f"# derived {k} = {v!r} {unit}")
    return lines


def config_lines(cfg: RunConfig, output_dir: str) -> list[str]:
    """Every key in canonical units (rad/us, us) with full precision."""
    out = []
    for key, (kind, _) in FIELDS.items():
        v = cfg.values.get(key)
        if key == "output_dir":
            v = output_dir
        if v is None:
            continue
        if kind == "freq":
            out.append(f"{key} = {float(v)!r} rad/us")
        elif kind == "time":
            out.append(f"{key} = {float(v)!r} us")
        elif kind == "dimensionless":
            out.append(f"{key} = {float(v)!r} dimensionless")
        elif kind == "list":
            out.append(f"{key} = {', '.join(v)}")
        else:
            out.append(f"{key} = {v}")
    return out


def execute(res: Resolved, output_dir: Path, threads: int, log=print) -> list[str]:
    """Run the experiment, write CSVs; returns summary result lines."""
    cfg, spec = res.config, res.spec
    output_dir.mkdir(parents=True, exist_ok=True)
    emit_csv = "csv" in cfg["emit"]
    report = []
    if spec.kind == "dephasing_comparison":
        runs = experiments.dephasing_comparison(
            Ex=spec.static.Ex, omega1=spec.drive.omega1_rabi, omega2=spec.drive.omega2_rabi,
            t2_star=spec.noise.t2_star, tau=spec.noise.tau, delta_omega=spec.noise.delta_omega,
            tau_omega=spec.noise.tau_omega, n_trials=spec.n_trials, base_seed=spec.base_seed,
            schemes=spec.schemes, t_end={s: cfg[f"t_end.{s}"] for s in SCHEMES},
            sample_interval=cfg.get("sample_interval", 0.01), noise_start=spec.noise.start,
            frame=spec.frame, n_threads=threads, max_freq_guard=spec.max_freq_guard)
        for scheme, run in runs.items():
            r = run.result
            name = f"dephasing_{experiments.PANEL[scheme]}_{scheme}.csv"
            if emit_csv:
                write_series_csv(output_dir / name, r.time_grid, r.names, r.mean_observables, r.stderr)
            for fit in (run.envelope_fit, run.stretched_fit):
                bound = "lower_bound " if fit.lower_bound else ""
                report.append(f"# result {scheme}: T2 = {bound}{fit.t2!r} us, p = {fit.stretch_exponent!r}, "
                              f"rms = {fit.fit_residual!r} [{fit.method_tag}]")
            report.append(f"# result {scheme}: time-averaged P(-1) = {r.leakage_mean!r}, dt = {r.dt!r} us")
            log(f"{scheme:>10}: {run.envelope_fit.describe()}")
    elif spec.kind == "ac_sensing_trace":
        kw = dict(ratio=spec.ratio, t2_star=spec.noise.t2_star, n_trials=spec.n_trials,
                  delta_omega=spec.noise.delta_omega, tau=spec.noise.tau, tau_omega=spec.noise.tau_omega,
                  t_end=cfg.get("t_end", 100.0), sample_interval=cfg.get("sample_interval", 0.1),
                  base_seed=spec.base_seed, model=spec.model, omega1=spec.drive.omega1_rabi,
                  omega2=spec.drive.omega2_rabi, noise_start=spec.noise.start, n_threads=threads,
                  max_freq_guard=spec.max_freq_guard,
                  initial=experiments.initial_state(spec.initial_state_tag, "phasemod"))
        trace = experiments.ac_sensing_trace(spec.static.Ex, spec.signal.omega_ac, spec.signal.g, **kw)
        control = None
        if _flag(cfg["control"]):
            control = experiments.ac_sensing_trace(spec.static.Ex, spec.signal.omega_ac, 0.0, **kw)
        for label, r, c in (("full", trace.full, control and control.full),
                            ("effective", trace.effective, control and control.effective)):
            if r is None:
                continue
            if emit_csv:
                write_series_csv(output_dir / f"trace_{label}.csv", r.time_grid, r.names,
                                 r.mean_observables, r.stderr)
                if c is not None:
                    write_series_csv(output_dir / f"trace_{label}_control.csv", c.time_grid, c.names,
                                     c.mean_observables, c.stderr)
            fit = fit_coherence(r, 0, "envelope_1e")
            report.append(f"# result {label}: min P(0) = {float(r.mean_observables[0].min())!r}")
            if c is not None:
                vis = experiments.signal_visibility(r, c)
                report.append(f"# result {label}: signal amplitude = {vis.amplitude!r} at t = {vis.time!r} us, "
                              f"stderr = {vis.stderr!r}, significance = {vis.significance!r}")
                decay = fit_coherence(c, 0, "envelope_1e")
                bound = "lower_bound " if decay.lower_bound else ""
                report.append(f"# result {label}: control T2 = {bound}{decay.t2!r} us [{decay.method_tag}]")
                report.append(f"# result {label}: g sqrt(T2*)/(Ex sqrt(T2)) = "
                              f"{experiments.sensitivity_ratio(spec.signal.g, spec.noise.t2_star, spec.static.Ex, decay.t2)!r}")
            if label == "full":
                report.append(f"# result full: time-averaged P(-1) = {r.leakage_mean!r}")
            log(f"{label}: min P(0) = {float(r.mean_observables[0].min()):.4f}"
                + (f" [{fit.describe()}]" if fit else ""))
    else:
        sweep = spec.sweep
        sp = experiments.ac_spectrum(spec.static.Ex, spec.signal.omega_ac, spec.signal.g, spec.ratio,
                                     spec.t_probe, sweep.values, spec.n_trials, sweep.variable,
                                     spec.noise.t2_star, spec.noise.delta_omega, spec.noise.tau,
                                     spec.noise.tau_omega, spec.base_seed, spec.noise.start, threads,
                                     spec.max_freq_guard)
        if emit_csv:
            with open(output_dir / "spectrum.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow([f"{sweep.variable}_rad_per_us", "P(0)[p2]", "stderr P(0)[p2]"])
                for row in sp.rows():
                    w.writerow([_fmt(x) for x in row])
        report.append(f"# result spectrum: predicted resonance = {sp.predicted!r} rad/us")
        if sp.fit is not None:
            report.append(f"# result spectrum: fitted center = {sp.fit.center!r} rad/us, "
                          f"FWHM = {sp.fit.fwhm!r} rad/us, depth = {sp.fit.depth!r}")
            log(f"feature at {sp.fit.center / TWO_PI:.5f} MHz (predicted {sp.predicted / TWO_PI:.5f}), "
                f"FWHM {sp.fit.fwhm / TWO_PI * 1e3:.2f} kHz")
        else:
            report.append("# result spectrum: line fit failed")
    return report


# verbs ------------------------------------------------------------------------

def _threads(cfg: RunConfig, flag: Optional[int]) -> int:
    if flag is not None:
        return resolve_threads(flag)
    if cfg["n_threads"] != "auto":
        try:
            return resolve_threads(int(cfg["n_threads"]))
        except ValueError:
            raise ConfigError("n_threads must be an integer or 'auto'", cfg.lines.get("n_threads"), cfg.path) from None
    return resolve_threads(None)


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    res = resolve(cfg)
    print(f"OK {cfg['experiment']}")
    for k, v in res.derived.items():
        if k == "warnings":
            for msg in v:
                print(f"  warning: {msg}")
        else:
            print(f"  {k} = {v:.6g}")
    for label, grid in res.grids.items():
        print(f"  [{label}] dt = {grid.dt:.4g} us, steps = {grid.n_steps}, f_max = {grid.f_max:.6g} rad/us")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    res = resolve(cfg)
    out = Path(args.output_dir or cfg["output_dir"])
    threads = _threads(cfg, args.threads)
    report = execute(res, out, threads)
    if "summary" in cfg["emit"]:
        text = _summary_header(res, threads) + config_lines(cfg, str(out)) + report
        (out / "summary.cfg").write_text("\n".join(text) + "\n")
    print(f"wrote results to {out}")
    return EXIT_OK


def cmd_list(args) -> int:
    for kind in experiments.EXPERIMENT_KINDS:
        print(f"{kind:22s} {DESCRIPTIONS[kind]}")
    if CONFIG_DIR.is_dir():
        print("\nbundled configs:")
        for p in sorted(CONFIG_DIR.glob("*.cfg")):
            print(f"  {p.name}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zfsmag", description="Driven spin-1 clock-transition simulator")
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--threads", type=int, default=None, help=f"worker threads (overrides ${THREADS_ENV})")
    r.add_argument("--output-dir", default=None, help="override output_dir from the config")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("validate", help="resolve and check a config without running it")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    ls = sub.add_parser("list-experiments", help="list experiment kinds and bundled configs")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardError as exc:
        print(f"guard [{exc.guard}] violated: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (NormDriftError, TrajectoryError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:  # invalid parameter combinations caught by the dataclasses
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
