"""Batch experiment runner.

Experiments are driven by flat key=value config files with dot-namespaced
keys (grid.N, solver.dt, harness.delta).  Each run writes its diagnostics,
a verdict file whose entries carry the inequality tags they check, and a
manifest listing every artifact; the exit status encodes the outcome
(0 pass, 1 verdict fail, 2 usage or config error, 3 numerical abort).
Identical config + seed + thread count reproduces byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import functools
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import spectral as sp
from .bumps import lp_profile, radial_bump
from .divfree import AnnulusSpec, localize_divfree, spectral_sampler, to_torus_field
from .estimates import (
    StaticCutoff,
    energy_budget,
    enstrophy_localisation,
    total_speed,
)
from .packet import WavePacketSpec, doubling_change, growth_study, wave_packet
from .solver import SolverConfig, evolve, picard_solve, residual
from .spaces import DataTriple, energy, sobolev_norm
from .symmetry import (
    Forcing,
    Galilean,
    PressureShift,
    Scale,
    SpaceTranslate,
    TimeTranslate,
    apply,
    weak_pairing_decay,
)

EXPERIMENTS = (
    "solve",
    "energy-budget",
    "total-speed",
    "enstrophy-loc",
    "localize",
    "counterexample",
    "homogenize",
    "symmetry-suite",
)


class ConfigError(Exception):
    """Raised for malformed or inconsistent config files."""


def _parse_bool(s):
    low = s.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_triple(s):
    parts = [float(p) for p in s.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated numbers: {s!r}")
    return tuple(parts)


def _parse_ints(s):
    return tuple(int(p) for p in s.split(","))


def _parse_floats(s):
    return tuple(float(p) for p in s.split(","))


# key -> parser; unknown keys are config errors
_SCHEMA = {
    "experiment": str,
    "grid.L": float,
    "grid.N": int,
    "data.kind": str,
    "data.seed": int,
    "data.amplitude": float,
    "data.kmin": int,
    "data.kmax": int,
    "data.spectral_slope": float,
    "data.mean_zero": _parse_bool,
    "data.packet_n": int,
    "data.packet_x0": _parse_triple,
    "data.packet_width": float,
    "data.packet_kmax": float,
    "forcing.kind": str,
    "forcing.amplitude": float,
    "forcing.samples": int,
    "forcing.seed": int,
    "forcing.kmin": int,
    "forcing.kmax": int,
    "solver.method": str,
    "solver.dt": float,
    "solver.T": float,
    "solver.eps": float,
    "solver.store_every": int,
    "solver.picard_tol": float,
    "solver.picard_max_iters": int,
    "solver.smallness_c": float,
    "solver.blowup_threshold": float,
    "harness.delta": float,
    "harness.c": float,
    "harness.R": float,
    "harness.r": float,
    "harness.x0": _parse_triple,
    "harness.region": str,
    "localize.R1": float,
    "localize.R2": float,
    "localize.R3": float,
    "localize.R4": float,
    "localize.center": _parse_triple,
    "localize.l_max": int,
    "localize.n_r": int,
    "counterexample.n_list": _parse_ints,
    "counterexample.xi": _parse_triple,
    "counterexample.eta": _parse_triple,
    "counterexample.x0": _parse_triple,
    "counterexample.component": int,
    "counterexample.psi_radius": float,
    "counterexample.norm_L": float,
    "counterexample.norm_N": int,
    "counterexample.pairing_L": float,
    "counterexample.pairing_N": int,
    "counterexample.doubling_n": int,
    "homogenize.alpha": _parse_triple,
    "homogenize.lambdas": _parse_floats,
    "homogenize.T": float,
    "homogenize.expect": str,
    "tol.residual": float,
    "output.dir": str,
}

_DEFAULTS = {
    "grid.L": 1.0,
    "grid.N": 32,
    "data.kind": "shear",
    "data.seed": 0,
    "data.amplitude": 1.0,
    "data.kmin": 1,
    "data.kmax": 3,
    "data.spectral_slope": -2.0,
    "data.mean_zero": True,
    "data.packet_n": 8,
    "data.packet_width": 0.1,
    "data.packet_kmax": 0.0,
    "forcing.kind": "none",
    "forcing.amplitude": 0.1,
    "forcing.samples": 9,
    "forcing.seed": 1,
    "forcing.kmin": 1,
    "forcing.kmax": 2,
    "solver.method": "evolve",
    "solver.dt": 1e-3,
    "solver.T": 0.1,
    "solver.eps": 0.0,
    "solver.store_every": 1,
    "harness.region": "ball",
    "localize.l_max": 24,
    "localize.n_r": 288,
    "counterexample.n_list": (8, 16, 32),
    "counterexample.component": 0,
    "counterexample.psi_radius": 0.7,
    "counterexample.norm_L": 4.5,
    "counterexample.norm_N": 128,
    "counterexample.pairing_L": 9.0,
    "counterexample.pairing_N": 256,
    "counterexample.doubling_n": 8,
    "homogenize.lambdas": (1e2, 1e4),
    "homogenize.T": 1.0,
    "homogenize.expect": "decay",
    "tol.residual": 5e-2,
}


@dataclass
class ExperimentConfig:
    """Validated, typed experiment parameters."""

    experiment: str
    values: dict = field(default_factory=dict)
    source: str = ""

    def get(self, key, default=None):
        if key in self.values:
            return self.values[key]
        if key in _DEFAULTS:
            return _DEFAULTS[key]
        return default

    def require(self, key):
        v = self.get(key)
        if v is None:
            raise ConfigError(f"{self.source}: missing required key {key!r} "
                              f"for experiment {self.experiment!r}")
        return v


def parse_config(path, experiment=None) -> ExperimentConfig:
    """Read a flat key=value config with '#' comments.

    Unknown, duplicate, and malformed keys are errors naming the offending
    line numbers.
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    values = {}
    seen_lines = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, "
                                  f"got {line!r}")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key in values:
                raise ConfigError(
                    f"{path}:{lineno}: duplicate key {key!r} "
                    f"(first set on line {seen_lines[key]})"
                )
            if key not in _SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _SCHEMA[key](val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for "
                                  f"{key!r}: {exc}") from None
            seen_lines[key] = lineno
    name = values.pop("experiment", experiment)
    if name is None:
        raise ConfigError(f"{path}: no experiment named (config key "
                          "'experiment' or CLI argument)")
    if experiment is not None and name != experiment:
        raise ConfigError(
            f"{path}: config names experiment {name!r} but the command "
            f"line asked for {experiment!r}"
        )
    if name not in EXPERIMENTS:
        raise ConfigError(f"{path}: unknown experiment {name!r}; choose "
                          f"from {', '.join(EXPERIMENTS)}")
    return ExperimentConfig(name, values, source=path)


def load_baselines():
    """Frozen calibration constants, overridable via NSLAB_BASELINE_DIR."""
    override = os.environ.get("NSLAB_BASELINE_DIR")
    if override:
        path = os.path.join(override, "baselines.txt")
    else:
        path = os.path.join(os.path.dirname(__file__), "baselines.txt")
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            out[key.strip()] = float(val)
    return out


# ---------------------------------------------------------------------------
# data generators


def _random_band_field(grid, seed, kmin, kmax, slope, amplitude, mean_zero):
    rng = np.random.default_rng(seed)
    shape = (3,) + grid.shape
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    kk = np.sqrt(grid.k_squared())
    band = (kk >= kmin) & (kk <= kmax)
    weight = np.zeros_like(kk)
    weight[band] = np.maximum(kk[band], 1.0) ** slope
    coeffs *= weight
    u = sp.vector_from_coeffs(grid, coeffs, hermitianize=True)
    u = sp.leray_project(u)
    if mean_zero:
        c = u.coeffs.copy()
        c[:, 0, 0, 0] = 0.0
        u = sp.vector_from_coeffs(grid, c, divergence_free=True)
    norm = sp.l2_norm(u)
    if norm == 0:
        raise ConfigError("random band is empty: no modes in [kmin, kmax]")
    return sp.vector_from_coeffs(grid, u.coeffs * (amplitude / norm),
                                 divergence_free=True)


def _shear_field(grid, amplitude):
    x = grid.nodes()[2]
    samples = np.zeros((3,) + grid.shape)
    samples[0] = amplitude * np.sin(2.0 * np.pi * x / grid.L)
    return sp.vector_from_samples(grid, samples)


def _taylor_green_field(grid, amplitude):
    x, y, _ = grid.nodes()
    tau = 2.0 * np.pi / grid.L
    samples = np.zeros((3,) + grid.shape)
    samples[0] = amplitude * np.sin(tau * x) * np.cos(tau * y)
    samples[1] = -amplitude * np.cos(tau * x) * np.sin(tau * y)
    return sp.vector_from_samples(grid, samples)


def _small_packet_field(grid, center, width, n, amplitude, kmax=0.0):
    """Compactly supported curl field oscillating at frequency n inside a
    ball of the given width; used as far-field clutter in localisation
    scenarios on unit boxes.  A positive kmax applies a smooth radial
    low-pass (unity below kmax, vanishing above 2 kmax) so the packet's
    spectral tail stays clear of the fastest dissipative modes."""
    dx = []
    for i, xg in enumerate(grid.nodes()):
        dx.append((xg - center[i] + grid.L / 2.0) % grid.L - grid.L / 2.0)
    rad = np.sqrt(sum(d * d for d in dx))
    env = radial_bump(rad / width)
    phase = np.sin(2.0 * np.pi * n * dx[0] / grid.L)
    stream = np.zeros((3,) + grid.shape)
    stream[2] = env * phase
    u = sp.curl(sp.vector_from_samples(grid, stream))
    if kmax > 0:
        mult = lp_profile(np.sqrt(grid.k_squared()) / kmax)
        u = sp.vector_from_coeffs(grid, u.coeffs * mult[np.newaxis],
                                  divergence_free=True)
    nrm = sp.l2_norm(u)
    scalefac = amplitude / nrm if nrm > 0 else 0.0
    return sp.vector_from_coeffs(grid, scalefac * u.coeffs,
                                 divergence_free=True)


def generate_data(kind, cfg: ExperimentConfig, grid, seed=None) -> DataTriple:
    """Named deterministic initial-data generators; all divergence-free."""
    seed = cfg.get("data.seed") if seed is None else seed
    amp = cfg.get("data.amplitude")
    T = cfg.get("solver.T")
    if kind == "shear":
        u0 = _shear_field(grid, amp)
    elif kind == "taylor-green":
        u0 = _taylor_green_field(grid, amp)
    elif kind == "random-band":
        u0 = _random_band_field(
            grid, seed, cfg.get("data.kmin"), cfg.get("data.kmax"),
            cfg.get("data.spectral_slope"), amp, cfg.get("data.mean_zero"))
    elif kind == "wave-packet":
        spec = WavePacketSpec(
            n=cfg.get("data.packet_n"),
            x0=cfg.get("data.packet_x0", (grid.L / 2.0,) * 3))
        u0 = wave_packet(spec, grid)
    elif kind == "composite":
        u0 = _random_band_field(
            grid, seed, cfg.get("data.kmin"), cfg.get("data.kmax"),
            cfg.get("data.spectral_slope"), amp, cfg.get("data.mean_zero"))
        pkt = _small_packet_field(
            grid, cfg.get("data.packet_x0", (grid.L * 0.75,) * 3),
            cfg.get("data.packet_width"), cfg.get("data.packet_n"),
            amp, cfg.get("data.packet_kmax"))
        u0 = sp.vector_from_coeffs(grid, u0.coeffs + pkt.coeffs,
                                   divergence_free=True)
    else:
        raise ConfigError(f"unknown data kind {kind!r}")
    # band-limit to the solver's dealiased range so that the discrete
    # energy identity is exact for the Galerkin truncation being evolved
    u0 = sp.dealias(u0)

    f = []
    fk = cfg.get("forcing.kind")
    if fk == "random-band":
        n_s = cfg.get("forcing.samples")
        f = [
            _random_band_field(
                grid, cfg.get("forcing.seed") + 1000 * i,
                cfg.get("forcing.kmin"), cfg.get("forcing.kmax"),
                cfg.get("data.spectral_slope"), cfg.get("forcing.amplitude"),
                True)
            for i in range(n_s)
        ]
    elif fk != "none":
        raise ConfigError(f"unknown forcing kind {fk!r}")
    return DataTriple(u0, f, T)


# ---------------------------------------------------------------------------
# verdicts, manifests


@dataclass
class Verdict:
    name: str
    passed: bool
    value: float
    threshold: float
    note: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        extra = f"  # {self.note}" if self.note else ""
        return (f"{self.name}: {status} value={self.value:.6e} "
                f"threshold={self.threshold:.6e}{extra}")


@dataclass
class RunManifest:
    """Record of one experiment run: config echo, version, timing, files
    with byte sizes, and the verdict list."""

    experiment: str
    config: dict
    version: str
    wall_clock: float
    files: list
    verdicts: list
    error: str = ""

    def write(self, path):
        payload = {
            "experiment": self.experiment,
            "config": {k: _json_safe(v) for k, v in sorted(
                self.config.items())},
            "version": self.version,
            "wall_clock_s": round(self.wall_clock, 3),
            "files": self.files,
            "verdicts": [v.line() for v in self.verdicts],
        }
        if self.error:
            payload["error"] = self.error
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _json_safe(v):
    if isinstance(v, tuple):
        return list(v)
    return v


class _Artifacts:
    def __init__(self, outdir):
        self.outdir = outdir
        self.files = []
        os.makedirs(outdir, exist_ok=True)

    def path(self, name):
        p = os.path.join(self.outdir, name)
        self.files.append(name)
        return p

    def listing(self):
        out = []
        for name in self.files:
            p = os.path.join(self.outdir, name)
            if os.path.exists(p):
                out.append({"name": name, "bytes": os.path.getsize(p)})
        return out


def _write_verdicts(art, verdicts):
    with open(art.path("verdict.txt"), "w") as fh:
        for v in verdicts:
            fh.write(v.line() + "\n")


def _solve_trajectory(cfg: ExperimentConfig, data):
    scfg = SolverConfig(
        dt=cfg.get("solver.dt"),
        eps=cfg.get("solver.eps"),
        store_every=cfg.get("solver.store_every"),
        **{k: cfg.values["solver." + k]
           for k in ("picard_tol", "picard_max_iters", "smallness_c",
                     "blowup_threshold")
           if "solver." + k in cfg.values},
    )
    method = cfg.get("solver.method")
    if method == "evolve":
        return evolve(data, scfg)
    if method == "picard":
        return picard_solve(data, scfg)
    raise ConfigError(f"unknown solver method {method!r}")


# ---------------------------------------------------------------------------
# experiments


def _exp_solve(cfg, art, baselines):
    grid = sp.make_grid(cfg.get("grid.L"), cfg.get("grid.N"))
    data = generate_data(cfg.get("data.kind"), cfg, grid)
    traj = _solve_trajectory(cfg, data)
    res = residual(traj, data, eps=cfg.get("solver.eps"))
    tol = cfg.get("tol.residual")
    traj.diagnostics.to_csv(art.path("diagnostics.csv"), residual=res)
    sp.write_field(art.path("final_velocity.npz"), traj.velocities[-1],
                   time=traj.times[-1])
    rmax = float(np.max(res)) if len(res) else 0.0
    return [Verdict("residual", rmax <= tol, rmax, tol)]


def _exp_energy_budget(cfg, art, baselines):
    grid = sp.make_grid(cfg.get("grid.L"), cfg.get("grid.N"))
    data = generate_data(cfg.get("data.kind"), cfg, grid)
    traj = _solve_trajectory(cfg, data)
    verdicts = []
    rep = energy_budget(traj, None, data)
    np.savetxt(art.path("budget_global.csv"),
               np.column_stack([rep.times, rep.local_energy]),
               delimiter=",", header="t,energy", comments="")
    defect = rep.rhs_terms["defect"]
    verdicts.append(Verdict("global-budget", rep.verdict, defect,
                            1e-4, note="ul2-en"))
    if "harness.R" in cfg.values:
        cut = StaticCutoff(cfg.require("harness.x0"), cfg.require("harness.R"),
                           cfg.require("harness.r"))
        region = cfg.get("harness.region")
        local = energy_budget(traj, cut, data, region=region)
        thr_local = baselines["local_energy_ratio_max"]
        verdicts.append(Verdict(f"local-budget-{region}",
                                local.ratio <= thr_local, local.ratio,
                                thr_local, note="local-energy"))
    return verdicts


def _exp_total_speed(cfg, art, baselines):
    grid = sp.make_grid(cfg.get("grid.L"), cfg.get("grid.N"))
    data = generate_data(cfg.get("data.kind"), cfg, grid)
    traj = _solve_trajectory(cfg, data)
    value, ratio = total_speed(traj, data)
    np.savetxt(art.path("total_speed.csv"),
               np.array([[value, ratio]]), delimiter=",",
               header="integral_sup,ratio", comments="")
    thr = baselines["total_speed_ratio_max"]
    return [Verdict("total-speed", ratio <= thr, ratio, thr, note="l1x")]


def _tag_of(message):
    """Extract an inequality tag like (delta-4) from a harness error."""
    if "(" in message and ")" in message:
        return message[message.index("(") + 1: message.index(")")]
    return "precondition"


def _exp_enstrophy(cfg, art, baselines):
    grid = sp.make_grid(cfg.get("grid.L"), cfg.get("grid.N"))
    data = generate_data(cfg.get("data.kind"), cfg, grid)
    traj = _solve_trajectory(cfg, data)
    ball = (cfg.require("harness.x0"), cfg.require("harness.R"))
    try:
        rep = enstrophy_localisation(
            traj, ball, cfg.require("harness.delta"),
            cfg.require("harness.c"), cfg.require("harness.r"), data)
    except ValueError as exc:
        return [Verdict("enstrophy-hypotheses", False, float("nan"),
                        float("nan"), note=_tag_of(str(exc)))]
    np.savetxt(art.path("enstrophy.csv"),
               np.column_stack([rep.times, rep.W, rep.radius_path]),
               delimiter=",", header="t,W,R_prime", comments="")
    thr = baselines["enstrophy_K"]
    verdicts = [
        Verdict("enstrophy-conclusion", rep.conclusion_ratio <= thr,
                rep.conclusion_ratio, thr, note="wdef"),
        Verdict("cutoff-recession", rep.tax_violation <= 1e-6,
                rep.tax_violation, 1e-6, note="tax"),
    ]
    return verdicts


def _exp_localize(cfg, art, baselines):
    grid = sp.make_grid(cfg.get("grid.L"), cfg.get("grid.N"))
    data = generate_data(cfg.get("data.kind"), cfg, grid)
    spec = AnnulusSpec(cfg.require("localize.R1"), cfg.require("localize.R2"),
                       cfg.require("localize.R3"), cfg.require("localize.R4"),
                       cfg.get("localize.center", (0.0, 0.0, 0.0)))
    sampler = spectral_sampler(data.u0)
    try:
        sph = localize_divfree(sampler, spec,
                               l_max=cfg.get("localize.l_max"),
                               n_r=cfg.get("localize.n_r"))
    except ValueError as exc:
        return [Verdict("localize", False, float("nan"), float("nan"),
                        note=str(exc))]
    div = sph.divergence_defect()
    tail = sph.tail_fraction()
    flux = abs(sph.flux_fraction)
    u_loc = to_torus_field(sph, grid)
    denom = [sobolev_norm(data.u0, k + 1.0) for k in (0, 1)]
    ratios = [sobolev_norm(u_loc, float(k)) / denom[k] for k in (0, 1)]
    np.savetxt(art.path("localize.csv"),
               np.array([[div, flux, tail, ratios[0], ratios[1]]]),
               delimiter=",",
               header="divergence_defect,flux_fraction,tail_fraction,"
                      "hk_ratio_0,hk_ratio_1",
               comments="")
    verdicts = [
        Verdict("divergence-free", div <= 1e-8, div, 1e-8),
        Verdict("flux-free", flux <= 1e-8, flux, 1e-8),
        Verdict("tail", tail <= 1e-6, tail, 1e-6),
    ]
    for k in (0, 1):
        thr = baselines[f"divloc_K{k}"]
        verdicts.append(Verdict(f"hk-ratio-{k}", ratios[k] <= thr,
                                ratios[k], thr, note="quant"))
    return verdicts


def _exp_counterexample(cfg, art, baselines):
    kwargs = {}
    for key, name in (("counterexample.xi", "xi"),
                      ("counterexample.eta", "eta_dir"),
                      ("counterexample.x0", "x0")):
        if key in cfg.values:
            kwargs[name] = cfg.values[key]
    template = WavePacketSpec(
        n=8, component=cfg.get("counterexample.component"),
        psi_radius=cfg.get("counterexample.psi_radius"), **kwargs)
    norm_grid = sp.make_grid(cfg.get("counterexample.norm_L"),
                             cfg.get("counterexample.norm_N"))
    pairing_grid = sp.make_grid(cfg.get("counterexample.pairing_L"),
                                cfg.get("counterexample.pairing_N"))
    table = growth_study(template, cfg.get("counterexample.n_list"),
                         norm_grid, pairing_grid)
    table.to_csv(art.path("growth.csv"))
    table.to_gnuplot(art.path("growth.dat"))
    ratios = np.abs(table.X0[1:] / table.X0[:-1])
    h1r = table.h1[1:] / table.h1[:-1]
    h2r = table.h2[1:] / table.h2[:-1]
    dbl = doubling_change(template, cfg.get("counterexample.doubling_n"),
                          pairing_grid)
    verdicts = [
        Verdict("x0-slope", table.slope >= 0.8, table.slope, 0.8),
        Verdict("x0-ratio-min", float(ratios.min()) >= 1.5,
                float(ratios.min()), 1.5),
        Verdict("h1-scaling",
                bool(np.all(np.abs(h1r / 2.0**-0.5 - 1.0) <= 0.15)),
                float(np.max(np.abs(h1r / 2.0**-0.5 - 1.0))), 0.15),
        Verdict("h2-scaling",
                bool(np.all(np.abs(h2r / 2.0**0.5 - 1.0) <= 0.15)),
                float(np.max(np.abs(h2r / 2.0**0.5 - 1.0))), 0.15),
        Verdict("box-doubling", dbl <= 0.02, dbl, 0.02),
    ]
    return verdicts


def _exp_homogenize(cfg, art, baselines):
    grid = sp.make_grid(cfg.get("grid.L"), cfg.get("grid.N"))
    f = [_random_band_field(grid, cfg.get("forcing.seed"),
                            cfg.get("forcing.kmin"), cfg.get("forcing.kmax"),
                            cfg.get("data.spectral_slope"),
                            cfg.get("forcing.amplitude"), True)]
    phi = [_random_band_field(grid, cfg.get("data.seed") + 77,
                              cfg.get("data.kmin"), cfg.get("data.kmax"),
                              cfg.get("data.spectral_slope"),
                              cfg.get("data.amplitude"), True)]
    alpha = cfg.require("homogenize.alpha")
    lambdas = cfg.get("homogenize.lambdas")
    table = weak_pairing_decay(f, phi, alpha, lambdas,
                               cfg.get("homogenize.T"))
    table.to_csv(art.path("decay.csv"))
    lo, hi = float(table.values[0]), float(table.values[-1])
    expect = cfg.get("homogenize.expect")
    if expect == "decay":
        passed = hi <= lo / 3.0
        return [Verdict("pairing-decay", passed, hi, lo / 3.0,
                        note=f"min_phase={table.min_phase:.3e}")]
    if expect == "no-decay":
        passed = hi > lo / 3.0
        return [Verdict("pairing-no-decay", passed, hi, lo / 3.0,
                        note="rational direction control")]
    raise ConfigError(f"unknown homogenize.expect {expect!r}")


def _exp_symmetry(cfg, art, baselines):
    grid = sp.make_grid(cfg.get("grid.L"), cfg.get("grid.N"))
    data = generate_data(cfg.get("data.kind"), cfg, grid)
    traj = _solve_trajectory(cfg, data)
    eps = cfg.get("solver.eps")
    base = float(np.max(residual(traj, data, eps=eps)))
    L = grid.L
    times = np.linspace(0.0, data.T, 5)
    vconst = np.tile(np.array([0.04, -0.015, 0.025]), (5, 1))
    q = sp.scalar_from_samples(grid, np.cos(
        2.0 * np.pi * grid.nodes()[0] / L))
    transforms = [
        ("space-translate", SpaceTranslate((0.3 * L, 0.1 * L, 0.7 * L))),
        ("time-translate", TimeTranslate(float(traj.times[len(traj) // 2]))),
        ("scale", Scale(2.0)),
        ("pressure-shift", PressureShift(1.234)),
        ("galilean", Galilean(vconst.copy())),
        ("galilean-time", Galilean(
            np.outer(times, np.array([0.05, 0.0, -0.03])),
            v_dot=np.tile(np.array([0.05, 0.0, -0.03]), (5, 1)))),
        ("forcing-gauge", Forcing([q] * len(traj.times))),
    ]
    verdicts = []
    rows = []
    for name, tr in transforms:
        t_traj = apply(tr, traj)
        if isinstance(tr, TimeTranslate):
            t_data = DataTriple(t_traj.velocities[0], [],
                                max(data.T - tr.t0, cfg.get("solver.dt")))
        else:
            t_data = apply(tr, data)
        r = float(np.max(residual(t_traj, t_data, eps=eps)))
        increase = max(r - base, 0.0)
        rows.append((name, base, r, increase))
        verdicts.append(Verdict(f"residual-{name}", increase <= 1e-6,
                                increase, 1e-6))
    with open(art.path("symmetry.csv"), "w") as fh:
        fh.write("transform,base_residual,residual,increase\n")
        for name, b, r, inc in rows:
            fh.write(f"{name},{b:.17e},{r:.17e},{inc:.17e}\n")
    scaled = apply(Scale(2.0), traj)
    e_ratio = (scaled.diagnostics.energy[0]
               / traj.diagnostics.energy[0])
    verdicts.append(Verdict("scale-energy", abs(e_ratio - 2.0) <= 1e-6,
                            float(e_ratio), 2.0, note="scaling"))
    mean_def = float(np.max(np.abs(np.real(
        apply(SpaceTranslate((0.3 * L, 0.1 * L, 0.7 * L)),
              traj).velocities[-1].mean()))))
    verdicts.append(Verdict("mean-zero", mean_def <= 1e-12, mean_def, 1e-12,
                            note="meanzero-3"))
    return verdicts


_DISPATCH = {
    "solve": _exp_solve,
    "energy-budget": _exp_energy_budget,
    "total-speed": _exp_total_speed,
    "enstrophy-loc": _exp_enstrophy,
    "localize": _exp_localize,
    "counterexample": _exp_counterexample,
    "homogenize": _exp_homogenize,
    "symmetry-suite": _exp_symmetry,
}


def run(cfg: ExperimentConfig, outdir=None, threads=None) -> tuple:
    """Execute one experiment; returns (manifest, exit_code).

    A manifest is written even when the experiment errors out.
    """
    outdir = outdir or cfg.get("output.dir") or f"out-{cfg.experiment}"
    art = _Artifacts(outdir)
    t0 = time.time()
    verdicts, error, code = [], "", 0
    try:
        verdicts = _DISPATCH[cfg.experiment](cfg, art, load_baselines())
        if not all(v.passed for v in verdicts):
            code = 1
    except ConfigError as exc:
        error, code = str(exc), 2
    except (RuntimeError, FloatingPointError, MemoryError) as exc:
        error, code = f"numerical abort: {exc}", 3
    except ValueError as exc:
        error, code = f"numerical abort: {exc}", 3
    _write_verdicts(art, verdicts)
    manifest = RunManifest(
        experiment=cfg.experiment,
        config=dict(cfg.values),
        version=__version__,
        wall_clock=time.time() - t0,
        files=[],
        verdicts=verdicts,
        error=error,
    )
    manifest_path = os.path.join(outdir, "manifest.json")
    manifest.files = art.listing()
    manifest.write(manifest_path)
    return manifest, code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nslab",
        description="Periodic Navier-Stokes laboratory experiment runner")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config, experiment=args.experiment)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.values["data.seed"] = args.seed
    manifest, code = run(cfg, outdir=args.out, threads=args.threads)
    for v in manifest.verdicts:
        print(v.line())
    if manifest.error:
        print(manifest.error, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
