"""Problem data, trajectories, and the norms/functionals built on them.

Sobolev norms use the Fourier definition on the integer wavenumber lattice,
with weights (1 + |k|^2)^s (inhomogeneous) or |k|^{2s} (homogeneous), scaled
so that s = 0 matches the quadrature L^2 norm.  Mixed time norms use composite
trapezoid quadrature on the trajectory's own sample times.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import spectral as sp
from .spectral import ScalarField, SpectralGrid, VectorField

__all__ = [
    "DataTriple",
    "Trajectory",
    "DiagnosticsTable",
    "NormReport",
    "sobolev_norm",
    "mixed_norm",
    "xs_norm",
    "energy",
    "enstrophy",
    "h1_data_norm",
]

DIV_TOL = 1e-12


@dataclass(frozen=True)
class DataTriple:
    """Problem data (u0, f, T, L): divergence-free initial velocity, a
    time-sampled forcing on a uniform grid over [0, T] (empty = homogeneous),
    and the horizon T."""

    u0: VectorField
    f: Sequence[VectorField]
    T: float

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("horizon T must be positive")
        div = sp.l2_norm(sp.divergence(self.u0))
        scale = sp.l2_norm(self.u0)
        if scale > 0 and div > DIV_TOL * max(scale, 1.0) * self.u0.grid.N:
            raise ValueError("u0 is not divergence-free to tolerance")
        for fk in self.f:
            if fk.grid != self.u0.grid:
                raise ValueError("forcing samples must share u0's grid")

    @property
    def grid(self) -> SpectralGrid:
        return self.u0.grid

    @property
    def L(self) -> float:
        return self.u0.grid.L

    def f_times(self):
        n = len(self.f)
        if n == 0:
            return np.zeros(0)
        if n == 1:
            return np.array([0.0])
        return np.linspace(0.0, self.T, n)

    def f_at(self, t: float) -> VectorField:
        """Forcing at time t by linear interpolation of the samples."""
        n = len(self.f)
        if n == 0:
            return sp.zero_vector(self.grid)
        if n == 1:
            return self.f[0]
        s = np.clip(t / self.T * (n - 1), 0.0, n - 1)
        i = min(int(np.floor(s)), n - 2)
        w = s - i
        coeffs = (1.0 - w) * self.f[i].coeffs + w * self.f[i + 1].coeffs
        return VectorField(self.grid, coeffs)


@dataclass
class DiagnosticsTable:
    """Per-step scalar diagnostics recorded at full time resolution."""

    t: np.ndarray
    energy: np.ndarray       # (1/2) ||u||_L2^2
    grad_sq: np.ndarray      # ||grad u||_L2^2
    lap_sq: np.ndarray       # ||Delta u||_L2^2 (hyperdissipation budget)
    enstrophy: np.ndarray    # (1/2) ||curl u||_L2^2
    sup: np.ndarray          # oversampled ||u||_inf
    f_inner: np.ndarray      # <u, f>_L2

    def to_csv(self, path, residual=None):
        cols = [self.t, self.energy, self.enstrophy, self.sup]
        header = "t,energy,enstrophy,sup_norm"
        if residual is not None:
            res = np.full_like(self.t, np.nan)
            res[: len(residual)] = residual
            cols.append(res)
            header += ",residual"
        np.savetxt(path, np.column_stack(cols), delimiter=",",
                   header=header, comments="")


@dataclass
class Trajectory:
    """Stored (velocity, pressure) samples plus full-resolution diagnostics.

    ``times`` are the stored sample times (strictly increasing, starting at
    the initial time).  ``pressure_linear``, when present, is a per-time
    constant vector a(t) representing a non-periodic pressure part x . a(t)
    introduced by Galilean-type symmetries.
    """

    times: np.ndarray
    velocities: list
    pressures: list
    diagnostics: Optional[DiagnosticsTable] = None
    pressure_linear: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.velocities):
            raise ValueError("times/velocities length mismatch")
        if len(self.pressures) not in (0, len(self.velocities)):
            raise ValueError("pressures must be empty or match velocities")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def grid(self) -> SpectralGrid:
        return self.velocities[0].grid

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def __len__(self):
        return len(self.times)


@dataclass
class NormReport:
    """A named norm value with an optional per-time profile."""

    name: str
    value: float
    time_profile: Optional[np.ndarray] = None

    def csv_row(self) -> str:
        cells = [self.name, repr(self.value)]
        if self.time_profile is not None:
            cells.extend(repr(v) for v in self.time_profile)
        return ",".join(cells)


def sobolev_norm(f, s: float, homogeneous: bool = False) -> float:
    """H^s norm with lattice weights; the homogeneous variant requires a
    mean-zero field."""
    grid = f.grid
    k2 = grid.k_squared()
    coeffs = f.coeffs if isinstance(f, VectorField) else f.coeffs[np.newaxis]
    if homogeneous:
        if np.max(np.abs(coeffs[:, 0, 0, 0])) > DIV_TOL * max(
            1.0, np.max(np.abs(coeffs))
        ):
            raise ValueError("homogeneous Sobolev norm needs a mean-zero field")
        weight = np.where(k2 > 0, k2.astype(float), 1.0) ** s
        weight[k2 == 0] = 0.0
    else:
        weight = (1.0 + k2) ** s
    total = np.sum(weight[np.newaxis] * np.abs(coeffs) ** 2)
    return float(np.sqrt(grid.L**3 * total))


def _spatial_norm(spec) -> Callable:
    if callable(spec):
        return spec
    if spec == "L2":
        return sp.l2_norm
    if spec == "Linf":
        return sp.sup_norm
    if isinstance(spec, tuple) and spec[0] == "H":
        s = spec[1]
        return lambda f: sobolev_norm(f, s)
    raise ValueError(f"unknown spatial norm spec {spec!r}")


def mixed_norm(traj: Trajectory, p_time, spatial, name: str = "") -> NormReport:
    """L^p_t X_x norm over the trajectory's stored samples.

    Composite trapezoid in time for finite p; max over samples for p = inf.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    norm = _spatial_norm(spatial)
    profile = np.array([norm(u) for u in traj.velocities])
    if p_time == np.inf:
        value = float(np.max(profile))
    else:
        value = float(
            np.trapezoid(profile**p_time, traj.times) ** (1.0 / p_time)
        )
    return NormReport(name or f"L{p_time}_t", value, profile)


def xs_norm(traj: Trajectory, s: float, name: str = "") -> NormReport:
    """Hybrid norm: L^inf_t H^s + L^2_t H^{s+1}."""
    sup_part = mixed_norm(traj, np.inf, ("H", s))
    l2_part = mixed_norm(traj, 2, ("H", s + 1))
    return NormReport(name or f"X^{s}", sup_part.value + l2_part.value)


def xs_distance(traj_a: Trajectory, traj_b: Trajectory, s: float = 1.0) -> float:
    """X^s distance between two trajectories on the same time grid."""
    if len(traj_a) != len(traj_b):
        raise ValueError("trajectories must share a time grid")
    diffs = [
        VectorField(ua.grid, ua.coeffs - ub.coeffs)
        for ua, ub in zip(traj_a.velocities, traj_b.velocities)
    ]
    dtraj = Trajectory(traj_a.times, diffs, [])
    return xs_norm(dtraj, s).value


def energy(data: DataTriple) -> float:
    """Total energy E(u0, f, T) = (1/2)(||u0||_L2 + ||f||_{L1_t L2_x})^2."""
    u0_part = sp.l2_norm(data.u0)
    times = data.f_times()
    if len(times) < 2:
        f_part = 0.0
    else:
        prof = np.array([sp.l2_norm(fk) for fk in data.f])
        f_part = float(np.trapezoid(prof, times))
    return 0.5 * (u0_part + f_part) ** 2


def enstrophy(u: VectorField) -> float:
    """Half the squared L^2 norm of the vorticity."""
    return 0.5 * sp.l2_norm(sp.curl(u)) ** 2


def h1_data_norm(data: DataTriple, integrated: bool = False) -> float:
    """H^1 size of the data: ||u0||_H1 plus the L^inf_t (default) or L^1_t
    H^1 norm of the forcing."""
    u0_part = sobolev_norm(data.u0, 1.0)
    times = data.f_times()
    if len(data.f) == 0:
        return u0_part
    prof = np.array([sobolev_norm(fk, 1.0) for fk in data.f])
    if integrated:
        if len(times) < 2:
            return u0_part
        return u0_part + float(np.trapezoid(prof, times))
    return u0_part + float(np.max(prof))
