"""Symmetry group of the periodic Navier-Stokes system.

Each transform acts on problem data and on trajectories.  Spatial shifts
by arbitrary (non-grid) offsets are Fourier phase factors, exact for
band-limited fields.  The Galilean family tracks the non-periodic pressure
part x . a(t) through Trajectory.pressure_linear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral as sp
from .spaces import DataTriple, DiagnosticsTable, Trajectory
from .spectral import ScalarField, VectorField

__all__ = [
    "SymmetryTransform",
    "SpaceTranslate",
    "TimeTranslate",
    "Scale",
    "PressureShift",
    "Galilean",
    "Forcing",
    "GalileanForced",
    "apply",
    "mean_zero_normalize",
    "homogenise_shift",
    "weak_pairing_decay",
    "DecayTable",
]


class SymmetryTransform:
    """Base tag for the transform variants below."""


@dataclass(frozen=True)
class SpaceTranslate(SymmetryTransform):
    x0: tuple

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))
        if len(self.x0) != 3:
            raise ValueError("translation offset must have three components")


@dataclass(frozen=True)
class TimeTranslate(SymmetryTransform):
    t0: float


@dataclass(frozen=True)
class Scale(SymmetryTransform):
    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("scaling factor must be positive")


@dataclass(frozen=True)
class PressureShift(SymmetryTransform):
    """Adds the constants C(t) (sampled on the subject's time grid) to the
    pressure."""

    C: tuple

    def __post_init__(self):
        object.__setattr__(self, "C", tuple(float(c) for c in np.atleast_1d(self.C)))


class _VelocityPath:
    """Shared storage for the v(t) samples of the Galilean variants."""

    def __init__(self, v, v_dot=None):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        if v.shape[1] != 3:
            raise ValueError("velocity path must have three components")
        self.v = v
        self.v_dot = None if v_dot is None else np.atleast_2d(
            np.asarray(v_dot, dtype=float)
        )

    def on_times(self, times):
        """Samples of v, its path integral and derivative on a time grid."""
        times = np.asarray(times, dtype=float)
        if len(self.v) == 1:
            v = np.broadcast_to(self.v, (len(times), 3)).copy()
        elif len(self.v) == len(times):
            v = self.v
        else:
            own = np.linspace(times[0], times[-1], len(self.v))
            v = np.column_stack(
                [np.interp(times, own, self.v[:, i]) for i in range(3)]
            )
        if len(times) == 1:
            X = np.zeros((1, 3))
            vd = np.zeros((1, 3))
        else:
            from scipy.integrate import cumulative_trapezoid

            X = cumulative_trapezoid(v, times, axis=0, initial=0.0)
            vd = np.gradient(v, times, axis=0)
        if self.v_dot is not None:
            if len(self.v_dot) == 1:
                vd = np.broadcast_to(self.v_dot, (len(times), 3)).copy()
            else:
                own = np.linspace(times[0], times[-1], len(self.v_dot))
                vd = np.column_stack(
                    [np.interp(times, own, self.v_dot[:, i]) for i in range(3)]
                )
        return v, X, vd


class Galilean(SymmetryTransform):
    """Moving-frame change u -> u(x - int v) + v with the non-periodic
    pressure correction -x . v'(t)."""

    def __init__(self, v, v_dot=None):
        self.path = _VelocityPath(v, v_dot)


class GalileanForced(SymmetryTransform):
    """Moving-frame change whose pressure stays periodic; the frame
    acceleration v'(t) is moved into the forcing instead."""

    def __init__(self, v, v_dot=None):
        self.path = _VelocityPath(v, v_dot)


@dataclass(frozen=True)
class Forcing(SymmetryTransform):
    """Adds a gradient forcing grad q and the matching pressure q; q is a
    list of scalar fields on the subject's forcing/stored time grid."""

    q: tuple

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(self.q))
        if not self.q:
            raise ValueError("forcing shift needs at least one sample")


def _phase_shift(field, x0):
    """field(x) -> field(x - x0), exact on coefficients."""
    grid = field.grid
    kx, ky, kz = grid.wavenumbers()
    phase = np.exp(
        -2j * np.pi * (kx * x0[0] + ky * x0[1] + kz * x0[2]) / grid.L
    )
    if isinstance(field, VectorField):
        return VectorField(grid, field.coeffs * phase[np.newaxis],
                           field.divergence_free)
    return ScalarField(grid, field.coeffs * phase)


def _add_mean(u: VectorField, vec) -> VectorField:
    coeffs = u.coeffs.copy()
    coeffs[:, 0, 0, 0] += np.asarray(vec, dtype=complex)
    return VectorField(u.grid, coeffs, u.divergence_free)


def _scale_diagnostics(d: DiagnosticsTable, lam: float) -> DiagnosticsTable:
    return DiagnosticsTable(
        t=d.t * lam**2,
        energy=d.energy * lam,
        grad_sq=d.grad_sq / lam,
        lap_sq=d.lap_sq / lam**3,
        enstrophy=d.enstrophy / lam,
        sup=d.sup / lam,
        f_inner=d.f_inner / lam,
    )


def apply(transform: SymmetryTransform, subject):
    """Apply a symmetry transform to a DataTriple or a Trajectory."""
    if isinstance(subject, DataTriple):
        return _apply_data(transform, subject)
    if isinstance(subject, Trajectory):
        return _apply_traj(transform, subject)
    raise TypeError(f"cannot transform {type(subject).__name__}")


def _apply_data(tr, data: DataTriple) -> DataTriple:
    if isinstance(tr, SpaceTranslate):
        return DataTriple(
            _phase_shift(data.u0, tr.x0),
            [_phase_shift(fk, tr.x0) for fk in data.f],
            data.T,
        )
    if isinstance(tr, TimeTranslate):
        raise ValueError(
            "time translation needs a trajectory; problem data has no past"
        )
    if isinstance(tr, Scale):
        lam = tr.lam
        g2 = sp.make_grid(lam * data.L, data.grid.N, data.grid.dealias_fraction)
        u0 = VectorField(g2, data.u0.coeffs / lam, data.u0.divergence_free)
        f = [VectorField(g2, fk.coeffs / lam**3, fk.divergence_free)
             for fk in data.f]
        return DataTriple(u0, f, lam**2 * data.T)
    if isinstance(tr, PressureShift):
        return data
    if isinstance(tr, (Galilean, GalileanForced)):
        times = data.f_times() if len(data.f) >= 2 else np.array([0.0, data.T])
        v, X, vd = tr.path.on_times(times)
        u0 = _add_mean(data.u0, v[0])
        if data.f:
            f_t = data.f_times()
            vf, Xf, vdf = tr.path.on_times(f_t) if len(f_t) >= 2 else (v, X, vd)
            f = [_phase_shift(fk, Xf[j]) for j, fk in enumerate(data.f)]
        else:
            f, vdf, f_t = [], vd, times
        if isinstance(tr, GalileanForced):
            if not f and np.max(np.abs(vdf)) > 0:
                f = [sp.zero_vector(data.grid) for _ in f_t]
            f = [_add_mean(fk, vdf[j]) for j, fk in enumerate(f)]
        return DataTriple(u0, f, data.T)
    if isinstance(tr, Forcing):
        if data.f:
            if len(tr.q) != len(data.f):
                raise ValueError("forcing shift samples must match f grid")
            f = [VectorField(fk.grid, fk.coeffs + sp.gradient(qk).coeffs,
                             fk.divergence_free)
                 for fk, qk in zip(data.f, tr.q)]
        else:
            f = [sp.gradient(qk) for qk in tr.q]
        return DataTriple(data.u0, f, data.T)
    raise TypeError(f"unknown transform {type(tr).__name__}")


def _apply_traj(tr, traj: Trajectory) -> Trajectory:
    if isinstance(tr, SpaceTranslate):
        return Trajectory(
            traj.times,
            [_phase_shift(u, tr.x0) for u in traj.velocities],
            [_phase_shift(p, tr.x0) for p in traj.pressures],
            diagnostics=traj.diagnostics,
            pressure_linear=traj.pressure_linear,
        )
    if isinstance(tr, TimeTranslate):
        T = traj.T
        if not (0.0 <= tr.t0 <= T + 1e-12 * max(T, 1.0)):
            raise ValueError(f"time shift {tr.t0} outside [0, {T}]")
        keep = traj.times >= tr.t0 - 1e-12 * max(T, 1.0)
        if not np.any(keep):
            raise ValueError("time shift leaves no samples")
        idx = np.nonzero(keep)[0]
        diag = traj.diagnostics
        if diag is not None:
            m = diag.t >= tr.t0 - 1e-12 * max(T, 1.0)
            diag = DiagnosticsTable(
                diag.t[m] - tr.t0, diag.energy[m], diag.grad_sq[m],
                diag.lap_sq[m], diag.enstrophy[m], diag.sup[m],
                diag.f_inner[m],
            )
        return Trajectory(
            traj.times[idx] - tr.t0,
            [traj.velocities[i] for i in idx],
            [traj.pressures[i] for i in idx] if traj.pressures else [],
            diagnostics=diag,
            pressure_linear=(
                traj.pressure_linear[idx]
                if traj.pressure_linear is not None else None
            ),
        )
    if isinstance(tr, Scale):
        lam = tr.lam
        g = traj.grid
        g2 = sp.make_grid(lam * g.L, g.N, g.dealias_fraction)
        return Trajectory(
            traj.times * lam**2,
            [VectorField(g2, u.coeffs / lam, u.divergence_free)
             for u in traj.velocities],
            [ScalarField(g2, p.coeffs / lam**2) for p in traj.pressures],
            diagnostics=(
                _scale_diagnostics(traj.diagnostics, lam)
                if traj.diagnostics is not None else None
            ),
            pressure_linear=(
                traj.pressure_linear / lam**3
                if traj.pressure_linear is not None else None
            ),
        )
    if isinstance(tr, PressureShift):
        C = np.asarray(tr.C, dtype=float)
        if len(C) == 1:
            C = np.full(len(traj), C[0])
        if len(C) != len(traj):
            raise ValueError("pressure shift samples must match stored times")
        pressures = []
        for p, c in zip(traj.pressures, C):
            coeffs = p.coeffs.copy()
            coeffs[0, 0, 0] += c
            pressures.append(ScalarField(p.grid, coeffs))
        return Trajectory(traj.times, list(traj.velocities), pressures,
                          diagnostics=traj.diagnostics,
                          pressure_linear=traj.pressure_linear)
    if isinstance(tr, (Galilean, GalileanForced)):
        v, X, vd = tr.path.on_times(traj.times)
        vels = [
            _add_mean(_phase_shift(u, X[j]), v[j])
            for j, u in enumerate(traj.velocities)
        ]
        press = [_phase_shift(p, X[j]) for j, p in enumerate(traj.pressures)]
        lin = traj.pressure_linear
        if isinstance(tr, Galilean):
            lin = (np.zeros((len(traj), 3)) if lin is None else lin.copy()) - vd
        return Trajectory(traj.times, vels, press, diagnostics=None,
                          pressure_linear=lin)
    if isinstance(tr, Forcing):
        if len(tr.q) != len(traj):
            raise ValueError("forcing shift samples must match stored times")
        press = [
            ScalarField(p.grid, p.coeffs + qk.coeffs)
            for p, qk in zip(traj.pressures, tr.q)
        ]
        return Trajectory(traj.times, list(traj.velocities), press,
                          diagnostics=traj.diagnostics,
                          pressure_linear=traj.pressure_linear)
    raise TypeError(f"unknown transform {type(tr).__name__}")


def mean_zero_normalize(data: DataTriple):
    """Remove the spatial means of u0 and f by a forced frame change.

    Returns the transformed data together with the velocity path v(t)
    used, sampled on the forcing time grid (or [0, T] when unforced).
    """
    from scipy.integrate import cumulative_trapezoid

    m0 = np.real(data.u0.mean())
    times = data.f_times() if len(data.f) >= 2 else np.array([0.0, data.T])
    if data.f:
        f_means = np.array([np.real(fk.mean()) for fk in data.f])
        if len(data.f) == 1:
            f_means = np.repeat(f_means, 2, axis=0)
    else:
        f_means = np.zeros((len(times), 3))
    v = -m0[np.newaxis, :] - cumulative_trapezoid(
        f_means, times, axis=0, initial=0.0
    )
    out = apply(GalileanForced(v, v_dot=-f_means), data)
    return out, v


def homogenise_shift(f, w, T: float):
    """Shift each forcing sample by w t^2 (Fourier-exact phases)."""
    w = np.asarray(w, dtype=float)
    if not f:
        return []
    times = np.linspace(0.0, T, len(f)) if len(f) > 1 else np.array([0.0])
    return [_phase_shift(fk, w * t**2) for fk, t in zip(f, times)]


@dataclass
class DecayTable:
    """|pairing| against the modulation parameter lambda, with the minimum
    fractional part of k . alpha seen over the active modes."""

    lambdas: np.ndarray
    values: np.ndarray
    min_phase: float

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.lambdas, self.values]),
                   delimiter=",", header="lambda,abs_pairing", comments="")


def _coeff_stack(samples):
    """(n_t, 3or1, N, N, N) complex coefficient array from field samples."""
    arrs = []
    for s in samples:
        c = s.coeffs
        arrs.append(c[np.newaxis] if c.ndim == 3 else c)
    return np.array(arrs)


def weak_pairing_decay(f, phi, alpha, lambdas, T: float,
                       n_fine: int = 4001, phase_floor: float = 1e-3):
    """Space-time pairing of the quadratically shifted forcing with a test
    field, for each modulation strength lambda.

    The shift direction alpha enters through the fractional part of
    k . alpha nearest zero for every active mode k; modes where that
    fractional part vanishes contribute a non-oscillating term, which is
    exactly what makes rational directions fail to decay.
    """
    if not f or not phi:
        raise ValueError("need at least one forcing and one test sample")
    alpha = np.asarray(alpha, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    grid = f[0].grid
    fc = _coeff_stack(f)
    pc = _coeff_stack(phi)
    if fc.shape[1] != pc.shape[1]:
        raise ValueError("forcing and test field component counts differ")
    mean_size = np.max(np.abs(fc[:, :, 0, 0, 0]))
    if mean_size > 1e-12 * max(np.max(np.abs(fc)), 1.0):
        raise ValueError("forcing must be mean-zero in x for each time")

    kx, ky, kz = grid.wavenumbers()
    n_t = fc.shape[0]
    coarse = np.linspace(0.0, T, n_t) if n_t > 1 else np.array([0.0])
    # g_k(t) = sum_components f_hat(t, k) * phi_hat(t, -k), kept only for
    # modes whose product is above numerical noise
    g_full = np.einsum("tcijl,tcijl->tijl", fc, np.flip(
        np.roll(pc, -1, axis=(2, 3, 4)), axis=(2, 3, 4)
    ))
    peak = np.max(np.abs(g_full), axis=0)
    peak[0, 0, 0] = 0.0
    cut = 1e-13 * max(float(np.max(peak)), 1e-300)
    ii, jj, ll = np.nonzero(peak > cut)
    kvec = np.column_stack([kx[ii, jj, ll], ky[ii, jj, ll], kz[ii, jj, ll]])
    ka = kvec @ alpha
    theta = ka - np.round(ka)
    min_phase = float(np.min(np.abs(theta))) if len(theta) else np.inf
    g = g_full[:, ii, jj, ll]

    values = np.empty(len(lambdas))
    theta_max = float(np.max(np.abs(theta))) if len(theta) else 0.0
    for i, lam in enumerate(lambdas):
        # resolve the chirp e^{-2 pi i lam theta t^2}: ~40 nodes per cycle
        cycles = abs(lam) * theta_max * T**2
        n = int(min(max(n_fine, 40 * cycles), 2_000_000)) + 1
        fine = np.linspace(0.0, T, n)
        if len(theta) == 0:
            values[i] = 0.0
            continue
        if n_t == 1:
            g_fine = np.broadcast_to(g, (n, g.shape[1]))
        else:
            g_fine = np.empty((n, g.shape[1]), dtype=complex)
            for m in range(g.shape[1]):
                g_fine[:, m] = np.interp(fine, coarse, g[:, m].real) \
                    + 1j * np.interp(fine, coarse, g[:, m].imag)
        phase = np.exp(-2j * np.pi * lam * np.outer(fine**2, theta))
        values[i] = np.abs(
            grid.L**3 * np.trapezoid(np.sum(phase * g_fine, axis=1), fine)
        )
    return DecayTable(lambdas, values, min_phase)
