"""Quantitative diagnostics on solver trajectories.

Implements the localisation machinery: static annulus cutoffs eta^4 for
local energy budgets, the shrinking Lipschitz cutoff driven by the
accumulated sup-norm for enstrophy localisation, the bounded-total-speed
ratio, and the vorticity-equation defect.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid

from . import spectral as sp
from .bumps import chi_step
from .spaces import DataTriple, Trajectory, energy
from .spectral import VectorField

__all__ = [
    "CutoffProfile",
    "StaticCutoff",
    "ShrinkingCutoff",
    "EnergyReport",
    "EnstrophyReport",
    "energy_budget",
    "total_speed",
    "enstrophy_localisation",
    "vorticity_residual",
]


def periodic_distance(grid, x0):
    """Minimum-image distance from x0 on the torus, sampled at the nodes."""
    x0 = np.asarray(x0, dtype=float)
    nodes = grid.nodes()
    d2 = np.zeros(grid.shape)
    for i in range(3):
        diff = np.abs(nodes[i] - x0[i] % grid.L)
        diff = np.minimum(diff, grid.L - diff)
        d2 += diff**2
    return np.sqrt(d2)


class CutoffProfile:
    """Base tag for the spatial weights used by the localisation checks."""


@dataclass(frozen=True)
class StaticCutoff(CutoffProfile):
    """Fourth power of the radial step eta(x) = chi((|x-x0|-R)/r).

    The weight is 1 on B(x0, R-r) and 0 outside B(x0, R); exponent 4 keeps
    a large common factor between the weight and its gradient.
    """

    center: tuple
    R: float
    r: float

    def __post_init__(self):
        if not (0.0 < self.r < self.R / 2.0):
            raise ValueError(f"need 0 < r < R/2, got r={self.r}, R={self.R}")

    def eta(self, grid):
        d = periodic_distance(grid, self.center)
        return chi_step((d - self.R) / self.r)

    def weight(self, grid):
        return self.eta(grid) ** 4

    def derivative_constant(self, n_samples: int = 20001) -> float:
        """Measured K with |d^j eta| <= K / r^j for j = 1, 2."""
        s = np.linspace(-1.5, 0.5, n_samples)
        h = s[1] - s[0]
        chi = chi_step(s)
        d1 = np.gradient(chi, h)
        d2 = np.gradient(d1, h)
        return float(max(np.max(np.abs(d1)), np.max(np.abs(d2))))


@dataclass(frozen=True)
class ShrinkingCutoff(CutoffProfile):
    """Lipschitz weight min(max(0, c^{-0.1} delta^2 (R'(t) - |x|)), 1).

    R'(t) decreases from its initial value at 1/c times the solution's
    sup-norm, so the support recedes faster than anything can be
    transported towards it.
    """

    center: tuple
    R_prime0: float
    delta: float
    c: float

    def __post_init__(self):
        if self.delta <= 0 or self.c <= 0:
            raise ValueError("delta and c must be positive")

    @property
    def slope(self) -> float:
        return self.c**-0.1 * self.delta**2

    def radius_path(self, times, sup_profile, sup_times) -> np.ndarray:
        """R'(t) on the requested times from the sup-norm history."""
        acc = cumulative_trapezoid(sup_profile, sup_times, initial=0.0)
        return self.R_prime0 - np.interp(times, sup_times, acc) / self.c

    def eta(self, grid, R_prime_t: float):
        d = periodic_distance(grid, self.center)
        return np.clip(self.slope * (R_prime_t - d), 0.0, 1.0)


@dataclass
class EnergyReport:
    """Local energy trace and its comparison against the a priori bound."""

    times: np.ndarray
    local_energy: np.ndarray
    dissipation: float
    lhs_sup: float
    lhs_grad: float
    rhs_terms: dict
    ratio: float
    verdict: bool

    def __post_init__(self):
        if np.any(self.local_energy < -1e-14) or self.dissipation < -1e-14:
            raise ValueError("energy quantities must be nonnegative")


@dataclass
class EnstrophyReport:
    """Shrinking-cutoff enstrophy trace and the hypothesis/conclusion data."""

    times: np.ndarray
    W: np.ndarray
    delta: float
    hypothesis_value: float      # vorticity size of the data in the ball
    smallness_value: float       # delta^4 T + delta^5 E^{1/2} T
    r_condition_value: float     # C (E + E^{1/2} T^{1/4} + delta^{-2})
    conclusion_lhs: float
    conclusion_ratio: float      # conclusion_lhs / delta
    w0_ratio: float              # W(0) / delta^2
    tax_violation: float
    radius_path: np.ndarray = field(default_factory=lambda: np.zeros(0))
    verdict: bool = True

    def __post_init__(self):
        if np.any(self.W < -1e-14):
            raise ValueError("localised enstrophy must be nonnegative")


def _masked_l2(u: VectorField, mask) -> float:
    s = u.samples()
    return float(np.sqrt(np.sum(np.real(s) ** 2 * mask) * u.grid.cell_volume))


def _grad_samples_sq(u: VectorField):
    out = np.zeros(u.grid.shape)
    for i in range(3):
        gi = sp.gradient(u.component(i)).samples()
        out += np.sum(np.real(gi) ** 2, axis=0)
    return out


def _data_for(traj: Trajectory, data: Optional[DataTriple]) -> DataTriple:
    if data is not None:
        return data
    return DataTriple(traj.velocities[0], [], max(traj.T - traj.times[0], 1e-300))


def _f_l1_l2(data: DataTriple, mask=None) -> float:
    if not data.f:
        return 0.0
    times = data.f_times()
    if len(times) < 2:
        return 0.0
    if mask is None:
        prof = np.array([sp.l2_norm(fk) for fk in data.f])
    else:
        prof = np.array([_masked_l2(fk, mask) for fk in data.f])
    return float(np.trapezoid(prof, times))


def energy_budget(traj: Trajectory, cutoff: Optional[CutoffProfile] = None,
                  data: Optional[DataTriple] = None,
                  region: str = "ball") -> EnergyReport:
    """Local (or global) energy accounting over a trajectory.

    With a StaticCutoff, measures the solution in the inner region
    B(x0, R-r) (or, with region="exterior", outside B(x0, R+r)) against
    the data-plus-energy bound with the r-dependent leakage terms, and
    reports the ratio.  With no cutoff, checks the global energy identity
    from the per-step diagnostics.
    """
    data = _data_for(traj, data)
    E = energy(DataTriple(data.u0, [sp.leray_project(fk) for fk in data.f],
                          data.T))
    T = traj.T - traj.times[0]
    grid = traj.grid

    if cutoff is None:
        d = traj.diagnostics
        if d is None:
            raise ValueError("global energy check needs solver diagnostics")
        drop = cumulative_simpson(d.grad_sq, x=d.t, initial=0.0)
        pump = cumulative_simpson(d.f_inner, x=d.t, initial=0.0)
        lhs = d.energy + drop - pump
        ratio = float(np.max(lhs) / E) if E > 0 else 0.0
        defect = float(np.max(np.abs(lhs - lhs[0])) / E) if E > 0 else 0.0
        return EnergyReport(
            times=d.t,
            local_energy=d.energy,
            dissipation=float(drop[-1]),
            lhs_sup=float(np.sqrt(2.0 * np.max(d.energy))),
            lhs_grad=float(np.sqrt(max(drop[-1], 0.0))),
            rhs_terms={"energy": E, "defect": defect},
            ratio=ratio,
            verdict=defect <= 1e-4 and ratio <= 1.0 + 1e-4,
        )

    if not isinstance(cutoff, StaticCutoff):
        raise ValueError("energy_budget expects a StaticCutoff or None")
    d_grid = periodic_distance(grid, cutoff.center)
    if region == "ball":
        inner = d_grid <= cutoff.R - cutoff.r
        outer = d_grid <= cutoff.R
    elif region == "exterior":
        inner = d_grid >= cutoff.R + cutoff.r
        outer = d_grid >= cutoff.R
    else:
        raise ValueError(f"unknown region {region!r}")

    weight = cutoff.weight(grid) if region == "ball" else (
        1.0 - StaticCutoff(cutoff.center, cutoff.R + cutoff.r, cutoff.r).weight(grid)
    )
    loc_energy = np.array([
        0.5 * np.sum(np.sum(np.real(u.samples()) ** 2, axis=0) * weight)
        * grid.cell_volume
        for u in traj.velocities
    ])
    sup_l2 = max(_masked_l2(u, inner) for u in traj.velocities)
    grad_prof = np.array([
        np.sum(_grad_samples_sq(u) * inner) * grid.cell_volume
        for u in traj.velocities
    ])
    grad_l2 = float(np.sqrt(np.trapezoid(grad_prof, traj.times)))
    diss = float(np.trapezoid(
        [np.sum(_grad_samples_sq(u) * weight) * grid.cell_volume
         for u in traj.velocities],
        traj.times,
    ))

    rhs_terms = {
        "data_l2": _masked_l2(data.u0, outer),
        "forcing_l1_l2": _f_l1_l2(data, outer),
        "leak_r": np.sqrt(E * T) / cutoff.r,
        "leak_r2": np.sqrt(E**3 * T) / cutoff.r**2,
    }
    rhs = sum(rhs_terms.values())
    lhs = sup_l2 + grad_l2
    ratio = lhs / rhs if rhs > 0 else 0.0
    return EnergyReport(
        times=traj.times,
        local_energy=loc_energy,
        dissipation=diss,
        lhs_sup=sup_l2,
        lhs_grad=grad_l2,
        rhs_terms=rhs_terms,
        ratio=float(ratio),
        verdict=bool(lhs <= rhs or rhs == 0.0),
    )


def total_speed(traj: Trajectory, data: Optional[DataTriple] = None):
    """Accumulated sup-norm and its ratio to E^{1/2} T^{1/4} + E.

    Requires T <= L^2 (the regime where the bound is meaningful) and
    normalised (mean-zero) pressure samples.
    """
    grid = traj.grid
    T = traj.T - traj.times[0]
    if T > grid.L**2 * (1.0 + 1e-12):
        raise ValueError(
            f"total speed bound needs T <= L^2; got T={T}, L^2={grid.L ** 2}"
        )
    for p in traj.pressures:
        if abs(p.coeffs[0, 0, 0]) > 1e-10 * max(1.0, np.max(np.abs(p.coeffs))):
            raise ValueError("total speed bound needs normalised pressure")
    d = traj.diagnostics
    if d is not None and len(d.t) >= len(traj.times):
        value = float(np.trapezoid(d.sup, d.t))
    else:
        prof = np.array([sp.sup_norm(u) for u in traj.velocities])
        value = float(np.trapezoid(prof, traj.times))
    data = _data_for(traj, data)
    E = energy(data)
    bound = np.sqrt(E) * T**0.25 + E
    ratio = value / bound if bound > 0 else 0.0
    return value, float(ratio)


def enstrophy_localisation(traj: Trajectory, ball, delta: float, c: float,
                           r: float, data: Optional[DataTriple] = None,
                           C_big: float = 1.0) -> EnstrophyReport:
    """Shrinking-cutoff enstrophy tracking inside a ball.

    Verifies the hypotheses (small vorticity of the data in the ball;
    smallness of delta^4 T + delta^5 E^{1/2} T; the lower bound on r; the
    geometric conditions T <= L^2 and R <= L), then tracks the localised
    enstrophy W(t), checks the recession inequality for the cutoff, and
    measures the conclusion in units of delta.
    """
    x0, R = ball
    data = _data_for(traj, data)
    grid = traj.grid
    T = traj.T - traj.times[0]
    E = energy(data)

    if not (0.0 < r < R / 2.0):
        raise ValueError(f"(r-large): need 0 < r < R/2, got r={r}, R={R}")
    if R > grid.L * (1 + 1e-12):
        raise ValueError(f"(r-large): ball radius R={R} exceeds the period {grid.L}")
    if T > grid.L**2 * (1 + 1e-12):
        raise ValueError(f"(l1x): total speed bound needs T <= L^2, got T={T}")

    omega0 = sp.curl(data.u0)
    d_grid = periodic_distance(grid, x0)
    ball_mask = d_grid <= R
    hyp = _masked_l2(omega0, ball_mask)
    if data.f:
        times = data.f_times()
        if len(times) >= 2:
            prof = np.array(
                [_masked_l2(sp.curl(fk), ball_mask) for fk in data.f]
            )
            hyp += float(np.trapezoid(prof, times))
    if hyp > delta * (1 + 1e-12):
        raise ValueError(
            f"(eeta): vorticity size of the data in the ball is {hyp:.6g} "
            f"> delta = {delta}"
        )
    small = delta**4 * T + delta**5 * np.sqrt(E) * T
    if small > c * (1 + 1e-12):
        raise ValueError(
            f"(delta-4): delta^4 T + delta^5 E^(1/2) T = {small:.6g} > c = {c}"
        )
    r_cond = C_big * (E + np.sqrt(E) * T**0.25 + delta**-2)
    if r <= r_cond:
        raise ValueError(
            f"(r-large): r = {r} must exceed {r_cond:.6g}"
        )

    cutoff = ShrinkingCutoff(tuple(x0), R - r / 8.0, delta, c)
    d = traj.diagnostics
    if d is not None:
        sup_times, sup_prof = d.t, d.sup
    else:
        sup_times = traj.times
        sup_prof = np.array([sp.sup_norm(u) for u in traj.velocities])
    radii = cutoff.radius_path(traj.times, sup_prof, sup_times)

    W = np.empty(len(traj))
    for j, u in enumerate(traj.velocities):
        om = sp.curl(u)
        eta = cutoff.eta(grid, radii[j])
        W[j] = 0.5 * np.sum(
            np.sum(np.real(om.samples()) ** 2, axis=0) * eta
        ) * grid.cell_volume

    # recession check, in per-step integrated form: the change of the
    # weight over a step must not exceed -(1/c) int ||u||_inf |grad eta|.
    # The weight is piecewise linear in |x|, so the sharp comparison is
    # made at points that stay strictly inside the ramp over the step
    # (where |grad eta| is the constant slope); elsewhere the weight must
    # simply not increase.
    tax_violation = 0.0
    acc = cumulative_trapezoid(sup_prof, sup_times, initial=0.0)
    acc_traj = np.interp(traj.times, sup_times, acc)
    for j in range(len(traj) - 1):
        dt = traj.times[j + 1] - traj.times[j]
        eta0 = cutoff.eta(grid, radii[j])
        eta1 = cutoff.eta(grid, radii[j + 1])
        deta = (eta1 - eta0) / dt
        ramp = (eta0 > 0.0) & (eta0 < 1.0) & (eta1 > 0.0) & (eta1 < 1.0)
        sup_avg = (acc_traj[j + 1] - acc_traj[j]) / dt
        tax_violation = max(
            tax_violation,
            float(np.max(np.where(
                ramp, deta + sup_avg * cutoff.slope / c, deta
            ))),
        )

    inner = d_grid <= R - r
    sup_l2 = max(
        _masked_l2(sp.curl(u), inner) for u in traj.velocities
    )
    grad_prof = np.array([
        np.sum(_grad_samples_sq(sp.curl(u)) * inner) * grid.cell_volume
        for u in traj.velocities
    ])
    lhs = sup_l2 + float(np.sqrt(np.trapezoid(grad_prof, traj.times)))
    tax_tol = 1e-6 * cutoff.slope * max(np.max(sup_prof), 1e-300) / c

    return EnstrophyReport(
        times=traj.times,
        W=W,
        delta=delta,
        hypothesis_value=hyp,
        smallness_value=float(small),
        r_condition_value=float(r_cond),
        conclusion_lhs=lhs,
        conclusion_ratio=lhs / delta,
        w0_ratio=float(W[0] / delta**2),
        tax_violation=tax_violation,
        radius_path=radii,
        verdict=bool(np.all(np.diff(radii) <= 1e-15) and
                     tax_violation <= tax_tol),
    )


def _advect(vel: VectorField, f: VectorField) -> np.ndarray:
    """(vel . grad) f, dealiased, on coefficients."""
    grid = vel.grid
    vs = np.real(vel.samples())
    out = np.zeros((3,) + grid.shape, dtype=complex)
    for i in range(3):
        acc = np.zeros(grid.shape)
        for j in range(3):
            acc += vs[j] * np.real(sp.derivative(f.component(i), j).samples())
        out[i] = sp.dealias(sp.scalar_from_samples(grid, acc)).coeffs
    return out


def vorticity_residual(traj: Trajectory, data: Optional[DataTriple] = None,
                       eps: float = 0.0) -> np.ndarray:
    """L^2 defect of the vorticity transport-stretching equation at
    interior stored times."""
    if len(traj) < 3:
        raise ValueError("vorticity residual needs at least three samples")
    data = _data_for(traj, data)
    grid = traj.grid
    omegas = [sp.curl(u) for u in traj.velocities]
    out = np.zeros(len(traj) - 2)
    for j in range(1, len(traj) - 1):
        u = traj.velocities[j]
        om = omegas[j]
        dtc = traj.times[j + 1] - traj.times[j - 1]
        dom = (omegas[j + 1].coeffs - omegas[j - 1].coeffs) / dtc
        defect = (
            dom
            + _advect(u, om)
            - sp.laplacian(om).coeffs
            - _advect(om, u)
        )
        if eps:
            defect += eps * sp.laplacian(sp.laplacian(om)).coeffs
        if data.f:
            defect -= sp.curl(
                sp.dealias(data.f_at(traj.times[j] - traj.times[0]))
            ).coeffs
        out[j - 1] = sp.l2_norm(VectorField(grid, defect))
    return out
