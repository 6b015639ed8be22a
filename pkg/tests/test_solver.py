"""Time stepping: the bilinear form, exact closed-form flows, the
fixed-point iteration, and the equation residual."""

import numpy as np
import pytest

from nslab import spectral as sp
from nslab.solver import (
    BlowupVerdict,
    SolverConfig,
    bilinear_B,
    continue_max,
    evolve,
    normalised_pressure,
    picard_solve,
    residual,
)
from nslab.spaces import DataTriple, xs_distance

from conftest import random_divfree


def shear_data(grid, amp=1.0, T=0.01):
    z = grid.nodes()[2]
    samples = np.zeros((3,) + grid.shape)
    samples[0] = amp * np.sin(2.0 * np.pi * z / grid.L)
    return DataTriple(sp.vector_from_samples(grid, samples), [], T)


def taylor_green_data(grid, amp=1.0, T=0.01):
    x, y, _ = grid.nodes()
    tau = 2.0 * np.pi / grid.L
    samples = np.zeros((3,) + grid.shape)
    samples[0] = amp * np.sin(tau * x) * np.cos(tau * y)
    samples[1] = -amp * np.cos(tau * x) * np.sin(tau * y)
    return DataTriple(sp.vector_from_samples(grid, samples), [], T)


# ---------------------------------------------------------------------------
# configuration validation


def test_config_rejects_bad_dt():
    with pytest.raises(ValueError):
        SolverConfig(dt=0.0)


def test_config_rejects_bad_store_every():
    with pytest.raises(ValueError):
        SolverConfig(store_every=0)


def test_config_rejects_negative_hyperdissipation():
    with pytest.raises(ValueError):
        SolverConfig(eps=-1e-4)


def test_blowup_verdict_consistency():
    with pytest.raises(ValueError):
        BlowupVerdict(completed=True, T_star=0.5, final_h1=1.0)
    with pytest.raises(ValueError):
        BlowupVerdict(completed=False, T_star=None, final_h1=1.0)


# ---------------------------------------------------------------------------
# bilinear form


def test_bilinear_is_symmetric(grid16):
    u = random_divfree(grid16, seed=1, kmax=4)
    v = random_divfree(grid16, seed=2, kmax=4)
    buv = bilinear_B(u, v)
    bvu = bilinear_B(v, u)
    assert np.max(np.abs(buv.coeffs - bvu.coeffs)) < 1e-14


def test_bilinear_is_energy_neutral(grid16):
    # for band-limited divergence-free u the transport term moves energy
    # between modes without creating any: <B(u,u), u> = 0
    u = random_divfree(grid16, seed=3, kmax=4)
    b = bilinear_B(u, u)
    inner = sp.l2_inner(b, u)
    scale = sp.l2_norm(u) ** 2 * sp.sup_norm(u)
    assert abs(inner) < 1e-12 * max(scale, 1.0)


def test_bilinear_grid_mismatch_raises(grid16, grid8):
    u = random_divfree(grid16, seed=4)
    v = random_divfree(grid8, seed=5)
    with pytest.raises(ValueError):
        bilinear_B(u, v)


def test_pressure_is_mean_zero(grid16):
    u = random_divfree(grid16, seed=6, kmax=4)
    p = normalised_pressure(u)
    assert abs(p.coeffs[0, 0, 0]) < 1e-14


def test_pressure_of_unidirectional_shear_vanishes(grid16):
    data = shear_data(grid16)
    p = normalised_pressure(data.u0)
    assert sp.l2_norm(p) < 1e-13


def test_pressure_solves_its_poisson_equation(grid16):
    u = random_divfree(grid16, seed=7, kmax=4)
    p = normalised_pressure(u)
    # div of the momentum equation: Lap p = div B(u, u)
    lhs = sp.laplacian(p)
    rhs = sp.divergence(bilinear_B(u, u))
    assert np.max(np.abs(lhs.coeffs - rhs.coeffs)) < 1e-12 * max(
        np.max(np.abs(rhs.coeffs)), 1.0
    )


# ---------------------------------------------------------------------------
# closed-form flows


def test_shear_flow_decays_exactly(grid16):
    data = shear_data(grid16, amp=1.3, T=0.02)
    traj = evolve(data, SolverConfig(dt=1e-3))
    # the nonlinearity vanishes identically, so the exponential
    # integrator reproduces the heat decay to roundoff
    z = grid16.nodes()[2]
    factor = np.exp(-4.0 * np.pi**2 * traj.times[-1])
    expect = 1.3 * factor * np.sin(2.0 * np.pi * z)
    got = np.real(traj.velocities[-1].samples())
    assert np.max(np.abs(got[0] - expect)) < 1e-12
    assert np.max(np.abs(got[1:])) < 1e-12


def test_planar_vortex_array_decays_exactly(grid16):
    data = taylor_green_data(grid16, amp=0.9, T=0.02)
    traj = evolve(data, SolverConfig(dt=1e-3))
    tau = 2.0 * np.pi
    t = traj.times[-1]
    x, y, _ = grid16.nodes()
    factor = np.exp(-2.0 * tau**2 * t)
    got = np.real(traj.velocities[-1].samples())
    assert np.max(np.abs(got[0] - 0.9 * factor * np.sin(tau * x)
                         * np.cos(tau * y))) < 1e-11
    assert np.max(np.abs(got[2])) < 1e-12


def test_planar_vortex_array_pressure_closed_form(grid16):
    data = taylor_green_data(grid16, amp=0.9, T=0.02)
    traj = evolve(data, SolverConfig(dt=1e-3))
    tau = 2.0 * np.pi
    t = traj.times[-1]
    x, y, _ = grid16.nodes()
    expect = 0.25 * 0.9**2 * np.exp(-4.0 * tau**2 * t) * (
        np.cos(2.0 * tau * x) + np.cos(2.0 * tau * y)
    )
    got = np.real(traj.pressures[-1].samples())
    assert np.max(np.abs(got - expect)) < 1e-11


# ---------------------------------------------------------------------------
# stepping mechanics


def test_store_every_subsamples_but_keeps_endpoint(grid8):
    data = DataTriple(random_divfree(grid8, seed=8, kmax=2), [], 0.01)
    traj = evolve(data, SolverConfig(dt=1e-3, store_every=3))
    assert traj.times[0] == 0.0
    assert np.isclose(traj.times[-1], 0.01)
    assert np.allclose(np.diff(traj.times)[:-1], 3e-3)


def test_energy_decreases_without_forcing(short_run):
    _, _, traj = short_run
    assert np.all(np.diff(traj.diagnostics.energy) < 0.0)


def test_blowup_cap_reports_incomplete_development(grid8):
    data = DataTriple(random_divfree(grid8, seed=9, kmax=2), [], 0.01)
    _, verdict = continue_max(data, SolverConfig(dt=1e-3,
                                                 blowup_threshold=1e-12))
    assert not verdict.completed
    assert verdict.T_star is not None
    assert verdict.final_h1 > 1e-12


def test_residual_is_small_on_a_solver_run(short_run):
    data, cfg, traj = short_run
    res = residual(traj, data)
    # central differencing carries its own O(dt^2) error floor, largest
    # while the fast modes still move; the tail settles well below it
    assert np.max(res) < 0.5
    assert res[-1] < 0.02
    assert len(res) == len(traj) - 2


def test_residual_needs_three_samples(grid8):
    from nslab.spaces import Trajectory

    u = random_divfree(grid8, seed=10, kmax=2)
    data = DataTriple(u, [], 1.0)
    traj = Trajectory(np.array([0.0, 0.1]), [u, u], [])
    with pytest.raises(ValueError):
        residual(traj, data)


def test_residual_shrinks_with_dt(grid16):
    data = taylor_green_data(grid16, amp=0.5, T=0.01)
    res = {}
    for dt in (2e-3, 1e-3):
        traj = evolve(data, SolverConfig(dt=dt))
        res[dt] = float(np.max(residual(traj, data)))
    # the probe is second order, so halving dt should cut it near 4x
    assert res[1e-3] < 0.4 * res[2e-3]


# ---------------------------------------------------------------------------
# fixed-point iteration


def test_picard_matches_evolve_for_small_data(grid16):
    u = random_divfree(grid16, seed=11, kmax=2, amplitude=0.2)
    data = DataTriple(u, [], 0.01)
    cfg = SolverConfig(dt=5e-4)
    a = picard_solve(data, cfg)
    b = evolve(data, cfg)
    assert xs_distance(a, b) < 1e-8
    assert a.meta["contraction_factor"] <= 0.5
    assert a.meta["picard_iterations"] >= 2


def test_picard_rejects_large_data(grid16):
    u = random_divfree(grid16, seed=12, kmax=2, amplitude=10.0)
    data = DataTriple(u, [], 1.0)
    with pytest.raises(ValueError, match="smallness"):
        picard_solve(data, SolverConfig(dt=1e-3))


def test_continue_max_completes_on_small_data(grid8):
    u = random_divfree(grid8, seed=13, kmax=2, amplitude=0.1)
    data = DataTriple(u, [], 0.005)
    traj, verdict = continue_max(data, SolverConfig(dt=5e-4))
    assert verdict.completed
    assert verdict.T_star is None
    assert np.isclose(traj.times[-1], data.T, rtol=1e-10)
    assert verdict.final_h1 > 0.0


# ---------------------------------------------------------------------------
# hyperdissipation


def test_hyperdissipation_decays_single_mode_exactly(grid16):
    data = shear_data(grid16, amp=1.0, T=0.01)
    eps = 1e-3
    traj = evolve(data, SolverConfig(dt=1e-3, eps=eps))
    k2 = 4.0 * np.pi**2
    rate = k2 + eps * k2**2
    z = grid16.nodes()[2]
    expect = np.exp(-rate * traj.times[-1]) * np.sin(2.0 * np.pi * z)
    got = np.real(traj.velocities[-1].samples())[0]
    assert np.max(np.abs(got - expect)) < 1e-12


def test_hyperdissipation_loses_energy_faster(grid16):
    data = DataTriple(random_divfree(grid16, seed=14, kmax=3), [], 0.01)
    plain = evolve(data, SolverConfig(dt=1e-3))
    hyper = evolve(data, SolverConfig(dt=1e-3, eps=1e-3))
    assert hyper.diagnostics.energy[-1] < plain.diagnostics.energy[-1]
