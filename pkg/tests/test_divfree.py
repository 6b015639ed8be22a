"""Divergence-free truncation to an annulus and the point samplers."""

import numpy as np
import pytest

from nslab import spectral as sp
from nslab.divfree import (
    AnnulusSpec,
    flux_check,
    localize_divfree,
    spectral_sampler,
    to_torus_field,
    torus_sampler,
)
from nslab.spaces import sobolev_norm

from conftest import random_divfree, random_vector

CENTER = (0.5, 0.5, 0.5)
SPEC = AnnulusSpec(0.08, 0.16, 0.30, 0.40, CENTER)


def smooth_field(grid, seed=0, amplitude=1.0):
    return random_divfree(grid, seed=seed, kmax=4, slope=-2.5,
                          amplitude=amplitude)


# ---------------------------------------------------------------------------
# annulus validation


def test_annulus_radii_must_increase():
    with pytest.raises(ValueError):
        AnnulusSpec(0.2, 0.1, 0.3, 0.4)
    with pytest.raises(ValueError):
        AnnulusSpec(0.0, 0.1, 0.3, 0.4)


def test_annulus_cutoff_profile():
    spec = AnnulusSpec(0.1, 0.2, 0.3, 0.4)
    assert np.allclose(spec.eta(np.array([0.12, 0.2])), 1.0)
    assert np.all(spec.eta(np.array([0.3, 0.35])) == 0.0)


# ---------------------------------------------------------------------------
# point samplers


def test_spectral_sampler_reproduces_grid_nodes(grid16):
    u = smooth_field(grid16, seed=1)
    sampler = spectral_sampler(u)
    nodes = np.stack(grid16.nodes(), axis=-1).reshape(-1, 3)[:200]
    got = sampler(nodes)
    expect = np.real(u.samples()).reshape(3, -1).T[:200]
    assert np.max(np.abs(got - expect)) < 1e-12


def test_spectral_sampler_is_periodic(grid16):
    u = smooth_field(grid16, seed=2)
    sampler = spectral_sampler(u)
    pts = np.array([[0.13, 0.57, 0.91]])
    assert np.max(np.abs(sampler(pts) - sampler(pts + grid16.L))) < 1e-12


def test_torus_sampler_approximates_the_spectral_one(grid16):
    u = smooth_field(grid16, seed=3)
    exact = spectral_sampler(u)
    approx = torus_sampler(u, oversample=8)
    rng = np.random.default_rng(0)
    pts = rng.uniform(0.0, 1.0, size=(100, 3))
    err = np.max(np.abs(exact(pts) - approx(pts)))
    scale = np.max(np.abs(exact(pts)))
    assert err < 5e-3 * scale


def test_flux_through_spheres_vanishes_for_divfree_fields(grid16):
    u = smooth_field(grid16, seed=4)
    sampler = spectral_sampler(u)
    for r in (0.12, 0.25, 0.38):
        flux = flux_check(sampler, r, center=CENTER, l_max=24)
        assert abs(flux) < 1e-10


# ---------------------------------------------------------------------------
# the truncation itself


@pytest.fixture(scope="module")
def localized(grid32):
    u = smooth_field(grid32, seed=5)
    sph = localize_divfree(spectral_sampler(u), SPEC, l_max=24)
    return u, sph


def test_truncation_agrees_on_the_inner_annulus(localized):
    u, sph = localized
    sampler = spectral_sampler(u)
    rng = np.random.default_rng(1)
    # random points with radii inside [R1, R2]
    dirs = rng.standard_normal((200, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = rng.uniform(SPEC.R1, SPEC.R2, size=(200, 1))
    pts = np.asarray(CENTER) + dirs * radii
    err = np.max(np.abs(sph.evaluate(pts) - sampler(pts)))
    scale = np.max(np.abs(sampler(pts)))
    assert err < 1e-6 * scale


def test_truncation_vanishes_on_the_outer_annulus(localized):
    u, sph = localized
    rng = np.random.default_rng(2)
    dirs = rng.standard_normal((200, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = rng.uniform(SPEC.R3, SPEC.R4, size=(200, 1))
    pts = np.asarray(CENTER) + dirs * radii
    vals = sph.evaluate(pts)
    scale = max(float(np.max(np.abs(sph.a))), 1e-300)
    # the radial interpolation of the cutoff profile leaves a ringing
    # floor well below the per-mille level the construction promises
    assert np.max(np.abs(vals)) < 1e-6 * max(scale, 1.0)


def test_truncation_stays_divergence_free(localized):
    _, sph = localized
    assert sph.divergence_defect() < 1e-6
    assert sph.flux_fraction < 1e-8
    assert sph.tail_fraction() < 1e-6


def test_truncation_is_linear(grid32):
    a = smooth_field(grid32, seed=6)
    b = smooth_field(grid32, seed=7)
    combo = sp.vector_from_coeffs(grid32, 2.0 * a.coeffs - 0.5 * b.coeffs,
                                  divergence_free=True)
    sph_a = localize_divfree(spectral_sampler(a), SPEC, l_max=24)
    sph_b = localize_divfree(spectral_sampler(b), SPEC, l_max=24)
    sph_c = localize_divfree(spectral_sampler(combo), SPEC, l_max=24)
    expect = 2.0 * sph_a.a - 0.5 * sph_b.a
    scale = max(float(np.max(np.abs(expect))), 1e-300)
    assert np.max(np.abs(sph_c.a - expect)) < 1e-10 * scale
    expect_B = 2.0 * sph_a.B - 0.5 * sph_b.B
    assert np.max(np.abs(sph_c.B - expect_B)) < 1e-10 * max(
        float(np.max(np.abs(expect_B))), 1e-300)


def test_truncation_rejects_divergent_input(grid16):
    v = random_vector(grid16, seed=8, kmax=4)
    assert sp.l2_norm(sp.divergence(v)) > 1e-6
    with pytest.raises(ValueError, match="divergence-free|flux"):
        localize_divfree(spectral_sampler(v), SPEC, l_max=24)


def test_truncation_flags_unresolved_angular_content(grid32):
    u = smooth_field(grid32, seed=9)
    with pytest.raises(ValueError):
        localize_divfree(spectral_sampler(u), SPEC, l_max=4)


def test_torus_realisation_interpolates_the_annulus_field(localized):
    u, sph = localized
    grid = sp.make_grid(1.0, 16)
    back = to_torus_field(sph, grid)
    assert sobolev_norm(back, 0.0) > 0.0
    # band-limited realisation passes through the annulus values at the
    # grid nodes exactly
    nodes = np.stack(grid.nodes(), axis=-1).reshape(-1, 3)
    expect = sph.evaluate(nodes).T.reshape((3,) + grid.shape)
    got = np.real(back.samples())
    assert np.max(np.abs(got - expect)) < 1e-12
