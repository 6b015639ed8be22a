"""Periodic spectral grids, field containers and Fourier-side operators.

Fields live on the torus [0, L)^3 sampled on an N^3 collocation grid and are
stored as DFT coefficients with the convention

    coeff(k) = (1/N^3) sum_x e^{-2 pi i k.x/L} f(x),

i.e. ``np.fft.fftn(samples) / N**3``, so that the symbol of the Laplacian on
integer mode k is -4 pi^2 |k|^2 / L^2 and unit-period formulas hold verbatim
at L = 1.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft

__all__ = [
    "SpectralGrid",
    "ScalarField",
    "VectorField",
    "make_grid",
    "scalar_from_samples",
    "scalar_from_coeffs",
    "vector_from_samples",
    "vector_from_coeffs",
    "zero_scalar",
    "zero_vector",
    "derivative",
    "gradient",
    "divergence",
    "curl",
    "laplacian",
    "inverse_laplacian",
    "leray_project",
    "biot_savart",
    "semigroup",
    "dealias",
    "l2_norm",
    "l2_inner",
    "lp_norm",
    "sup_norm",
    "mean_mode",
    "write_field",
    "read_field",
]


@dataclass(frozen=True)
class SpectralGrid:
    """Periodic box of period L with N modes per axis.

    The wavenumber lattice is the integer cube {-N/2+1, ..., N/2}^3; the
    Nyquist plane is labelled +N/2 and is zeroed after every nonlinear
    product.
    """

    L: float
    N: int
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError(f"period L must be positive, got {self.L}")
        if self.N < 4:
            raise ValueError(f"resolution N must be >= 4, got {self.N}")
        if self.N % 2 != 0:
            raise ValueError(f"resolution N must be even, got {self.N}")
        if not (0.0 < self.dealias_fraction <= 1.0):
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def shape(self):
        return (self.N, self.N, self.N)

    @property
    def spacing(self):
        return self.L / self.N

    @property
    def cell_volume(self):
        return (self.L / self.N) ** 3

    def axis_modes(self):
        """Integer modes along one axis, Nyquist labelled +N/2."""
        k = np.fft.fftfreq(self.N, d=1.0 / self.N)
        k[self.N // 2] = self.N // 2
        return k

    def wavenumbers(self):
        """Three (N,N,N) arrays of integer modes (kx, ky, kz)."""
        return _wavenumbers(self.L, self.N)

    def k_squared(self):
        """|k|^2 on the integer lattice."""
        kx, ky, kz = self.wavenumbers()
        return kx * kx + ky * ky + kz * kz

    def laplace_symbol(self):
        """Fourier symbol of the Laplacian, -4 pi^2 |k|^2 / L^2."""
        return -4.0 * np.pi**2 * self.k_squared() / self.L**2

    def dealias_mask(self):
        """Mask keeping |k_i| <= dealias_fraction * N/2 along each axis."""
        return _dealias_mask(self.L, self.N, self.dealias_fraction)

    def dealias_limit(self):
        return int(np.floor(self.dealias_fraction * self.N / 2.0))

    def nodes(self):
        """Physical collocation nodes as three (N,N,N) arrays."""
        x = np.arange(self.N) * self.spacing
        return np.meshgrid(x, x, x, indexing="ij")


@lru_cache(maxsize=32)
def _wavenumbers(L, N):
    k = np.fft.fftfreq(N, d=1.0 / N)
    k[N // 2] = N // 2
    return np.meshgrid(k, k, k, indexing="ij")


@lru_cache(maxsize=32)
def _deriv_modes(L, N):
    """Wavenumber lattice with the Nyquist plane zeroed (derivative modes)."""
    k = np.fft.fftfreq(N, d=1.0 / N)
    k[N // 2] = 0.0
    return np.meshgrid(k, k, k, indexing="ij")


@lru_cache(maxsize=32)
def _dealias_mask(L, N, frac):
    k = np.abs(np.fft.fftfreq(N, d=1.0 / N))
    k[N // 2] = N // 2
    cut = np.floor(frac * N / 2.0)
    keep = k <= cut
    return np.ix_(keep, keep, keep), np.einsum(
        "i,j,k->ijk", keep, keep, keep
    ).astype(bool)


@dataclass(frozen=True)
class ScalarField:
    """Real-valued scalar function on the torus, stored spectrally."""

    grid: SpectralGrid
    coeffs: np.ndarray = field(repr=False)

    def samples(self):
        return np.real(scipy.fft.ifftn(self.coeffs) * self.grid.N**3)

    def mean(self):
        return float(np.real(self.coeffs[0, 0, 0]))


@dataclass(frozen=True)
class VectorField:
    """3-vector field on the torus; coeffs has shape (3, N, N, N)."""

    grid: SpectralGrid
    coeffs: np.ndarray = field(repr=False)
    divergence_free: bool = False

    def samples(self):
        return np.real(scipy.fft.ifftn(self.coeffs, axes=(1, 2, 3)) * self.grid.N**3)

    def mean(self):
        return np.real(self.coeffs[:, 0, 0, 0]).copy()

    def component(self, i):
        return ScalarField(self.grid, self.coeffs[i])


def make_grid(L, N, dealias_fraction=2.0 / 3.0):
    """Build a SpectralGrid; rejects odd or tiny N and nonpositive L."""
    return SpectralGrid(float(L), int(N), dealias_fraction)


def _enforce_hermitian(coeffs):
    """Project onto Hermitian-symmetric coefficients (real-valued field)."""
    n = coeffs.shape[-1]
    flipped = np.conj(coeffs[..., ::-1, ::-1, ::-1])
    flipped = np.roll(flipped, shift=(1, 1, 1), axis=(-3, -2, -1))
    return 0.5 * (coeffs + flipped)


def scalar_from_samples(grid, samples):
    samples = np.asarray(samples, dtype=float)
    if samples.shape != grid.shape:
        raise ValueError("sample shape does not match grid")
    return ScalarField(grid, scipy.fft.fftn(samples) / grid.N**3)


def scalar_from_coeffs(grid, coeffs, hermitianize=False):
    coeffs = np.asarray(coeffs, dtype=complex)
    if hermitianize:
        coeffs = _enforce_hermitian(coeffs)
    return ScalarField(grid, coeffs)


def vector_from_samples(grid, samples):
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (3,) + grid.shape:
        raise ValueError("sample shape does not match grid")
    return VectorField(grid, scipy.fft.fftn(samples, axes=(1, 2, 3)) / grid.N**3)


def vector_from_coeffs(grid, coeffs, divergence_free=False, hermitianize=False):
    coeffs = np.asarray(coeffs, dtype=complex)
    if hermitianize:
        coeffs = _enforce_hermitian(coeffs)
    return VectorField(grid, coeffs, divergence_free)


def zero_scalar(grid):
    return ScalarField(grid, np.zeros(grid.shape, dtype=complex))


def zero_vector(grid):
    return VectorField(grid, np.zeros((3,) + grid.shape, dtype=complex), True)


def _axis_multiplier(grid, axis, order):
    """(2 pi i k_axis / L)^order with the Nyquist plane zeroed for odd order."""
    k = grid.axis_modes()
    if order % 2 == 1:
        k = k.copy()
        k[grid.N // 2] = 0.0
    mult = (2.0j * np.pi * k / grid.L) ** order
    shape = [1, 1, 1]
    shape[axis] = grid.N
    return mult.reshape(shape)


def derivative(f, axis, order=1):
    """Spectral partial derivative along axis 0..2 of the given order."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if axis not in (0, 1, 2):
        raise ValueError("axis must be 0, 1 or 2")
    mult = _axis_multiplier(f.grid, axis, order)
    if isinstance(f, VectorField):
        return VectorField(f.grid, f.coeffs * mult[np.newaxis], f.divergence_free)
    return ScalarField(f.grid, f.coeffs * mult)


def gradient(f):
    """Gradient of a scalar field as a VectorField."""
    comps = [derivative(f, ax).coeffs for ax in range(3)]
    return VectorField(f.grid, np.stack(comps))


def divergence(u):
    """Spectral divergence of a vector field."""
    out = sum(derivative(u.component(i), i).coeffs for i in range(3))
    return ScalarField(u.grid, out)


def curl(u):
    """Spectral curl of a vector field."""
    d = lambda i, ax: derivative(u.component(i), ax).coeffs
    cx = d(2, 1) - d(1, 2)
    cy = d(0, 2) - d(2, 0)
    cz = d(1, 0) - d(0, 1)
    return VectorField(u.grid, np.stack([cx, cy, cz]), divergence_free=True)


def laplacian(f):
    sym = f.grid.laplace_symbol()
    if isinstance(f, VectorField):
        return VectorField(f.grid, f.coeffs * sym[np.newaxis], f.divergence_free)
    return ScalarField(f.grid, f.coeffs * sym)


def inverse_laplacian(f):
    """Inverse Laplacian: multiplier -L^2/(4 pi^2 |k|^2) for k != 0, zero mean."""
    grid = f.grid
    k2 = grid.k_squared()
    mult = np.zeros_like(k2, dtype=float)
    nz = k2 > 0
    mult[nz] = -grid.L**2 / (4.0 * np.pi**2 * k2[nz])
    if isinstance(f, VectorField):
        return VectorField(grid, f.coeffs * mult[np.newaxis], f.divergence_free)
    return ScalarField(grid, f.coeffs * mult)


def leray_project(u):
    """Leray projection I - k k^T/|k|^2 on k != 0; mean mode passes through."""
    grid = u.grid
    kx, ky, kz = _deriv_modes(grid.L, grid.N)
    k2 = kx * kx + ky * ky + kz * kz
    k2safe = np.where(k2 > 0, k2, 1.0)
    kdotu = (kx * u.coeffs[0] + ky * u.coeffs[1] + kz * u.coeffs[2]) / k2safe
    out = np.stack(
        [
            u.coeffs[0] - kx * kdotu,
            u.coeffs[1] - ky * kdotu,
            u.coeffs[2] - kz * kdotu,
        ]
    )
    mean_zero = np.max(np.abs(u.coeffs[:, 0, 0, 0])) == 0.0
    return VectorField(grid, out, divergence_free=mean_zero)


def biot_savart(omega, tol=1e-8):
    """Velocity from vorticity via the curl of the inverse Laplacian.

    For omega = curl(u) with u mean-zero and divergence-free this recovers u:
    curl(omega) = -Delta(u), so u = -inverse_laplacian(curl(omega)).  Rejects
    input with a nonzero mean mode.
    """
    scale = np.max(np.abs(omega.coeffs)) or 1.0
    if np.max(np.abs(omega.coeffs[:, 0, 0, 0])) > tol * scale:
        raise ValueError("biot_savart requires a mean-zero vorticity field")
    out = inverse_laplacian(curl(omega))
    return VectorField(out.grid, -out.coeffs, divergence_free=True)


def semigroup(f, t, eps=0.0):
    """Heat semigroup e^{t(Delta - eps Delta^2)} as a Fourier multiplier."""
    if t < 0:
        raise ValueError("semigroup time must be nonnegative")
    if eps < 0:
        raise ValueError("hyperdissipation must be nonnegative")
    grid = f.grid
    k2 = grid.k_squared()
    sym = -4.0 * np.pi**2 * k2 / grid.L**2
    if eps:
        sym = sym - eps * 16.0 * np.pi**4 * k2**2 / grid.L**4
    mult = np.exp(t * sym)
    if isinstance(f, VectorField):
        return VectorField(grid, f.coeffs * mult[np.newaxis], f.divergence_free)
    return ScalarField(grid, f.coeffs * mult)


@lru_cache(maxsize=32)
def _keep_mask(L, N, frac):
    """Combined 2/3-rule and Nyquist-free retention mask."""
    _, mask = _dealias_mask(L, N, frac)
    k = np.abs(np.fft.fftfreq(N, d=1.0 / N))
    k[N // 2] = N // 2
    nyq = k < N // 2
    return mask & np.einsum("i,j,k->ijk", nyq, nyq, nyq).astype(bool)


def dealias(f):
    """2/3-rule truncation; also zeroes the Nyquist planes."""
    grid = f.grid
    keep = _keep_mask(grid.L, grid.N, grid.dealias_fraction)
    if isinstance(f, VectorField):
        return VectorField(grid, f.coeffs * keep[np.newaxis], f.divergence_free)
    return ScalarField(grid, f.coeffs * keep)


def multiply(f, g):
    """Dealiased pointwise product of two scalar fields."""
    if f.grid != g.grid:
        raise ValueError("grid mismatch in product")
    prod = scalar_from_samples(f.grid, f.samples() * g.samples())
    return dealias(prod)


def l2_norm(f):
    """L^2 norm over the box: L^3 * sum |coeff|^2 by Plancherel."""
    return float(np.sqrt(f.grid.L**3 * np.sum(np.abs(f.coeffs) ** 2)))


def l2_inner(f, g):
    """Real L^2 inner product over the box."""
    return float(np.real(f.grid.L**3 * np.sum(f.coeffs * np.conj(g.coeffs))))


def lp_norm(f, p):
    """Grid-quadrature L^p norm (p = inf uses the oversampled sup)."""
    if p == np.inf:
        return sup_norm(f)
    s = f.samples()
    if isinstance(f, VectorField):
        mag = np.sqrt(np.sum(s * s, axis=0))
    else:
        mag = np.abs(s)
    return float((np.sum(mag**p) * f.grid.cell_volume) ** (1.0 / p))


def _pad_axis(arr, N, M, ax):
    """Zero-pad one fftn-layout axis from N to M bins, splitting the Nyquist.

    The +N/2 coefficient is shared evenly between the +-N/2 bins of the
    padded spectrum so that Hermitian symmetry is preserved.
    """
    half = N // 2
    arr = np.moveaxis(arr, ax, -1)
    out = np.zeros(arr.shape[:-1] + (M,), dtype=arr.dtype)
    out[..., :half] = arr[..., :half]
    out[..., half] = 0.5 * arr[..., half]
    out[..., M - half] = 0.5 * arr[..., half]
    out[..., M - half + 1:] = arr[..., half + 1:]
    return np.moveaxis(out, -1, ax)


def _oversampled(coeffs, N, factor=2):
    """Zero-pad fftn-layout coefficients to factor*N, splitting the Nyquist."""
    M = factor * N
    out = coeffs
    for ax in range(-3, 0):
        out = _pad_axis(out, N, M, ax)
    return out


def sup_norm(f, factor=2):
    """Sup norm evaluated on a factor-times oversampled physical grid."""
    grid = f.grid
    over = _oversampled(_enforce_hermitian(f.coeffs), grid.N, factor)
    M = factor * grid.N
    axes = (-3, -2, -1)
    half = np.ascontiguousarray(over[..., : M // 2 + 1])
    s = scipy.fft.irfftn(half, s=(M, M, M), axes=axes) * M**3
    if isinstance(f, VectorField):
        mag = np.sqrt(np.sum(s * s, axis=0))
    else:
        mag = np.abs(s)
    return float(np.max(mag))


def mean_mode(f):
    if isinstance(f, VectorField):
        return np.real(f.coeffs[:, 0, 0, 0]).copy()
    return float(np.real(f.coeffs[0, 0, 0]))


# --- field dump format -------------------------------------------------------
#
# Text header (latin-1): "nslab-field", "L=..", "N=..", "components=..",
# "time=..", "data", followed by raw little-endian float64 physical samples in
# x-fastest order, one component after another.


def write_field(path, f, time=0.0):
    ncomp = 3 if isinstance(f, VectorField) else 1
    header = (
        f"nslab-field\nL={f.grid.L!r}\nN={f.grid.N}\n"
        f"components={ncomp}\ntime={time!r}\ndata\n"
    )
    s = f.samples()
    if ncomp == 1:
        s = s[np.newaxis]
    with open(path, "wb") as fh:
        fh.write(header.encode("latin-1"))
        for c in range(ncomp):
            fh.write(np.ravel(s[c], order="F").astype("<f8").tobytes())


def read_field(path):
    """Read a field dump; returns (field, time)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    end = raw.index(b"data\n") + len(b"data\n")
    lines = raw[:end].decode("latin-1").strip().splitlines()
    if lines[0] != "nslab-field":
        raise ValueError(f"{path}: not an nslab field dump")
    meta = dict(line.split("=", 1) for line in lines[1:-1])
    L, N = float(meta["L"]), int(meta["N"])
    ncomp, time = int(meta["components"]), float(meta["time"])
    grid = make_grid(L, N)
    data = np.frombuffer(raw[end:], dtype="<f8")
    if data.size != ncomp * N**3:
        raise ValueError(f"{path}: truncated field dump")
    comps = data.reshape(ncomp, N**3)
    samples = np.stack([comps[c].reshape((N, N, N), order="F") for c in range(ncomp)])
    if ncomp == 1:
        return scalar_from_samples(grid, samples[0]), time
    return vector_from_samples(grid, samples), time
