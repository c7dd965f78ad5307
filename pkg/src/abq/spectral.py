"""Fourier representation of real scalar fields on the periodic box [0, 2pi)^2.

Coefficients follow the convention f(x) = sum_k c_k exp(i k.x), so a unit
cosine carries amplitude 1/2 in each of its two conjugate modes.  Derivatives
and the vorticity inversion act mode-wise; products are always formed in
physical space by the callers that need them (with 2/3-rule dealiasing).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import fft as _fftpkg

__all__ = [
    "TWO_PI",
    "fft2",
    "ifft2",
    "Grid",
    "GridMismatchError",
    "MeanModeError",
    "SpectralField",
    "NormSet",
    "hermitian_symmetrize",
    "velocity_from_vorticity",
    "solve_poisson",
    "norms",
    "integral_product",
    "x_tail_fraction",
]

TWO_PI = 2.0 * np.pi


def _fft_workers() -> int:
    """Thread count for the FFT backend, from ABQ_THREADS (default 1).
    Transforms are computed row-independently, so the result does not
    depend on the worker count."""
    try:
        w = int(os.environ.get("ABQ_THREADS", "1"))
    except ValueError:
        w = 1
    return max(1, w)


def fft2(samples: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2-D transform (backend wrapper)."""
    return _fftpkg.fft2(samples, workers=_fft_workers())


def ifft2(coeffs: np.ndarray) -> np.ndarray:
    """Unnormalized-inverse 2-D transform (backend wrapper)."""
    return _fftpkg.ifft2(coeffs, workers=_fft_workers())


class GridMismatchError(ValueError):
    """Raised when fields living on different grids are combined."""


class MeanModeError(ValueError):
    """Raised when an operation requires a mean-zero field but got one with
    a nonzero k=0 mode (e.g. vorticity inversion or a Poisson solve)."""


@dataclass(frozen=True)
class Grid:
    """Uniform collocation grid with nx*ny points on [0, 2pi)^2.

    Wavenumbers are integers running over {-n/2+1, ..., n/2} per axis (the
    Nyquist mode carries the single index n/2; numpy labels the same mode
    -n/2, which is equivalent mod n).  Derivative operators zero the Nyquist
    mode of the axis they differentiate, which keeps them skew-adjoint and
    real-to-real.
    """

    nx: int
    ny: int

    def __post_init__(self):
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if n < 8 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")

    # --- geometry -------------------------------------------------------
    @cached_property
    def x(self) -> np.ndarray:
        """Collocation coordinates along x, shape (nx, 1)."""
        return (TWO_PI * np.arange(self.nx) / self.nx).reshape(self.nx, 1)

    @cached_property
    def y(self) -> np.ndarray:
        """Collocation coordinates along y, shape (1, ny)."""
        return (TWO_PI * np.arange(self.ny) / self.ny).reshape(1, self.ny)

    @property
    def cell_area(self) -> float:
        return (TWO_PI / self.nx) * (TWO_PI / self.ny)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    # --- wavenumbers ----------------------------------------------------
    @cached_property
    def kx(self) -> np.ndarray:
        """Wavenumbers along x, shape (nx, 1) for broadcasting."""
        return np.fft.fftfreq(self.nx, d=1.0 / self.nx).reshape(self.nx, 1)

    @cached_property
    def ky(self) -> np.ndarray:
        """Wavenumbers along y, shape (1, ny)."""
        return np.fft.fftfreq(self.ny, d=1.0 / self.ny).reshape(1, self.ny)

    @cached_property
    def k2(self) -> np.ndarray:
        """|k|^2 on the full (nx, ny) mode grid."""
        return self.kx**2 + self.ky**2

    @cached_property
    def inv_k2(self) -> np.ndarray:
        """1/|k|^2 with the k=0 entry set to zero (mean modes are handled
        separately by every operator that uses this)."""
        k2 = self.k2.copy()
        k2[0, 0] = 1.0
        out = 1.0 / k2
        out[0, 0] = 0.0
        return out

    @cached_property
    def nyquist_x(self) -> np.ndarray:
        return (np.abs(self.kx) == self.nx // 2)

    @cached_property
    def nyquist_y(self) -> np.ndarray:
        return (np.abs(self.ky) == self.ny // 2)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: True where |kx| <= nx/3 and |ky| <= ny/3."""
        return (np.abs(self.kx) <= self.nx / 3.0) & (np.abs(self.ky) <= self.ny / 3.0)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=np.complex128)


def _negated_index(n: int) -> np.ndarray:
    # index permutation sending mode k to mode -k (mod n)
    return (-np.arange(n)) % n


def hermitian_symmetrize(coeffs: np.ndarray) -> np.ndarray:
    """Project a coefficient array onto the Hermitian-symmetric subspace
    (the transforms of real fields): c(k) <- (c(k) + conj(c(-k)))/2."""
    nx, ny = coeffs.shape
    mirrored = coeffs[np.ix_(_negated_index(nx), _negated_index(ny))]
    return 0.5 * (coeffs + np.conj(mirrored))


@dataclass(frozen=True)
class SpectralField:
    """A real scalar field on a Grid, stored as complex Fourier coefficients.

    Instances are treated as immutable: every operation returns a new field.
    The coefficient array is indexed [kx, ky] in numpy fft ordering.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    # --- constructors ---------------------------------------------------
    @classmethod
    def from_physical(cls, grid: Grid, samples: np.ndarray) -> "SpectralField":
        """Forward transform of real collocation samples.

        Hermitian symmetry is enforced explicitly so downstream mode-wise
        algebra cannot drift off the real subspace.
        """
        samples = np.asarray(samples, dtype=np.float64)
        if samples.shape != grid.shape:
            raise ValueError(
                f"sample shape {samples.shape} does not match grid {grid.shape}"
            )
        coeffs = fft2(samples) / (grid.nx * grid.ny)
        return cls(grid, hermitian_symmetrize(coeffs))

    @classmethod
    def from_coeffs(cls, grid: Grid, coeffs: np.ndarray) -> "SpectralField":
        return cls(grid, np.asarray(coeffs, dtype=np.complex128))

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, grid.zeros())

    # --- basic ops ------------------------------------------------------
    def to_physical(self) -> np.ndarray:
        """Inverse transform; returns real float64 samples."""
        g = self.grid
        return ifft2(self.coeffs * (g.nx * g.ny)).real

    def derivative(self, axis: str) -> "SpectralField":
        """Spectral partial derivative along "x" or "y".

        Multiplies by i*k and zeroes the Nyquist mode of the differentiated
        axis (the odd multiplier has no Hermitian partner there).
        """
        g = self.grid
        if axis == "x":
            mult = 1j * np.where(g.nyquist_x, 0.0, g.kx)
        elif axis == "y":
            mult = 1j * np.where(g.nyquist_y, 0.0, g.ky)
        else:
            raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
        return SpectralField(g, self.coeffs * mult)

    def dealias(self) -> "SpectralField":
        """Zero every mode with |kx| > nx/3 or |ky| > ny/3 (2/3 rule)."""
        return SpectralField(self.grid, self.coeffs * self.grid.dealias_mask)

    def mean(self) -> float:
        return float(self.coeffs[0, 0].real)

    def l2(self) -> float:
        """L^2 norm over [0, 2pi)^2 via Parseval."""
        return TWO_PI * float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def hermitian_defect(self) -> float:
        """Max deviation of the coefficients from Hermitian symmetry."""
        return float(np.max(np.abs(self.coeffs - hermitian_symmetrize(self.coeffs))))

    def _require_same_grid(self, other: "SpectralField") -> None:
        if self.grid is not other.grid and self.grid != other.grid:
            raise GridMismatchError(
                f"fields live on different grids: {self.grid.shape} vs {other.grid.shape}"
            )


def velocity_from_vorticity(omega: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Invert omega = curl u for a divergence-free velocity on the torus.

    u1_hat = i ky omega_hat / |k|^2,  u2_hat = -i kx omega_hat / |k|^2, with
    the k=0 mode of the velocity set to zero (zero-mean gauge).  Requires a
    mean-zero vorticity; the Nyquist modes of the numerator axis are zeroed
    like every other odd multiplier.
    """
    g = omega.grid
    scale = max(1.0, omega.l2())
    if abs(omega.coeffs[0, 0]) > 1e-12 * scale:
        raise MeanModeError(
            f"vorticity must have zero mean, got k=0 mode {omega.coeffs[0, 0]:.3e}"
        )
    psi_hat = omega.coeffs * g.inv_k2  # = -streamfunction_hat
    u1 = 1j * np.where(g.nyquist_y, 0.0, g.ky) * psi_hat
    u2 = -1j * np.where(g.nyquist_x, 0.0, g.kx) * psi_hat
    return SpectralField(g, u1), SpectralField(g, u2)


def solve_poisson(rhs: SpectralField) -> SpectralField:
    """Mean-zero solution of Laplace(p) = rhs on the torus."""
    g = rhs.grid
    scale = max(1.0, rhs.l2())
    if abs(rhs.coeffs[0, 0]) > 1e-10 * scale:
        raise MeanModeError(
            f"Poisson right-hand side must have zero mean, got {rhs.coeffs[0, 0]:.3e}"
        )
    coeffs = -rhs.coeffs * g.inv_k2
    coeffs[0, 0] = 0.0
    return SpectralField(g, coeffs)


@dataclass(frozen=True)
class NormSet:
    """Norms of one scalar field: L^2 (spectral), L^q for the requested q's
    (collocation quadrature), L^inf (collocation max), the L^2 norms of both
    partials, and the H^1 norm assembled from them."""

    l2: float
    lq: Mapping[float, float]
    linf: float
    dx_l2: float
    dy_l2: float
    h1: float


def norms(f: SpectralField, qset: Sequence[float] = (2.0, 4.0, 8.0)) -> NormSet:
    """Compute the NormSet of a field.

    L^2-type norms come from Parseval; L^q and L^inf use the trapezoidal
    (= rectangle, on the torus) rule on collocation samples, which is
    spectrally accurate for the smooth fields produced by the solver.
    """
    g = f.grid
    samples = np.abs(f.to_physical())
    area = g.cell_area
    lq = {}
    for q in qset:
        q = float(q)
        if not q >= 1.0:
            raise ValueError(f"L^q norms need q >= 1, got {q}")
        lq[q] = float(np.sum(samples**q) * area) ** (1.0 / q)
    l2 = f.l2()
    dx_l2 = f.derivative("x").l2()
    dy_l2 = f.derivative("y").l2()
    return NormSet(
        l2=l2,
        lq=lq,
        linf=float(samples.max()),
        dx_l2=dx_l2,
        dy_l2=dy_l2,
        h1=float(np.sqrt(l2**2 + dx_l2**2 + dy_l2**2)),
    )


def integral_product(fields: Iterable[SpectralField]) -> float:
    """Integral of the pointwise product of two or three fields over the box.

    The product is formed on the collocation grid; for band-limited inputs
    whose combined bandwidth stays below the grid size the quadrature is
    exact up to rounding.
    """
    fields = list(fields)
    if not 2 <= len(fields) <= 3:
        raise ValueError(f"integral_product takes 2 or 3 fields, got {len(fields)}")
    first = fields[0]
    prod = None
    for f in fields:
        first._require_same_grid(f)
        p = f.to_physical()
        prod = p if prod is None else prod * p
    return float(np.sum(prod) * first.grid.cell_area)


def x_tail_fraction(f: SpectralField) -> float:
    """Fraction of spectral energy in the outer third of the retained
    (post-dealias) |kx| range; the stepper's under-resolution indicator."""
    g = f.grid
    retained = np.abs(g.kx) <= g.nx / 3.0
    outer = retained & (np.abs(g.kx) > (2.0 / 3.0) * (g.nx / 3.0))
    e = np.abs(f.coeffs) ** 2
    total = float(np.sum(e, where=np.broadcast_to(retained, e.shape)))
    if total == 0.0:
        return 0.0
    tail = float(np.sum(e, where=np.broadcast_to(outer, e.shape)))
    return tail / total
