"""Initial-condition library.

Band-limited analytic fields (vortex, shear front, seeded random spectra)
whose velocity, temperature and their x-derivatives are automatically square
integrable, plus a deliberately rough field whose spectrum decays slowly in
ky and fast in kx -- square integrable with x-derivatives at any resolution,
but with a vertical gradient that grows as the grid is refined.

Every builder returns mean-zero (omega, theta) coefficient fields; the
random builders draw all of their entropy from an explicit seed.
"""

from __future__ import annotations

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    hermitian_symmetrize,
    velocity_from_vorticity,
)

__all__ = [
    "IC_NAMES",
    "taylor_vortex",
    "shear_front",
    "random_bandlimited",
    "rough_anisotropic",
    "build_initial_condition",
]


def _field_from_samples(grid: Grid, samples: np.ndarray) -> SpectralField:
    return SpectralField.from_physical(grid, samples)


def taylor_vortex(grid: Grid, amp: float = 1.0, perturb: float = 0.0,
                  amp_theta: float = 0.0) -> tuple[SpectralField, SpectralField]:
    """Cellular vortex omega = 2 amp sin x sin y (a steady Euler flow when
    unperturbed), plus perturb * amp * cos x shear to break the steadiness,
    and theta = amp_theta sin x sin y."""
    x, y = grid.x, grid.y
    w = 2.0 * amp * np.sin(x) * np.sin(y) + perturb * amp * np.cos(x) * np.ones_like(y)
    th = amp_theta * np.sin(x) * np.sin(y)
    return _field_from_samples(grid, w), _field_from_samples(grid, th)


def shear_front(grid: Grid, amp: float = 1.0, amp_theta: float = 1.0,
                width: float = 0.5, tilt: float = 0.3,
                ) -> tuple[SpectralField, SpectralField]:
    """Horizontal shear u = (-amp cos y, 0) over a smooth periodic temperature
    front theta = amp_theta tanh((cos y + tilt cos x)/width)."""
    if not width > 0:
        raise ValueError("front width must be positive")
    x, y = grid.x, grid.y
    w = -amp * np.ones_like(x) * np.sin(y)
    th = amp_theta * np.tanh((np.cos(y) + tilt * np.cos(x)) / width)
    th = th - th.mean()
    return _field_from_samples(grid, w), _field_from_samples(grid, th)


def _embedded_random_modes(grid: Grid, rng: np.random.Generator, kmax: int,
                           k0: float) -> np.ndarray:
    """Gaussian coefficients on the modes |kx|,|ky| <= kmax with a smooth
    exp(-|k|^2/k0^2) profile, drawn in a grid-independent order so the same
    seed produces the same field at every resolution."""
    ks = np.arange(-kmax, kmax + 1)
    small = rng.standard_normal((ks.size, ks.size)) + 1j * rng.standard_normal(
        (ks.size, ks.size)
    )
    k2 = ks[:, None] ** 2 + ks[None, :] ** 2
    small *= np.exp(-k2 / (k0 * k0))
    coeffs = grid.zeros()
    coeffs[np.ix_(ks % grid.nx, ks % grid.ny)] = small
    coeffs = hermitian_symmetrize(coeffs)
    coeffs[0, 0] = 0.0
    return coeffs


def _normalized_vorticity(grid: Grid, coeffs: np.ndarray, amp_u: float) -> SpectralField:
    omega = SpectralField(grid, coeffs)
    u1, u2 = velocity_from_vorticity(omega)
    cur = np.hypot(u1.l2(), u2.l2())
    if cur == 0.0:
        if amp_u == 0.0:
            return omega
        raise ValueError("cannot normalize a zero velocity draw")
    return SpectralField(grid, coeffs * (amp_u / cur))


def _normalized_scalar(grid: Grid, coeffs: np.ndarray, amp: float) -> SpectralField:
    f = SpectralField(grid, coeffs)
    cur = f.l2()
    if cur == 0.0:
        if amp == 0.0:
            return f
        raise ValueError("cannot normalize a zero scalar draw")
    return SpectralField(grid, coeffs * (amp / cur))


def random_bandlimited(grid: Grid, seed: int, kmax: int = 6, k0: float = 3.0,
                       amp_u: float = 1.0, amp_theta: float = 1.0,
                       ) -> tuple[SpectralField, SpectralField]:
    """Seeded band-limited draw, rescaled so the recovered velocity has
    L^2 norm amp_u and the temperature amp_theta."""
    kmax = int(kmax)
    if kmax < 1 or kmax > min(grid.nx, grid.ny) // 3:
        raise ValueError(
            f"kmax must lie in [1, n/3] for the grid ({min(grid.nx, grid.ny) // 3}), got {kmax}"
        )
    rng = np.random.default_rng(seed)
    w = _embedded_random_modes(grid, rng, kmax, k0)
    th = _embedded_random_modes(grid, rng, kmax, k0)
    return (
        _normalized_vorticity(grid, w, amp_u),
        _normalized_scalar(grid, th, amp_theta),
    )


def rough_anisotropic(grid: Grid, seed: int, amp_u: float = 1.0,
                      amp_theta: float = 1.0, px: float = 4.0, py: float = 1.0,
                      ) -> tuple[SpectralField, SpectralField]:
    """Rough draw filling the whole retained band with Gaussian coefficients
    weighted (1+|kx|)^(-px) (1+|ky|)^(-py): fast decay in kx keeps the
    x-derivatives square summable, slow decay in ky makes the discrete
    vertical gradient grow with resolution (py <= 1.5 leaves it divergent in
    the continuum limit)."""
    rng = np.random.default_rng(seed)
    weight = (
        (1.0 + np.abs(grid.kx)) ** (-px)
        * (1.0 + np.abs(grid.ky)) ** (-py)
        * grid.dealias_mask
    )

    def draw() -> np.ndarray:
        c = (
            rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        ) * weight
        c = hermitian_symmetrize(c)
        c[0, 0] = 0.0
        return c

    w, th = draw(), draw()
    return (
        _normalized_vorticity(grid, w, amp_u),
        _normalized_scalar(grid, th, amp_theta),
    )


_BUILDERS = {
    "taylor-vortex": (taylor_vortex, ("amp", "perturb", "amp_theta"), False),
    "shear-front": (shear_front, ("amp", "amp_theta", "width", "tilt"), False),
    "random-bandlimited": (
        random_bandlimited,
        ("kmax", "k0", "amp_u", "amp_theta"),
        True,
    ),
    "rough-anisotropic": (
        rough_anisotropic,
        ("amp_u", "amp_theta", "px", "py"),
        True,
    ),
}

IC_NAMES = tuple(_BUILDERS)


def requires_seed(name: str) -> bool:
    """True for the initial conditions that draw random coefficients."""
    if name not in _BUILDERS:
        raise ValueError(f"unknown initial condition {name!r}")
    return _BUILDERS[name][2]


def build_initial_condition(grid: Grid, name: str, params: dict | None = None,
                            seed: int | None = None,
                            ) -> tuple[SpectralField, SpectralField]:
    """Dispatch an initial condition by name with strict parameter checking."""
    if name not in _BUILDERS:
        raise ValueError(
            f"unknown initial condition {name!r}; expected one of {', '.join(IC_NAMES)}"
        )
    fn, allowed, needs_seed = _BUILDERS[name]
    params = dict(params or {})
    unknown = sorted(set(params) - set(allowed))
    if unknown:
        raise ValueError(
            f"unknown parameter(s) for {name}: {', '.join(unknown)}; "
            f"allowed: {', '.join(allowed)}"
        )
    if needs_seed:
        if seed is None:
            raise ValueError(f"initial condition {name} requires a seed")
        return fn(grid, seed=int(seed), **params)
    return fn(grid, **params)
