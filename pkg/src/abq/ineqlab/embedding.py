"""Logarithmic sup-norm embedding on R^2.

For exponent pairs p = (p1, p2) with 1/p1 + 1/p2 < 1, define

    N_p(F) = sum_i ( ||F||_{p_i} + ||d_i F||_{p_i} ) + e^3 .

The embedding states that for any lambda > 0,

    ||F||_inf <= C * max{1, sup_r ||F||_r / (r log r)^lambda}
                   * [ log N_p(F) * log log N_p(F) ]^lambda ,

with the sup taken over r >= 2.  The lab evaluates the measured ratio of the
two sides on a finite r grid, records where the sup is attained, and probes
sharpness with dilated (peaked) family members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .functions import (
    DEFAULT_RESOLUTION,
    TestFunction,
    box_quadrature,
    lq_norm,
    random_test_function,
)

__all__ = [
    "E_CUBED",
    "DEFAULT_R_GRID",
    "InvalidExponentsError",
    "n_p_functional",
    "log_embedding_ratio",
    "EmbeddingSample",
    "embedding_sweep",
]

E_CUBED = math.e**3

# geometric-ish ladder of Lebesgue exponents used for the sup over r
DEFAULT_R_GRID = (2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0)


class InvalidExponentsError(ValueError):
    """The exponent pair violates the summability hypothesis 1/p1 + 1/p2 < 1."""


def _check_exponents(p: Sequence[float]) -> tuple[float, float]:
    if len(p) != 2:
        raise InvalidExponentsError(f"need exactly two exponents, got {len(p)}")
    p1, p2 = float(p[0]), float(p[1])
    if p1 <= 1 or p2 <= 1 or not (1.0 / p1 + 1.0 / p2) < 1.0:
        raise InvalidExponentsError(
            f"exponents p={p!r} rejected: the embedding requires 1/p1 + 1/p2 < 1"
        )
    return p1, p2


def n_p_functional(F: TestFunction, p: Sequence[float],
                   resolution: int = DEFAULT_RESOLUTION) -> float:
    """N_p(F) as defined above (always >= e^3)."""
    p1, p2 = _check_exponents(p)
    X, Y, W = box_quadrature(F.box_halfwidth, resolution)
    v = F.value(X, Y)
    return (
        lq_norm(v, W, p1) + lq_norm(F.dx(X, Y), W, p1)
        + lq_norm(v, W, p2) + lq_norm(F.dy(X, Y), W, p2)
        + E_CUBED
    )


@dataclass(frozen=True)
class EmbeddingSample:
    """One measured ratio together with where the r-sup was attained."""

    ratio: float
    sup_term: float
    argmax_r: float
    n_p: float
    attained_interior: bool


def log_embedding_ratio(F: TestFunction, p: Sequence[float], lam: float,
                        r_grid: Sequence[float] = DEFAULT_R_GRID,
                        resolution: int = DEFAULT_RESOLUTION) -> EmbeddingSample:
    """Measured ratio ||F||_inf / (max{1, sup_r ||F||_r/(r log r)^lam}
    * [log N_p loglog N_p]^lam) over the finite r grid.

    attained_interior is False when the sup lands on the last grid point,
    which would mean the grid truncates the relevant range.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    grid = sorted(float(r) for r in r_grid)
    if grid[0] < 2.0:
        raise ValueError("r grid must start at r >= 2")
    X, Y, W = box_quadrature(F.box_halfwidth, resolution)
    v = F.value(X, Y)
    linf = lq_norm(v, W, math.inf)
    terms = [lq_norm(v, W, r) / (r * math.log(r)) ** lam for r in grid]
    i = int(np.argmax(terms))
    np_val = n_p_functional(F, p, resolution)
    denom = max(1.0, terms[i]) * (math.log(np_val) * math.log(math.log(np_val))) ** lam
    return EmbeddingSample(
        ratio=linf / denom,
        sup_term=terms[i],
        argmax_r=grid[i],
        n_p=np_val,
        attained_interior=(i < len(grid) - 1),
    )


def embedding_sweep(seeds: Sequence[int], p: Sequence[float], lam: float,
                    dilations: Sequence[float] = (1.0,),
                    r_grid: Sequence[float] = DEFAULT_R_GRID,
                    resolution: int = DEFAULT_RESOLUTION):
    """Ratios over seeded draws and their dilated versions.

    Returns (samples, max_ratio); samples is a list of
    (seed, dilation, EmbeddingSample).
    """
    _check_exponents(p)
    samples = []
    best = 0.0
    for seed in seeds:
        base = random_test_function(seed)
        for a in dilations:
            F = base.dilate(a) if a != 1.0 else base
            s = log_embedding_ratio(F, p, lam, r_grid, resolution)
            samples.append((int(seed), float(a), s))
            best = max(best, s.ratio)
    return samples, best
