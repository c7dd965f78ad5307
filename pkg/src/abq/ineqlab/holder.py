"""Anisotropic Hoelder-type trilinear bound on R^2.

The quantity measured is

    ratio = int |f g h| /
        ( ||f||_2 ||g||_2^(1-1/q) ||d_y g||_2^(1/q)
                  ||h||_{2(q-1)}^(1-1/q) ||d_x h||_2^(1/q) )

for q >= 2; the inequality asserts the ratio is bounded by an absolute
constant.  The lab estimates that constant on a seeded calibration ensemble
and confirms that held-out draws stay within a stated headroom of it.
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
    "DegenerateFactorError",
    "holder_ratio",
    "holder_ratio_q2",
    "holder_sweep",
    "HolderSweepResult",
]


class DegenerateFactorError(ValueError):
    """A factor in the denominator vanished (e.g. g constant in y)."""


def _common_grid(fs: Sequence[TestFunction], resolution: int):
    halfwidth = max(f.box_halfwidth for f in fs)
    return box_quadrature(halfwidth, resolution)


def holder_ratio(f: TestFunction, g: TestFunction, h: TestFunction, q: float,
                 resolution: int = DEFAULT_RESOLUTION) -> float:
    """Measured ratio of the trilinear integral to its bounding product."""
    if not q >= 2.0:
        raise ValueError(f"the trilinear bound needs q >= 2, got {q}")
    X, Y, W = _common_grid((f, g, h), resolution)
    fv, gv, hv = f.value(X, Y), g.value(X, Y), h.value(X, Y)
    numerator = float(np.sum(np.abs(fv * gv * hv) * W))
    a = 1.0 - 1.0 / q
    b = 1.0 / q
    denominator = (
        lq_norm(fv, W, 2.0)
        * lq_norm(gv, W, 2.0) ** a
        * lq_norm(g.dy(X, Y), W, 2.0) ** b
        * lq_norm(hv, W, 2.0 * (q - 1.0)) ** a
        * lq_norm(h.dx(X, Y), W, 2.0) ** b
    )
    if denominator == 0.0:
        raise DegenerateFactorError("denominator vanished; factors must be nontrivial")
    return numerator / denominator


def holder_ratio_q2(f: TestFunction, g: TestFunction, h: TestFunction,
                    resolution: int = DEFAULT_RESOLUTION) -> float:
    """The q=2 specialization written out directly:
    int |f g h| <= C ||f||_2 ||g||_2^(1/2) ||d_y g||_2^(1/2)
                     ||h||_2^(1/2) ||d_x h||_2^(1/2)."""
    X, Y, W = _common_grid((f, g, h), resolution)
    fv, gv, hv = f.value(X, Y), g.value(X, Y), h.value(X, Y)
    numerator = float(np.sum(np.abs(fv * gv * hv) * W))
    denominator = (
        lq_norm(fv, W, 2.0)
        * math.sqrt(lq_norm(gv, W, 2.0) * lq_norm(g.dy(X, Y), W, 2.0))
        * math.sqrt(lq_norm(hv, W, 2.0) * lq_norm(h.dx(X, Y), W, 2.0))
    )
    if denominator == 0.0:
        raise DegenerateFactorError("denominator vanished; factors must be nontrivial")
    return numerator / denominator


@dataclass(frozen=True)
class HolderSweepResult:
    q: float
    seeds: tuple[int, ...]
    ratios: np.ndarray
    max_ratio: float
    argmax_seed: int


def holder_sweep(seeds: Sequence[int], q: float,
                 resolution: int = DEFAULT_RESOLUTION) -> HolderSweepResult:
    """Evaluate the ratio on independent (f, g, h) triples, one per seed."""
    ratios = []
    for seed in seeds:
        f = random_test_function(3 * seed)
        g = random_test_function(3 * seed + 1)
        h = random_test_function(3 * seed + 2)
        ratios.append(holder_ratio(f, g, h, q, resolution))
    ratios = np.array(ratios)
    i = int(np.argmax(ratios))
    return HolderSweepResult(
        q=q,
        seeds=tuple(seeds),
        ratios=ratios,
        max_ratio=float(ratios[i]),
        argmax_seed=int(seeds[i]),
    )
