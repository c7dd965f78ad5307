"""Numerical verification of the logarithmic Gronwall lemma.

For K >= 1 and A, B >= e on (0, T) satisfying

    A'(t) + B(t) <= K A(t) log B(t) loglog B(t)                       (*)

the conclusion is

    2 A(t) + int_0^t B(s) ds <= 512 K^2 Q(t)^2 + 2 A(0),
    Q(t) = exp{ exp{ (loglog A(0) + 260 K^2 t) e^(K t) } }.

The verifier integrates extremal trajectories that turn (*) into an equality
(so the hypothesis is used at full strength) with classical RK4 under a
dt-halving acceptance control, then compares the two sides on a time grid.

Trajectories can grow double-exponentially or crash toward the B = e floor,
so the integration state lives in whichever representation stays well-scaled
-- A itself, w = A^(1-alpha) (which cancels the stiff damping term exactly),
a = log A, or m = loglog A -- and comparisons drop to log or log-log
coordinates when a side leaves double range.  B is clamped below at e
throughout, matching the lemma's domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "Proportional",
    "Saturating",
    "GronwallCase",
    "GronwallSample",
    "GronwallReport",
    "q_envelope",
    "gronwall_verify",
    "acceptance_grid",
]

_E = math.e
_EXPCLIP = 700.0
_LOG_DOUBLE_MAX = 709.0  # exp() leaves double range beyond this
# representation ladder thresholds (alpha = 1), with hysteresis
_LIN_TO_A = 1e6
_A_TO_LIN = 8e5
_A_TO_M = 1e6
_M_TO_A = 8e5


@dataclass(frozen=True)
class Proportional:
    """Closure B = max(A^alpha, e); the equality case of (*) then drives A."""

    alpha: float

    def __post_init__(self):
        if self.alpha < 1.0:
            raise ValueError("proportional closure needs alpha >= 1")


@dataclass(frozen=True)
class Saturating:
    """Prescribed growth A' = mu A; B solves the equality in (*) for it,
    taking the larger of the two roots (the most demanding dissipation)."""

    mu: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("saturating closure needs mu > 0")


BFamily = Union[Proportional, Saturating]


@dataclass(frozen=True)
class GronwallCase:
    K: float
    A0: float
    b_family: BFamily
    T: float = 2.0

    def __post_init__(self):
        if self.K < 1.0:
            raise ValueError("the lemma requires K >= 1")
        if self.A0 < _E:
            raise ValueError("the lemma requires A(0) >= e")
        if self.T <= 0:
            raise ValueError("horizon T must be positive")


def q_envelope(K: float, A0: float, t: float) -> float:
    """loglog of the envelope Q(t): (loglog A0 + 260 K^2 t) e^(K t).

    Q itself is double-exponentially large, so callers work with this value;
    at t = 0 it reduces to loglog A0, i.e. Q(0) = A0.
    """
    if K < 1.0 or A0 < _E or t < 0.0:
        raise ValueError("need K >= 1, A0 >= e, t >= 0")
    return (math.log(math.log(A0)) + 260.0 * K * K * t) * math.exp(K * t)


# --------------------------------------------------------------------------
# extremal trajectories for the proportional closure
# --------------------------------------------------------------------------
#
# With B = max(A^alpha, e) and g = log B = max(alpha log A, 1):
#
#   lin rep   (x = A):            A' = K A g log g - exp(g)
#   w rep     (x = A^(1-alpha)):  w' = (alpha-1)(1 - K w g log g)  [alpha > 1]
#   a rep     (x = log A):        a' = K a log a - 1               [alpha = 1]
#   m rep     (x = loglog A):     m' = K m - exp(-m)               [alpha = 1]
#
# The w form is exact -- w * A^(alpha-1) == 1 removes the stiff exp term --
# and keeps strongly damped trajectories smooth; a and m keep the unbounded
# alpha = 1 growth in range.

_REP_LEVEL = {"lin": 0, "w": 1, "a": 1, "m": 2}


def _g_of_logA(alpha: float, logA: float) -> float:
    return max(alpha * logA, 1.0)


def _slope(rep: str, x: float, K: float, alpha: float) -> float:
    if rep == "lin":
        g = _g_of_logA(alpha, math.log(x)) if x > 0.0 else 1.0
        return K * x * g * math.log(g) - math.exp(min(g, _EXPCLIP))
    if rep == "w":
        g = max(-alpha * math.log(x) / (alpha - 1.0), 1.0)
        return (alpha - 1.0) * (1.0 - K * x * g * math.log(g))
    if rep == "a":
        return K * x * math.log(x) - 1.0
    if rep == "m":
        return K * x - math.exp(-min(x, _EXPCLIP))
    raise AssertionError(rep)


def _log_b(rep: str, x: float, alpha: float) -> float:
    """log B at the current state (B clamped at e, so always >= 1).
    Returns +inf when even log B leaves double range."""
    if rep == "lin":
        return _g_of_logA(alpha, math.log(x)) if x > 0.0 else 1.0
    if rep == "w":
        return max(-alpha * math.log(x) / (alpha - 1.0), 1.0)
    if rep == "a":
        return max(alpha * x, 1.0)
    if rep == "m":
        return alpha * math.exp(x) if x < _LOG_DOUBLE_MAX else math.inf
    raise AssertionError(rep)


def _switch(rep: str, x: float, alpha: float) -> tuple[str, float]:
    """Move to a better-scaled representation when thresholds are crossed."""
    if alpha > 1.0:
        w_floor = math.exp((1.0 - alpha) / alpha)  # w at which B reaches e
        if rep == "w" and x >= w_floor:
            return "lin", x ** (1.0 / (1.0 - alpha))
        if rep == "lin" and x > math.exp(1.0 / alpha) * 1.001:
            return "w", x ** (1.0 - alpha)
        return rep, x
    if rep == "lin" and x > _LIN_TO_A:
        return "a", math.log(x)
    if rep == "a":
        if x > _A_TO_M:
            return "m", math.log(x)
        if x < math.log(_A_TO_LIN):
            return "lin", math.exp(x)
    if rep == "m" and x < math.log(math.log(_M_TO_A)):
        return "a", math.exp(x)
    return rep, x


def _initial_rep(case: GronwallCase) -> tuple[str, float]:
    fam = case.b_family
    if isinstance(fam, Proportional) and fam.alpha > 1.0:
        if case.A0 > math.exp(1.0 / fam.alpha):
            return "w", case.A0 ** (1.0 - fam.alpha)
    return "lin", case.A0


def _rk4(rep: str, x: float, K: float, alpha: float, h: float) -> float:
    k1 = _slope(rep, x, K, alpha)
    k2 = _slope(rep, x + 0.5 * h * k1, K, alpha)
    k3 = _slope(rep, x + 0.5 * h * k2, K, alpha)
    k4 = _slope(rep, x + h * k3, K, alpha)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class _Checkpoint:
    t: float
    rep: str
    x: float
    log_ib: float          # log of int_0^t B ds while representable
    ib_saturated: bool     # True once log(int B) left double range


def _integrate_proportional(case: GronwallCase, n_steps: int) -> list[_Checkpoint]:
    alpha = case.b_family.alpha
    K = case.K
    h = case.T / n_steps
    rep, x = _initial_rep(case)
    log_ib = -math.inf
    saturated = False
    out = [_Checkpoint(0.0, rep, x, log_ib, saturated)]
    lb_prev = _log_b(rep, x, alpha)
    for i in range(n_steps):
        x = _rk4(rep, x, K, alpha, h)
        rep, x = _switch(rep, x, alpha)
        lb = _log_b(rep, x, alpha)
        if not saturated and max(lb, lb_prev) < 1e306:
            log_ib = float(
                np.logaddexp(log_ib, math.log(0.5 * h) + np.logaddexp(lb_prev, lb))
            )
        else:
            # B outgrew double range; int B <= 2 T A(t) from here on and the
            # log-log comparison absorbs it (see _compare)
            saturated = True
        lb_prev = lb
        out.append(_Checkpoint((i + 1) * h, rep, x, log_ib, saturated))
    return out


# --------------------------------------------------------------------------
# saturating closure: A is prescribed, B solves the equality
# --------------------------------------------------------------------------

def _saturating_b(K: float, A: float, a_prime: float) -> float:
    """Larger root B >= e of  K A log B loglog B - B = a_prime."""

    def fun(b: float) -> float:
        lb = math.log(b)
        return K * A * lb * math.log(lb) - b - a_prime

    lo = _E * (1.0 + 1e-9)
    b = lo
    best_pos = None
    for _ in range(400):
        if fun(b) > 0.0:
            best_pos = b
        b *= 1.5
        if best_pos is not None and fun(b) < 0.0:
            return float(brentq(fun, best_pos, b, xtol=1e-12, rtol=1e-14))
        if b > 1e280:
            break
    raise ValueError(
        "prescribed growth rate is not attainable as an equality at this A; "
        "increase A0 or lower mu"
    )


def _integrate_saturating(case: GronwallCase, n_steps: int) -> list[_Checkpoint]:
    mu = case.b_family.mu
    h = case.T / n_steps
    out = []
    log_ib = -math.inf
    lb_prev = None
    for i in range(n_steps + 1):
        t = i * h
        A = case.A0 * math.exp(mu * t)
        B = _saturating_b(case.K, A, mu * A)
        lb = math.log(B)
        if lb_prev is not None:
            log_ib = float(
                np.logaddexp(log_ib, math.log(0.5 * h) + np.logaddexp(lb_prev, lb))
            )
        lb_prev = lb
        out.append(_Checkpoint(t, "lin", A, log_ib, False))
    return out


# --------------------------------------------------------------------------
# comparison of the two sides
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GronwallSample:
    """lhs = 2A + int B against rhs = 512 K^2 Q^2 + 2 A0 at one time.

    tier records how the comparison was made: "direct" (plain floats), "log"
    (both sides as logs), or "loglog" (pure log-log coordinates, once a side
    leaves double range).  ratio is lhs/rhs where computable (0.0 when it
    underflows); ll_gap = loglog rhs - loglog lhs is the margin that stays
    meaningful at every scale."""

    t: float
    ratio: float
    passed: bool
    tier: str
    ll_gap: float


def _rhs_log(K: float, A0: float, q_ll: float) -> float:
    """log(512 K^2 Q^2 + 2 A0), or +inf when it exceeds double range."""
    if q_ll > _LOG_DOUBLE_MAX:
        return math.inf
    log_q2 = 2.0 * math.exp(q_ll)
    if log_q2 > 1e308:
        return math.inf
    return float(np.logaddexp(math.log(512.0 * K * K) + log_q2, math.log(2.0 * A0)))


def _log_sample(t: float, lhs_log: float, rhs_log: float, q_ll: float) -> GronwallSample:
    gap = rhs_log - lhs_log
    ratio = math.exp(-gap) if gap > -_EXPCLIP else math.inf
    # loglog rhs stays representable even when log rhs overflows: the
    # envelope term dominates and loglog rhs ~= q_ll + log 2 there.
    ll_rhs = math.log(rhs_log) if math.isfinite(rhs_log) else q_ll + math.log(2.0)
    ll = ll_rhs - math.log(lhs_log) if lhs_log > 0 else math.inf
    return GronwallSample(t, ratio, gap >= 0.0, "log", ll)


def _compare(cp: _Checkpoint, case: GronwallCase) -> GronwallSample:
    K, A0 = case.K, case.A0
    q_ll = q_envelope(K, A0, cp.t)
    rhs_log = _rhs_log(K, A0, q_ll)

    if cp.rep in ("lin", "w", "a"):
        if cp.rep == "lin":
            a = math.log(cp.x) if cp.x > 0 else None
        elif cp.rep == "w":
            a = math.log(cp.x) / (1.0 - case.b_family.alpha)
        else:
            a = cp.x
        if (a is None or a < _EXPCLIP) and cp.log_ib < _EXPCLIP:
            lhs = 2.0 * (cp.x if cp.rep == "lin" else math.exp(a)) + math.exp(cp.log_ib)
            if rhs_log < _EXPCLIP:
                rhs = math.exp(rhs_log)
                ll = (math.log(rhs_log) - math.log(math.log(lhs))
                      if lhs > 1.0 and rhs_log > 0 else math.inf)
                return GronwallSample(cp.t, lhs / rhs, lhs <= rhs, "direct", ll)
            if lhs <= 0.0:
                return GronwallSample(cp.t, 0.0, True, "log", math.inf)
            return _log_sample(cp.t, math.log(lhs), rhs_log, q_ll)
        # one of the pieces only fits as a log
        if a is None:  # negative A with huge int B cannot occur, but be safe
            return _log_sample(cp.t, cp.log_ib, rhs_log, q_ll)
        return _log_sample(
            cp.t, float(np.logaddexp(math.log(2.0) + a, cp.log_ib)), rhs_log, q_ll
        )

    # m rep (alpha = 1, A monotone here): int B <= 2 T A(t), so
    # lhs <= (2 + 2T) A and loglog lhs <= m + log(2 + 2T)/log A; at this
    # scale the correction and the 512 K^2 factor are both far below double
    # resolution, leaving  m  <=  q_ll + log 2.
    m = cp.x
    ll_lhs = m + math.log(2.0 + 2.0 * case.T) * math.exp(-min(m, _EXPCLIP))
    ll_rhs = q_ll + math.log(2.0)
    return GronwallSample(cp.t, 0.0 if ll_lhs <= ll_rhs else math.inf,
                          ll_lhs <= ll_rhs, "loglog", ll_rhs - ll_lhs)


# --------------------------------------------------------------------------
# driver with dt-halving control
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GronwallReport:
    case: GronwallCase
    n_steps: int
    samples: tuple[GronwallSample, ...]
    max_ratio: float
    passed: bool
    certificate: float      # end-state change under the final dt halving
    certificate_ok: bool
    refinements: int


def _end_metric(cp1: _Checkpoint, cp2: _Checkpoint, alpha: float) -> float:
    """Change of the end state across a halving: relative in A while A is
    in double range, then relative in the integration representation."""

    def to_level(cp: _Checkpoint, level: int) -> float:
        lvl = _REP_LEVEL[cp.rep]
        v = math.log(cp.x) / (1.0 - alpha) if cp.rep == "w" else cp.x
        while lvl < level:
            v = math.log(v)
            lvl += 1
        while lvl > level:
            v = math.exp(min(v, _EXPCLIP))
            lvl -= 1
        return v

    level = max(_REP_LEVEL[cp1.rep], _REP_LEVEL[cp2.rep])
    v1, v2 = to_level(cp1, level), to_level(cp2, level)
    if level == 0:
        return abs(v1 - v2) / max(abs(v1), abs(v2), 1.0)
    if level == 1:
        return abs(v1 - v2)  # difference of log A ~ relative change of A
    return abs(v1 - v2) / max(abs(v1), abs(v2), 1.0)


def _initial_steps(case: GronwallCase, dt: float) -> int:
    n = max(8, math.ceil(case.T / dt))
    fam = case.b_family
    if isinstance(fam, Proportional) and fam.alpha > 1.0 and case.A0 > _E:
        # damped cases relax on the 1/((alpha-1) K g log g) time scale in the
        # w representation; resolve it from the first attempt
        g0 = _g_of_logA(fam.alpha, math.log(case.A0))
        lam = (fam.alpha - 1.0) * case.K * g0 * max(math.log(g0), 1.0)
        n = max(n, math.ceil(case.T * lam / 0.25))
    return n


def gronwall_verify(case: GronwallCase, dt: float = 1e-3,
                    max_refinements: int = 12, n_samples: int = 200,
                    ) -> GronwallReport:
    """Integrate the extremal trajectory of a case and compare both sides of
    the conclusion on a time grid.

    The step is halved until the end state changes by less than 1e-6
    (relative); the report carries the achieved certificate and the
    per-sample comparisons of the finest run."""
    integrate = (
        _integrate_saturating
        if isinstance(case.b_family, Saturating)
        else _integrate_proportional
    )
    alpha = getattr(case.b_family, "alpha", 1.0)
    n = _initial_steps(case, dt)
    coarse = integrate(case, n)
    refinements = 0
    while True:
        fine = integrate(case, 2 * n)
        cert = _end_metric(coarse[-1], fine[-1], alpha)
        if cert < 1e-6 or refinements >= max_refinements:
            break
        coarse, n = fine, 2 * n
        refinements += 1
    if cert >= 1e-6:
        raise RuntimeError(
            f"dt-halving did not certify after {refinements} refinements "
            f"(last relative change {cert:.3e})"
        )

    idx = np.unique(np.linspace(0, len(fine) - 1, n_samples + 1).astype(int))
    samples = tuple(_compare(fine[i], case) for i in idx)
    finite = [s.ratio for s in samples if math.isfinite(s.ratio)]
    return GronwallReport(
        case=case,
        n_steps=2 * n,
        samples=samples,
        max_ratio=max(finite) if finite else math.inf,
        passed=all(s.passed for s in samples),
        certificate=cert,
        certificate_ok=True,
        refinements=refinements,
    )


def acceptance_grid(T: float = 2.0) -> list[GronwallCase]:
    """The 3 x 3 x 3 verification grid: alpha x K x A0 = {1, 1.5, 2} x
    {1, 2, 5} x {e, e^e, e^10}."""
    cases = []
    for alpha in (1.0, 1.5, 2.0):
        for K in (1.0, 2.0, 5.0):
            for A0 in (_E, math.exp(_E), math.exp(10.0)):
                cases.append(GronwallCase(K=K, A0=A0, b_family=Proportional(alpha), T=T))
    return cases
