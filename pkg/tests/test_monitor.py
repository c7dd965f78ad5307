"""Tests for the diagnostics monitor: the per-sample record, the series-level
bound checks, and the self-estimated envelope constants."""

import math

import numpy as np
import pytest

from abq.config import parse_run_config
from abq.drivers import run_simulation
from abq.monitor import (
    DEFAULT_R_GRID,
    E_CUBED,
    DiagnosticsRecord,
    assemble_f,
    check_theta_l2_balance,
    check_theta_maximum_principle,
    check_velocity_l2,
    cumtrapz,
    growth_ratio,
    h1_inequality_check,
    local_bound_check,
    record,
    time_derivative_integral,
    twin_check,
)
from abq.spectral import SpectralField
from abq.stepper import SolverConfig, State, step

PI_SQRT2 = np.pi * np.sqrt(2.0)


def make_rec(**kw) -> DiagnosticsRecord:
    base = dict(
        t=0.0, u_l2=0.0, theta_l2=0.0, theta_linf=0.0, theta_lq={},
        u_h1=0.0, theta_h1=0.0, dyu_h1=0.0, dytheta_h1=0.0,
        dyu_l2=0.0, dytheta_l2=0.0, dxu_l2=0.0, dxtheta_l2=0.0,
        growth_ratio=0.0, u2_linf=0.0, dt_u_l2=0.0, dt_theta_l2=0.0,
        h1_residual=0.0, f_local=1.0, diss_xy=0.0, tail_frac=0.0,
        div_ratio=0.0,
    )
    base.update(kw)
    return DiagnosticsRecord(**base)


def _cfg(grid, **kw):
    base = dict(grid=grid, nu=1.0, kappa=1.0, dt="auto", t_end=1.0, output_every=1.0)
    base.update(kw)
    return SolverConfig(**base)


def _shear_state(grid):
    return State(
        omega=SpectralField.from_physical(grid, -np.sin(grid.y) + 0 * grid.x),
        theta=SpectralField.zeros(grid),
        t=0.0,
    )


# -------------------------------------------------------------------------
# growth ratio
# -------------------------------------------------------------------------

def test_growth_ratio_constant_field_oracle():
    # |u2| = 1 on the full box: ||u2||_{2r}^2 = (4 pi^2)^{1/r}; the sup over
    # the default r grid sits at r = 2, giving 2 pi / (2 log 2) = pi / log 2.
    samples = np.ones((32, 32))
    cell = (2 * np.pi / 32) ** 2
    val = growth_ratio(samples, cell, DEFAULT_R_GRID)
    assert val == pytest.approx(4.532360141827194, rel=1e-12)


def test_growth_ratio_rejects_small_r():
    with pytest.raises(ValueError):
        growth_ratio(np.ones((8, 8)), 1.0, (1.5, 2.0))


def test_growth_ratio_sign_invariant():
    rng = np.random.default_rng(0)
    samples = rng.standard_normal((16, 16))
    cell = (2 * np.pi / 16) ** 2
    assert growth_ratio(samples, cell) == growth_ratio(-samples, cell)


def test_growth_ratio_zero_field():
    assert growth_ratio(np.zeros((8, 8)), 1.0) == 0.0


# -------------------------------------------------------------------------
# record
# -------------------------------------------------------------------------

def test_record_parallel_shear_oracle(grid32):
    s = _shear_state(grid32)
    rec = record(s, cfg=_cfg(grid32))
    assert rec.u_l2 == pytest.approx(PI_SQRT2, rel=1e-12)
    assert rec.u_h1 == pytest.approx(2 * np.pi, rel=1e-12)
    assert rec.dyu_l2 == pytest.approx(PI_SQRT2, rel=1e-12)
    assert rec.dxu_l2 == pytest.approx(0.0, abs=1e-12)
    assert rec.theta_l2 == 0.0
    assert rec.u2_linf == pytest.approx(0.0, abs=1e-13)
    assert rec.growth_ratio == pytest.approx(0.0, abs=1e-12)
    assert rec.f_local == pytest.approx(1.0 + 2 * np.pi**2, rel=1e-12)
    assert rec.tail_frac == 0.0
    assert rec.div_ratio <= 1e-12


def test_record_zero_state(grid16):
    s = State(SpectralField.zeros(grid16), SpectralField.zeros(grid16), 0.0)
    rec = record(s, cfg=_cfg(grid16))
    assert rec.u_l2 == 0.0
    assert rec.f_local == 1.0
    # A = B = e^3 for the zero state: residual = 8 e^3 + e^3 - e^3 = 8 e^3.
    assert rec.h1_residual == pytest.approx(8 * E_CUBED, rel=1e-12)


def test_record_is_pure(grid32):
    from abq.initial import random_bandlimited

    omega, theta = random_bandlimited(grid32, seed=3, kmax=4)
    s = State(omega, theta, 0.0)
    cfg = _cfg(grid32)
    a = record(s, cfg=cfg)
    b = record(s, cfg=cfg)
    assert a == b


def test_record_backward_difference_tracks_rhs(grid32):
    from abq.initial import taylor_vortex

    omega, theta = taylor_vortex(grid32, amp=1.0, perturb=0.3, amp_theta=0.5)
    s0 = State(omega, theta, 0.0)
    cfg = _cfg(grid32)
    dt = 1e-3
    s1 = step(s0, cfg, dt)
    inst = record(s1, cfg=cfg)
    diff = record(s1, s0, cfg=cfg)
    assert diff.dt_theta_l2 == pytest.approx(inst.dt_theta_l2, rel=0.05)
    assert diff.dt_u_l2 == pytest.approx(inst.dt_u_l2, rel=0.05)


def test_record_rejects_nonpositive_dt(grid16):
    s = State(SpectralField.zeros(grid16), SpectralField.zeros(grid16), 1.0)
    with pytest.raises(ValueError):
        record(s, s, cfg=_cfg(grid16))


# -------------------------------------------------------------------------
# cumulative quadrature
# -------------------------------------------------------------------------

def test_cumtrapz_linear_exact():
    t = np.linspace(0.0, 2.0, 21)
    vals = 3.0 * t
    out = cumtrapz(vals, t)
    np.testing.assert_allclose(out, 1.5 * t**2, rtol=1e-13)
    assert out[0] == 0.0


def test_cumtrapz_endpoint_matches_trapezoid():
    from scipy.integrate import trapezoid

    rng = np.random.default_rng(4)
    t = np.linspace(0.0, 1.0, 17)
    vals = rng.standard_normal(17)
    assert cumtrapz(vals, t)[-1] == pytest.approx(trapezoid(vals, t), rel=1e-14)


# -------------------------------------------------------------------------
# series-level checks on synthetic series
# -------------------------------------------------------------------------

def _decay_series(n=101, T=0.2, kappa=1.0):
    # theta(t) = e^{-kappa t} cos y: every norm decays like e^{-kappa t} and
    # the L2 budget closes exactly in the continuum.
    ts = np.linspace(0.0, T, n)
    out = []
    for t in ts:
        amp = math.exp(-kappa * t)
        out.append(make_rec(
            t=float(t),
            theta_l2=PI_SQRT2 * amp,
            theta_linf=amp,
            theta_lq={2.0: PI_SQRT2 * amp},
            dytheta_l2=PI_SQRT2 * amp,
        ))
    return out


def test_theta_maximum_principle_passes_on_decay():
    checks = check_theta_maximum_principle(_decay_series())
    assert checks and all(c.passed for c in checks)
    names = {c.name for c in checks}
    assert names == {"theta-max-L2", "theta-max-Linf"}


def test_theta_maximum_principle_flags_injected_growth():
    series = _decay_series()
    bumped = make_rec(
        t=series[50].t,
        theta_l2=series[50].theta_l2,
        theta_linf=1.5,  # inflated above the initial sup norm
        theta_lq=dict(series[50].theta_lq),
        dytheta_l2=series[50].dytheta_l2,
    )
    series[50] = bumped
    checks = check_theta_maximum_principle(series)
    bad = [c for c in checks if not c.passed]
    assert bad and all(c.name == "theta-max-Linf" for c in bad)


def test_theta_l2_balance_fine_sampling_passes():
    checks = check_theta_l2_balance(_decay_series(n=101, T=0.2), kappa=1.0)
    assert all(c.passed for c in checks)


def test_theta_l2_balance_coarse_sampling_fails():
    # With a 0.05 sampling interval the trapezoid error on e^{-2t} exceeds
    # the 1e-5 relative budget, and the check must say so.
    checks = check_theta_l2_balance(_decay_series(n=5, T=0.2), kappa=1.0)
    assert any(not c.passed for c in checks)


def test_velocity_l2_running_sup_uses_whole_functional():
    # Pure vertical decay of u = e^{-t}(-cos y, 0) with theta = 0: the
    # energy functional ||u||^2 + 2 int ||d_y u||^2 is conserved, so the
    # bound holds with equality up to quadrature.  Taking the sup of
    # ||u||^2 alone and adding the integral would overshoot the envelope
    # by the full dissipated energy and fail.
    ts = np.linspace(0.0, 1.0, 201)
    series = [
        make_rec(t=float(t), u_l2=PI_SQRT2 * math.exp(-t),
                 dyu_l2=PI_SQRT2 * math.exp(-t))
        for t in ts
    ]
    checks = check_velocity_l2(series, nu=1.0)
    assert all(c.passed for c in checks)
    # The conserved functional leaves only the tolerance as margin.
    final = checks[-1]
    assert final.rhs - final.lhs < 2e-4 * series[0].u_l2 ** 2 + 2e-3


def test_velocity_l2_flags_energy_creation():
    ts = np.linspace(0.0, 1.0, 51)
    series = [make_rec(t=float(t), u_l2=1.0 + 0.5 * t) for t in ts]
    checks = check_velocity_l2(series, nu=1.0)  # theta0 = 0: no source allowed
    assert any(not c.passed for c in checks)


def test_twin_check_exponential_oracle():
    ts = np.linspace(0.0, 1.0, 11)
    base = [make_rec(t=float(t), u_l2=1.0) for t in ts]
    d = 1e-6 * np.exp(2.0 * ts)
    checks, c_hat = twin_check(base, ts, d)
    # m = 1 and the horizontal dissipation is zero, so denom = t and the
    # fitted rate is exactly the exponent.
    assert c_hat == pytest.approx(2.0, rel=1e-12)
    assert all(c.passed for c in checks)


def test_twin_check_rejects_zero_separation():
    ts = np.linspace(0.0, 1.0, 5)
    base = [make_rec(t=float(t)) for t in ts]
    with pytest.raises(ValueError):
        twin_check(base, ts, np.zeros_like(ts))


def test_twin_check_rejects_time_mismatch():
    ts = np.linspace(0.0, 1.0, 5)
    base = [make_rec(t=float(t)) for t in ts]
    with pytest.raises(ValueError):
        twin_check(base, ts + 0.1, np.ones_like(ts))


def test_assemble_f_adds_dissipation_history():
    ts = np.linspace(0.0, 1.0, 11)
    series = [make_rec(t=float(t), f_local=2.0, diss_xy=3.0) for t in ts]
    f = assemble_f(series)
    np.testing.assert_allclose(f, 2.0 + 3.0 * ts, rtol=1e-13)


def test_time_derivative_integral():
    ts = np.linspace(0.0, 1.0, 11)
    series = [make_rec(t=float(t), dt_u_l2=1.0, dt_theta_l2=2.0) for t in ts]
    assert time_derivative_integral(series) == pytest.approx(5.0, rel=1e-13)


# -------------------------------------------------------------------------
# checks on short real runs
# -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def short_run():
    data = {
        "solver": {"nx": 32, "ny": 32, "nu": 1.0, "kappa": 1.0,
                   "t_end": 0.2, "output_every": 0.005},
        "ic": {"name": "random-bandlimited", "seed": 42,
               "params": {"amp_u": 0.5, "amp_theta": 0.5, "kmax": 4, "k0": 2.0}},
    }
    return run_simulation(parse_run_config(data))


def test_h1_inequality_on_real_run(short_run):
    checks, notice = h1_inequality_check(short_run.series)
    assert notice is None
    assert len(checks) == len(short_run.series) - 2
    assert all(c.passed for c in checks)


def test_h1_inequality_skips_coarse_series():
    series = _decay_series(n=11, T=0.2)  # interval 0.02 > 0.01
    checks, notice = h1_inequality_check(series)
    assert checks == []
    assert "too coarse" in notice


def test_local_bound_on_real_run(short_run):
    checks, info = local_bound_check(short_run.series)
    assert checks and all(c.passed for c in checks)
    assert info["c_hat"] >= 0.0
    assert info["f0"] > 1.0
    assert info["horizon"] > 0.0


def test_local_bound_flat_envelope_for_decay():
    # A monotonically decreasing f yields a nonpositive slope estimate and
    # the flat "nonincreasing" envelope.
    ts = np.linspace(0.0, 1.0, 21)
    series = [make_rec(t=float(t), f_local=2.0 * math.exp(-t)) for t in ts]
    checks, info = local_bound_check(series)
    assert info["c_hat"] == 0.0
    assert all(c.passed for c in checks)
    assert all(c.note == "nonincreasing f" for c in checks)
