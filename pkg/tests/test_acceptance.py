"""Acceptance gate: every property the package promises, one test per
criterion, each printing a single pass/fail line (visible under pytest -s or
in captured output on failure).

The shared fixtures are deliberately heavyweight — a 128^2 reference run to
T=5, a T=2 sampling run, thousand-seed inequality sweeps, and the full
convergence study — so this module takes several minutes; run it with
`pytest tests/test_acceptance.py -v -s`.
"""

import json
import math
import time

import numpy as np
import pytest

from abq.cli import main
from abq.config import parse_run_config
from abq.drivers import run_convergence, run_simulation, run_twin
from abq.ineqlab import (
    acceptance_grid,
    embedding_sweep,
    gronwall_verify,
    holder_ratio,
    holder_ratio_q2,
    holder_sweep,
    random_test_function,
)
from abq.monitor import (
    check_theta_l2_balance,
    check_theta_maximum_principle,
    check_velocity_l2,
    h1_inequality_check,
    local_bound_check,
)
from abq.spectral import SpectralField


def _line(num: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    tail = f"  ({detail})" if detail else ""
    print(f"criterion {num:02d} {name}: {status}{tail}")


def _reference_ic():
    return {"name": "random-bandlimited", "seed": 42,
            "params": {"kmax": 4, "k0": 2.0, "amp_u": 0.5, "amp_theta": 0.5}}


@pytest.fixture(scope="module")
def reference_run():
    """128^2, nu=kappa=1, T=5 band-limited run used by criteria 1-4."""
    cfg = parse_run_config({
        "solver": {"nx": 128, "ny": 128, "nu": 1.0, "kappa": 1.0,
                   "t_end": 5.0, "output_every": 0.0025},
        "ic": _reference_ic(),
    })
    start = time.perf_counter()
    result = run_simulation(cfg)
    elapsed = time.perf_counter() - start
    assert not result.halted, result.halt_reason
    return result, elapsed


@pytest.fixture(scope="module")
def sampling_run():
    """T=2, output_every=0.005 run used by the differencing-based criteria."""
    cfg = parse_run_config({
        "solver": {"nx": 128, "ny": 128, "nu": 1.0, "kappa": 1.0,
                   "t_end": 2.0, "output_every": 0.005},
        "ic": _reference_ic(),
    })
    result = run_simulation(cfg)
    assert not result.halted, result.halt_reason
    return result


def test_criterion_01_theta_maximum_principle(reference_run):
    result, elapsed = reference_run
    series = result.series
    checks = check_theta_maximum_principle(series, tol=1e-6)
    # covers every recorded q in {2, 4, 8} plus the sup norm, all samples
    qs = {c.name for c in checks}
    ok = (
        all(c.passed for c in checks)
        and qs == {"theta-max-L2", "theta-max-L4", "theta-max-L8", "theta-max-Linf"}
        and elapsed <= 120.0
    )
    _line(1, "theta maximum principle", ok,
          f"{len(checks)} checks, runtime {elapsed:.1f}s")
    assert ok


def test_criterion_02_theta_l2_balance(reference_run):
    series = reference_run[0].series
    checks = check_theta_l2_balance(series, kappa=1.0, tol=1e-5)
    worst = min(c.margin for c in checks)
    ok = all(c.passed for c in checks)
    _line(2, "theta L2 balance", ok, f"worst margin {worst:.3e}")
    assert ok


def test_criterion_03_velocity_l2_bound(reference_run):
    series = reference_run[0].series
    checks = check_velocity_l2(series, nu=1.0, tol=1e-4)
    ok = all(c.passed for c in checks)
    _line(3, "velocity L2 bound", ok, f"{len(checks)} samples")
    assert ok


def test_criterion_04_incompressibility(reference_run):
    series = reference_run[0].series
    # div_ratio carries the per-step maximum over each output interval, so
    # this bounds every step of the run, not just the sampled instants
    worst = max(rec.div_ratio for rec in series)
    ok = worst <= 1e-12
    _line(4, "incompressibility", ok, f"max div ratio {worst:.3e}")
    assert ok


def test_criterion_05_h1_differential_inequality(sampling_run):
    checks, notice = h1_inequality_check(sampling_run.series)
    assert notice is None
    frac = sum(c.passed for c in checks) / len(checks)
    ok = frac >= 0.99
    _line(5, "H1 differential inequality", ok,
          f"{frac:.2%} of {len(checks)} interior samples")
    assert ok


def test_criterion_06_local_cube_bound(sampling_run):
    checks, info = local_bound_check(sampling_run.series)
    ok = (
        bool(checks)
        and all(c.passed for c in checks)
        and math.isfinite(info["c_hat"])
        and info["horizon"] > 0.0
    )
    _line(6, "local cube bound", ok,
          f"c_hat={info['c_hat']:.4g} horizon={info['horizon']:.4g} "
          f"({len(checks)} samples)")
    assert ok


def test_criterion_07_log_gronwall_grid():
    cases = acceptance_grid()
    assert len(cases) == 27
    ok = True
    worst = 0.0
    for case in cases:
        rep = gronwall_verify(case, dt=1e-3)
        rep_half = gronwall_verify(case, dt=5e-4)
        stable = abs(rep.max_ratio - rep_half.max_ratio) <= 1e-4 * max(
            rep.max_ratio, 1e-9
        )
        ok &= (rep.passed and rep.certificate_ok and rep.max_ratio <= 1.0
               and rep_half.passed and stable)
        worst = max(worst, rep.max_ratio)
    _line(7, "log-Gronwall ODE grid", ok,
          f"27 cases, worst lhs/rhs {worst:.3e}, dt-halving stable")
    assert ok


# frozen during calibration: maxima of the seeded ratio sweeps at
# resolution 256 over seeds 0-499 (calibration) and 500-999 (held out)
HOLDER_CALIBRATION = {
    2.0: (0.583704, 0.512717),
    3.0: (0.621082, 0.619215),
    4.0: (0.618030, 0.656457),
}


def test_criterion_08_anisotropic_holder():
    ok = True
    details = []
    for q, (calib_frozen, held_frozen) in HOLDER_CALIBRATION.items():
        sweep = holder_sweep(range(1000), q, resolution=256)
        ratios = np.asarray(sweep.ratios)
        calib = float(ratios[:500].max())
        held = float(ratios[500:].max())
        ok &= bool(np.isfinite(ratios).all())
        ok &= held < 1.25 * calib
        # guard the seeded stream: maxima must reproduce the frozen values
        ok &= abs(calib - calib_frozen) <= 1e-4 * calib_frozen
        ok &= abs(held - held_frozen) <= 1e-4 * held_frozen
        details.append(f"q={q:g}: held/calib {held / calib:.3f}")
    gap = 0.0
    for s in range(10):
        f, g, h = (random_test_function(3 * s + i) for i in range(3))
        gap = max(gap, abs(
            holder_ratio(f, g, h, 2.0, resolution=256)
            - holder_ratio_q2(f, g, h, resolution=256)
        ))
    ok &= gap <= 1e-12
    _line(8, "anisotropic Holder sweep", ok,
          "; ".join(details) + f"; q2 path gap {gap:.1e}")
    assert ok


# frozen envelope constants for p=(4,4) at resolution 256:
# observed maxima 1.476526 (lam=1/2) and 0.711490 (lam=1)
RECORDED_C = {0.5: 1.6, 1.0: 0.8}


def test_criterion_09_log_embedding():
    ok = True
    details = []
    for lam, c_rec in RECORDED_C.items():
        samples, max_ratio = embedding_sweep(
            range(200), p=(4.0, 4.0), lam=lam,
            dilations=(1.0, 2.0, 4.0, 8.0), resolution=256,
        )
        finite = all(math.isfinite(s.ratio) for _, _, s in samples)
        ok &= finite and 0.0 < max_ratio <= c_rec
        details.append(f"lam={lam:g}: max {max_ratio:.4f} <= {c_rec}")
    _line(9, "log embedding of L^inf", ok, "; ".join(details))
    assert ok


def test_criterion_10_convergence():
    diff = run_convergence("diffusion")
    vortex = run_convergence("taylor-vortex")
    diff_ok = (
        diff.spatial_errors[0] <= 1e-12
        and (diff.temporally_exact
             or (diff.temporal_order is not None
                 and 2.7 <= diff.temporal_order <= 3.3))
    )
    # the diffusion problem is integrated exactly in time, so the measurable
    # third-order check comes from the smooth nonlinear test
    vortex_ok = (
        vortex.spatial_ns == (32, 64, 128)
        and all(r >= 10.0 for r in vortex.spatial_ratios)
        and vortex.temporal_order is not None
        and 2.7 <= vortex.temporal_order <= 3.3
    )
    ok = diff_ok and vortex_ok
    _line(10, "convergence study", ok,
          f"diffusion N=8 err {diff.spatial_errors[0]:.1e}, "
          f"vortex ratios {', '.join(f'{r:.3g}' for r in vortex.spatial_ratios)}, "
          f"temporal order {vortex.temporal_order:.3f}")
    assert ok


def test_criterion_11_continuous_dependence():
    run = parse_run_config({
        "solver": {"nx": 64, "ny": 64, "nu": 1.0, "kappa": 1.0,
                   "t_end": 0.25, "output_every": 0.005},
        "ic": _reference_ic(),
    })
    res = run_twin(run, [1e-3, 1e-4, 1e-5])
    stable = res.stability is not None and res.stability <= 0.05

    diff_run = parse_run_config({
        "solver": {"nx": 16, "ny": 16, "t_end": 2.0, "output_every": 0.05},
        "ic": {"name": "taylor-vortex", "params": {"amp": 0.0, "amp_theta": 0.0}},
    })
    g = diff_run.solver.grid
    pert = (SpectralField.zeros(g),
            SpectralField.from_physical(g, np.ones((g.nx, 1)) * np.cos(g.y)))
    eps = 1e-3
    twin = run_twin(diff_run, [eps], perturbation=pert)
    exact = eps**2 * np.exp(-2.0 * twin.times)
    dev = float(np.max(np.abs(twin.d_series[eps] / exact - 1.0)))

    ok = stable and res.passed and dev <= 1e-8
    _line(11, "continuous dependence", ok,
          f"c_hat spread {res.stability:.2e}, diffusion-twin deviation {dev:.1e}")
    assert ok


def test_criterion_12_determinism(tmp_path):
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps({
        "solver": {"nx": 64, "ny": 64, "nu": 1.0, "kappa": 1.0,
                   "t_end": 0.1, "output_every": 0.01},
        "ic": _reference_ic(),
    }), encoding="utf-8")
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(cfg_path),
                     "--out", str(tmp_path / d)]) == 0
    same = ((tmp_path / "a" / "series.csv").read_bytes()
            == (tmp_path / "b" / "series.csv").read_bytes())
    _line(12, "byte-identical determinism", same)
    assert same
