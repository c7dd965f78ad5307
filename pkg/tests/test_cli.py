"""End-to-end tests of the command-line interface, run in-process through
main(argv).  Exit codes: 0 success, 2 configuration/usage error, 3 check
failure, 4 blow-up or under-resolution halt."""

import json
import math

import pytest

from abq.cli import main
from abq.series import read_series


def write_json(path, data):
    path.write_text(json.dumps(data, indent=1), encoding="utf-8")
    return path


SIM_CONFIG = {
    "solver": {"nx": 32, "ny": 32, "nu": 1.0, "kappa": 1.0,
               "t_end": 0.2, "output_every": 0.0025},
    "ic": {"name": "random-bandlimited", "seed": 42,
           "params": {"kmax": 4, "k0": 2.0, "amp_u": 0.5, "amp_theta": 0.5}},
}

TWIN_CONFIG = {
    "solver": {"nx": 32, "ny": 32, "t_end": 0.2, "output_every": 0.02},
    "ic": {"name": "random-bandlimited", "seed": 5,
           "params": {"kmax": 4, "k0": 2.0, "amp_u": 0.5, "amp_theta": 0.5}},
}


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    """One completed simulate run shared by the read-only CLI tests."""
    root = tmp_path_factory.mktemp("sim")
    cfg = write_json(root / "run.json", SIM_CONFIG)
    out = root / "out"
    code = main(["simulate", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    return root


# -------------------------------------------------------------------------
# simulate
# -------------------------------------------------------------------------

def test_simulate_outputs(sim_dir):
    series_path = sim_dir / "out" / "series.csv"
    snap_path = sim_dir / "out" / "final_state.snap"
    assert series_path.exists() and snap_path.exists()
    records, meta = read_series(series_path)
    assert len(records) == 81  # initial sample + 0.2 / 0.0025 intervals
    assert meta["nx"] == 32 and meta["ic"]["seed"] == 42
    assert meta["halted"] is False and meta["warnings"] == []


def test_simulate_reruns_byte_identical(tmp_path):
    cfg = write_json(tmp_path / "run.json", SIM_CONFIG)
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(cfg),
                     "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "series.csv").read_bytes() == \
           (tmp_path / "b" / "series.csv").read_bytes()


def test_simulate_diffusion_only_matches_exact_decay(tmp_path):
    # zero vorticity and a y-only temperature profile: the run is pure
    # vertical diffusion and the L2 amplitude must track e^{-t}
    cfg = write_json(tmp_path / "diff.json", {
        "solver": {"nx": 32, "ny": 32, "t_end": 1.0, "output_every": 0.05},
        "ic": {"name": "shear-front",
               "params": {"amp": 0.0, "tilt": 0.0, "width": 100.0,
                          "amp_theta": 1.0}},
    })
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    records, _ = read_series(tmp_path / "series.csv")
    t0 = records[0].theta_l2
    for rec in records:
        assert rec.u_l2 == 0.0
        assert abs(rec.theta_l2 / t0 - math.exp(-rec.t)) < 1e-10


def test_simulate_unknown_config_key_exit2(tmp_path, capsys):
    cfg = write_json(tmp_path / "bad.json", {
        "solver": {"nx": 16, "ny": 16, "t_end": 0.1, "bogus_key": 1},
        "ic": {"name": "taylor-vortex"},
    })
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "bogus_key" in capsys.readouterr().err
    assert not (tmp_path / "series.csv").exists()


def test_simulate_missing_config_exit2(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_simulate_dt_too_large_halts_exit4_with_partial_series(tmp_path, capsys):
    cfg = write_json(tmp_path / "unstable.json", {
        "solver": {"nx": 64, "ny": 64, "nu": 0.0, "kappa": 0.0, "dt": 0.1,
                   "t_end": 2.0, "output_every": 0.1},
        "ic": {"name": "taylor-vortex",
               "params": {"amp": 2.0, "perturb": 0.3, "amp_theta": 0.5}},
    })
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 4
    err = capsys.readouterr().err
    assert "halted" in err
    records, meta = read_series(tmp_path / "series.csv")
    assert meta["halted"] is True
    assert 1 <= len(records)
    assert records[-1].t < 2.0
    assert (tmp_path / "final_state.snap").exists()


# -------------------------------------------------------------------------
# monitor
# -------------------------------------------------------------------------

def test_monitor_all_checks_pass(sim_dir, capsys):
    code = main(["monitor", "--series", str(sim_dir / "out" / "series.csv")])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS" in out and "FAIL" not in out
    # every published check family reported
    for name in ("theta-max", "theta-l2-balance", "velocity-l2",
                 "divergence", "h1", "local-bound"):
        assert name in out


def test_monitor_injected_linf_violation_exit3(sim_dir, tmp_path, capsys):
    src = (sim_dir / "out" / "series.csv").read_text().splitlines()
    header = src[2].split(",")
    col = header.index("theta_linf")
    parts = src[10].split(",")
    parts[col] = repr(float(parts[col]) * 10.0)
    src[10] = ",".join(parts)
    doctored = tmp_path / "doctored.csv"
    doctored.write_text("\n".join(src) + "\n")
    code = main(["monitor", "--series", str(doctored), "--check", "theta-max"])
    assert code == 3
    assert "FAIL" in capsys.readouterr().out


def test_monitor_unknown_check_exit2(sim_dir, capsys):
    code = main(["monitor", "--series", str(sim_dir / "out" / "series.csv"),
                 "--check", "theta-minimum"])
    assert code == 2
    assert "theta-minimum" in capsys.readouterr().err


def test_monitor_missing_series_exit2(tmp_path, capsys):
    assert main(["monitor", "--series", str(tmp_path / "none.csv")]) == 2
    assert "error:" in capsys.readouterr().err


# -------------------------------------------------------------------------
# ineqlab
# -------------------------------------------------------------------------

def test_holder_cli_report(tmp_path):
    rep_path = tmp_path / "holder.json"
    code = main(["ineqlab", "holder", "--samples", "3", "--resolution", "64",
                 "--q", "2", "--out", str(rep_path)])
    assert code == 0
    rep = json.loads(rep_path.read_text())
    entry = rep["qs"]["2"]
    assert entry["finite"] is True
    assert 0.0 < entry["max_ratio"] < 1.25
    assert entry["q2_path_gap"] <= 1e-12


def test_embedding_cli_report(tmp_path):
    rep_path = tmp_path / "embed.json"
    code = main(["ineqlab", "embedding", "--samples", "2", "--resolution", "64",
                 "--lam", "0.5", "--out", str(rep_path)])
    assert code == 0
    rep = json.loads(rep_path.read_text())
    assert rep["lams"]["0.5"]["finite"] is True
    assert rep["lams"]["0.5"]["max_ratio"] > 0.0


def test_embedding_cli_rejects_borderline_exponents(capsys):
    code = main(["ineqlab", "embedding", "--p", "2", "2", "--samples", "1"])
    assert code == 2
    assert "1/p1 + 1/p2 < 1" in capsys.readouterr().err


def test_gronwall_cli_single_case(tmp_path):
    rep_path = tmp_path / "gron.json"
    code = main(["ineqlab", "gronwall", "--out", str(rep_path)])
    assert code == 0
    rep = json.loads(rep_path.read_text())
    assert rep["all_passed"] is True
    case = rep["cases"][0]
    assert case["K"] == 1.0 and case["T"] == 2.0
    assert case["passed"] is True and case["max_ratio"] <= 1.0


def test_gronwall_cli_infeasible_saturating_exit2(capsys):
    code = main(["ineqlab", "gronwall", "--mu", "10"])
    assert code == 2
    assert "not attainable" in capsys.readouterr().err


# -------------------------------------------------------------------------
# convergence / twin
# -------------------------------------------------------------------------

def test_convergence_cli_diffusion(capsys):
    code = main(["convergence", "--test", "diffusion"])
    out = capsys.readouterr().out
    assert code == 0
    assert "spatial PASS" in out and "temporal PASS" in out
    assert "rounding floor" in out


def test_convergence_cli_bad_levels_exit2(capsys):
    assert main(["convergence", "--test", "diffusion", "--levels", "2"]) == 2
    assert "levels" in capsys.readouterr().err


def test_twin_cli(tmp_path, capsys):
    cfg = write_json(tmp_path / "twin.json", TWIN_CONFIG)
    rep_path = tmp_path / "twin_report.json"
    code = main(["twin", "--config", str(cfg), "--eps", "0.001", "0.0001",
                 "--out", str(rep_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "c_hat relative spread" in out
    rep = json.loads(rep_path.read_text())
    assert rep["stability"] is not None and rep["stability"] <= 0.05
    assert set(rep["c_hats"]) == {"0.001", "0.0001"}


def test_twin_cli_zero_eps_skipped(tmp_path, capsys):
    cfg = write_json(tmp_path / "twin.json", {
        "solver": {"nx": 16, "ny": 16, "t_end": 0.04, "output_every": 0.02},
        "ic": {"name": "random-bandlimited", "seed": 5,
               "params": {"kmax": 4, "k0": 2.0}},
    })
    code = main(["twin", "--config", str(cfg), "--eps", "0", "0.001"])
    out = capsys.readouterr().out
    assert code == 0
    assert "skipped (identical initial data)" in out


# -------------------------------------------------------------------------
# parser
# -------------------------------------------------------------------------

def test_no_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
