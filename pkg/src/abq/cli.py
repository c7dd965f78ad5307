"""Command-line interface.

Subcommands: simulate, monitor, ineqlab (holder | embedding | gronwall),
convergence, twin.  Exit codes: 0 success, 2 configuration/usage error,
3 check failure, 4 blow-up or under-resolution halt.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence, Union

from .config import ConfigError, RunConfig, load_run_config
from .drivers import run_convergence, run_simulation, run_twin
from .ineqlab import (
    GronwallCase,
    InvalidExponentsError,
    Proportional,
    Saturating,
    acceptance_grid,
    embedding_sweep,
    gronwall_verify,
    holder_ratio,
    holder_ratio_q2,
    holder_sweep,
    random_test_function,
)
from .monitor import (
    BoundCheck,
    check_theta_l2_balance,
    check_theta_maximum_principle,
    check_velocity_l2,
    h1_inequality_check,
    local_bound_check,
)
from .series import SchemaError, read_series, write_series
from .snapshots import SnapshotError, write_snapshot
from .stepper import BlowUpError

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK = 3
EXIT_BLOWUP = 4


def _emit_report(report: dict, out: Union[str, None]) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _series_meta(run: RunConfig, halted: bool, halt_reason, warnings) -> dict:
    cfg = run.solver
    return {
        "nx": cfg.grid.nx,
        "ny": cfg.grid.ny,
        "nu": cfg.nu,
        "kappa": cfg.kappa,
        "dt": cfg.dt,
        "t_end": cfg.t_end,
        "cfl_safety": cfg.cfl_safety,
        "dealias": cfg.dealias,
        "output_every": cfg.output_every,
        "ic": {"name": run.ic.name, "params": dict(run.ic.params), "seed": run.ic.seed},
        "qset": list(run.qset),
        "r_grid": list(run.r_grid),
        "halted": halted,
        "halt_reason": halt_reason,
        "warnings": list(warnings),
    }


# --------------------------------------------------------------------------
# simulate
# --------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    run = load_run_config(args.config)
    out_dir = Path(args.out or run.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)

    result = run_simulation(run)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)

    meta = _series_meta(run, result.halted, result.halt_reason, result.warnings)
    series_path = out_dir / "series.csv"
    write_series(series_path, result.series, meta)
    snap_path = out_dir / "final_state.snap"
    write_snapshot(snap_path, result.final_state)

    print(f"wrote {series_path} ({len(result.series)} samples) and {snap_path}")
    if result.halted:
        print(f"halted: {result.halt_reason}", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK


# --------------------------------------------------------------------------
# monitor
# --------------------------------------------------------------------------

_MONITOR_CHECKS = ("theta-max", "theta-l2-balance", "velocity-l2", "divergence",
                   "h1", "local-bound")


def _summarize(name: str, checks: Sequence[BoundCheck], notes: Sequence[str] = ()) -> bool:
    if not checks:
        for n in notes:
            print(f"{name:18s} skipped: {n}")
        return True
    worst = min(checks, key=lambda c: c.margin)
    failed = [c for c in checks if not c.passed]
    status = "PASS" if not failed else "FAIL"
    print(
        f"{name:18s} {status}  samples={len(checks)} failures={len(failed)} "
        f"worst margin={worst.margin:.6g} at t={worst.t:.6g}"
    )
    for n in notes:
        print(f"{name:18s} note: {n}")
    if failed and failed[0].note:
        print(f"{name:18s} note: {failed[0].note}")
    return not failed


def cmd_monitor(args) -> int:
    series, meta = read_series(args.series)
    if not series:
        raise SchemaError(f"{args.series} contains no records")
    selected = args.check
    if "all" in selected:
        selected = list(_MONITOR_CHECKS)
    unknown = sorted(set(selected) - set(_MONITOR_CHECKS))
    if unknown:
        raise ConfigError(
            f"unknown check(s): {', '.join(unknown)}; "
            f"available: {', '.join(_MONITOR_CHECKS)}, all"
        )

    def need_meta(key: str) -> float:
        if key not in meta:
            raise SchemaError(f"series meta lacks {key!r}, required for this check")
        return float(meta[key])

    ok = True
    for name in selected:
        if name == "theta-max":
            ok &= _summarize(name, check_theta_maximum_principle(series))
        elif name == "theta-l2-balance":
            ok &= _summarize(name, check_theta_l2_balance(series, need_meta("kappa")))
        elif name == "velocity-l2":
            ok &= _summarize(name, check_velocity_l2(series, need_meta("nu")))
        elif name == "divergence":
            checks = [
                BoundCheck("divergence", rec.t, rec.div_ratio, 1e-12,
                           rec.div_ratio <= 1e-12, 1e-12 - rec.div_ratio)
                for rec in series
            ]
            ok &= _summarize(name, checks)
        elif name == "h1":
            checks, notice = h1_inequality_check(series)
            ok &= _summarize(name, checks, [notice] if notice else [])
        elif name == "local-bound":
            checks, info = local_bound_check(series)
            ok &= _summarize(
                name, checks,
                [f"c_hat={info['c_hat']:.6g} f0={info['f0']:.6g} "
                 f"horizon={info['horizon']:.6g}"],
            )
    return EXIT_OK if ok else EXIT_CHECK


# --------------------------------------------------------------------------
# ineqlab
# --------------------------------------------------------------------------

def cmd_ineqlab_holder(args) -> int:
    seeds = range(args.seed, args.seed + args.samples)
    report: dict = {"samples": args.samples, "qs": {}}
    ok = True
    for q in args.q:
        sweep = holder_sweep(seeds, q, resolution=args.resolution)
        finite = all(math.isfinite(r) for r in sweep.ratios)
        ok &= finite
        report["qs"][f"{q:g}"] = {
            "max_ratio": sweep.max_ratio,
            "argmax_seed": sweep.argmax_seed,
            "finite": finite,
        }
        if q == 2.0:
            gap = 0.0
            for s in list(seeds)[: min(10, args.samples)]:
                f = random_test_function(3 * s)
                g = random_test_function(3 * s + 1)
                h = random_test_function(3 * s + 2)
                r_gen = holder_ratio(f, g, h, 2.0, resolution=args.resolution)
                r_spec = holder_ratio_q2(f, g, h, resolution=args.resolution)
                gap = max(gap, abs(r_gen - r_spec))
            report["qs"]["2"]["q2_path_gap"] = gap
            ok &= gap <= 1e-12
    _emit_report(report, args.out)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_ineqlab_embedding(args) -> int:
    p = tuple(args.p)
    report: dict = {"p": list(p), "samples": args.samples, "lams": {}}
    ok = True
    for lam in args.lam:
        samples, max_ratio = embedding_sweep(
            range(args.seed, args.seed + args.samples),
            p=p,
            lam=lam,
            dilations=tuple(args.dilations),
            resolution=args.resolution,
        )
        finite = all(math.isfinite(s.ratio) for _, _, s in samples)
        ok &= finite
        report["lams"][f"{lam:g}"] = {"max_ratio": max_ratio, "finite": finite}
    _emit_report(report, args.out)
    return EXIT_OK if ok else EXIT_CHECK


_A0_ALIASES = {"e": math.e, "e^e": math.exp(math.e), "e^10": math.exp(10.0)}


def _parse_a0(text: str) -> float:
    if text in _A0_ALIASES:
        return _A0_ALIASES[text]
    return float(text)


def cmd_ineqlab_gronwall(args) -> int:
    if args.grid:
        cases = acceptance_grid(T=args.T)
    else:
        family = Saturating(args.mu) if args.mu is not None else Proportional(args.alpha)
        cases = [GronwallCase(K=args.K, A0=_parse_a0(args.A0), b_family=family, T=args.T)]
    results = []
    ok = True
    for case in cases:
        rep = gronwall_verify(case)
        ok &= rep.passed and rep.certificate_ok
        fam = case.b_family
        results.append({
            "K": case.K,
            "A0": case.A0,
            "family": (f"proportional(alpha={fam.alpha:g})"
                       if isinstance(fam, Proportional) else f"saturating(mu={fam.mu:g})"),
            "T": case.T,
            "max_ratio": rep.max_ratio,
            "passed": rep.passed,
            "steps": rep.n_steps,
            "certificate": rep.certificate,
            "refinements": rep.refinements,
        })
    _emit_report({"cases": results, "all_passed": ok}, args.out)
    return EXIT_OK if ok else EXIT_CHECK


# --------------------------------------------------------------------------
# convergence / twin
# --------------------------------------------------------------------------

def cmd_convergence(args) -> int:
    result = run_convergence(args.test, levels=args.levels)
    print(f"test: {result.test}")
    for n, e in zip(result.spatial_ns, result.spatial_errors):
        print(f"  spatial N={n:<4d} error={e:.6e}")
    if result.spatial_ratios:
        print("  spatial ratios: " + ", ".join(
            "inf" if math.isinf(r) else f"{r:.3g}" for r in result.spatial_ratios))
    for dt, e in zip(result.temporal_dts, result.temporal_errors):
        print(f"  temporal dt={dt:<10.6g} error={e:.6e}")
    if result.temporally_exact:
        print("  temporal: errors at the rounding floor "
              "(dissipation is integrated exactly); order test passes")
    else:
        print(f"  temporal order: {result.temporal_order:.3f}")
    print(f"  spatial {'PASS' if result.spatial_pass else 'FAIL'}, "
          f"temporal {'PASS' if result.temporal_pass else 'FAIL'}")
    return EXIT_OK if result.passed else EXIT_CHECK


def cmd_twin(args) -> int:
    run = load_run_config(args.config)
    result = run_twin(run, args.eps)
    for e in result.skipped:
        print(f"eps={e:g}: skipped (identical initial data)")
    for e in result.epsilons:
        if e in result.c_hats:
            n_fail = sum(not c.passed for c in result.checks[e])
            print(f"eps={e:g}: c_hat={result.c_hats[e]:.6g} "
                  f"({len(result.checks[e])} samples, {n_fail} failures)")
    ok = result.passed
    if result.stability is not None:
        print(f"c_hat relative spread: {result.stability:.3g}")
        ok &= result.stability <= 0.05
    if args.out:
        _emit_report({
            "epsilons": list(result.epsilons),
            "c_hats": {f"{e:g}": c for e, c in result.c_hats.items()},
            "stability": result.stability,
            "skipped": list(result.skipped),
        }, args.out)
    return EXIT_OK if ok else EXIT_CHECK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abq",
        description="Boussinesq solver with vertical dissipation, estimate "
                    "monitor, and functional-inequality lab",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configured simulation")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=None, help="output directory (default: config out_dir or .)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("monitor", help="evaluate a priori estimate checks on a series")
    p.add_argument("--series", required=True, help="diagnostics CSV path")
    p.add_argument("--check", action="append",
                   default=None, help="check name or 'all' (repeatable)")
    p.set_defaults(func=cmd_monitor)

    lab = sub.add_parser("ineqlab", help="functional-inequality verifications")
    labsub = lab.add_subparsers(dest="lab_command", required=True)

    p = labsub.add_parser("holder", help="anisotropic three-factor product bound")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--q", type=float, action="append", default=None)
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--out", default=None, help="JSON report path (default stdout)")
    p.set_defaults(func=cmd_ineqlab_holder)

    p = labsub.add_parser("embedding", help="borderline log embedding of L^inf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--p", type=float, nargs=2, default=(4.0, 4.0),
                   metavar=("P1", "P2"))
    p.add_argument("--lam", type=float, action="append", default=None)
    p.add_argument("--dilations", type=float, nargs="+", default=(1.0,))
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ineqlab_embedding)

    p = labsub.add_parser("gronwall", help="logarithmic Gronwall ODE bound")
    p.add_argument("--grid", action="store_true",
                   help="run the full 27-case verification grid")
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--A0", default="e^e",
                   help="initial value (number, or one of e, e^e, e^10)")
    p.add_argument("--alpha", type=float, default=1.0,
                   help="proportional closure exponent B = A^alpha")
    p.add_argument("--mu", type=float, default=None,
                   help="use the saturating closure with growth rate mu")
    p.add_argument("--T", type=float, default=2.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ineqlab_gronwall)

    p = sub.add_parser("convergence", help="grid/timestep convergence study")
    p.add_argument("--test", required=True, choices=("diffusion", "taylor-vortex"))
    p.add_argument("--levels", type=int, default=3)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("twin", help="continuous-dependence twin runs")
    p.add_argument("--config", required=True)
    p.add_argument("--eps", type=float, nargs="+", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_twin)

    return parser


def main(argv: Union[Sequence[str], None] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "check", None) is None and args.command == "monitor":
        args.check = ["all"]
    if getattr(args, "q", None) is None and getattr(args, "lab_command", None) == "holder":
        args.q = [2.0, 3.0, 4.0]
    if getattr(args, "lam", None) is None and getattr(args, "lab_command", None) == "embedding":
        args.lam = [0.5, 1.0]
    try:
        return args.func(args)
    except (ConfigError, SchemaError, SnapshotError, InvalidExponentsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up halt: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except RuntimeError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
