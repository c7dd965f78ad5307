"""Run configuration: a strict JSON format covering the solver, the initial
condition, and the monitor sampling.

Unknown keys are rejected at every level so a typo cannot silently fall back
to a default, and random initial conditions must carry an explicit seed (no
wall-clock entropy anywhere).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Union

from .initial import IC_NAMES, build_initial_condition, requires_seed
from .monitor import DEFAULT_QSET, DEFAULT_R_GRID
from .spectral import Grid, SpectralField
from .stepper import SolverConfig, State

__all__ = ["ConfigError", "ICSpec", "RunConfig", "parse_run_config", "load_run_config"]


class ConfigError(ValueError):
    """Raised for unparseable or invalid run configurations."""


def _reject_unknown(data: Mapping[str, Any], allowed: tuple[str, ...], where: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {where}: {', '.join(unknown)}; "
            f"allowed: {', '.join(allowed)}"
        )


@dataclass(frozen=True)
class ICSpec:
    name: str
    params: Mapping[str, float] = field(default_factory=dict)
    seed: Union[int, None] = None

    def build(self, grid: Grid) -> tuple[SpectralField, SpectralField]:
        return build_initial_condition(grid, self.name, dict(self.params), self.seed)


@dataclass(frozen=True)
class RunConfig:
    solver: SolverConfig
    ic: ICSpec
    qset: tuple[float, ...] = tuple(DEFAULT_QSET)
    r_grid: tuple[float, ...] = tuple(DEFAULT_R_GRID)
    out_dir: Union[str, None] = None

    def initial_state(self) -> State:
        omega, theta = self.ic.build(self.solver.grid)
        return State(omega, theta, 0.0)


_SOLVER_KEYS = ("nx", "ny", "nu", "kappa", "dt", "t_end", "cfl_safety",
                "dealias", "output_every")
_IC_KEYS = ("name", "params", "seed")
_MONITOR_KEYS = ("qset", "r_grid", "output_every")
_TOP_KEYS = ("solver", "ic", "monitor", "out_dir")


def _number_seq(value: Any, where: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{where} must be a non-empty list of numbers")
    out = []
    for v in value:
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(f"{where} must contain numbers only, got {v!r}")
        out.append(float(v))
    return tuple(out)


def parse_run_config(data: Any) -> RunConfig:
    """Build a RunConfig from parsed JSON, validating strictly."""
    if not isinstance(data, Mapping):
        raise ConfigError("top-level configuration must be a JSON object")
    _reject_unknown(data, _TOP_KEYS, "configuration")
    for key in ("solver", "ic"):
        if key not in data:
            raise ConfigError(f"missing required section {key!r}")

    sol = data["solver"]
    if not isinstance(sol, Mapping):
        raise ConfigError("'solver' must be an object")
    _reject_unknown(sol, _SOLVER_KEYS, "solver")
    for key in ("nx", "ny", "t_end"):
        if key not in sol:
            raise ConfigError(f"missing required solver key {key!r}")

    mon = data.get("monitor", {})
    if not isinstance(mon, Mapping):
        raise ConfigError("'monitor' must be an object")
    _reject_unknown(mon, _MONITOR_KEYS, "monitor")

    output_every = sol.get("output_every")
    if "output_every" in mon:
        if output_every is not None and float(mon["output_every"]) != float(output_every):
            raise ConfigError(
                "output_every given in both solver and monitor sections with "
                "different values"
            )
        output_every = mon["output_every"]
    if output_every is None:
        output_every = 0.01

    dt = sol.get("dt", "auto")
    if isinstance(dt, str) and dt != "auto":
        raise ConfigError(f"solver dt must be a number or 'auto', got {dt!r}")

    try:
        grid = Grid(int(sol["nx"]), int(sol["ny"]))
        solver = SolverConfig(
            grid=grid,
            nu=float(sol.get("nu", 1.0)),
            kappa=float(sol.get("kappa", 1.0)),
            dt=dt if isinstance(dt, str) else float(dt),
            t_end=float(sol["t_end"]),
            cfl_safety=float(sol.get("cfl_safety", 0.5)),
            dealias=bool(sol.get("dealias", True)),
            output_every=float(output_every),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid solver section: {exc}") from exc

    ic_data = data["ic"]
    if not isinstance(ic_data, Mapping):
        raise ConfigError("'ic' must be an object")
    _reject_unknown(ic_data, _IC_KEYS, "ic")
    name = ic_data.get("name")
    if name not in IC_NAMES:
        raise ConfigError(
            f"ic name must be one of {', '.join(IC_NAMES)}, got {name!r}"
        )
    params = ic_data.get("params", {})
    if not isinstance(params, Mapping):
        raise ConfigError("ic params must be an object")
    seed = ic_data.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ConfigError(f"ic seed must be an integer, got {seed!r}")
    if requires_seed(name) and seed is None:
        raise ConfigError(f"initial condition {name!r} requires an integer seed")

    qset = _number_seq(mon["qset"], "monitor.qset") if "qset" in mon else tuple(DEFAULT_QSET)
    r_grid = (
        _number_seq(mon["r_grid"], "monitor.r_grid")
        if "r_grid" in mon
        else tuple(DEFAULT_R_GRID)
    )

    out_dir = data.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("out_dir must be a string path")

    return RunConfig(
        solver=solver,
        ic=ICSpec(name=name, params=dict(params), seed=seed),
        qset=qset,
        r_grid=r_grid,
        out_dir=out_dir,
    )


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Read and validate a JSON run configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_run_config(data)
