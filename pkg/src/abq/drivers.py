"""Run drivers: the sampled simulation loop, twin (perturbed-pair) runs, and
grid/timestep convergence studies.

The simulation loop lands exactly on every output time by subdividing each
output interval into equal CFL-compliant steps, and it folds per-step maxima
of the divergence ratio and the spectral-tail fraction into the records so
that sampled series still witness every step.  Independent runs (convergence
levels, twin perturbations) can fan out over a thread pool capped by
ABQ_THREADS.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence, Union

import numpy as np

from .config import RunConfig
from .initial import random_bandlimited, taylor_vortex
from .monitor import DiagnosticsRecord, record, twin_check, BoundCheck
from .spectral import Grid, SpectralField, TWO_PI, velocity_from_vorticity, x_tail_fraction
from .stepper import (
    BlowUpError,
    SolverConfig,
    State,
    TAIL_WARN,
    cfl_dt,
    divergence_residual,
    step,
)

__all__ = [
    "RunResult",
    "TwinResult",
    "ConvergenceResult",
    "max_workers",
    "run_simulation",
    "run_twin",
    "run_convergence",
    "embedded_diff_l2",
]


def max_workers() -> int:
    """Fan-out cap for concurrent runs, from ABQ_THREADS (default 1)."""
    try:
        w = int(os.environ.get("ABQ_THREADS", "1"))
    except ValueError:
        w = 1
    return max(1, w)


def _map_runs(fn: Callable, items: Sequence):
    if max_workers() > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=max_workers()) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


@dataclass(frozen=True)
class RunResult:
    """Outcome of one sampled simulation."""

    series: tuple[DiagnosticsRecord, ...]
    final_state: State
    halted: bool
    halt_reason: Union[str, None]
    warnings: tuple[str, ...]


def _interval_targets(t_end: float, output_every: float) -> list[float]:
    n = max(1, math.ceil(t_end / output_every - 1e-9))
    return [min((k + 1) * output_every, t_end) for k in range(n)]


def run_simulation(run: RunConfig) -> RunResult:
    """Advance the configured initial state to t_end, emitting one record per
    output interval (plus the initial one).  On blow-up the series collected
    so far and the last valid state are returned with halted=True."""
    cfg = run.solver
    state = run.initial_state()
    series = [record(state, cfg=cfg, qset=run.qset, r_grid=run.r_grid)]
    warnings: list[str] = []
    prev_sample = state
    halted = False
    halt_reason: Union[str, None] = None
    cfl_warned = False
    tail_warned = False

    for target in _interval_targets(cfg.t_end, cfg.output_every):
        span = target - state.t
        if span <= 0:
            continue
        if cfg.dt == "auto":
            base = cfl_dt(state, cfg)
        else:
            base = float(cfg.dt)
        n_sub = max(1, math.ceil(span / base - 1e-9))
        div_max = 0.0
        tail_max = 0.0
        try:
            for j in range(n_sub):
                dt_step = (target - state.t) / (n_sub - j)
                if cfg.dt != "auto" and not cfl_warned:
                    stable = cfl_dt(state, cfg)
                    if dt_step > stable * (1.0 + 1e-9):
                        warnings.append(
                            f"fixed dt {dt_step:g} exceeds the CFL estimate "
                            f"{stable:g} at t={state.t:.6g}"
                        )
                        cfl_warned = True
                state = step(state, cfg, dt_step)
                div_l2, grad_l2 = divergence_residual(state)
                div_max = max(div_max, div_l2 / grad_l2 if grad_l2 > 0 else 0.0)
                tail = max(x_tail_fraction(state.omega), x_tail_fraction(state.theta))
                tail_max = max(tail_max, tail)
                if tail > TAIL_WARN and not tail_warned:
                    warnings.append(
                        f"spectral tail fraction {tail:.3e} above warning "
                        f"threshold at t={state.t:.6g}"
                    )
                    tail_warned = True
        except BlowUpError as exc:
            halted = True
            halt_reason = str(exc)
            state = exc.state
            break
        rec = record(state, prev_sample, cfg=cfg, qset=run.qset, r_grid=run.r_grid)
        series.append(replace(rec, div_ratio=div_max, tail_frac=tail_max))
        prev_sample = state

    return RunResult(
        series=tuple(series),
        final_state=state,
        halted=halted,
        halt_reason=halt_reason,
        warnings=tuple(warnings),
    )


# --------------------------------------------------------------------------
# twin runs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TwinResult:
    """Base run plus perturbed companions at several perturbation sizes."""

    epsilons: tuple[float, ...]
    times: np.ndarray
    d_series: dict[float, np.ndarray]          # eps -> squared L2 separation
    c_hats: dict[float, float]                 # eps -> estimated constant
    checks: dict[float, tuple[BoundCheck, ...]]
    base_series: tuple[DiagnosticsRecord, ...]
    skipped: tuple[float, ...]
    stability: Union[float, None]              # relative spread of c_hat

    @property
    def passed(self) -> bool:
        return all(c.passed for checks in self.checks.values() for c in checks)


def _coeff_l2sq(delta: np.ndarray) -> float:
    return float(TWO_PI**2 * np.sum(np.abs(delta) ** 2))


def _separation(a: State, b: State) -> float:
    dw = SpectralField(a.grid, a.omega.coeffs - b.omega.coeffs)
    du1, du2 = velocity_from_vorticity(dw)
    return (
        _coeff_l2sq(du1.coeffs)
        + _coeff_l2sq(du2.coeffs)
        + _coeff_l2sq(a.theta.coeffs - b.theta.coeffs)
    )


def run_twin(run: RunConfig, epsilons: Sequence[float], *,
             perturb_seed: int = 700,
             perturbation: Union[tuple[SpectralField, SpectralField], None] = None,
             ) -> TwinResult:
    """Run the base configuration in lockstep with perturbed twins.

    The perturbation direction (a band-limited random draw by default, or an
    explicit (omega, theta) pair) is normalized so the combined velocity and
    temperature separation has L2 norm epsilon.  All runs share a fixed step
    chosen from the base state's CFL estimate, so samples align exactly.
    """
    cfg = run.solver
    g = cfg.grid
    base0 = run.initial_state()

    if perturbation is None:
        band = min(6, g.nx // 3, g.ny // 3)
        pw, pth = random_bandlimited(g, seed=perturb_seed, kmax=band,
                                     amp_u=1.0, amp_theta=1.0)
    else:
        pw, pth = perturbation
    pu1, pu2 = velocity_from_vorticity(pw)
    norm = math.sqrt(pu1.l2() ** 2 + pu2.l2() ** 2 + pth.l2() ** 2)
    if not norm > 0:
        raise ValueError("perturbation direction is identically zero")

    eps_list = tuple(float(e) for e in epsilons)
    skipped = tuple(e for e in eps_list if e == 0.0)
    active = [e for e in eps_list if e != 0.0]

    targets = _interval_targets(cfg.t_end, cfg.output_every)
    base_dt = cfl_dt(base0, cfg) if cfg.dt == "auto" else float(cfg.dt)
    n_sub = max(1, math.ceil(cfg.output_every / base_dt - 1e-9))

    def perturbed_state(eps: float) -> State:
        s = eps / norm
        return State(
            SpectralField(g, base0.omega.coeffs + s * pw.coeffs),
            SpectralField(g, base0.theta.coeffs + s * pth.coeffs),
            0.0,
        )

    states: dict[float, State] = {e: perturbed_state(e) for e in active}
    base = base0
    base_series = [record(base, cfg=cfg, qset=run.qset, r_grid=run.r_grid)]
    prev_sample = base
    times = [0.0]
    d: dict[float, list[float]] = {e: [_separation(states[e], base)] for e in active}

    for target in targets:
        for j in range(n_sub):
            dt_step = (target - base.t) / (n_sub - j)
            base = step(base, cfg, dt_step)
            for e in active:
                states[e] = step(states[e], cfg, dt_step)
        base_series.append(
            record(base, prev_sample, cfg=cfg, qset=run.qset, r_grid=run.r_grid)
        )
        prev_sample = base
        times.append(base.t)
        for e in active:
            d[e].append(_separation(states[e], base))

    t_arr = np.array(times)
    d_series = {e: np.array(d[e]) for e in active}
    c_hats: dict[float, float] = {}
    checks: dict[float, tuple[BoundCheck, ...]] = {}
    for e in active:
        cks, c_hat = twin_check(base_series, t_arr, d_series[e])
        c_hats[e] = c_hat
        checks[e] = tuple(cks)

    stability = None
    finite = [c for c in c_hats.values() if math.isfinite(c)]
    if len(finite) >= 2:
        mean = sum(finite) / len(finite)
        if mean != 0:
            stability = (max(finite) - min(finite)) / abs(mean)

    return TwinResult(
        epsilons=eps_list,
        times=t_arr,
        d_series=d_series,
        c_hats=c_hats,
        checks=checks,
        base_series=tuple(base_series),
        skipped=skipped,
        stability=stability,
    )


# --------------------------------------------------------------------------
# convergence studies
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceResult:
    test: str
    spatial_ns: tuple[int, ...]
    spatial_errors: tuple[float, ...]
    spatial_ratios: tuple[float, ...]
    temporal_dts: tuple[float, ...]
    temporal_errors: tuple[float, ...]
    temporal_order: Union[float, None]
    temporally_exact: bool
    spatial_pass: bool
    temporal_pass: bool

    @property
    def passed(self) -> bool:
        return self.spatial_pass and self.temporal_pass


def _advance(state: State, cfg: SolverConfig, t_end: float, dt: float) -> State:
    n = max(1, math.ceil((t_end - state.t) / dt - 1e-9))
    for j in range(n):
        state = step(state, cfg, (t_end - state.t) / (n - j))
    return state


def embedded_diff_l2(coarse: SpectralField, fine: SpectralField) -> float:
    """L2 distance between a coarse-grid field and a fine-grid field, with
    the coarse retained band embedded into the fine mode grid."""
    gc, gf = coarse.grid, fine.grid
    kx = np.arange(-(gc.nx // 3), gc.nx // 3 + 1)
    ky = np.arange(-(gc.ny // 3), gc.ny // 3 + 1)
    diff = fine.coeffs.copy()
    diff[np.ix_(kx % gf.nx, ky % gf.ny)] -= coarse.coeffs[np.ix_(kx % gc.nx, ky % gc.ny)]
    return TWO_PI * float(np.sqrt(np.sum(np.abs(diff) ** 2)))


def _state_diff(coarse: State, fine: State) -> float:
    cu1, cu2 = velocity_from_vorticity(coarse.omega)
    fu1, fu2 = velocity_from_vorticity(fine.omega)
    return math.sqrt(
        embedded_diff_l2(cu1, fu1) ** 2
        + embedded_diff_l2(cu2, fu2) ** 2
        + embedded_diff_l2(coarse.theta, fine.theta) ** 2
    )


def _same_grid_diff(a: State, b: State) -> float:
    du1, du2 = velocity_from_vorticity(
        SpectralField(a.grid, a.omega.coeffs - b.omega.coeffs)
    )
    return math.sqrt(
        _coeff_l2sq(du1.coeffs)
        + _coeff_l2sq(du2.coeffs)
        + _coeff_l2sq(a.theta.coeffs - b.theta.coeffs)
    )


def _diffusion_state(n: int, t_end: float, amp: float = 1.0) -> tuple[State, SolverConfig]:
    g = Grid(n, n)
    theta = SpectralField.from_physical(g, amp * np.cos(np.ones((n, 1)) * g.y))
    cfg = SolverConfig(grid=g, nu=1.0, kappa=1.0, dt="auto", t_end=t_end,
                       output_every=t_end)
    return State(SpectralField.zeros(g), theta, 0.0), cfg


def _diffusion_exact(n: int, t: float, amp: float = 1.0) -> SpectralField:
    g = Grid(n, n)
    return SpectralField.from_physical(
        g, amp * math.exp(-t) * np.cos(np.ones((n, 1)) * g.y)
    )


def _vortex_state(n: int, cfg_kwargs: dict) -> tuple[State, SolverConfig]:
    g = Grid(n, n)
    w, th = taylor_vortex(g, amp=1.0, perturb=0.3, amp_theta=0.5)
    cfg = SolverConfig(grid=g, **cfg_kwargs)
    return State(w, th, 0.0), cfg


def _fit_order(dts: Sequence[float], errs: Sequence[float]) -> float:
    return float(np.polyfit(np.log(np.asarray(dts)), np.log(np.asarray(errs)), 1)[0])


def run_convergence(test: str, levels: int = 3, *,
                    t_end: Union[float, None] = None) -> ConvergenceResult:
    """Spatial and temporal self-convergence study.

    "diffusion": exact solution e^{-t} cos y; spatial errors must sit at
    machine precision from the smallest grid on, and the time integration is
    exact for this problem (the dissipation rides the integrating factor), so
    temporal errors at the rounding floor count as a pass.

    "taylor-vortex": perturbed vortex with buoyancy at nu=kappa=0; spatial
    errors are measured against a reference four times finer than the largest
    level and must drop at least tenfold per doubling; temporal order comes
    from step-halving on the coarsest grid and must reach third order.
    """
    if levels < 3:
        raise ValueError(f"convergence studies need levels >= 3, got {levels}")

    if test == "diffusion":
        T = 1.0 if t_end is None else float(t_end)
        ns = tuple(8 * 2**i for i in range(levels))

        def spatial_err(n: int) -> float:
            state, cfg = _diffusion_state(n, T)
            final = _advance(state, cfg, T, 0.01)
            return float(
                SpectralField(
                    final.grid, final.theta.coeffs - _diffusion_exact(n, T).coeffs
                ).l2()
            )

        spatial_errors = tuple(_map_runs(spatial_err, ns))

        dts = tuple(0.02 / 2**i for i in range(levels))

        def temporal_err(dt: float) -> float:
            state, cfg = _diffusion_state(8, T)
            final = _advance(state, cfg, T, dt)
            return float(
                SpectralField(
                    final.grid, final.theta.coeffs - _diffusion_exact(8, T).coeffs
                ).l2()
            )

        temporal_errors = tuple(_map_runs(temporal_err, dts))
        exact = all(e < 1e-13 for e in temporal_errors)
        order = None if exact else _fit_order(dts, temporal_errors)
        ratios = tuple(
            spatial_errors[i] / spatial_errors[i + 1]
            if spatial_errors[i + 1] > 0 else math.inf
            for i in range(len(ns) - 1)
        )
        return ConvergenceResult(
            test=test,
            spatial_ns=ns,
            spatial_errors=spatial_errors,
            spatial_ratios=ratios,
            temporal_dts=dts,
            temporal_errors=temporal_errors,
            temporal_order=order,
            temporally_exact=exact,
            spatial_pass=all(e <= 1e-12 for e in spatial_errors),
            temporal_pass=exact or (order is not None and 2.7 <= order <= 3.3),
        )

    if test == "taylor-vortex":
        T = 1.0 if t_end is None else float(t_end)
        ns = tuple(32 * 2**i for i in range(levels))
        n_ref = 4 * ns[-1]
        cfg_kwargs = dict(nu=0.0, kappa=0.0, dt="auto", t_end=T, output_every=T)

        ref_state0, ref_cfg = _vortex_state(n_ref, cfg_kwargs)
        dt_shared = min(cfl_dt(ref_state0, ref_cfg), 0.01)

        def run_level(n: int) -> State:
            state, cfg = _vortex_state(n, cfg_kwargs)
            return _advance(state, cfg, T, dt_shared)

        finals = _map_runs(run_level, ns)
        ref_final = run_level(n_ref)
        spatial_errors = tuple(_state_diff(f, ref_final) for f in finals)
        ratios = tuple(
            spatial_errors[i] / spatial_errors[i + 1]
            if spatial_errors[i + 1] > 0 else math.inf
            for i in range(len(ns) - 1)
        )

        dts = tuple(0.02 / 2**i for i in range(levels))

        def run_dt(dt: float) -> State:
            state, cfg = _vortex_state(ns[0], cfg_kwargs)
            return _advance(state, cfg, T, dt)

        dt_finals = _map_runs(run_dt, dts)
        dt_ref = run_dt(dts[-1] / 8.0)
        temporal_errors = tuple(_same_grid_diff(f, dt_ref) for f in dt_finals)
        order = _fit_order(dts, temporal_errors)

        return ConvergenceResult(
            test=test,
            spatial_ns=ns,
            spatial_errors=spatial_errors,
            spatial_ratios=ratios,
            temporal_dts=dts,
            temporal_errors=temporal_errors,
            temporal_order=order,
            temporally_exact=False,
            spatial_pass=all(r >= 10.0 for r in ratios),
            temporal_pass=2.7 <= order <= 3.3,
        )

    raise ValueError(f"unknown convergence test {test!r}; expected 'diffusion' or 'taylor-vortex'")
