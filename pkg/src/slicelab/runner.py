"""Mode dispatch: integrate, monitor, checkpoint, and emit diagnostics.

Exit statuses are exhaustive: 0 completed, 2 stopped by a monitor (final
checkpoint plus a stopping record on disk), 3 diverged (last valid state
checkpointed).  Configuration problems raise before any stepping starts.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

from . import experiments as experiments_mod
from .checkpoint import read_checkpoint, write_checkpoint
from .config import RunConfig, render_config
from .diagnostics import (circulation, energy, generalized_enstrophy)
from .dynamics import (cutoff_factors, rhs_deterministic, rhs_truncated,
                       step_rk4)
from .errors import ConfigError, DivergedError
from .incompressible import max_divergence
from .norms import W1INF as _W1INF, l2, norm
from .runio import (DiagnosticsRecord, append_diagnostics,
                    write_key_values, write_stopping_record)
from .state import random_state, state_is_finite
from .stochastic import (NORM_THRESHOLD, LinearMultiplicative, OnlineMonitor,
                         sample_wiener, step_em, step_transformed,
                         transform_forward)

EXIT_COMPLETED = 0
EXIT_STOPPED = 2
EXIT_DIVERGED = 3

ECHO_FILE = "config.txt"
DIAG_FILE = "diagnostics.csv"
CHECKPOINT_FILE = "checkpoint.bin"
STOPPING_FILE = "stopping.txt"
SUMMARY_FILE = "summary.txt"


@dataclass(frozen=True)
class RunResult:
    status: int
    out_dir: str
    final_state: object = None
    stopping: object = None
    payload: object = None


def run(cfg: RunConfig) -> RunResult:
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, ECHO_FILE), "w",
              encoding="ascii") as fh:
        fh.write(render_config(cfg))
    if cfg.mode in ("sim-det", "sim-sde", "sim-transform"):
        return _run_sim(cfg)
    if cfg.mode == "mc-hitting":
        return _run_mc_hitting(cfg)
    if cfg.mode == "mc-global":
        return _run_mc_global(cfg)
    if cfg.mode == "convergence":
        return _run_convergence(cfg)
    if cfg.mode == "diag":
        return _run_diag(cfg)
    raise ConfigError(f"unknown mode {cfg.mode!r}")


def _q2(q):
    return q * q


def _record(cfg, state, params, loop, lam=None, w_t=None, cutoffs=None):
    c_us = c_ut = c_th = None
    if cutoffs is not None:
        c_us, c_ut, c_th = cutoffs
    return DiagnosticsRecord(
        t=state.t,
        energy=energy(state, params),
        l2_us=l2(state.u_s),
        l2_ut=l2(state.u_t),
        l2_th=l2(state.theta_s),
        w1inf_us=norm(state.u_s, _W1INF),
        w1inf_ut=norm(state.u_t, _W1INF),
        w1inf_th=norm(state.theta_s, _W1INF),
        zkp=norm(state, cfg.norm_spec),
        max_div=max_divergence(state.u_s),
        enstrophy_q2=generalized_enstrophy(state, params, _q2),
        circulation=(None if loop is None
                     else circulation(state, params, loop)),
        lambda_=lam, w_t=w_t,
        cutoff_us=c_us, cutoff_ut=c_ut, cutoff_th=c_th)


def _monitor_value(state) -> float:
    # the quantity the advection cutoff measures; the stopping time is its
    # first crossing of the configured radius
    return max(norm(state.u_s, _W1INF), norm(state.u_t, _W1INF),
               norm(state.theta_s, _W1INF))


def _initial_state(cfg, grid, params):
    if cfg.restart is not None:
        state, ck_params, ck_alpha = read_checkpoint(cfg.restart,
                                                     expect_grid=grid)
        for name, want, got in (("f", params.f, ck_params.f),
                                ("g", params.g, ck_params.g),
                                ("theta0", params.theta0, ck_params.theta0),
                                ("s", params.s, ck_params.s),
                                ("alpha", cfg.alpha, ck_alpha)):
            if want != got:
                raise ConfigError(
                    f"restart mismatch: checkpoint has {name} = {got!r}, "
                    f"config says {want!r}")
        return state
    return random_state(grid, seed=cfg.data_seed, max_mode=cfg.max_mode,
                        amplitude=cfg.amplitude)


def _run_sim(cfg: RunConfig) -> RunResult:
    grid = cfg.grid()
    params = cfg.params
    loop = cfg.loop()
    truncated = math.isfinite(cfg.radius)
    diag_path = os.path.join(cfg.out_dir, DIAG_FILE)
    ck_path = os.path.join(cfg.out_dir, CHECKPOINT_FILE)

    state = _initial_state(cfg, grid, params)
    n = cfg.n_steps()

    stochastic = cfg.mode in ("sim-sde", "sim-transform")
    path = None
    w = None
    if stochastic:
        path = sample_wiener(cfg.dt, n, 1, cfg.seed)
        w = path.w_series()
        model = LinearMultiplicative(cfg.alpha)
    if cfg.mode == "sim-transform":
        state = transform_forward(state, cfg.alpha, 0.0)

    if truncated:
        def rhs(s, p):
            return rhs_truncated(s, p, cfg.radius)
    else:
        rhs = rhs_deterministic
    monitor = OnlineMonitor(NORM_THRESHOLD, cfg.radius) if truncated else None

    mu = -cfg.alpha * cfg.alpha / 32.0

    def emit(s, step):
        lam = w_t = None
        if stochastic:
            w_t = float(w[step])
            lam = math.exp(cfg.alpha * w_t + mu * s.t)
        cut = cutoff_factors(s, cfg.radius) if (
            truncated and cfg.mode != "sim-transform") else None
        append_diagnostics(_record(cfg, s, params, loop, lam, w_t, cut),
                           diag_path)

    def finish_stopped(s):
        write_checkpoint(s, params, ck_path, alpha=cfg.alpha)
        rec = monitor.record()
        write_stopping_record(rec, os.path.join(cfg.out_dir, STOPPING_FILE))
        return RunResult(EXIT_STOPPED, cfg.out_dir, s, stopping=rec)

    emit(state, 0)
    if monitor is not None and monitor.update(state.t, _monitor_value(state)):
        return finish_stopped(state)

    for i in range(n):
        prev = state
        try:
            if cfg.mode == "sim-det":
                state = step_rk4(state, params, cfg.dt, rhs=rhs)
            elif cfg.mode == "sim-sde":
                state = step_em(state, params, cfg.dt,
                                path.increments[:, i], model, rhs=rhs)
            else:
                state = step_transformed(state, params, cfg.dt, cfg.alpha,
                                         float(w[i]), float(w[i + 1]))
            if not state_is_finite(state):
                raise DivergedError(
                    f"non-finite state after step to t={state.t:.6g}",
                    last_state=prev)
        except DivergedError as err:
            last = err.last_state if err.last_state is not None else prev
            write_checkpoint(last, params, ck_path, alpha=cfg.alpha)
            return RunResult(EXIT_DIVERGED, cfg.out_dir, last)
        if (i + 1) % cfg.stride == 0 or i + 1 == n:
            emit(state, i + 1)
        if monitor is not None and monitor.update(state.t,
                                                 _monitor_value(state)):
            if (i + 1) % cfg.stride != 0 and i + 1 != n:
                emit(state, i + 1)
            return finish_stopped(state)

    write_checkpoint(state, params, ck_path, alpha=cfg.alpha)
    return RunResult(EXIT_COMPLETED, cfg.out_dir, state)


def _run_mc_hitting(cfg: RunConfig) -> RunResult:
    summary = experiments_mod.mc_hitting(cfg.alpha, cfg.threshold,
                                         cfg.t_final, cfg.dt, cfg.n_paths,
                                         cfg.seed)
    oracle = experiments_mod.gbm_max_oracle(cfg.alpha, cfg.threshold,
                                            cfg.t_final)
    limit = experiments_mod.gbm_max_oracle(cfg.alpha, cfg.threshold,
                                           math.inf)
    write_key_values([
        ("n_paths", summary.n_paths), ("hits", summary.hits),
        ("fraction", summary.fraction),
        ("standard_error", summary.standard_error),
        ("oracle", oracle), ("oracle_infinite_horizon", limit),
        ("alpha", summary.alpha), ("threshold", summary.r),
        ("t_final", summary.horizon), ("dt", summary.dt),
        ("seed", summary.seed),
    ], os.path.join(cfg.out_dir, SUMMARY_FILE))
    return RunResult(EXIT_COMPLETED, cfg.out_dir, payload=summary)


def _run_mc_global(cfg: RunConfig) -> RunResult:
    spec = cfg.norm_spec
    res = experiments_mod.mc_global_regularity(
        cfg.grid(), cfg.params, cfg.alpha, cfg.threshold, cfg.amplitude,
        cfg.n_paths, cfg.t_final, cfg.dt, cfg.seed, c_tilde=cfg.c_tilde,
        data_seed=cfg.data_seed, max_mode=cfg.max_mode,
        amplitude_spec=spec, bound_spec=spec)
    budget = experiments_mod.amplitude_threshold(cfg.alpha, cfg.threshold,
                                                 cfg.c_tilde)
    write_key_values([
        ("n_paths", res.summary.n_paths),
        ("gbm_hits", res.summary.hits),
        ("gbm_fraction", res.summary.fraction),
        ("gbm_standard_error", res.summary.standard_error),
        ("regular_fraction", res.regular_fraction),
        ("bounded_fraction", res.bounded_fraction),
        ("n_diverged", res.n_diverged),
        ("amplitude", cfg.amplitude),
        ("amplitude_budget", budget),
        ("amplitude_ok", "yes" if res.amplitude_ok else "no"),
        ("alpha", cfg.alpha), ("threshold", cfg.threshold),
        ("c_tilde", cfg.c_tilde), ("seed", cfg.seed),
    ], os.path.join(cfg.out_dir, SUMMARY_FILE))
    lines = ["path, gbm_triggered, gbm_time, gbm_peak, amp_triggered, "
             "amp_time, amp_peak"]
    for idx, (gr, ar) in enumerate(zip(res.gbm_records,
                                       res.amplitude_records)):
        lines.append(",".join([
            str(idx),
            "1" if gr.triggered else "0",
            "" if gr.trigger_time is None else repr(gr.trigger_time),
            repr(gr.trigger_value),
            "1" if ar.triggered else "0",
            "" if ar.trigger_time is None else repr(ar.trigger_time),
            repr(ar.trigger_value)]))
    with open(os.path.join(cfg.out_dir, "paths.csv"), "w",
              encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    return RunResult(EXIT_COMPLETED, cfg.out_dir, payload=res)


def _run_convergence(cfg: RunConfig) -> RunResult:
    grid = cfg.grid()
    state0 = random_state(grid, seed=cfg.data_seed, max_mode=cfg.max_mode,
                          amplitude=cfg.amplitude)
    res = experiments_mod.strong_convergence_study(
        grid, cfg.params, state0, cfg.alpha, cfg.t_final, cfg.dt,
        levels=cfg.levels, n_paths=cfg.n_paths, seed=cfg.seed)
    lines = ["level, dt, rms_error"]
    for lvl, (dt, err) in enumerate(res.entries):
        lines.append(f"{lvl},{dt!r},{err!r}")
    with open(os.path.join(cfg.out_dir, "convergence.csv"), "w",
              encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    write_key_values([
        ("slope", "none" if res.slope is None else res.slope),
        ("levels", cfg.levels), ("n_paths", res.n_paths),
        ("alpha", res.alpha), ("seed", cfg.seed),
    ], os.path.join(cfg.out_dir, SUMMARY_FILE))
    return RunResult(EXIT_COMPLETED, cfg.out_dir, payload=res)


def _run_diag(cfg: RunConfig) -> RunResult:
    expect = cfg.grid() if cfg.nx is not None else None
    state, params, _alpha = read_checkpoint(cfg.restart, expect_grid=expect)
    rec = _record(cfg, state, params, cfg.loop())
    append_diagnostics(rec, os.path.join(cfg.out_dir, DIAG_FILE))
    return RunResult(EXIT_COMPLETED, cfg.out_dir, state, payload=rec)
