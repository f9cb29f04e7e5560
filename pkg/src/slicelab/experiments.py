"""Monte Carlo harnesses and convergence studies.

The hitting-law experiments are scalar-path computations (no PDE): the
geometric Brownian motion exp{alpha W_t - alpha^2 t/32} has an exactly
computable first-passage law, which makes it the sharp end of the test
suite.  The regularity experiment couples the same path functional to the
transformed PDE solver.  Every MC routine derives one RNG stream per path
from (seed, path index), so results do not depend on how paths are
scheduled or batched.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import mollify, step_rk4
from .errors import ConfigError, DivergedError, FitError
from .grid import Grid, scalar_field, vector_field
from .norms import NormSpec, ZKP_DEFAULT, combine, norm, state_component_norms
from .state import (Params, SimState, random_state, scale_state,
                    state_arrays, zero_state)
from .stochastic import (AMPLITUDE_THRESHOLD, GBM_THRESHOLD, OnlineMonitor,
                         LinearMultiplicative, StoppingRecord, WienerPath,
                         refine_path, sample_wiener, step_em,
                         step_transformed, transform_backward,
                         transform_forward)


class AmplitudeBudgetWarning(UserWarning):
    """Initial data exceeds the amplitude budget of the hitting-law bound."""


def _path_rng(seed: int, index: int) -> np.random.Generator:
    # per-path stream keyed by (seed, index): identical results at any
    # parallelism degree, since nothing is drawn from a shared generator
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _phi(x: float) -> float:
    # standard normal CDF via erfc, stable in both tails
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# the exact hitting law
# ---------------------------------------------------------------------------

def gbm_max_oracle(alpha: float, r: float, horizon: float) -> float:
    """P(max over [0, horizon] of exp{alpha W_t - alpha^2 t/32} >= r).

    Drifted-Brownian first-passage law for the log process with drift
    -alpha^2/32 and volatility |alpha|; the reflection weight
    exp(2 mu a / sigma^2) collapses to r^(-1/16) independently of alpha.
    horizon may be inf, where the law is exactly r^(-1/16).
    """
    if r < 1.0:
        raise ConfigError(f"threshold r must be >= 1 (Lambda starts at 1), "
                          f"got {r}")
    if horizon < 0.0 or math.isnan(horizon):
        raise ConfigError(f"horizon must be nonnegative, got {horizon}")
    if r == 1.0:
        return 1.0
    if alpha == 0.0 or horizon == 0.0:
        return 0.0
    if math.isinf(horizon):
        return r ** (-1.0 / 16.0)
    a = math.log(r)
    sigma = abs(alpha)
    mu = -(alpha * alpha) / 32.0
    sig_rt = sigma * math.sqrt(horizon)
    return (_phi((-a + mu * horizon) / sig_rt)
            + r ** (-1.0 / 16.0) * _phi((-a - mu * horizon) / sig_rt))


# ---------------------------------------------------------------------------
# Monte Carlo hitting frequency
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class McSummary:
    n_paths: int
    hits: int
    fraction: float
    standard_error: float
    seed: int
    alpha: float
    r: float
    horizon: float
    dt: float


def _path_hits(rng: np.random.Generator, alpha: float, log_r: float,
               n_steps: int, dt: float) -> bool:
    """Does max over the discrete grid of alpha W - (alpha^2/32) t reach
    log_r?  Draws in growing chunks and exits on the first crossing; the
    chunk layout is fixed, so the draw sequence is reproducible."""
    if 0.0 >= log_r:
        return True  # the t = 0 grid point already qualifies
    mu = -(alpha * alpha) / 32.0
    sqrt_dt = math.sqrt(dt)
    w = 0.0
    done = 0
    chunk = 1024
    while done < n_steps:
        m = min(chunk, n_steps - done)
        cs = np.cumsum(rng.standard_normal(m) * sqrt_dt)
        series = alpha * (w + cs) + mu * dt * np.arange(done + 1, done + m + 1)
        if float(series.max()) >= log_r:
            return True
        w += float(cs[-1])
        done += m
        chunk = min(2 * chunk, 131072)
    return False


def mc_hitting(alpha: float, r: float, horizon: float, dt: float,
               n_paths: int, seed: int) -> McSummary:
    """Empirical frequency of the discrete-grid maximum of Lambda reaching r.

    The reported dt lets the caller assess discrete-maximum bias: the grid
    max undershoots the continuous max, so the frequency sits slightly
    below the closed-form law and rises as dt shrinks.
    """
    if n_paths < 100:
        raise ConfigError(f"need at least 100 paths for a meaningful "
                          f"frequency, got {n_paths}")
    if not (dt > 0 and math.isfinite(dt)) or horizon <= 0:
        raise ConfigError(f"bad time grid: dt={dt}, horizon={horizon}")
    n_steps = int(round(horizon / dt))
    log_r = math.log(r) if r > 0 else -math.inf
    hits = 0
    for idx in range(n_paths):
        if _path_hits(_path_rng(seed, idx), alpha, log_r, n_steps, dt):
            hits += 1
    frac = hits / n_paths
    se = math.sqrt(frac * (1.0 - frac) / n_paths)
    return McSummary(n_paths, hits, frac, se, seed, alpha, r, horizon, dt)


def hitting_fraction_on_paths(paths: list[WienerPath], alpha: float,
                              r: float) -> float:
    """Hitting frequency on explicitly supplied paths (for refinement
    studies: a bridge-refined path can only raise its grid maximum)."""
    if not paths:
        raise ConfigError("need at least one path")
    log_r = math.log(r)
    hits = 0
    for p in paths:
        series = alpha * p.w_series() - (alpha * alpha / 32.0) * p.times
        if float(series.max()) >= log_r:
            hits += 1
    return hits / len(paths)


def stopped_lambda_mean(alpha: float, r: float, horizon: float, dt: float,
                        n_paths: int, seed: int) -> tuple[float, float]:
    """Mean and standard error of Lambda(horizon ^ hitting time)^{1/16}.

    Lambda^{1/16} is a positive martingale, and stopping at the first grid
    crossing of r keeps the mean at exactly 1 (discrete optional stopping);
    only sampling noise remains.
    """
    if n_paths < 100:
        raise ConfigError(f"need at least 100 paths, got {n_paths}")
    n_steps = int(round(horizon / dt))
    log_r = math.log(r)
    mu = -(alpha * alpha) / 32.0
    sqrt_dt = math.sqrt(dt)
    vals = np.empty(n_paths)
    for idx in range(n_paths):
        rng = _path_rng(seed, idx)
        cs = np.cumsum(rng.standard_normal(n_steps) * sqrt_dt)
        series = alpha * cs + mu * dt * np.arange(1, n_steps + 1)
        crossed = np.nonzero(series >= log_r)[0]
        stopped = series[crossed[0]] if crossed.size else series[-1]
        vals[idx] = math.exp(stopped / 16.0)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_paths))
    return mean, se


# ---------------------------------------------------------------------------
# amplitude budget of the hitting-law theorem
# ---------------------------------------------------------------------------

def amplitude_threshold(alpha: float, r: float, c_tilde: float = 1.0) -> float:
    """Data-amplitude budget |alpha| / (16 C A(|alpha|, r)) with

    A = 2r (1 + (|alpha|/(16C))^(1 - 1/(2(e^{4Cr}-1)))) *
        exp{C r e^{4Cr} (8 + 32C/alpha^2)}.

    Evaluated in log space: A overflows double range already for moderate
    C r, in which case the budget is honestly 0.0.  Note the asymptotic
    bounds 1 < A~ <= |alpha|/(16C) quoted for this expression hold only
    once the power term dominates the exponential one, far outside desk
    parameter ranges for C near 1.
    """
    if c_tilde <= 0 or not math.isfinite(c_tilde):
        raise ConfigError(f"constant budget must be positive, got {c_tilde}")
    if r < 1.0:
        raise ConfigError(f"threshold r must be >= 1, got {r}")
    base = abs(alpha) / (16.0 * c_tilde)
    if base <= 1.0:
        raise ConfigError(f"|alpha| = {abs(alpha)} must exceed 16 C = "
                          f"{16.0 * c_tilde} for the hitting-law hypothesis")
    t4 = 4.0 * c_tilde * r
    if t4 > 700.0:
        return 0.0  # exp{4Cr} alone leaves double range
    e4 = math.exp(t4)
    q = 1.0 - 1.0 / (2.0 * math.expm1(t4))
    log_a = (math.log(2.0 * r) + math.log1p(base ** q)
             + c_tilde * r * e4 * (8.0 + 32.0 * c_tilde / (alpha * alpha)))
    log_out = math.log(base) - log_a
    return math.exp(log_out) if log_out > -745.0 else 0.0


# ---------------------------------------------------------------------------
# Monte Carlo global regularity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GlobalRegularityResult:
    summary: McSummary
    regular_fraction: float
    bounded_fraction: float
    n_diverged: int
    amplitude_records: tuple
    gbm_records: tuple
    amplitude_ok: bool


def mc_global_regularity(grid: Grid, params: Params, alpha: float, r: float,
                         amplitude: float, n_paths: int, horizon: float,
                         dt: float, seed: int, c_tilde: float = 1.0,
                         data_seed: int = 0, max_mode: int = 2,
                         amplitude_spec: NormSpec = ZKP_DEFAULT,
                         bound_spec: NormSpec = ZKP_DEFAULT) -> GlobalRegularityResult:
    """Per-path transformed solves with the two stopping monitors.

    amplitude is the bound_spec norm of the (randomly generated, then
    rescaled) initial data, so it compares like-for-like with the
    amplitude_threshold budget.  Each path runs until the GBM monitor
    fires (Lambda >= r), the horizon is reached, or the solve diverges.
    Reported: (a) the fraction of non-diverged paths whose amplitude
    monitor (1 + sum of component norms >= |alpha|/(8 c_tilde)) did not
    fire strictly before the GBM one, and (b) the fraction whose
    bound_spec norm stayed <= |alpha|/(32 c_tilde) up to the stopping
    time.  Both monitors and the norm bound are evaluated on the
    transformed variables, the objects the pathwise argument actually
    controls.  Diverged paths are counted separately and excluded from
    both fractions' denominators.
    """
    if params.s != 0.0:
        raise ConfigError("the regularity experiment requires s = 0")
    if n_paths < 1:
        raise ConfigError(f"need at least one path, got {n_paths}")
    n_steps = int(round(horizon / dt))
    if n_steps < 1:
        raise ConfigError(f"horizon {horizon} shorter than one step {dt}")

    budget = amplitude_threshold(alpha, r, c_tilde)
    amplitude_ok = amplitude <= budget
    if not amplitude_ok:
        warnings.warn(
            f"initial data norm {amplitude:.3g} exceeds the hitting-law "
            f"budget {budget:.3g}; the norm-bound fractions are exploratory",
            AmplitudeBudgetWarning, stacklevel=2)

    if amplitude == 0.0:
        data = zero_state(grid)
    else:
        raw = random_state(grid, seed=data_seed, max_mode=max_mode,
                           amplitude=1.0)
        data = scale_state(raw, amplitude / norm(raw, bound_spec))

    amp_threshold = abs(alpha) / (8.0 * c_tilde)
    norm_bound = abs(alpha) / (32.0 * c_tilde)
    log_r = math.log(r)
    mu = -(alpha * alpha) / 32.0

    amp_records = []
    gbm_records = []
    n_diverged = 0
    n_regular = 0
    n_bounded = 0
    for idx in range(n_paths):
        rng = _path_rng(seed, idx)
        inc = rng.standard_normal(n_steps) * math.sqrt(dt)
        w = np.zeros(n_steps + 1)
        np.cumsum(inc, out=w[1:])
        amp_mon = OnlineMonitor(AMPLITUDE_THRESHOLD, amp_threshold)
        gbm_mon = OnlineMonitor(GBM_THRESHOLD, r)
        state = transform_forward(data, alpha, 0.0)
        diverged = False
        bounded_flag = [True]

        def observe(k: int, s: SimState) -> bool:
            # returns True when the path is finished (GBM monitor fired)
            t_k = k * dt
            if bounded_flag[0] and norm(s, bound_spec) > norm_bound:
                bounded_flag[0] = False
            amp_val = 1.0 + sum(state_component_norms(s, amplitude_spec))
            amp_mon.update(t_k, amp_val)
            return gbm_mon.update(t_k, math.exp(alpha * w[k] + mu * t_k))

        if not observe(0, state):
            for k in range(n_steps):
                try:
                    state = step_transformed(state, params, dt, alpha,
                                             w[k], w[k + 1])
                except DivergedError:
                    diverged = True
                    break
                if observe(k + 1, state):
                    break
        bounded = bounded_flag[0]

        amp_records.append(amp_mon.record())
        gbm_records.append(gbm_mon.record())
        if diverged:
            n_diverged += 1
            continue
        amp_rec, gbm_rec = amp_records[-1], gbm_records[-1]
        amp_first = amp_rec.triggered and (
            not gbm_rec.triggered
            or amp_rec.trigger_time < gbm_rec.trigger_time)
        if not amp_first:
            n_regular += 1
        if bounded:
            n_bounded += 1

    hits = sum(1 for rec in gbm_records if rec.triggered)
    frac = hits / n_paths
    se = math.sqrt(frac * (1.0 - frac) / n_paths)
    summary = McSummary(n_paths, hits, frac, se, seed, alpha, r, horizon, dt)
    n_ok = n_paths - n_diverged
    return GlobalRegularityResult(
        summary=summary,
        regular_fraction=(n_regular / n_ok) if n_ok else 0.0,
        bounded_fraction=(n_bounded / n_ok) if n_ok else 0.0,
        n_diverged=n_diverged,
        amplitude_records=tuple(amp_records),
        gbm_records=tuple(gbm_records),
        amplitude_ok=amplitude_ok)


# ---------------------------------------------------------------------------
# strong convergence of EM against the transform-based reference
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StrongConvergenceResult:
    entries: tuple  # (dt, rms error) pairs, coarse to fine
    slope: float | None
    n_paths: int
    seed: int
    alpha: float


def strong_convergence_study(grid: Grid, params: Params, state0: SimState,
                             alpha: float, horizon: float, coarse_dt: float,
                             levels: int = 4, n_paths: int = 16,
                             seed: int = 0) -> StrongConvergenceResult:
    """EM error at dyadic step sizes against the finest transform solve.

    One Brownian path per MC repetition, shared across levels by bridge
    refinement; the reference for each path is the transformed solver at
    the finest level, back-transformed.  Errors are root-mean-square L2
    differences over paths (a single path's strong error fluctuates by an
    O(1) factor between levels).  With the noise off the paths drop out
    and one repetition suffices.
    """
    if levels < 4:
        raise ConfigError(f"need at least 4 dyadic levels, got {levels}")
    if n_paths < 1:
        raise ConfigError(f"need at least one path, got {n_paths}")
    n_coarse = int(round(horizon / coarse_dt))
    if n_coarse < 1:
        raise ConfigError("horizon shorter than one coarse step")
    if alpha == 0.0:
        n_paths = 1
    model = LinearMultiplicative(alpha=alpha)

    def run_em(pth: WienerPath) -> SimState:
        s = state0
        for i in range(pth.n_steps):
            s = step_em(s, params, pth.dt, pth.increments[0, i], model)
        return s

    def run_transform(pth: WienerPath) -> SimState:
        w = pth.w_series()
        s = transform_forward(state0, alpha, 0.0)
        for i in range(pth.n_steps):
            s = step_transformed(s, params, pth.dt, alpha, w[i], w[i + 1])
        return transform_backward(s, alpha, w[-1])

    sq_err = np.zeros(levels)
    for idx in range(n_paths):
        path_seed = int(np.random.SeedSequence([seed, idx]).generate_state(1)[0])
        paths = [sample_wiener(coarse_dt, n_coarse, 1, seed=path_seed)]
        for _ in range(levels - 1):
            paths.append(refine_path(paths[-1]))
        ref = run_transform(paths[-1])
        for lev, pth in enumerate(paths):
            diff = sum(float(np.sum((a - b) ** 2)) for a, b in
                       zip(state_arrays(run_em(pth)), state_arrays(ref)))
            sq_err[lev] += diff * grid.cell_area
    rms = np.sqrt(sq_err / n_paths)
    dts = np.array([coarse_dt / 2 ** k for k in range(levels)])
    entries = tuple((float(d), float(e)) for d, e in zip(dts, rms))
    if np.all(rms == 0.0):
        return StrongConvergenceResult(entries, None, n_paths, seed, alpha)
    slope = float(np.polyfit(np.log(dts), np.log(rms), 1)[0])
    return StrongConvergenceResult(entries, slope, n_paths, seed, alpha)


# ---------------------------------------------------------------------------
# decay-rate regression
# ---------------------------------------------------------------------------

def decay_rate_fit(times, values) -> float:
    """Exponential decay rate by least squares on log values."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.size < 2:
        raise FitError("need matching time and value series of length >= 2")
    if np.any(values <= 0.0) or not np.all(np.isfinite(values)):
        raise FitError("decay fit needs strictly positive finite values")
    return -float(np.polyfit(times, np.log(values), 1)[0])


# ---------------------------------------------------------------------------
# mollified-data Cauchy study
# ---------------------------------------------------------------------------

def mollifier_cauchy_study(state0: SimState, params: Params, j_levels,
                           horizon: float, dt: float,
                           spec: NormSpec = ZKP_DEFAULT) -> tuple:
    """Distances d_j between solves from J_{1/j} and J_{1/(2j)} data.

    j_levels must be a dyadic ladder of at least three smoothing levels;
    each solve is the deterministic RK4 trajectory to the horizon.
    Successive solutions sharing smoothed data form a Cauchy sequence, so
    d_j shrinks as j grows for smooth data and vanishes identically when
    the data has no content the mollifier can touch.
    """
    j_levels = [int(j) for j in j_levels]
    if len(j_levels) < 3:
        raise ConfigError(f"need at least 3 smoothing levels, "
                          f"got {len(j_levels)}")
    for a, b in zip(j_levels, j_levels[1:]):
        if b != 2 * a:
            raise ConfigError(f"smoothing levels must be dyadic, "
                              f"got {a} followed by {b}")
    n_steps = int(round(horizon / dt))
    if n_steps < 1:
        raise ConfigError("horizon shorter than one step")

    def solve(j: int) -> SimState:
        s = mollify(state0, j)
        for _ in range(n_steps):
            s = step_rk4(s, params, dt)
        return s

    cache: dict[int, SimState] = {}
    for j in j_levels + [2 * j_levels[-1]]:
        if j not in cache:
            cache[j] = solve(j)

    return tuple((j, _state_distance(cache[j], cache[2 * j], spec))
                 for j in j_levels)


def _state_distance(a: SimState, b: SimState, spec: NormSpec) -> float:
    g = a.grid
    du = vector_field(g, a.u_s.x.values - b.u_s.x.values,
                      a.u_s.z.values - b.u_s.z.values)
    dut = scalar_field(g, a.u_t.values - b.u_t.values, a.u_t.basis)
    dth = scalar_field(g, a.theta_s.values - b.theta_s.values,
                       a.theta_s.basis)
    return combine([norm(du, spec), norm(dut, spec), norm(dth, spec)], spec.p)
