"""Wiener paths, noise models, EM and transformed steppers, monitors."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as hyp_st

import slicelab as sl
from slicelab import dynamics as dyn
from slicelab import stochastic as st
from slicelab.norms import l2
from slicelab.state import (Tendency, state_arrays, state_max_abs_diff,
                            tendency_arrays)

# identical-arithmetic contracts are asserted exactly (== 0.0); everything
# else gets a few ulp of slack
ROUNDTRIP_TOL = 1e-15
PROJ_TOL = 1e-12


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

def test_path_starts_at_zero():
    p = st.sample_wiener(1e-3, 50, 3, seed=1)
    w = p.values
    assert w.shape == (3, 51)
    assert np.all(w[:, 0] == 0.0)
    assert p.times[0] == 0.0 and p.times[-1] == pytest.approx(0.05)


def test_path_same_seed_bitwise():
    a = st.sample_wiener(1e-3, 200, 2, seed=5)
    b = st.sample_wiener(1e-3, 200, 2, seed=5)
    assert np.array_equal(a.increments, b.increments)
    assert not np.array_equal(
        a.increments, st.sample_wiener(1e-3, 200, 2, seed=6).increments)


def test_increment_variance_close_to_dt():
    # 1e5 samples: relative sampling error of the variance ~ sqrt(2/n) ~ 0.45%
    p = st.sample_wiener(1e-3, 100000, 1, seed=7)
    v = float(np.var(p.increments))
    assert 0.95e-3 <= v <= 1.05e-3


def test_path_rejects_bad_arguments():
    with pytest.raises(sl.ConfigError):
        st.sample_wiener(0.0, 10, 1, seed=0)
    with pytest.raises(sl.ConfigError):
        st.sample_wiener(1e-3, 0, 1, seed=0)
    with pytest.raises(sl.ConfigError):
        st.sample_wiener(1e-3, 10, 0, seed=0)
    with pytest.raises(sl.ConfigError):
        st.WienerPath(1e-3, 10, 2, 0, np.zeros((2, 9)))


def test_refinement_is_consistent():
    p = st.sample_wiener(1e-3, 400, 2, seed=5)
    f = st.refine_path(p)
    assert f.dt == 0.5e-3 and f.n_steps == 800 and f.level == 1
    # each coarse increment splits into two halves that sum back exactly
    pair = f.increments[:, 0::2] + f.increments[:, 1::2]
    assert np.max(np.abs(pair - p.increments)) <= 1e-15
    # cumulative path agrees at the shared grid times
    assert np.max(np.abs(f.values[:, ::2] - p.values)) <= 1e-12


def test_refinement_is_deterministic():
    a = st.refine_path(st.refine_path(st.sample_wiener(1e-2, 30, 1, seed=4)))
    b = st.refine_path(st.refine_path(st.sample_wiener(1e-2, 30, 1, seed=4)))
    assert np.array_equal(a.increments, b.increments)
    assert a.level == 2


@given(seed=hyp_st.integers(min_value=0, max_value=2**31))
def test_refined_variance_scales(seed):
    p = st.sample_wiener(4e-3, 500, 1, seed=seed)
    f = st.refine_path(p)
    # refined increments are N(0, dt/2); 1000 samples give ~4.5% rel noise
    assert np.var(f.increments) == pytest.approx(2e-3, rel=0.35)


# ---------------------------------------------------------------------------
# noise models
# ---------------------------------------------------------------------------

def test_noise_off_is_empty(tor64):
    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    assert st.noise_eval(st.NoiseOff(), s) == []


def test_linear_noise_scales_state(tor64):
    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    d = st.noise_eval(st.LinearMultiplicative(alpha=0.7), s)
    assert len(d) == 1
    assert np.array_equal(d[0].du_s.x.values, 0.7 * s.u_s.x.values)
    assert np.array_equal(d[0].du_s.z.values, 0.7 * s.u_s.z.values)
    assert np.array_equal(d[0].du_t.values, 0.7 * s.u_t.values)
    assert np.array_equal(d[0].dtheta_s.values, 0.7 * s.theta_s.values)


def test_nemytskii_projects_velocity_shape(tor64):
    # gain 1 with shape (sin z, 0): already solenoidal, so the Leray
    # projection returns it unchanged
    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    sz = np.sin(tor64.z_mesh)
    zero = np.zeros_like(sz)
    model = st.PointwiseNemytskii(
        gains=(lambda _s: 1.0, lambda _s: 1.0, lambda _s: 1.0),
        shapes=((sl.scalar_field(tor64, sz), sl.scalar_field(tor64, zero),
                 sl.scalar_field(tor64, zero), sl.scalar_field(tor64, zero)),))
    d = st.noise_eval(model, s)
    assert len(d) == 1 and model.modes == 1
    assert np.max(np.abs(d[0].du_s.x.values - sz)) <= PROJ_TOL
    assert np.max(np.abs(d[0].du_s.z.values)) <= PROJ_TOL


def test_nemytskii_state_dependent_gain(tor64):
    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    sz = np.sin(tor64.z_mesh)
    zero = np.zeros_like(sz)
    model = st.PointwiseNemytskii(
        gains=(lambda _s: 0.0, lambda _s: 1.0,
               lambda stt: stt.u_t.values),
        shapes=((sl.scalar_field(tor64, zero), sl.scalar_field(tor64, zero),
                 sl.scalar_field(tor64, sz), sl.scalar_field(tor64, sz)),))
    d = st.noise_eval(model, s)
    assert np.array_equal(d[0].du_t.values, sz)
    assert np.array_equal(d[0].dtheta_s.values, s.u_t.values * sz)


def test_nemytskii_rejects_aliased_shape(tor64):
    # a Nyquist-band shape does not survive dealiasing
    bad = np.cos(24.0 * tor64.x_mesh)
    zero = np.zeros_like(bad)
    with pytest.raises(sl.ConfigError):
        st.PointwiseNemytskii(
            gains=(lambda _s: 1.0, lambda _s: 1.0, lambda _s: 1.0),
            shapes=((sl.scalar_field(tor64, bad), sl.scalar_field(tor64, zero),
                     sl.scalar_field(tor64, zero),
                     sl.scalar_field(tor64, zero)),))


def test_noise_eval_rejects_non_finite(tor64):
    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    broken = sl.make_state(tor64, 0.0, s.u_s.x.values,
                           np.full_like(s.u_s.z.values, np.nan),
                           s.u_t.values, s.theta_s.values)
    with pytest.raises(sl.DivergedError):
        st.noise_eval(st.LinearMultiplicative(alpha=1.0), broken)


def test_kappa_margin_linear(tor64):
    # sigma = alpha u, so ||sigma|| = alpha ||u|| <= alpha (1 + sum of norms)
    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    assert st.kappa_margin(st.LinearMultiplicative(alpha=0.7), s) <= 1.0
    with pytest.raises(sl.ConfigError):
        st.kappa_margin(st.NoiseOff(), s)


# ---------------------------------------------------------------------------
# Euler-Maruyama
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("geom", ["torus", "square"])
def test_em_off_equals_euler_bitwise(geom):
    g = (sl.make_grid("torus", 64, 64, 2 * np.pi, 2 * np.pi)
         if geom == "torus" else sl.make_grid("square", 64, 64, np.pi, np.pi))
    s = sl.random_state(g, seed=3, max_mode=4, amplitude=0.5)
    p = sl.Params()
    a = st.step_em(s, p, 1e-3, 0.0, st.NoiseOff())
    b = dyn.step_euler(s, p, 1e-3)
    assert state_max_abs_diff(a, b) == 0.0


def test_em_linear_matches_manual_update(tor64):
    from slicelab.incompressible import project_values
    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    p = sl.Params()
    got = st.step_em(s, p, 1e-3, np.array([0.0123]),
                     st.LinearMultiplicative(alpha=0.7))
    y = state_arrays(s)
    drift = tendency_arrays(dyn.rhs_deterministic(s, p))
    y1 = tuple(a + 1e-3 * b for a, b in zip(y, drift))
    y2 = tuple(a + 0.0123 * (0.7 * b) for a, b in zip(y1, y))
    px, pz = project_values(tor64, y2[0], y2[1])
    assert np.array_equal(got.u_s.x.values, px)
    assert np.array_equal(got.u_s.z.values, pz)
    assert np.array_equal(got.u_t.values, y2[2])
    assert np.array_equal(got.theta_s.values, y2[3])
    assert got.t == pytest.approx(1e-3)


def test_em_drift_disabled_multiplies_state(tor64):
    # with the drift zeroed, one EM step is u -> u (1 + alpha dW); the
    # u_S channel additionally passes through the projector, which leaves
    # a solenoidal field unchanged up to transform roundoff
    def no_drift(state, params):
        zx = np.zeros_like(state.u_t.values)
        return Tendency(sl.vector_field(tor64, zx.copy(), zx.copy()),
                        sl.scalar_field(tor64, zx.copy()),
                        sl.scalar_field(tor64, zx.copy()))

    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    dw = 0.37
    got = st.step_em(s, sl.Params(), 1e-3, dw,
                     st.LinearMultiplicative(alpha=0.5), rhs=no_drift)
    fac = 1.0 + 0.5 * dw
    for a, b in ((got.u_t.values, s.u_t.values),
                 (got.theta_s.values, s.theta_s.values)):
        assert np.max(np.abs(a - fac * b)) <= ROUNDTRIP_TOL * np.max(np.abs(b))
    for a, b in ((got.u_s.x.values, s.u_s.x.values),
                 (got.u_s.z.values, s.u_s.z.values)):
        assert np.max(np.abs(a - fac * b)) <= 1e-13 * np.max(np.abs(b))


def test_em_increment_count_mismatch(tor64):
    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    with pytest.raises(sl.ConfigError):
        st.step_em(s, sl.Params(), 1e-3, np.array([0.1, 0.2]),
                   st.LinearMultiplicative(alpha=0.5))


def test_em_nan_increment_diverges(tor64):
    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    with pytest.raises(sl.DivergedError) as exc:
        st.step_em(s, sl.Params(), 1e-3, np.nan,
                   st.LinearMultiplicative(alpha=0.5))
    assert exc.value.last_state is s


# ---------------------------------------------------------------------------
# exponential transform
# ---------------------------------------------------------------------------

def test_transform_roundtrip(tor64):
    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    back = st.transform_backward(st.transform_forward(s, 0.5, 0.37), 0.5, 0.37)
    scale = np.max(np.abs(s.u_s.x.values))
    assert state_max_abs_diff(back, s) <= ROUNDTRIP_TOL * scale


def test_transform_alpha_zero_is_identity(tor64):
    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    assert state_max_abs_diff(st.transform_forward(s, 0.0, 5.0), s) == 0.0


def test_transform_halves_at_log_two(tor64):
    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    h = st.transform_forward(s, 1.0, math.log(2.0))
    assert np.allclose(h.u_t.values, 0.5 * s.u_t.values,
                       rtol=ROUNDTRIP_TOL, atol=0.0)


def test_transform_overflow_guard(tor64):
    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    with pytest.raises(sl.DivergedError):
        st.transform_forward(s, 2.0, 400.0)
    with pytest.raises(sl.DivergedError):
        st.transform_backward(s, -2.0, 400.0)


# ---------------------------------------------------------------------------
# transformed stepper
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("geom", ["torus", "square"])
def test_transformed_alpha_zero_matches_rk4_bitwise(geom):
    g = (sl.make_grid("torus", 64, 64, 2 * np.pi, 2 * np.pi)
         if geom == "torus" else sl.make_grid("square", 64, 64, np.pi, np.pi))
    s = sl.random_state(g, seed=3, max_mode=4, amplitude=0.5)
    p = sl.Params()
    a = st.step_transformed(s, p, 1e-3, 0.0, 0.12, 0.34)
    b = dyn.step_rk4(s, p, 1e-3)
    assert state_max_abs_diff(a, b) == 0.0


def test_transformed_pure_decay(tor64):
    # u_S = 0 kills advection, f = g = 0 kills the couplings, s = 0 the
    # source: the whole tendency vanishes and only the exact integrating
    # factor remains
    base = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    zero = np.zeros_like(base.u_t.values)
    s = sl.make_state(tor64, 0.0, zero.copy(), zero.copy(),
                      base.u_t.values.copy(), base.theta_s.values.copy())
    p = sl.Params(f=0.0, g=0.0, s=0.0)
    alpha = 1.3
    out = st.step_transformed(s, p, 0.01, alpha, 0.0, 0.9)
    fac = math.exp(-0.5 * alpha * alpha * 0.01)
    assert np.array_equal(out.u_t.values, fac * s.u_t.values)
    assert np.array_equal(out.theta_s.values, fac * s.theta_s.values)


def test_transformed_overflow_guard(tor64):
    s = sl.random_state(tor64, seed=3, max_mode=4, amplitude=0.5)
    with pytest.raises(sl.DivergedError):
        st.step_transformed(s, sl.Params(), 1e-3, 3.0, 0.0, 300.0)


def test_transform_equivalence_shrinks_with_dt():
    # same Brownian path at four dyadic resolutions: the EM and the
    # back-transformed solutions approach each other as dt shrinks
    g = sl.make_grid("torus", 64, 64, 2 * np.pi, 2 * np.pi)
    p = sl.Params(s=0.0)
    alpha = 0.5
    state0 = sl.random_state(g, seed=3, max_mode=4, amplitude=0.25)
    model = st.LinearMultiplicative(alpha=alpha)
    paths = [st.sample_wiener(1e-2, 25, 1, seed=7)]
    for _ in range(3):
        paths.append(st.refine_path(paths[-1]))
    errs = []
    for pth in paths:
        w = pth.w_series()
        s_em = state0
        s_tr = st.transform_forward(state0, alpha, 0.0)
        for i in range(pth.n_steps):
            s_em = st.step_em(s_em, p, pth.dt, pth.increments[0, i], model)
            s_tr = st.step_transformed(s_tr, p, pth.dt, alpha, w[i], w[i + 1])
        back = st.transform_backward(s_tr, alpha, w[-1])
        diff = math.sqrt(sum(np.sum((a - b) ** 2) for a, b in
                             zip(state_arrays(s_em), state_arrays(back)))
                         * g.cell_area)
        errs.append(diff)
    assert all(b < a for a, b in zip(errs, errs[1:])), errs


def test_transformed_norm_decays_under_strong_noise():
    # s = 0, alpha = 6: the half-alpha^2 damping dominates the couplings,
    # so the transformed squared L2 norm decays at least like exp(-t)
    g = sl.make_grid("torus", 64, 64, 2 * np.pi, 2 * np.pi)
    p = sl.Params(s=0.0)
    alpha = 6.0
    dt, n = 1e-3, 500
    path = st.sample_wiener(dt, n, 1, seed=17)
    w = path.w_series()
    s = st.transform_forward(
        sl.random_state(g, seed=3, max_mode=3, amplitude=0.01), alpha, 0.0)

    def sq(stt):
        return l2(stt.u_s) ** 2 + l2(stt.u_t) ** 2 + l2(stt.theta_s) ** 2

    e0 = sq(s)
    bound = -alpha * alpha / 4.0 + 8.0
    for i in range(n):
        s = st.step_transformed(s, p, dt, alpha, w[i], w[i + 1])
        if (i + 1) % 25 == 0:
            t = (i + 1) * dt
            assert (math.log(sq(s)) - math.log(e0)) / t <= bound


# ---------------------------------------------------------------------------
# the exponential-martingale functional
# ---------------------------------------------------------------------------

def test_lambda_starts_at_one():
    p = st.sample_wiener(1e-2, 100, 1, seed=0)
    assert st.lambda_process(p, 2.0)[0] == 1.0


def test_lambda_exponent_cancellation():
    # alpha = 1, W(1) = 1/32: the drift term eats the Brownian term exactly
    p = st.WienerPath(1.0, 1, 1, 0, np.array([[1.0 / 32.0]]))
    lam = st.lambda_process(p, 1.0)
    assert lam[1] == pytest.approx(1.0, abs=1e-15)


def test_lambda_sixteenth_root_is_mean_one():
    # E[Lambda(t)^{1/16}] = 1 exactly; 2e4 paths leave ~4 SE of headroom
    n_paths, n_steps, dt, alpha = 20000, 50, 0.02, 1.0
    rng = np.random.default_rng(np.random.SeedSequence([99, 0]))
    inc = rng.standard_normal((n_paths, n_steps)) * math.sqrt(dt)
    w_end = inc.sum(axis=1)
    vals = np.exp(alpha * w_end / 16.0 - alpha * alpha * (n_steps * dt) / 512.0)
    se = vals.std(ddof=1) / math.sqrt(n_paths)
    assert abs(vals.mean() - 1.0) <= 4.0 * se


# ---------------------------------------------------------------------------
# stopping monitors
# ---------------------------------------------------------------------------

def test_monitor_crossing_at_step_17():
    dt = 0.25
    times = dt * np.arange(40)
    vals = np.zeros(40)
    vals[17:] = 5.0
    rec = st.stopping_monitor(times, vals, st.NORM_THRESHOLD, 4.0)
    assert rec.triggered
    assert rec.trigger_time == 17 * dt
    assert rec.trigger_value == 5.0


def test_monitor_never_triggers():
    times = np.linspace(0.0, 1.0, 11)
    vals = np.linspace(0.0, 0.9, 11)
    rec = st.stopping_monitor(times, vals, st.GBM_THRESHOLD, 2.0)
    assert not rec.triggered
    assert rec.trigger_time is None
    assert rec.trigger_value == 0.9


def test_monitor_rejects_unknown_kind():
    with pytest.raises(sl.ConfigError):
        st.stopping_monitor([0.0], [1.0], "no_such_kind", 1.0)
    with pytest.raises(sl.ConfigError):
        st.OnlineMonitor("no_such_kind", 1.0)


@given(seed=hyp_st.integers(min_value=0, max_value=2**31))
def test_online_monitor_matches_batch_scan(seed):
    rng = np.random.default_rng(seed)
    n = rng.integers(1, 60)
    times = np.cumsum(rng.uniform(0.01, 0.1, size=n))
    vals = rng.normal(size=n)
    threshold = float(rng.uniform(-1.0, 2.0))
    batch = st.stopping_monitor(times, vals, st.AMPLITUDE_THRESHOLD, threshold)
    mon = st.OnlineMonitor(st.AMPLITUDE_THRESHOLD, threshold)
    fired = [mon.update(t, v) for t, v in zip(times, vals)]
    assert mon.record() == batch
    assert sum(fired) == (1 if batch.triggered else 0)


def test_monitor_idempotent():
    times = np.linspace(0.0, 2.0, 30)
    vals = np.sin(times) * 3.0
    a = st.stopping_monitor(times, vals, st.NORM_THRESHOLD, 2.5)
    b = st.stopping_monitor(times, vals, st.NORM_THRESHOLD, 2.5)
    assert a == b
