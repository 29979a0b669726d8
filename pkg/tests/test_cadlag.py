import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctrwlab.cadlag import (
    CadlagPath,
    GridPath,
    StepPath,
    compose,
    exp_transform,
    generalized_inverse,
    last_passage_time_change,
    linear_combination,
    log_transform,
    pointwise,
    read_csv,
    regularize,
    write_csv,
)


def identity(horizon):
    return CadlagPath([0.0], [0.0], [1.0], horizon)


def random_increasing(rng, horizon=10.0, jumps=5):
    """Nondecreasing path with random slopes and jumps; ``D(horizon) >= horizon``."""
    knots = np.concatenate([[0.0], np.sort(rng.uniform(0, 0.5 * horizon, jumps))])
    slopes = rng.choice([0.0, 0.5, 2.0], size=knots.size)
    slopes[-1] = 2.0
    values = np.empty(knots.size)
    values[0] = 0.0
    for k in range(1, knots.size):
        left = values[k - 1] + slopes[k - 1] * (knots[k] - knots[k - 1])
        values[k] = left + rng.choice([0.0, rng.uniform(0.1, 2.0)])
    return CadlagPath(knots, values, slopes, horizon)


# -- evaluation -------------------------------------------------------------------


def test_right_continuity_at_jump():
    x = StepPath([1.0], [2.0])
    assert x.eval(1.0) == 2.0
    assert x.eval(0.999) == 0.0
    assert x.left_limit(1.0) == 0.0


def test_affine_path():
    x = StepPath(initial_value=1.0, drift=3.0)
    assert x.eval(2.0) == 7.0
    for t in (0.5, 1.0, 2.5):
        assert x.left_limit(t) == x.eval(t)


def test_grid_left_limit_is_previous_value():
    g = GridPath(0.25, [0.0, 1.0, -1.0, 3.0, 2.0])
    assert g.horizon == 1.0
    for k in range(1, 5):
        assert g.left_limit(0.25 * k) == g.grid_values[k - 1]
        assert g.eval(0.25 * k) == g.grid_values[k]


def test_constructor_errors():
    with pytest.raises(ValueError):
        StepPath([0.5, 0.5], [1.0, 1.0])
    with pytest.raises(ValueError):
        StepPath([0.0], [1.0])
    with pytest.raises(ValueError):
        StepPath([2.0], [1.0], horizon=1.0)
    with pytest.raises(ValueError):
        StepPath([0.5], [1.0], horizon=1.0).eval(1.5)
    with pytest.raises(ValueError):
        StepPath().left_limit(0.0)


def test_jumps_drop_zero_sizes():
    x = StepPath([0.2, 0.4, 0.6], [1.0, 0.0, -1.0])
    t, s = x.jumps()
    assert np.array_equal(t, [0.2, 0.6])
    assert np.array_equal(s[:, 0], [1.0, -1.0])


def test_vector_step_path():
    x = StepPath([0.5], [[1.0, -2.0]], initial_value=[0.0, 1.0], horizon=1.0)
    assert x.dim == 2
    assert np.array_equal(x.eval(0.7), [1.0, -1.0])
    assert x.component(1).eval(0.7) == -1.0


# -- inverse and last passage ------------------------------------------------------


def test_inverse_of_single_jump():
    d = StepPath([1.0], [5.0], drift=0.0, horizon=3.0)
    d = CadlagPath(np.append(d.knots, 2.0), [0.0, 5.0, 5.0], [0.0, 0.0, 1.0], 3.0)
    inv = generalized_inverse(d, 4.9)
    for t in np.linspace(0, 4.9, 50):
        assert inv.eval(t) == 1.0


def test_inverse_of_grid_identity():
    # D = identity sampled on a grid of step 0.1; D^{-1}(t) is the next grid point
    h = 0.1
    d = GridPath(h, np.arange(31) * h, horizon=3.0)
    inv = generalized_inverse(d, 2.0)
    for t in (0.0, 0.05, 0.1, 0.55, 1.99):
        expected = (math.floor(round(t / h, 9)) + 1) * h
        assert inv.eval(t) == pytest.approx(expected, abs=1e-12)


def test_inverse_undoes_strictly_increasing_path():
    d = CadlagPath([0.0, 1.0, 2.0], [0.0, 1.0, 3.0], [1.0, 2.0, 0.5], 5.0)
    inv = generalized_inverse(d, 3.5)
    for s in (0.3, 1.0, 1.7, 2.5):
        assert inv.eval(d.eval(s)) == pytest.approx(s, abs=1e-14)


def test_inverse_unreachable_horizon():
    with pytest.raises(ValueError, match="horizon unreachable"):
        generalized_inverse(StepPath([1.0], [2.0], horizon=2.0), 5.0)


def test_inverse_rejects_decreasing():
    with pytest.raises(ValueError):
        generalized_inverse(StepPath([1.0, 2.0], [5.0, -1.0], horizon=3.0), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_inverse_duality(seed):
    # D^{-1}(t) <= s  <=>  D(s) > t, except at s = D^{-1}(t) itself where both sides hold
    rng = np.random.default_rng(seed)
    d = random_increasing(rng)
    T = 8.0
    inv = generalized_inverse(d, T)
    for _ in range(50):
        s = rng.uniform(0, d.horizon)
        t = rng.uniform(0, T)
        assert (inv.eval(t) <= s) == (d.eval(s) > t) or math.isclose(inv.eval(t), s)


def test_last_passage_single_jump_at_zero():
    d = CadlagPath([0.0], [5.0], [1.0], 10.0)
    g = last_passage_time_change(d, 8.0)
    for t in (0.0, 1.0, 4.999):
        assert g.eval(t) == 0.0
    assert g.eval(6.0) == pytest.approx(6.0)


def test_last_passage_of_identity():
    g = last_passage_time_change(identity(5.0), 4.0)
    for t in (0.0, 1.3, 4.0):
        assert g.eval(t) == pytest.approx(t)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_last_passage_bounded_by_t(seed):
    rng = np.random.default_rng(seed)
    d = random_increasing(rng)
    g = last_passage_time_change(d, 8.0)
    t = rng.uniform(0, 8.0, 200)
    assert np.all(g.eval(t) <= t + 1e-12)


# -- composition and regularization -----------------------------------------------------


def test_compose_with_identity():
    x = StepPath([0.3, 0.7], [1.0, -2.0], horizon=1.0)
    y = compose(x, identity(1.0))
    t = np.linspace(0, 1, 101)
    assert np.array_equal(y.eval(t), x.eval(t))


def test_compose_with_constant_time_change():
    x = StepPath([2.0], [1.0], horizon=4.0)
    y = compose(x, CadlagPath([0.0], [3.0], None, 1.0))
    assert np.all(y.eval(np.linspace(0, 1, 11)) == 1.0)


def test_compose_is_flat_where_inverse_is_flat():
    rng = np.random.default_rng(0)
    x = GridPath(0.01, np.cumsum(rng.normal(size=301)) * 0.1, horizon=3.0)
    # D jumps over [0.5, 1.5] at s = 0.5, so D^{-1} is flat on that interval
    d = CadlagPath([0.0, 0.5], [0.0, 1.5], [1.0, 1.0], 4.0)
    tau = generalized_inverse(d, 2.5)
    y = compose(x, tau)
    vals = y.eval(np.linspace(0.5, 1.4999, 40))
    assert np.all(vals == vals[0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_compose_associative(seed):
    rng = np.random.default_rng(seed)
    x = StepPath(np.sort(rng.uniform(0.01, 10.0, 8)), rng.normal(size=8), horizon=10.0)
    d1 = random_increasing(rng, horizon=10.0)
    d2 = random_increasing(rng, horizon=10.0)
    tau1 = generalized_inverse(d1, 9.0).restrict(9.0)
    tau2 = generalized_inverse(d2, tau1.horizon * 0.5)
    if tau2.eval(tau2.horizon) > tau1.horizon:
        return
    left = compose(compose(x, tau1), tau2)
    right = compose(x, compose(tau1, tau2))
    t = rng.uniform(0, tau2.horizon, 200)
    assert np.allclose(left.eval(t), right.eval(t), atol=1e-12)


def test_regularize_round_trip():
    x = StepPath([1.0], [1.0], horizon=2.0)
    pre = regularize(x, "pre_limit")
    assert pre.eval(1.0) == 0.0
    assert pre.eval(1.5) == 1.0
    post = regularize(pre, "post_limit")
    t = np.linspace(0, 2, 41)
    assert np.array_equal(post.eval(t), x.eval(t))


def test_coupled_assembly_reduces_without_common_jumps():
    # ((Z^-) o D^{-1})^+ equals Z o D^{-1} when Z does not jump where D^{-1} is flat
    z = StepPath([0.4, 2.2, 3.1], [1.0, -1.0, 0.5], horizon=5.0)
    d = CadlagPath([0.0, 1.0, 2.0], [0.0, 1.5, 3.0], [1.0, 1.0, 1.0], 6.0)
    tau = generalized_inverse(d, 4.0)
    a = compose(regularize(z, "pre_limit"), tau)
    b = compose(z, tau)
    t = np.linspace(0, 4.0, 401)
    assert np.array_equal(a.eval(t), b.eval(t))


def test_coupled_assembly_differs_with_common_jump():
    # Z jumps at s = 1, exactly where D jumps: the pre-limit version omits that jump
    z = StepPath([1.0], [1.0], horizon=5.0)
    d = CadlagPath([0.0, 1.0], [0.0, 2.0], [1.0, 1.0], 6.0)
    tau = generalized_inverse(d, 4.0)
    a = compose(regularize(z, "pre_limit"), tau)
    b = compose(z, tau)
    assert a.eval(1.5) == 0.0 and b.eval(1.5) == 1.0
    assert a.eval(2.5) == 1.0


# -- transforms and algebra ---------------------------------------------------------------


def test_exp_transform_examples():
    assert np.all(exp_transform(StepPath(horizon=1.0)).eval(np.linspace(0, 1, 5)) == 1.0)
    s = exp_transform(StepPath([1.0], [math.log(2.0)], horizon=2.0))
    assert s.eval(0.5) == 1.0 and s.eval(1.0) == pytest.approx(2.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=1, max_size=10))
def test_exp_positive_and_log_inverse(sizes):
    times = np.arange(1, len(sizes) + 1) / (len(sizes) + 1)
    x = StepPath(times, sizes, horizon=1.0)
    s = exp_transform(x)
    assert np.all(s.values > 0)
    back = log_transform(s)
    assert np.allclose(back.values, x.values, rtol=1e-12, atol=1e-12)


def test_exp_transform_rejects_drift():
    with pytest.raises(ValueError):
        exp_transform(StepPath(drift=1.0, horizon=1.0))


def test_linear_combination_and_pointwise():
    x = StepPath([0.2], [1.0], horizon=1.0)
    y = StepPath([0.6], [2.0], horizon=1.0)
    z = linear_combination([(2.0, x), (-1.0, y)])
    assert z.eval(0.5) == 2.0 and z.eval(0.7) == 0.0
    w = pointwise(np.multiply, x, y)
    assert w.eval(0.5) == 0.0 and w.eval(0.7) == 2.0
    with pytest.raises(ValueError):
        linear_combination([(1.0, x), (1.0, StepPath(horizon=2.0))])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_right_continuity_closure(seed):
    rng = np.random.default_rng(seed)
    d = random_increasing(rng)
    paths = [d, generalized_inverse(d, 8.0), last_passage_time_change(d, 8.0)]
    x = StepPath(np.sort(rng.uniform(0.01, 5.0, 4)), rng.normal(size=4), horizon=10.0)
    paths.append(compose(x, generalized_inverse(d, 8.0)))
    for p in paths:
        for t in rng.uniform(0, p.horizon * 0.99, 50):
            eps = [2.0**-k for k in range(30, 50)]
            near = [p.eval(min(t + e, p.horizon)) for e in eps]
            assert near[-1] == pytest.approx(p.eval(t), abs=1e-9)


def test_csv_round_trip():
    x = StepPath([0.25, 0.5], [1.5, -0.5], initial_value=0.1, horizon=1.0)
    buf = io.StringIO()
    write_csv(x, buf)
    buf.seek(0)
    y = read_csv(buf)
    t = np.linspace(0, 1, 21)
    assert np.array_equal(x.eval(t), y.eval(t))
    assert y.horizon == 1.0


def test_csv_round_trip_with_slopes(tmp_path):
    x = CadlagPath([0.0, 1.0], [0.0, 2.0], [1.0, -0.5], 3.0)
    write_csv(x, tmp_path / "p.csv")
    y = read_csv(tmp_path / "p.csv")
    t = np.linspace(0, 3, 31)
    assert np.allclose(x.eval(t), y.eval(t), rtol=0, atol=1e-15)
