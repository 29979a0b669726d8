import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctrwlab.acceptance import random_step_path
from ctrwlab.cadlag import CadlagPath, StepPath, exp_transform, linear_combination
from ctrwlab.stieltjes import (
    integrate,
    integration_by_parts_check,
    outer_integral,
    reserve_path,
    verify_reserve_sde,
)


def brute_force(H, X, t):
    """Jump-by-jump sum of H(s-) dX_s for a step integrator."""
    times, sizes = X.jumps()
    return math.fsum(H.left_limit(s) * d for s, d in zip(times, sizes[:, 0]) if s <= t)


def test_unit_integrand_gives_increments():
    X = StepPath([0.2, 0.5], [1.5, -0.5], initial_value=3.0, horizon=1.0)
    one = StepPath(initial_value=1.0, horizon=1.0)
    I = integrate(one, X, 1.0)
    for t in (0.0, 0.1, 0.2, 0.49, 0.5, 1.0):
        assert I.eval(t) == pytest.approx(X.eval(t) - X.eval(0.0))


def test_two_step_example():
    H = StepPath([1.0], [1.0], initial_value=1.0, horizon=2.0)
    X = StepPath([0.5, 1.5], [1.0, 3.0], horizon=2.0)
    assert integrate(H, X, 2.0).eval(2.0) == 7.0


def test_predictable_integrand_sees_pre_jump_value():
    X = StepPath([0.4], [2.5], horizon=1.0)
    assert integrate(X, X, 1.0).eval(1.0) == 0.0


def test_step_integrand_against_drift():
    # H = 1 then 3 after t = 0.5; X(t) = 2t; exact value 1*1 + 3*1
    H = StepPath([0.5], [2.0], initial_value=1.0, horizon=1.0)
    X = StepPath(drift=2.0, horizon=1.0)
    I = integrate(H, X, 1.0)
    assert I.eval(1.0) == pytest.approx(4.0)
    assert I.eval(0.25) == pytest.approx(0.5)


def test_function_integrand():
    X = StepPath([0.25, 0.75], [1.0, 2.0], horizon=1.0)
    assert integrate(np.exp, X, 1.0).eval(1.0) == pytest.approx(math.exp(0.25) + 2 * math.exp(0.75))


def test_exact_mode_rejects_two_drifting_paths():
    X = StepPath(drift=1.0, horizon=1.0)
    with pytest.raises(ValueError):
        integrate(X, X, 1.0)
    with pytest.raises(ValueError):
        integrate(X, X, 1.0, mode="trapezoid")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    H, X = random_step_path(rng), random_step_path(rng)
    I = integrate(H, X, 1.0)
    for t in np.linspace(0, 1, 7):
        assert I.eval(t) == pytest.approx(brute_force(H, X, t), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity_in_integrand(seed, a, b):
    rng = np.random.default_rng(seed)
    H1, H2, X = random_step_path(rng), random_step_path(rng), random_step_path(rng)
    lhs = integrate(linear_combination([(a, H1), (b, H2)]), X, 1.0).eval(1.0)
    rhs = a * integrate(H1, X, 1.0).eval(1.0) + b * integrate(H2, X, 1.0).eval(1.0)
    assert lhs == pytest.approx(rhs, abs=1e-12)


# -- outer integral ------------------------------------------------------------------


def test_outer_integral_scalar_reduces_to_integrate():
    rng = np.random.default_rng(0)
    H, X = random_step_path(rng), random_step_path(rng)
    M = outer_integral(H, X, 1.0)
    assert M.shape == (1, 1)
    assert M.eval(1.0)[0, 0] == integrate(H, X, 1.0).eval(1.0)


def vector_step(rng, dim):
    times = np.sort(rng.uniform(0, 1, 6))
    sizes = rng.normal(size=(6, dim))
    return CadlagPath(np.concatenate([[0.0], times]),
                      np.cumsum(np.vstack([rng.normal(size=(1, dim)), sizes]), axis=0), horizon=1.0)


def test_outer_integral_unit_rows():
    rng = np.random.default_rng(1)
    Zt = vector_step(rng, 2)
    one = CadlagPath([0.0], [[1.0, 1.0]], horizon=1.0)
    M = outer_integral(one, Zt, 1.0).eval(1.0)
    inc = Zt.eval(1.0) - Zt.eval(0.0)
    assert np.allclose(M, [inc, inc], atol=1e-12)


def test_outer_integral_matches_entrywise_oracle():
    rng = np.random.default_rng(2)
    Z, Zt = vector_step(rng, 2), vector_step(rng, 2)
    M = outer_integral(Z, Zt, 1.0).eval(1.0)
    for i in range(2):
        for j in range(2):
            assert M[i, j] == pytest.approx(brute_force(Z.component(i), Zt.component(j), 1.0), abs=1e-12)


# -- integration by parts ------------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_integration_by_parts(seed, shared):
    rng = np.random.default_rng(seed)
    H = random_step_path(rng, max_jumps=20)
    X = random_step_path(rng, max_jumps=20, shared_times=H.jump_times() if shared else None)
    assert integration_by_parts_check(H, X, 1.0) <= 1e-12


def test_integration_by_parts_shared_jump_by_hand():
    # both jump at 0.5: H 1 -> 3, X 0 -> 2; HX|_0^1 = 6 = int H_- dX (2) + int X_- dH (0) + 2*2
    H = StepPath([0.5], [2.0], initial_value=1.0, horizon=1.0)
    X = StepPath([0.5], [2.0], horizon=1.0)
    assert integrate(H, X, 1.0).eval(1.0) == 2.0
    assert integrate(X, H, 1.0).eval(1.0) == 0.0
    assert integration_by_parts_check(H, X, 1.0) == 0.0


def test_integration_by_parts_constant_integrand():
    X = random_step_path(np.random.default_rng(3))
    c = StepPath(initial_value=2.5, horizon=1.0)
    assert integrate(c, X, 1.0).eval(1.0) == pytest.approx(2.5 * (X.eval(1.0) - X.eval(0.0)))
    assert integration_by_parts_check(c, X, 1.0) <= 1e-12


# -- grid mode ---------------------------------------------------------------------------


def test_grid_mode_converges_monotonically():
    # H jumps just before a cluster of X jumps; coarse cells see the stale integrand
    H = StepPath([0.3001], [1.0], horizon=1.0)
    X = StepPath([0.3003, 0.31, 0.33, 0.6], [1.0, 1.0, 1.0, 1.0], horizon=1.0)
    exact = integrate(H, X, 1.0).eval(1.0)
    errors = [abs(integrate(H, X, 1.0, mode="grid", grid_step=2.0**-k).eval(1.0) - exact)
              for k in range(1, 16)]
    assert all(b <= a for a, b in zip(errors, errors[1:]))
    assert errors[0] > 0 and errors[-1] == 0.0


def test_grid_step_must_divide_horizon():
    X = StepPath([0.5], [1.0], horizon=1.0)
    with pytest.raises(ValueError):
        integrate(X, X, 1.0, mode="grid", grid_step=0.3)


# -- reserve equation ----------------------------------------------------------------------


def test_reserve_without_cash_flow_is_homogeneous():
    R = StepPath([0.3, 0.8], [0.2, -0.5], horizon=1.0)
    U = reserve_path(2.0, R, StepPath(horizon=1.0), 1.0)
    for t in (0.0, 0.3, 0.5, 0.9, 1.0):
        assert U.eval(t) == pytest.approx(2.0 * math.exp(R.eval(t)))


def test_reserve_without_returns_accumulates_flow():
    P = StepPath([0.2, 0.6], [1.0, -3.0], initial_value=4.0, horizon=1.0)
    U = reserve_path(1.5, StepPath(horizon=1.0), P, 1.0)
    for t in (0.0, 0.2, 0.7, 1.0):
        assert U.eval(t) == pytest.approx(1.5 + P.eval(t) - P.eval(0.0))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_reserve_solves_its_equation(seed):
    rng = np.random.default_rng(seed)
    R, P = random_step_path(rng, max_jumps=10), random_step_path(rng, max_jumps=10)
    if np.intersect1d(R.jump_times(), P.jump_times()).size:
        return
    U = reserve_path(1.0, R, P, 1.0)
    assert verify_reserve_sde(U, exp_transform(R), P, tol=1e-10)


def test_reserve_rejects_common_jumps():
    R = StepPath([0.5], [0.1], horizon=1.0)
    P = StepPath([0.5], [1.0], horizon=1.0)
    with pytest.raises(ValueError, match="common jump"):
        reserve_path(1.0, R, P, 1.0)


def test_perturbed_reserve_fails_at_that_time():
    R = StepPath([0.2, 0.7], [0.3, -0.1], horizon=1.0)
    P = StepPath([0.4], [2.0], horizon=1.0)
    U = reserve_path(1.0, R, P, 1.0)
    bad = U + StepPath([0.4], [1.0], horizon=1.0)
    check = verify_reserve_sde(bad, exp_transform(R), P)
    assert not check
    assert check.time == 0.4


def test_single_return_jump():
    R = StepPath([0.5], [math.log(2.0)], horizon=1.0)
    U = reserve_path(3.0, R, StepPath(horizon=1.0), 1.0)
    assert U.left_limit(0.5) == pytest.approx(3.0)
    assert U.eval(0.5) == pytest.approx(6.0)
    assert verify_reserve_sde(U, exp_transform(R), StepPath(horizon=1.0))


def test_reserve_grid_mode_approaches_exact():
    R = StepPath([0.31, 0.77], [0.2, -0.4], horizon=1.0)
    P = StepPath([0.13, 0.52], [1.0, 0.5], horizon=1.0)
    exact = reserve_path(1.0, R, P, 1.0).eval(1.0)
    assert reserve_path(1.0, R, P, 1.0, mode="grid", grid_step=1e-3).eval(1.0) == pytest.approx(exact)
