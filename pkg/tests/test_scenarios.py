import math
import pickle

import numpy as np
import pytest

from ctrwlab.acceptance import random_step_path
from ctrwlab.cadlag import StepPath
from ctrwlab.randlaw import SeedSpec
from ctrwlab.scenarios import SCENARIOS, make_config, run_scenario
from ctrwlab.scenarios.cointegration import (
    noiseless_estimate,
    regression_residuals,
    synthetic_regression,
)
from ctrwlab.scenarios.common import Expression, parse_coefficients, parse_innovation, require_centering
from ctrwlab.scenarios.finance import make_config as finance_config
from ctrwlab.scenarios.finance import replay_check, strategy_h
from ctrwlab.scenarios.insurance import reserve_terminal
from ctrwlab.scenarios.langevin import Integrand, spike_check, spike_paths
from ctrwlab.stieltjes import reserve_path

SMALL = {"n_ladder": [20, 100], "replications": 200, "chunk": 100}

STATISTICS = {
    "langevin": {"integral_half", "integral_T"},
    "cointegration": {"integral_T"},
    "finance": {"gain_T", "price_T"},
    "insurance": {"reserve_T", "price_T", "premium_T"},
}


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_small_runs_are_complete_and_reproducible(name):
    extra = {"identity_trials": 10} if name == "cointegration" else {}
    extra = {"sde_replications": 20} if name == "insurance" else extra
    cfg = dict(SMALL, **extra)
    a = run_scenario(name, cfg, seed=3)
    assert {e.statistic for e in a.entries} == STATISTICS[name]
    assert {e.n for e in a.entries} == {20, 100}
    assert all(e.replications == 200 for e in a.entries)
    assert a.config["scenario"] == name
    assert a.to_json() == run_scenario(name, cfg, seed=3).to_json()


def test_config_errors():
    with pytest.raises(ValueError, match="unknown langevin parameters: colour"):
        make_config("langevin", {"colour": "red"})
    with pytest.raises(ValueError, match="unknown scenario"):
        make_config("weather")
    with pytest.raises(ValueError):
        make_config("insurance", {"n_ladder": [100, 10]})
    with pytest.raises(ValueError):
        finance_config({"mode": "z"})


def test_thresholds_merge_over_defaults():
    cfg = make_config("langevin", {"thresholds": {"integral_T": 0.5}})
    assert cfg.thresholds == {"integral_half": 0.03, "integral_T": 0.5}


def test_finance_mode_defaults():
    cfg = finance_config({"mode": "c"})
    assert cfg.params["alpha"] == 1.5
    assert cfg.params["coefficients"] == [0.5, 0.5]


def test_langevin_rejects_uncentered_correlated_innovations():
    cfg = {"mode": "correlated", "alpha": 1.5, "coefficients": [0.5, 0.5],
           "innovation": {"family": "stable", "alpha": 1.5, "shift": 1.0}, **SMALL}
    with pytest.raises(ValueError, match="centered"):
        run_scenario("langevin", cfg)


# -- common helpers ---------------------------------------------------------------


def test_expression_evaluates_vectorized():
    f = Expression("sin(x) + x**2 / 2 - pi")
    x = np.linspace(-1, 1, 5)
    assert np.allclose(f(x), np.sin(x) + x ** 2 / 2 - math.pi)
    assert Expression("3")(x).shape == (5,)
    g = pickle.loads(pickle.dumps(Expression("exp(-s)", ("s",))))
    assert g(0.0) == 1.0


@pytest.mark.parametrize("src", ["__import__('os')", "x.real", "open(x)", "y + 1",
                                 "(lambda: 1)()", "x[0]", "sin(x, x)"])
def test_expression_rejects_unsafe_syntax(src):
    with pytest.raises(ValueError):
        Expression(src)


def test_parse_helpers():
    law = parse_innovation({"family": "centered_pareto", "alpha": 1.5, "cutoff": 0.2})
    assert law.is_centered
    with pytest.raises(ValueError, match="unused"):
        parse_innovation({"family": "stable", "alpha": 2.0, "colour": 1})
    with pytest.raises(ValueError):
        parse_innovation({"family": "weibull"})
    assert parse_coefficients({"kind": "geometric", "rate": 0.5}).total() == pytest.approx(2.0)
    with pytest.raises(ValueError):
        require_centering(parse_innovation({"family": "stable", "alpha": 1.0, "skew": 0.5}), 1.0)
    require_centering(parse_innovation({"family": "stable", "alpha": 0.8, "skew": 0.5}), 0.8)


# -- langevin ------------------------------------------------------------------------


def test_oscillating_integrand():
    with pytest.raises(ValueError):
        Integrand("oscillating", alpha=2.0, beta=0.8, gamma=0.4)
    f = Integrand("oscillating", alpha=2.0, beta=0.8, gamma=0.3)
    s = np.linspace(0, 1, 200_001)
    for n in (10, 1000):
        deriv = np.diff(f.prelimit(n, s)) / np.diff(s)
        assert np.max(np.abs(deriv)) <= 1 + n ** 0.3 + 1e-6
        # the perturbation vanishes like n^(-beta/alpha)
        assert np.max(np.abs(f.prelimit(n, s) - f.limit(s))) <= n ** -0.4 + 1e-12
    with pytest.raises(ValueError):
        Integrand("s +")


def test_spike_pair_and_check():
    x, y = spike_paths(10, 1.5)
    assert np.allclose(x.jumps()[1][:, 0], [0.5, 0.5])
    assert np.allclose(np.diff(x.jump_times()), 0.1)
    assert y.jump_times()[0] == x.jump_times()[0]
    check = spike_check([10, 100], 1.5)
    assert check.passed
    assert check.detail["100"]["j1"] == pytest.approx(0.5)


# -- cointegration ---------------------------------------------------------------------


def test_regression_identities_on_heavy_tails():
    law = parse_innovation({"family": "symmetric_pareto", "alpha": 1.5})
    s = synthetic_regression(law, law, 2, 3, 150, SeedSpec(4))
    res = regression_residuals(s, 1.5, 1.5)
    assert res["estimator"] < 1e-9
    assert res["rescaling"] < 1e-9
    assert res["integral"] < 1e-12


def test_noiseless_estimate_recovers_matrix():
    rng = np.random.default_rng(0)
    X = np.cumsum(rng.standard_normal((50, 3)), axis=0)
    M = rng.standard_normal((2, 3))
    assert np.allclose(noiseless_estimate(X, M), M, atol=1e-10)


def test_cointegration_rejects_non_summable_coefficients():
    cfg = {"mode": "linear", "coefficients_u": {"kind": "power", "exponent": 1.5}, **SMALL}
    with pytest.raises(ValueError, match="tail-summability"):
        run_scenario("cointegration", cfg)


# -- finance --------------------------------------------------------------------------


def test_strategy_h_is_bounded():
    x = np.linspace(-100, 100, 1001)
    assert np.all((strategy_h(0.0, x) > 0) & (strategy_h(0.0, x) <= 1))


def test_finance_replay_is_bitwise():
    cfg = finance_config({"mode": "c", "n_ladder": [200], "replications": 10,
                          "replay_replications": 10})
    check = replay_check(cfg, seed=5)
    assert check.passed
    assert check.detail["checked"] > 0


def test_finance_mode_a_has_no_bound_violations():
    rep = run_scenario("finance", dict(SMALL, mode="a"), seed=1)
    check = next(c for c in rep.checks if c.name == "drift_bound_violations")
    assert check.passed


# -- insurance -------------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(20))
def test_reserve_terminal_matches_reserve_path(seed):
    rng = np.random.default_rng(seed)
    R, P = random_step_path(rng), random_step_path(rng)
    R, P = R - StepPath(initial_value=R.eval(0.0), horizon=1.0), P - StepPath(initial_value=P.eval(0.0), horizon=1.0)
    if np.intersect1d(R.jump_times(), P.jump_times()).size:
        return
    rt, rs = R.jumps()
    pt, ps = P.jumps()
    out = reserve_terminal(1.3, rt, rs[:, 0], pt, ps[:, 0])
    assert out["reserve_T"] == pytest.approx(reserve_path(1.3, R, P, 1.0).eval(1.0), rel=1e-12)
    assert out["price_T"] == pytest.approx(math.exp(R.eval(1.0)))
