"""Financial gains against tick-by-tick CTRW prices.

Modes
-----
``a``
    ``H^n_t = h_n(t, S^n_t)`` with ``h(t, x) = 1 / (1 + x^2)`` and
    ``h_n = h + 1/n``; gains ``int H^n_- dS^n`` for the exponential CTRW
    ``S^n = exp(R^n)``.
``b``
    ``h(tau_k, S^n_{tau_k})`` frozen between stopping times
    ``tau_{k+1} = min(tau_k + mesh, first jump with |R^n - R^n_{tau_k}| > delta)``.
``c``
    arithmetic correlated price ``X^n`` and the lagged strategy
    ``H^n = g(X^n at the (k - J - 1)-th jump)`` on a trading grid, where ``k``
    counts the jumps up to the trade time.

The limit drift of ``R^n`` is ``r G(t)`` with ``G`` the last-passage time
change (``drift_limit = "last_passage"``); ``"linear"`` uses ``r t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numba
import numpy as np

from ..ctrw import (
    CtrwSpec,
    HeavyTail,
    LimitSpec,
    assemble_ctrw,
    draw_innovations,
    draw_waiting_times,
    limit_skeleton,
    risk_free_bound_violations,
)
from ..harness import (
    PRELIMIT_STREAM_BASE,
    CheckResult,
    ConvergenceReport,
    MonteCarloPlan,
    run_monte_carlo,
)
from ..randlaw import SeedSpec, domain_limit
from .common import ScenarioConfig, parse_coefficients, parse_innovation, require_centering

__all__ = ["DEFAULTS", "MODE_DEFAULTS", "make_config", "strategy_h", "stopping_strategy",
           "lagged_strategy", "FinancePrelimit", "FinanceLimit", "replay_check",
           "build_plan", "run_finance"]

DEFAULTS = {
    "horizon": 1.0,
    "n_ladder": [100, 1000, 10000],
    "replications": 10000,
    "thresholds": {"gain_T": 0.05, "price_T": 0.05},
    "mode": "a",
    "alpha": 2.0,
    "beta": 0.8,
    "r": 0.05,
    "innovation": {"family": "symmetric_pareto", "alpha": 4.0, "cutoff": 0.25},
    "waiting_family": "pareto",
    "coefficients": [1.0],
    "J_lag": 1,
    "mesh_exponent": 0.5,
    "delta_exponent": 0.25,
    "drift_limit": "last_passage",
    "bound_grid": 101,
    "replay_replications": 100,
}

MODE_DEFAULTS = {
    "a": {},
    "b": {},
    "c": {
        "alpha": 1.5,
        "r": 0.0,
        "innovation": {"family": "symmetric_pareto", "alpha": 1.5},
        "coefficients": [0.5, 0.5],
        "thresholds": {"gain_T": 0.05, "price_T": 0.05},
    },
}


def make_config(mapping: Mapping) -> ScenarioConfig:
    mapping = dict(mapping or {})
    mode = mapping.get("mode", mapping.get("params", {}).get("mode", "a"))
    if mode not in MODE_DEFAULTS:
        raise ValueError(f"unknown finance mode {mode!r}")
    defaults = dict(DEFAULTS)
    defaults.update(MODE_DEFAULTS[mode])
    return ScenarioConfig.from_mapping("finance", mapping, defaults)


def strategy_h(t, x):
    """``h(t, x) = 1 / (1 + x^2)``."""
    return 1.0 / (1.0 + np.asarray(x) ** 2)


@numba.njit(cache=True)
def stopping_strategy(times, log_after, mesh, delta):
    """Strategy value in force at each jump under the stopping-time discretization.

    ``log_after[k]`` is ``R`` right after jump ``k``.  Returns ``h`` evaluated
    at the price of the most recent stopping time strictly before each jump.
    """
    m = times.shape[0]
    out = np.empty(m)
    tau = 0.0
    r_tau = 0.0
    s = 1.0
    h = 1.0 / (1.0 + s * s)
    r_before = 0.0
    for k in range(m):
        while tau + mesh < times[k]:
            tau += mesh
            r_tau = r_before
            s = math.exp(r_tau)
            h = 1.0 / (1.0 + s * s)
        out[k] = h
        if tau + mesh == times[k] or abs(log_after[k] - r_tau) > delta:
            tau = times[k]
            r_tau = log_after[k]
            s = math.exp(r_tau)
            h = 1.0 / (1.0 + s * s)
        r_before = log_after[k]
    return out


def trade_grid(n: float, horizon: float, exponent: float) -> np.ndarray:
    """Trading times ``i * horizon / m`` with ``m = ceil(n^exponent)``."""
    m = int(math.ceil(n ** exponent))
    return np.arange(m + 1) * (horizon / m)


def lagged_strategy(times, values_after, trades, lag: int, g=np.tanh):
    """Strategy values ``H_i`` on ``[t_i, t_{i+1})`` and the index each depends on.

    ``values_after[k-1]`` is the price right after jump ``k``.  ``H_i`` uses the
    price right after jump ``k_i - lag - 1`` with ``k_i`` the number of jumps up
    to ``t_i``, and ``0`` when that index is below 1.
    """
    k = np.searchsorted(times, trades, side="right")
    idx = k - lag - 1
    x = np.where(idx >= 1, values_after[np.maximum(idx - 1, 0)] if values_after.size else 0.0, 0.0)
    return g(x), idx


def lagged_gain(times, sizes, trades, lag):
    values = np.cumsum(sizes)
    h, _ = lagged_strategy(times, values, trades, lag)
    # a jump at s in (t_i, t_{i+1}] meets H_{s-} = H_i
    i = np.searchsorted(trades, times, side="left") - 1
    return float(np.sum(h[i] * sizes))


@dataclass(frozen=True)
class FinancePrelimit:
    spec: CtrwSpec
    mode: str
    r: float
    horizon: float
    lag: int
    mesh_exponent: float
    delta_exponent: float
    bound_grid: int

    def __call__(self, n, seed):
        spec = self.spec.with_n(n)
        T = self.horizon
        waits = draw_waiting_times(spec.waiting, spec.n * T, seed)
        k = spec.coefficients.truncation_index()
        theta = draw_innovations(spec.innovation, k + waits.size - 1, seed)
        times, sizes = assemble_ctrw(theta, waits, spec, T)
        if self.mode == "c":
            trades = trade_grid(n, T, self.mesh_exponent)
            return {"gain_T": lagged_gain(times, sizes, trades, self.lag),
                    "price_T": float(np.sum(sizes)), "drift_bound_violations": 0.0}
        sizes = sizes + self.r * waits[: times.size] / spec.n
        log_after = np.cumsum(sizes)
        log_before = np.concatenate([[0.0], log_after[:-1]])
        s_after, s_before = np.exp(log_after), np.exp(log_before)
        if self.mode == "a":
            h = strategy_h(times, s_before) + 1.0 / n
        else:
            mesh = T * n ** (-self.mesh_exponent)
            h = stopping_strategy(times, log_after, mesh, n ** (-self.delta_exponent))
        check_times = np.concatenate([np.linspace(0.0, T, self.bound_grid), times,
                                      np.nextafter(times, -np.inf)])
        check_times = check_times[(check_times >= 0.0) & (check_times <= T)]
        return {
            "gain_T": float(np.sum(h * (s_after - s_before))),
            "price_T": float(s_after[-1]) if s_after.size else 1.0,
            "drift_bound_violations": float(risk_free_bound_violations(waits, spec.n, check_times)),
        }


@dataclass(frozen=True)
class FinanceLimit:
    limit: LimitSpec
    mode: str
    r: float
    horizon: float
    drift_limit: str

    def __call__(self, seed):
        times, sizes = limit_skeleton(self.limit, self.horizon, seed)
        if self.mode == "c":
            x_after = np.cumsum(sizes)
            x_before = np.concatenate([[0.0], x_after[:-1]])
            return {"gain_T": float(np.sum(np.tanh(x_before) * sizes)),
                    "price_T": float(x_after[-1]) if x_after.size else 0.0}
        h = self.limit.step(self.horizon)
        m = round(self.horizon / h)
        grid = np.minimum(np.arange(m + 1) * h, self.horizon)
        count = np.searchsorted(times, grid, side="right")
        z = np.concatenate([[0.0], np.cumsum(sizes)])[count]
        if self.drift_limit == "linear":
            drift = self.r * grid
        else:
            # r times the last skeleton jump time at or before t
            drift = self.r * np.concatenate([[0.0], times])[count]
        s = np.exp(z + drift)
        gain = float(np.sum(strategy_h(grid[:-1], s[:-1]) * np.diff(s)))
        return {"gain_T": gain, "price_T": float(s[-1])}


def _spec(cfg: ScenarioConfig) -> CtrwSpec:
    p = cfg.params
    alpha, beta = float(p["alpha"]), float(p["beta"])
    law = parse_innovation(p["innovation"])
    require_centering(law, alpha)
    coeffs = parse_coefficients(p["coefficients"])
    spec = CtrwSpec(law, HeavyTail(beta, p["waiting_family"]), alpha, beta, cfg.n_ladder[0],
                    coeffs, require_tc=not coeffs.is_trivial())
    if p["mode"] == "c":
        if int(p["J_lag"]) < _lag_length(coeffs.truncated()):
            raise ValueError("lag window J_lag is shorter than the correlation length of the "
                             "price innovations")
    elif not coeffs.is_trivial():
        raise ValueError("modes a and b use uncorrelated log-price innovations")
    return spec


def _lag_length(c: np.ndarray) -> int:
    nz = np.nonzero(c)[0]
    return int(nz[-1]) if nz.size else 0


def build_plan(cfg: ScenarioConfig) -> MonteCarloPlan:
    p = cfg.params
    spec = _spec(cfg)
    mode = p["mode"]
    if p["drift_limit"] not in ("last_passage", "linear"):
        raise ValueError("drift_limit must be 'last_passage' or 'linear'")
    lim = LimitSpec("subordinated", domain_limit(spec.innovation), spec.beta,
                    scale_factor=spec.coefficients.total(), grid_step=cfg.grid_step)
    lim.step(cfg.horizon)
    pre = FinancePrelimit(spec, mode, float(p["r"]), cfg.horizon, int(p["J_lag"]),
                          float(p["mesh_exponent"]), float(p["delta_exponent"]), int(p["bound_grid"]))
    return MonteCarloPlan(
        scenario="finance",
        ladder=cfg.n_ladder,
        replications=cfg.replications,
        limit_replications=cfg.limit_replications,
        statistics=("gain_T", "price_T"),
        prelimit=pre,
        limit=FinanceLimit(lim, mode, float(p["r"]), cfg.horizon, p["drift_limit"]),
        thresholds=dict(cfg.thresholds),
        checks=("drift_bound_violations",),
        config=cfg.to_dict(),
        chunk=cfg.chunk,
    )


def replay_check(cfg: ScenarioConfig, seed: int, trades_per_path: int = 5) -> CheckResult:
    """Strategy values are reproduced from truncated innovations and ignore later ones.

    For each sampled trade time the innovation stream is cut right after the
    last innovation feeding the price the strategy looks at (replay), and
    separately every later innovation is replaced by fresh draws (perturbation).
    Both must reproduce the strategy value bit for bit.
    """
    p = cfg.params
    spec = _spec(cfg)
    n = cfg.n_ladder[-1]
    spec = spec.with_n(n)
    T = cfg.horizon
    lag = int(p["J_lag"])
    K = spec.coefficients.truncation_index()
    stream = PRELIMIT_STREAM_BASE + len(cfg.n_ladder) - 1
    mismatches = 0
    checked = 0
    for rep in range(int(p["replay_replications"])):
        sd = SeedSpec(seed, stream, rep)
        waits = draw_waiting_times(spec.waiting, n * T, sd)
        theta = draw_innovations(spec.innovation, K + waits.size - 1, sd)
        times, sizes = assemble_ctrw(theta, waits, spec, T)
        trades = trade_grid(n, T, float(p["mesh_exponent"]))
        h, idx = lagged_strategy(times, np.cumsum(sizes), trades, lag)
        usable = np.nonzero(idx >= 1)[0]
        if usable.size == 0:
            continue
        picks = usable[np.linspace(0, usable.size - 1, min(trades_per_path, usable.size)).astype(int)]
        fresh = draw_innovations(spec.innovation, theta.size, sd.stream("perturb"))
        for i in picks:
            j = int(idx[i])
            short = draw_innovations(spec.innovation, K + j, sd)
            perturbed = np.concatenate([theta[:K + j], fresh[K + j:]])
            for variant in (short, perturbed):
                _, s2 = assemble_ctrw(variant, waits, spec, T)
                if s2.size < j or np.tanh(np.cumsum(s2)[j - 1]) != h[i]:
                    mismatches += 1
                checked += 1
    return CheckResult("lagged_strategy_seed_replay", mismatches == 0,
                       {"checked": checked, "mismatches": mismatches, "n": n})


def run_finance(cfg: ScenarioConfig, seed: int, jobs: int = 1) -> ConvergenceReport:
    plan = build_plan(cfg)
    report = run_monte_carlo(plan, seed, jobs)
    if cfg.params["mode"] == "c":
        report.checks = [c for c in report.checks if c.name != "drift_bound_violations"]
        report.checks.append(replay_check(cfg, seed))
    report.notes.append("limit side: forward sums on a grid (modes a, b) or exact skeleton "
                        "integrals (mode c); tightness premises hold by construction of the "
                        "built-in strategies")
    return report
