"""Integrals of deterministic integrands against CTRWs.

For ``f_n -> f`` the terminal laws of ``int_0^t f_n(s-) dX^n_s`` are compared
with independently simulated ``int_0^t f(s-) dX_s`` at ``t = T/2`` and ``T``.

Modes
-----
``uncoupled``
    i.i.d. innovations and independent waiting times; limit ``Z o D^{-1}``.
``coupled``
    ``zeta = J^(1/alpha_parent) Y`` with ``Y`` drawn from the parent law;
    limit ``((Z^-) o D^{-1})^+``.
``correlated``
    moving-average innovations with coefficients satisfying the tail-summability condition; limit
    ``(sum c_j) Z o D^{-1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..cadlag import StepPath
from ..ctrw import (
    CanonicalCoupling,
    Coefficients,
    CtrwSpec,
    HeavyTail,
    LimitSpec,
    UnitSpacing,
    assemble_ctrw,
    coupled_jumps,
    ctrw_jumps,
    limit_skeleton,
)
from ..harness import CheckResult, ConvergenceReport, MonteCarloPlan, run_monte_carlo
from ..randlaw import ExactStable, InnovationLaw, StableLaw, domain_limit
from ..skorokhod import d_j1, d_m1
from .common import Expression, ScenarioConfig, parse_coefficients, parse_innovation, require_centering

__all__ = ["DEFAULTS", "Integrand", "LangevinPrelimit", "LangevinLimit", "spike_paths",
           "build_plan", "run_langevin"]

DEFAULTS = {
    "horizon": 1.0,
    "n_ladder": [100, 1000, 10000],
    "replications": 10000,
    "thresholds": {"integral_half": 0.03, "integral_T": 0.03},
    "mode": "uncoupled",
    "alpha": 2.0,
    "beta": 0.9,
    "innovation": {"family": "stable", "alpha": 2.0, "scale": math.sqrt(0.5)},
    "waiting_family": "stable",
    "coefficients": [1.0],
    "parent": {"alpha": 2.0, "scale": math.sqrt(0.5)},
    "integrand": "cos",
    "gamma": 0.25,
    "spike_check": True,
}


@dataclass(frozen=True)
class Integrand:
    """Built-in integrand families ``(f_n, f)``.

    ``cos``: ``f_n(s) = cos(s + 1/n)``.  ``unit``: ``f_n = f = 1``.
    ``oscillating``: ``f_n(s) = cos(s) + n^(-beta/alpha) sin(n^gamma s)``, whose
    derivative is bounded by ``1 + n^gamma``.  Anything else is parsed as an
    expression in ``s`` used for both ``f_n`` and ``f``.
    """

    kind: str
    alpha: float = 2.0
    beta: float = 1.0
    gamma: float = 0.25

    def __post_init__(self):
        if self.kind == "oscillating" and not (0.0 < self.gamma < self.beta / self.alpha):
            raise ValueError("gamma must lie in (0, beta/alpha)")
        if self.kind not in ("cos", "unit", "oscillating"):
            Expression(self.kind, ("s",))

    def prelimit(self, n: float, s: np.ndarray) -> np.ndarray:
        if self.kind == "cos":
            return np.cos(s + 1.0 / n)
        if self.kind == "unit":
            return np.ones_like(s)
        if self.kind == "oscillating":
            return np.cos(s) + n ** (-self.beta / self.alpha) * np.sin(n ** self.gamma * s)
        return Expression(self.kind, ("s",))(s)

    def limit(self, s: np.ndarray) -> np.ndarray:
        if self.kind in ("cos", "oscillating"):
            return np.cos(s)
        if self.kind == "unit":
            return np.ones_like(s)
        return Expression(self.kind, ("s",))(s)


def _integrals(weights, sizes, times, horizon):
    w = weights * sizes
    half = times <= 0.5 * horizon
    return {"integral_half": float(np.sum(w[half])), "integral_T": float(np.sum(w))}


@dataclass(frozen=True)
class LangevinPrelimit:
    integrand: Integrand
    horizon: float
    spec: Optional[CtrwSpec] = None
    coupling: Optional[CanonicalCoupling] = None

    def jumps(self, n, seed):
        if self.coupling is not None:
            c = self.coupling
            return coupled_jumps(c, c.alpha, c.waiting.beta, n, self.horizon, seed)
        return ctrw_jumps(self.spec.with_n(n), self.horizon, seed)

    def __call__(self, n, seed):
        times, sizes = self.jumps(n, seed)
        return _integrals(self.integrand.prelimit(n, times), sizes, times, self.horizon)


@dataclass(frozen=True)
class LangevinLimit:
    integrand: Integrand
    horizon: float
    limit: LimitSpec

    def __call__(self, seed):
        times, sizes = limit_skeleton(self.limit, self.horizon, seed)
        return _integrals(self.integrand.limit(times), sizes, times, self.horizon)


def spike_paths(n: int, alpha: float, horizon: float = 1.0, jump: float = 1.0):
    """Two-lag moving average driven by a single innovation, and its collapsed companion.

    With ``c = (1, 1)`` and unit spacing, one innovation of size
    ``jump / 2 * n^(1/alpha)`` produces two consecutive jumps of ``jump / 2``
    at ``k/n`` and ``(k+1)/n``; the companion makes one jump of ``jump`` at ``k/n``.
    """
    law = InnovationLaw(ExactStable(StableLaw(alpha, 0.0, 1.0, 0.0)))
    spec = CtrwSpec(law, UnitSpacing(), alpha, 1.0, n,
                    Coefficients.finite([1.0, 1.0]))
    k0 = n // 2
    theta = np.zeros(int(n * horizon) + 2)
    theta[k0] = 0.5 * jump / spec.scale
    waits = np.ones(int(math.floor(n * horizon)) + 1)
    times, sizes = assemble_ctrw(theta, waits, spec, horizon)
    keep = sizes != 0.0
    x = StepPath(times[keep], sizes[keep], horizon=horizon)
    y = StepPath(times[keep][:1], [jump], horizon=horizon)
    return x, y


def spike_check(n_values, alpha: float, horizon: float = 1.0) -> CheckResult:
    """J1 stays at half the jump while M1 shrinks like ``1/n``."""
    detail = {}
    ok = True
    for n in n_values:
        x, y = spike_paths(int(n), alpha, horizon)
        j1 = d_j1(x, y, horizon, witness=False)
        m1 = d_m1(x, y, horizon)
        good = j1.value >= 0.5 - j1.tolerance and m1.value <= 1.0 / n + m1.tolerance
        ok = ok and good
        detail[str(n)] = {"j1": j1.value, "m1": m1.value, "m1_resolution": m1.tolerance}
    return CheckResult("spike_j1_fails_m1_converges", ok, detail)


def build_plan(cfg: ScenarioConfig) -> MonteCarloPlan:
    p = cfg.params
    mode = p["mode"]
    T = cfg.horizon
    beta = float(p["beta"])
    if mode == "coupled":
        parent = StableLaw(float(p["parent"]["alpha"]), 0.0, float(p["parent"]["scale"]), 0.0)
        coupling = CanonicalCoupling(parent, HeavyTail(beta, p["waiting_family"]))
        alpha = coupling.alpha
        integrand = Integrand(p["integrand"], alpha, beta, float(p["gamma"]))
        pre = LangevinPrelimit(integrand, T, coupling=coupling)
        lim = LimitSpec("coupled", parent, beta, grid_step=cfg.grid_step)
    elif mode in ("uncoupled", "correlated"):
        alpha = float(p["alpha"])
        law = parse_innovation(p["innovation"])
        if law.tail_index != alpha and not (alpha == 2.0 and law.tail_index > 2.0):
            raise ValueError("innovation tail index does not match alpha")
        require_centering(law, alpha)
        coeffs = parse_coefficients(p["coefficients"])
        if mode == "uncoupled" and not coeffs.is_trivial():
            raise ValueError("uncoupled mode uses i.i.d. innovations; use mode='correlated'")
        waiting = UnitSpacing() if beta == 1.0 else HeavyTail(beta, p["waiting_family"])
        spec = CtrwSpec(law, waiting, alpha, beta, cfg.n_ladder[0], coeffs,
                        require_tc=(mode == "correlated"))
        integrand = Integrand(p["integrand"], alpha, beta, float(p["gamma"]))
        pre = LangevinPrelimit(integrand, T, spec=spec)
        lim = LimitSpec("subordinated", domain_limit(law), beta, scale_factor=coeffs.total(),
                        grid_step=cfg.grid_step)
    else:
        raise ValueError(f"unknown langevin mode {mode!r}")
    lim.step(T)
    return MonteCarloPlan(
        scenario="langevin",
        ladder=cfg.n_ladder,
        replications=cfg.replications,
        limit_replications=cfg.limit_replications,
        statistics=("integral_half", "integral_T"),
        prelimit=pre,
        limit=LangevinLimit(integrand, T, lim),
        thresholds=dict(cfg.thresholds),
        config=cfg.to_dict(),
        chunk=cfg.chunk,
    )


def run_langevin(cfg: ScenarioConfig, seed: int, jobs: int = 1) -> ConvergenceReport:
    plan = build_plan(cfg)
    report = run_monte_carlo(plan, seed, jobs)
    if cfg.params.get("spike_check", True):
        alpha = float(cfg.params["alpha"]) if cfg.params["mode"] != "coupled" else 2.0
        report.checks.append(spike_check(cfg.n_ladder, alpha, cfg.horizon))
    report.notes.append("limit side: exact skeleton of the time-changed limit on a parameter grid")
    return report
