"""Insurance reserves invested in a CTRW-priced asset.

``U^n = exp(R^n) (U0 + int exp(-R^n_-) dP^n)`` for independent CTRWs ``R^n``
(log-returns) and ``P^n`` (net premium inflow).  Every replication checks the
jump identity ``dU = U_- dS / S_- + dP`` with ``S = exp(R)``; terminal laws
of ``(S, P, U)`` are compared with the same functional of independently
simulated subordinated limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..cadlag import exp_transform
from ..ctrw import CtrwSpec, HeavyTail, LimitSpec, build_ctrw, limit_skeleton
from ..harness import CheckResult, ConvergenceReport, MonteCarloPlan, run_monte_carlo
from ..randlaw import SeedSpec, domain_limit
from ..stieltjes import reserve_path, verify_reserve_sde
from .common import ScenarioConfig, parse_coefficients, parse_innovation, require_centering

__all__ = ["DEFAULTS", "reserve_terminal", "InsurancePrelimit", "InsuranceLimit",
           "build_plan", "run_insurance"]

DEFAULTS = {
    "horizon": 1.0,
    "n_ladder": [100, 1000, 10000],
    "replications": 5000,
    "thresholds": {"reserve_T": 0.05},
    "U0": 1.0,
    "alpha_R": 2.0,
    "beta_R": 0.8,
    "innovation_R": {"family": "stable", "alpha": 2.0, "scale": 0.2},
    "coefficients_R": [1.0],
    "alpha_P": 1.5,
    "beta_P": 0.8,
    "innovation_P": {"family": "centered_pareto", "alpha": 1.5, "cutoff": 0.2},
    "coefficients_P": [1.0],
    "waiting_family": "pareto",
    "sde_replications": 1000,
    "sde_tol": 1e-10,
}


def reserve_terminal(u0, r_times, r_sizes, p_times, p_sizes) -> dict:
    """``S_T``, ``P_T`` and ``U_T`` of step paths given by their jumps."""
    r_cum = np.concatenate([[0.0], np.cumsum(r_sizes)])
    # R just before each P jump
    r_before = r_cum[np.searchsorted(r_times, p_times, side="left")]
    integral = float(np.sum(np.exp(-r_before) * p_sizes))
    r_T = float(r_cum[-1])
    return {"price_T": math.exp(r_T), "premium_T": float(np.sum(p_sizes)),
            "reserve_T": math.exp(r_T) * (u0 + integral)}


def _spec(p, key):
    alpha, beta = float(p[f"alpha_{key}"]), float(p[f"beta_{key}"])
    law = parse_innovation(p[f"innovation_{key}"])
    coeffs = parse_coefficients(p[f"coefficients_{key}"])
    if key == "P" or not coeffs.is_trivial():
        require_centering(law, alpha, f"{key} innovations")
    return CtrwSpec(law, HeavyTail(beta, p["waiting_family"]), alpha, beta, 1, coeffs,
                    require_tc=not coeffs.is_trivial())


@dataclass(frozen=True)
class InsurancePrelimit:
    spec_r: CtrwSpec
    spec_p: CtrwSpec
    u0: float
    horizon: float

    def paths(self, n, seed):
        R = build_ctrw(self.spec_r.with_n(n), self.horizon, seed.stream("R"))
        P = build_ctrw(self.spec_p.with_n(n), self.horizon, seed.stream("P"))
        return R, P

    def __call__(self, n, seed):
        R, P = self.paths(n, seed)
        rt, rs = R.jumps()
        pt, ps = P.jumps()
        common = np.intersect1d(rt, pt)
        if common.size:
            raise ValueError(f"common jump time detected at t={common[0]!r}")
        return reserve_terminal(self.u0, rt, rs[:, 0], pt, ps[:, 0])


@dataclass(frozen=True)
class InsuranceLimit:
    limit_r: LimitSpec
    limit_p: LimitSpec
    u0: float
    horizon: float

    def __call__(self, seed):
        rt, rs = limit_skeleton(self.limit_r, self.horizon, seed.stream("R"))
        pt, ps = limit_skeleton(self.limit_p, self.horizon, seed.stream("P"))
        return reserve_terminal(self.u0, rt, rs, pt, ps)


def build_plan(cfg: ScenarioConfig) -> MonteCarloPlan:
    p = cfg.params
    spec_r, spec_p = _spec(p, "R"), _spec(p, "P")
    lim_r = LimitSpec("subordinated", domain_limit(spec_r.innovation), spec_r.beta,
                      scale_factor=spec_r.coefficients.total(), grid_step=cfg.grid_step)
    lim_p = LimitSpec("subordinated", domain_limit(spec_p.innovation), spec_p.beta,
                      scale_factor=spec_p.coefficients.total(), grid_step=cfg.grid_step)
    lim_r.step(cfg.horizon)
    u0 = float(p["U0"])
    return MonteCarloPlan(
        scenario="insurance",
        ladder=cfg.n_ladder,
        replications=cfg.replications,
        limit_replications=cfg.limit_replications,
        statistics=("price_T", "premium_T", "reserve_T"),
        prelimit=InsurancePrelimit(spec_r, spec_p, u0, cfg.horizon),
        limit=InsuranceLimit(lim_r, lim_p, u0, cfg.horizon),
        thresholds=dict(cfg.thresholds),
        config=cfg.to_dict(),
        chunk=cfg.chunk,
    )


def sde_check(cfg: ScenarioConfig, seed: int) -> CheckResult:
    """Run :func:`verify_reserve_sde` on full reserve paths at the largest ``n``."""
    plan = build_plan(cfg)
    pre = plan.prelimit
    n = cfg.n_ladder[-1]
    tol = float(cfg.params["sde_tol"])
    failures, worst, first = 0, 0.0, None
    count = min(int(cfg.params["sde_replications"]), max(cfg.replications, 1))
    for rep in range(count):
        R, P = pre.paths(n, SeedSpec(seed, 7, rep))
        U = reserve_path(pre.u0, R, P, cfg.horizon)
        res = verify_reserve_sde(U, exp_transform(R), P, tol)
        worst = max(worst, res.max_error)
        if not res.ok:
            failures += 1
            first = first if first is not None else {"replication": rep, "time": res.time}
    return CheckResult("reserve_sde_identity", failures == 0,
                       {"replications": count, "failures": failures, "max_relative_error": worst,
                        "tolerance": tol, "first_failure": first})


def run_insurance(cfg: ScenarioConfig, seed: int, jobs: int = 1) -> ConvergenceReport:
    report = run_monte_carlo(build_plan(cfg), seed, jobs)
    if cfg.replications:
        report.checks.append(sde_check(cfg, seed))
    report.notes.append("limit side: exact reserve functional of independent skeleton limits")
    return report

