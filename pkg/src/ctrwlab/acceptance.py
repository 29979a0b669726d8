"""Acceptance suite: twelve numbered criteria run by ``ctrwlab selftest``.

Each criterion returns a :class:`CriterionResult`; :func:`run_selftest`
collects them into a :class:`SelftestReport` whose JSON form is a pure
function of ``(seed, scale)``.  ``scale="quick"`` shrinks replication
counts for smoke runs; thresholds are unchanged, so quick runs may fail.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import stats

from .cadlag import StepPath
from .ctrw import (
    Coefficients,
    CtrwSpec,
    HeavyTail,
    LimitSpec,
    UnitSpacing,
    assemble_ctrw,
    assemble_price_ctrw,
    build_ctrw,
    build_uncorrelated_ctrw,
    ctrw_jumps,
    limit_terminal,
    renewal_count,
)
from .harness import MonteCarloPlan, _jsonable, hill_estimator, hill_standard_error, run_monte_carlo
from .randlaw import (
    ExactStable,
    InnovationLaw,
    SeedSpec,
    StableLaw,
    SymmetricParetoTail,
    domain_limit,
    sample_stable,
)
from .scenarios import run_scenario
from .skorokhod import d_j1, d_m1, d_uniform
from .stieltjes import integration_by_parts_check

__all__ = ["CriterionResult", "SelftestReport", "CRITERIA", "run_selftest", "random_step_path"]

DEFAULT_SEED = 20240611


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"criterion {self.number:2d}: {'PASS' if self.passed else 'FAIL'}  {self.title}"


@dataclass
class SelftestReport:
    seed: int
    scale: str
    results: List[CriterionResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_json(self) -> str:
        payload = {"seed": self.seed, "scale": self.scale, "passed": self.passed,
                   "criteria": [asdict(r) for r in self.results]}
        return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"

    def summary_text(self) -> str:
        lines = [r.line() for r in self.results]
        lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json())
        (out / "summary.txt").write_text(self.summary_text())
        return out


def _reps(full: int, scale: str) -> int:
    return full if scale == "full" else max(full // 20, 100)


# -- picklable replication bodies ----------------------------------------------


@dataclass(frozen=True)
class TerminalCtrw:
    """``X^n`` at the horizon."""

    spec: CtrwSpec
    horizon: float

    def __call__(self, n, seed):
        _, sizes = ctrw_jumps(self.spec.with_n(n), self.horizon, seed)
        return {"X_T": float(np.sum(sizes))}


@dataclass(frozen=True)
class TerminalLimit:
    """Exact draw of the limit at the horizon."""

    limit: LimitSpec
    horizon: float

    def __call__(self, seed):
        return {"X_T": float(limit_terminal(self.limit, self.horizon, seed, 1)[0])}


def _terminal_plan(name, spec, limit, ladder, reps, limit_reps, threshold):
    return MonteCarloPlan(scenario=name, ladder=ladder, replications=reps,
                          limit_replications=limit_reps, statistics=("X_T",),
                          prelimit=TerminalCtrw(spec, 1.0), limit=TerminalLimit(limit, 1.0),
                          thresholds={"X_T": threshold}, chunk=1000)


# -- random paths for the metric and integral criteria ---------------------------


def random_step_path(rng: np.random.Generator, horizon: float = 1.0, max_jumps: int = 8,
                     shared_times: Optional[np.ndarray] = None) -> StepPath:
    k = int(rng.integers(0, max_jumps + 1))
    times = rng.uniform(0.0, horizon, size=k)
    if shared_times is not None and shared_times.size:
        times = np.concatenate([times, rng.choice(shared_times, size=min(3, shared_times.size),
                                                  replace=False)])
    times = np.unique(times[times > 0.0])
    sizes = rng.normal(size=times.size)
    return StepPath(times, sizes, initial_value=0.5 * rng.normal(), horizon=horizon)


# -- criteria ------------------------------------------------------------------------


def criterion_1(seed: int, jobs: int = 1, scale: str = "full") -> CriterionResult:
    """Hill estimates of stable draws and the Gaussian case of the parametrization."""
    size = _reps(10**5, scale)
    k = 1000 if scale == "full" else 100
    detail, ok = {}, True
    for i, a in enumerate((0.7, 1.0, 1.5)):
        x = sample_stable(StableLaw(a, 0.0, 1.0, 0.0), SeedSpec(seed, 1, i), size)
        est = hill_estimator(x, k)
        good = abs(est - a) <= 0.1
        ok &= good
        detail[f"alpha={a}"] = {"hill": est, "stderr": hill_standard_error(est, k), "k": k,
                                "pass": good}
    x = sample_stable(StableLaw(2.0, 0.0, 1.0, 0.0), SeedSpec(seed, 1, 3), size)
    ks = float(stats.kstest(x, stats.norm(scale=math.sqrt(2.0)).cdf).statistic)
    detail["alpha=2"] = {"ks_vs_normal_var2": ks, "pass": ks < 0.01}
    ok &= ks < 0.01
    return CriterionResult(1, "stable sampler calibration", bool(ok), detail)


def criterion_2(seed: int, jobs: int = 1, scale: str = "full") -> CriterionResult:
    """Deterministic staircases bit-exact; uncorrelated reduction bitwise."""
    gauss = InnovationLaw(ExactStable(StableLaw(2.0, 0.0, 1.0, 0.0)))
    checks = {}
    spec = CtrwSpec(gauss, UnitSpacing(), 2.0, 1.0, 4)
    t, s = assemble_ctrw(np.ones(4), np.ones(5), spec, 1.0)
    checks["staircase"] = bool(np.array_equal(t, [0.25, 0.5, 0.75, 1.0])
                               and np.array_equal(s, [0.5] * 4))
    spec0 = CtrwSpec(gauss, UnitSpacing(), 2.0, 1.0, 4, Coefficients.finite([0.0, 0.0]))
    _, s0 = assemble_ctrw(np.arange(1.0, 7.0), np.ones(5), spec0, 1.0)
    checks["zero_coefficients"] = bool(np.all(s0 == 0.0))
    spec_half = CtrwSpec(gauss, UnitSpacing(), 2.0, 1.0, 16, Coefficients.finite([0.5, 0.5]))
    theta = np.zeros(18)
    theta[5] = 1.0
    _, sh = assemble_ctrw(theta, np.ones(17), spec_half, 1.0)
    nz = np.nonzero(sh)[0]
    checks["spike_two_half_jumps"] = bool(np.array_equal(nz, [4, 5])
                                          and np.all(sh[nz] == 0.5 * 16 ** -0.5))
    checks["renewal"] = (renewal_count(np.ones(5), 3.5) == 3
                         and renewal_count([2.0], 1.0) == 0
                         and renewal_count([0.5, 2.0, 0.1], 2.6) == 3)
    spec_p = CtrwSpec(gauss, UnitSpacing(), 2.0, 1.0, 2)
    R, _ = assemble_price_ctrw(np.zeros(3), np.ones(3), spec_p, 0.1, 1.0)
    checks["price_upper_bound_attained"] = bool(R.eval(1.0) == 0.1)
    same = True
    for i, waiting in enumerate((UnitSpacing(), HeavyTail(0.7), HeavyTail(0.7, "stable"))):
        beta = 1.0 if isinstance(waiting, UnitSpacing) else 0.7
        sp = CtrwSpec(InnovationLaw(SymmetricParetoTail(1.5)), waiting, 1.5, beta, 500)
        for rep in range(20):
            sd = SeedSpec(seed, 2, 100 * i + rep)
            a, b = build_ctrw(sp, 1.0, sd), build_uncorrelated_ctrw(sp, 1.0, sd)
            same &= bool(np.array_equal(a.knots, b.knots) and np.array_equal(a.values, b.values))
    checks["uncorrelated_reduction_bitwise"] = same
    return CriterionResult(2, "renewal and CTRW exactness", all(checks.values()), checks)


def criterion_3(seed: int, jobs: int = 1, scale: str = "full") -> CriterionResult:
    """Moving average with unit spacing against ``(sum c) Z_1``."""
    law = InnovationLaw(SymmetricParetoTail(1.5))
    coeffs = Coefficients.finite([1.0, 0.5])
    spec = CtrwSpec(law, UnitSpacing(), 1.5, 1.0, 10**4, coeffs)
    limit = LimitSpec("plain_stable", domain_limit(law), scale_factor=coeffs.total())
    plan = _terminal_plan("moving_average", spec, limit, [10**4], _reps(10**4, scale),
                          _reps(10**5, scale), 0.03)
    rep = run_monte_carlo(plan, seed, jobs)
    e = rep.entries[-1]
    return CriterionResult(3, "moving-average functional limit", bool(e.passed),
                           {"n": e.n, "ks": e.value, "band": e.band, "threshold": e.threshold})


def criterion_4(seed: int, jobs: int = 1, scale: str = "full") -> CriterionResult:
    """Uncoupled CTRW against ``(sum c) Z(D^{-1}(1))``, along the ladder."""
    law = InnovationLaw(SymmetricParetoTail(1.5))
    coeffs = Coefficients.finite([1.0, 0.5])
    spec = CtrwSpec(law, HeavyTail(0.8), 1.5, 0.8, 100, coeffs)
    limit = LimitSpec("subordinated", domain_limit(law), 0.8, scale_factor=coeffs.total())
    plan = _terminal_plan("uncoupled_ctrw", spec, limit, [100, 1000, 10000],
                          _reps(10**4, scale), _reps(10**5, scale), 0.05)
    rep = run_monte_carlo(plan, seed, jobs)
    mono = next(c for c in rep.checks if c.name.startswith("ladder_monotone"))
    last = rep.entries[-1]
    detail = {"ks": {str(e.n): e.value for e in rep.entries}, "band": last.band,
              "threshold": last.threshold, "monotone_within_band": mono.passed}
    return CriterionResult(4, "uncoupled CTRW limit", bool(last.passed and mono.passed), detail)


def half_jump_pair(delta: float, t0: float = 0.5, horizon: float = 1.0):
    """Two jumps of 1/2 at ``t0`` and ``t0 + delta`` versus one unit jump at ``t0``."""
    x = StepPath([t0, t0 + delta], [0.5, 0.5], horizon=horizon)
    y = StepPath([t0], [1.0], horizon=horizon)
    return x, y


def criterion_5(seed: int, jobs: int = 1, scale: str = "full") -> CriterionResult:
    detail, ok = {}, True
    for delta in (0.1, 0.01, 0.001):
        x, y = half_jump_pair(delta)
        res = 1e-4
        m1 = d_m1(x, y, 1.0, resolution=res)
        j1 = d_j1(x, y, 1.0)
        good = m1.value <= delta + 2 * res and j1.value >= 0.25 - j1.tolerance
        ok &= good
        detail[str(delta)] = {"m1": m1.value, "m1_resolution": res, "j1": j1.value, "pass": good}
    return CriterionResult(5, "J1 failure and M1 success on split jumps", bool(ok), detail)


def criterion_6(seed: int, jobs: int = 1, scale: str = "full") -> CriterionResult:
    rng = SeedSpec(seed, 6, 0).generator()
    res = 1e-2
    counts = {"sandwich": 0, "symmetry": 0, "triangle": 0}
    n = _reps(1000, scale)
    for _ in range(n):
        x, y, z = (random_step_path(rng, max_jumps=6) for _ in range(3))
        d = {}
        for name, (a, b) in {"xy": (x, y), "yx": (y, x), "yz": (y, z), "xz": (x, z)}.items():
            d[name] = (d_uniform(a, b, 1.0).value, d_j1(a, b, 1.0, witness=False).value,
                       d_m1(a, b, 1.0, resolution=res).value)
        u, j, m = d["xy"]
        if not (m <= j + res and j <= u):
            counts["sandwich"] += 1
        if abs(d["xy"][0] - d["yx"][0]) > 0 or abs(d["xy"][1] - d["yx"][1]) > 1e-12 \
                or abs(d["xy"][2] - d["yx"][2]) > 2 * res:
            counts["symmetry"] += 1
        tol = (1e-12, 1e-12, 3 * res)
        if any(d["xz"][k] > d["xy"][k] + d["yz"][k] + tol[k] for k in range(3)):
            counts["triangle"] += 1
    return CriterionResult(6, "metric sandwich and axioms", all(v == 0 for v in counts.values()),
                           {"triples": n, "violations": counts, "m1_resolution": res})


def criterion_7(seed: int, jobs: int = 1, scale: str = "full") -> CriterionResult:
    rng = SeedSpec(seed, 7, 0).generator()
    worst, shared = 0.0, 0
    n = _reps(1000, scale)
    for i in range(n):
        x = random_step_path(rng, max_jumps=20)
        adversarial = i % 2 == 1 and x.jump_times().size > 0
        y = random_step_path(rng, max_jumps=20,
                             shared_times=x.jump_times() if adversarial else None)
        shared += int(np.intersect1d(x.jump_times(), y.jump_times()).size > 0)
        worst = max(worst, integration_by_parts_check(x, y, 1.0))
    return CriterionResult(7, "integration by parts oracle", worst <= 1e-12,
                           {"pairs": n, "pairs_with_shared_jumps": shared, "max_residual": worst})


def _scaled(mapping: dict, scale: str) -> dict:
    if scale == "full":
        return mapping
    out = dict(mapping)
    out["replications"] = 500
    out["n_ladder"] = [100, 1000]
    return out


def _terminal_entry(report, stat):
    return [e for e in report.entries if e.statistic == stat][-1]


def criterion_8(seed: int, jobs: int = 1, scale: str = "full") -> CriterionResult:
    detail, ok = {}, True
    for mode in ("uncoupled", "coupled"):
        rep = run_scenario("langevin", _scaled({"mode": mode, "spike_check": False}, scale),
                           seed, jobs)
        e = _terminal_entry(rep, "integral_T")
        ok &= bool(e.passed)
        detail[mode] = {"n": e.n, "ks": e.value, "band": e.band, "threshold": e.threshold}
    return CriterionResult(8, "Langevin integral convergence", bool(ok), detail)


def criterion_9(seed: int, jobs: int = 1, scale: str = "full") -> CriterionResult:
    rep = run_scenario("cointegration", _scaled({}, scale), seed, jobs)
    e = _terminal_entry(rep, "integral_T")
    ident = next(c for c in rep.checks if c.name == "regression_identities")
    return CriterionResult(9, "cointegration identities and limit", bool(e.passed and ident.passed),
                           {"identities": ident.detail, "ks": e.value, "n": e.n,
                            "threshold": e.threshold})


def criterion_10(seed: int, jobs: int = 1, scale: str = "full") -> CriterionResult:
    rep = run_scenario("finance", _scaled({"mode": "a"}, scale), seed, jobs)
    check = next(c for c in rep.checks if c.name == "drift_bound_violations")
    paths = rep.entries[0].replications * len({e.n for e in rep.entries})
    return CriterionResult(10, "risk-free drift bound on every price path", bool(check.passed),
                           {"price_paths": paths, **check.detail})


def criterion_11(seed: int, jobs: int = 1, scale: str = "full") -> CriterionResult:
    rep = run_scenario("insurance", _scaled({}, scale), seed, jobs)
    sde = next(c for c in rep.checks if c.name == "reserve_sde_identity")
    e = _terminal_entry(rep, "reserve_T")
    return CriterionResult(11, "reserve identity and limit", bool(sde.passed and e.passed),
                           {"sde": sde.detail, "ks": e.value, "n": e.n, "threshold": e.threshold})


CRITERIA: Sequence[Callable[..., CriterionResult]] = (
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
    criterion_7, criterion_8, criterion_9, criterion_10, criterion_11,
)


def run_criteria(seed: int, jobs: int = 1, scale: str = "full",
                 only: Optional[Sequence[int]] = None, progress=None) -> SelftestReport:
    """Criteria 1 to 11."""
    report = SelftestReport(seed, scale)
    for number, fn in enumerate(CRITERIA, start=1):
        if only is not None and number not in only:
            continue
        result = fn(seed, jobs, scale)
        report.results.append(result)
        if progress is not None:
            progress(result)
    return report


def determinism_check(first: SelftestReport, jobs: int) -> CriterionResult:
    """Re-run criteria 1 to 11 with another worker count and compare the JSON bytes."""
    other_jobs = 2 if jobs == 1 else 1
    if not first.results:
        first = run_criteria(first.seed, jobs, first.scale)
    only = [r.number for r in first.results]
    again = run_criteria(first.seed, other_jobs, first.scale, only)
    same = again.to_json() == first.to_json()
    return CriterionResult(12, "byte-identical report across re-runs and worker counts", same,
                           {"worker_counts": sorted([jobs, other_jobs]),
                            "criteria_compared": only})


def run_selftest(seed: int = DEFAULT_SEED, jobs: int = 1, scale: str = "full",
                 only: Optional[Sequence[int]] = None, progress=None) -> SelftestReport:
    """All criteria; criterion 12 re-runs the others unless ``only`` excludes it."""
    report = run_criteria(seed, jobs, scale, only, progress)
    if only is None or 12 in only:
        result = determinism_check(report, jobs)
        report.results.append(result)
        if progress is not None:
            progress(result)
    return report

