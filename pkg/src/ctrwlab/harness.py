"""Monte Carlo engine, empirical statistics and report assembly.

Replications are keyed by ``SeedSpec(master, stream, replication)`` and their
results are stored by replication index, so the reduced statistics do not
depend on how work is split across processes.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .randlaw import SeedSpec

__all__ = [
    "EmpiricalSample",
    "ks_two_sample",
    "ks_band",
    "hill_estimator",
    "hill_standard_error",
    "ReportEntry",
    "CheckResult",
    "ConvergenceReport",
    "MonteCarloPlan",
    "ReplicationError",
    "run_replications",
    "run_monte_carlo",
]

KS_C95 = 1.358


@dataclass(frozen=True)
class EmpiricalSample:
    """Sorted finite sample."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValueError("sample contains non-finite values")
        object.__setattr__(self, "values", np.sort(v))

    @property
    def size(self) -> int:
        return self.values.size


def _as_sorted(x) -> np.ndarray:
    if isinstance(x, EmpiricalSample):
        return x.values
    return EmpiricalSample(x).values


def ks_two_sample(a, b) -> float:
    """``sup_x |F_a(x) - F_b(x)|`` over the merged support."""
    a, b = _as_sorted(a), _as_sorted(b)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_band(m: int, n: int) -> float:
    """Asymptotic 95% critical value of the two-sample KS statistic."""
    if m == 0 or n == 0:
        return math.inf
    return KS_C95 * math.sqrt((m + n) / (m * n))


def hill_estimator(sample, k: int) -> float:
    """Hill estimate of the tail index from the ``k`` largest absolute values."""
    x = np.abs(_as_sorted(sample))
    x = np.sort(x[x > 0.0])
    if not (0 < k < x.size):
        raise ValueError("insufficient positive mass for the requested k")
    top = x[-k:]
    threshold = x[-k - 1]
    mean_log = float(np.mean(np.log(top / threshold)))
    if mean_log <= 0.0:
        raise ValueError("zero log-ratios: sample has no tail spread")
    return 1.0 / mean_log


def hill_standard_error(estimate: float, k: int) -> float:
    """Asymptotic standard error ``estimate / sqrt(k)``."""
    return estimate / math.sqrt(k)


# -- reports -----------------------------------------------------------------


@dataclass
class ReportEntry:
    n: int
    replications: int
    statistic: str
    value: float
    band: float
    threshold: Optional[float] = None
    passed: Optional[bool] = None


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return _jsonable(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


@dataclass
class ConvergenceReport:
    """Outcome of one scenario run; a pure function of (config, seed)."""

    scenario: str
    config: dict
    seed: int
    entries: List[ReportEntry] = field(default_factory=list)
    checks: List[CheckResult] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    wall_clock: float = 0.0
    samples: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> Optional[bool]:
        """All pass flags true; ``None`` when the report carries no flags."""
        flags = [e.passed for e in self.entries if e.passed is not None]
        flags += [c.passed for c in self.checks]
        if not flags:
            return None
        return all(flags)

    def to_dict(self) -> dict:
        return _jsonable({
            "scenario": self.scenario,
            "seed": self.seed,
            "config": self.config,
            "entries": [asdict(e) for e in self.entries],
            "checks": [asdict(c) for c in self.checks],
            "notes": list(self.notes),
            "passed": self.passed,
        })

    def to_json(self) -> str:
        # wall-clock time is kept out so the file is byte-identical across runs
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def summary_text(self) -> str:
        lines = [f"scenario: {self.scenario}   seed: {self.seed}   "
                 f"wall-clock: {self.wall_clock:.2f}s"]
        lines.append(f"{'n':>8} {'reps':>7} {'statistic':<22} {'KS':>8} {'band':>8} "
                     f"{'threshold':>9} {'pass':>5}")
        for e in self.entries:
            thr = "-" if e.threshold is None else f"{e.threshold:.4f}"
            ok = "-" if e.passed is None else ("yes" if e.passed else "NO")
            lines.append(f"{e.n:>8} {e.replications:>7} {e.statistic:<22} {e.value:>8.4f} "
                         f"{e.band:>8.4f} {thr:>9} {ok:>5}")
        for c in self.checks:
            lines.append(f"check {c.name:<40} {'pass' if c.passed else 'FAIL'}  "
                         f"{json.dumps(_jsonable(c.detail), sort_keys=True)}")
        for note in self.notes:
            lines.append(f"note: {note}")
        overall = self.passed
        lines.append("overall: " + ("no pass flags" if overall is None
                                    else ("PASS" if overall else "FAIL")))
        return "\n".join(lines) + "\n"

    def write(self, out_dir, write_samples: bool = True) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json())
        (out / "summary.txt").write_text(self.summary_text())
        if write_samples and self.samples:
            with open(out / "samples.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["source", "replication", "statistic", "value"])
                for source in sorted(self.samples):
                    table = self.samples[source]
                    for name in sorted(table):
                        for r, v in enumerate(table[name]):
                            w.writerow([source, r, name, repr(float(v))])
        return out


# -- Monte Carlo -------------------------------------------------------------


class ReplicationError(RuntimeError):
    """A replication failed; carries its id."""

    def __init__(self, replication_id: int, label: str, cause: BaseException):
        super().__init__(f"replication {replication_id} ({label}) failed: {cause!r}")
        self.replication_id = replication_id


@dataclass
class MonteCarloPlan:
    """What to simulate.

    ``prelimit(n, seed)`` and ``limit(seed)`` return dicts of floats.  Keys
    listed in ``statistics`` are compared by two-sample KS; keys listed in
    ``checks`` are per-replication violation counts that must all be zero.
    Both callables must be picklable for ``jobs > 1``.
    """

    scenario: str
    ladder: Sequence[int]
    replications: int
    limit_replications: int
    statistics: Sequence[str]
    prelimit: Callable
    limit: Callable
    thresholds: Dict[str, float] = field(default_factory=dict)
    checks: Sequence[str] = ()
    config: dict = field(default_factory=dict)
    chunk: int = 500


def _run_chunk(func, args_prefix, master, stream, start, stop, keys):
    out = np.empty((stop - start, len(keys)))
    for r in range(start, stop):
        seed = SeedSpec(master, stream, r)
        try:
            res = func(*args_prefix, seed)
        except Exception as exc:  # re-raised with the replication id attached
            raise ReplicationError(r, f"stream {stream}", exc) from exc
        out[r - start] = [res[k] for k in keys]
    return out


def run_replications(func, args_prefix, master: int, stream: int, replications: int,
                     keys: Sequence[str], jobs: int = 1, chunk: int = 500,
                     executor=None) -> np.ndarray:
    """Results of ``func(*args_prefix, SeedSpec(master, stream, r))`` in replication order."""
    keys = list(keys)
    if replications == 0:
        return np.empty((0, len(keys)))
    bounds = [(s, min(s + chunk, replications)) for s in range(0, replications, chunk)]
    if jobs <= 1 or executor is None:
        parts = [_run_chunk(func, args_prefix, master, stream, a, b, keys) for a, b in bounds]
    else:
        futures = [executor.submit(_run_chunk, func, args_prefix, master, stream, a, b, keys)
                   for a, b in bounds]
        parts = [f.result() for f in futures]
    return np.concatenate(parts)


def ladder_monotone(values: Sequence[float], bands: Sequence[float]) -> bool:
    """KS non-increasing along the ladder up to twice the fluctuation band."""
    return all(values[i + 1] <= values[i] + 2.0 * bands[i] for i in range(len(values) - 1))


PRELIMIT_STREAM_BASE = 1000
LIMIT_STREAM = 999


def run_monte_carlo(plan: MonteCarloPlan, seed: int, jobs: int = 1) -> ConvergenceReport:
    """Run the plan and reduce to a :class:`ConvergenceReport`."""
    t0 = time.perf_counter()
    report = ConvergenceReport(plan.scenario, dict(plan.config), seed)
    if plan.replications == 0:
        report.wall_clock = time.perf_counter() - t0
        return report
    keys = list(plan.statistics) + list(plan.checks)
    executor = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        limit = run_replications(plan.limit, (), seed, LIMIT_STREAM, plan.limit_replications,
                                 plan.statistics, jobs, plan.chunk, executor)
        pre = {}
        for i, n in enumerate(plan.ladder):
            pre[n] = run_replications(plan.prelimit, (n,), seed, PRELIMIT_STREAM_BASE + i,
                                      plan.replications, keys, jobs, plan.chunk, executor)
    finally:
        if executor is not None:
            executor.shutdown()
    n_max = max(plan.ladder)
    report.samples["limit"] = {s: limit[:, k] for k, s in enumerate(plan.statistics)}
    for n in plan.ladder:
        report.samples[f"n={n}"] = {s: pre[n][:, k] for k, s in enumerate(keys)}
    for k, stat in enumerate(plan.statistics):
        values, bands = [], []
        for n in plan.ladder:
            value = ks_two_sample(pre[n][:, k], limit[:, k])
            band = ks_band(plan.replications, plan.limit_replications)
            thr = plan.thresholds.get(stat) if n == n_max else None
            report.entries.append(ReportEntry(
                n=int(n), replications=plan.replications, statistic=stat, value=value,
                band=band, threshold=thr, passed=None if thr is None else bool(value < thr)))
            values.append(value)
            bands.append(band)
        if len(plan.ladder) > 1:
            report.checks.append(CheckResult(
                f"ladder_monotone[{stat}]", ladder_monotone(values, bands),
                {"ks": values, "band": bands[0]}))
    for j, name in enumerate(plan.checks):
        col = len(plan.statistics) + j
        total = {int(n): float(pre[n][:, col].sum()) for n in plan.ladder}
        report.checks.append(CheckResult(name, all(v == 0 for v in total.values()),
                                         {"violations": total}))
    report.notes.append("thresholds are engineering calibrations, not asymptotic rates")
    report.wall_clock = time.perf_counter() - t0
    return report
