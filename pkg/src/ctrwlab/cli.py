"""``ctrwlab`` command line: simulate, metric, scenario and selftest.

Exit status is 0 exactly when every pass flag in the produced report is true
(``simulate`` and ``metric`` carry no flags and exit 0 on success); input
errors exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Mapping, Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .cadlag import read_csv, write_csv
from .ctrw import (
    CanonicalCoupling,
    CtrwSpec,
    LimitSpec,
    build_coupled_ctrw,
    build_ctrw,
    build_price_ctrw,
    simulate_limit,
)
from .harness import ReplicationError
from .randlaw import SeedSpec, StableLaw, domain_limit
from .scenarios import SCENARIOS, run_scenario
from .scenarios.common import parse_coefficients, parse_innovation, parse_waiting
from .skorokhod import d_j1, d_m1, d_uniform

__all__ = ["main", "process_from_mapping"]

PROCESS_KEYS = {"process", "horizon", "n", "alpha", "beta", "innovation", "waiting_family",
                "coefficients", "r", "parent", "limit", "replication"}


def _load_toml(path: Optional[str]) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _stable(mapping: Mapping) -> StableLaw:
    return StableLaw(float(mapping["alpha"]), float(mapping.get("skew", 0.0)),
                     float(mapping.get("scale", 1.0)), float(mapping.get("shift", 0.0)))


def process_from_mapping(cfg: Mapping, seed: int):
    """Build the path described by a ``simulate`` configuration mapping.

    ``process`` is one of ``ctrw``, ``price``, ``coupled`` or ``limit``.
    """
    unknown = set(cfg) - PROCESS_KEYS
    if unknown:
        raise ValueError(f"unknown keys: {', '.join(sorted(unknown))}")
    kind = cfg.get("process", "ctrw")
    horizon = float(cfg.get("horizon", 1.0))
    beta = float(cfg.get("beta", 1.0))
    sd = SeedSpec(seed, 0, int(cfg.get("replication", 0)))
    if kind == "coupled":
        parent = _stable(cfg.get("parent", {"alpha": 2.0}))
        coupling = CanonicalCoupling(parent, parse_waiting(beta, cfg.get("waiting_family", "pareto")))
        return build_coupled_ctrw(coupling, coupling.alpha, beta, float(cfg.get("n", 1000)),
                                  horizon, sd)
    law = parse_innovation(cfg.get("innovation", {"family": "stable", "alpha": 2.0}))
    coeffs = parse_coefficients(cfg.get("coefficients", [1.0]))
    alpha = float(cfg.get("alpha", law.tail_index if law.tail_index <= 2.0 else 2.0))
    if kind == "limit":
        lim = dict(cfg.get("limit", {}))
        z = _stable(lim["z"]) if "z" in lim else domain_limit(law)
        spec = LimitSpec(lim.get("kind", "subordinated"), z, lim.get("beta", beta),
                         float(lim.get("scale_factor", coeffs.total())),
                         float(lim.get("drift", 0.0)), lim.get("grid_step"))
        return simulate_limit(spec, horizon, sd, lim.get("output", "grid"))
    spec = CtrwSpec(law, parse_waiting(beta, cfg.get("waiting_family", "pareto")), alpha, beta,
                    float(cfg.get("n", 1000)), coeffs, require_tc=not coeffs.is_trivial())
    if kind == "ctrw":
        return build_ctrw(spec, horizon, sd)
    if kind == "price":
        log_price, _ = build_price_ctrw(spec, float(cfg.get("r", 0.0)), horizon, sd)
        return log_price
    raise ValueError(f"unknown process {kind!r}")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    path = process_from_mapping(_load_toml(args.config), args.seed)
    target = _out_dir(args) / "path.csv"
    write_csv(path, target)
    print(target)
    return 0


def cmd_metric(args) -> int:
    x, y = read_csv(args.x), read_csv(args.y)
    horizon = args.horizon if args.horizon is not None else min(x.horizon, y.horizon)
    modes = ("uniform", "j1", "m1") if args.mode == "all" else (args.mode,)
    result = {}
    for mode in modes:
        if mode == "uniform":
            r = d_uniform(x, y, horizon)
        elif mode == "j1":
            r = d_j1(x, y, horizon)
        else:
            r = d_m1(x, y, horizon, resolution=args.resolution)
        result[mode] = r.to_dict()
    payload = result[modes[0]] if len(modes) == 1 else result
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        (_out_dir(args) / "metric.json").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_scenario(args) -> int:
    report = run_scenario(args.name, _load_toml(args.config), args.seed, args.jobs)
    if args.out:
        report.write(args.out)
    sys.stdout.write(report.summary_text())
    return 0 if report.passed is not False else 1


def cmd_selftest(args) -> int:
    from .acceptance import run_selftest

    only = None if args.only is None else [int(v) for v in args.only.split(",")]

    def progress(result):
        print(result.line(), flush=True)

    report = run_selftest(args.seed, args.jobs, "quick" if args.quick else "full", only, progress)
    if args.out:
        report.write(args.out)
    print("overall: " + ("PASS" if report.passed else "FAIL"))
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    from .acceptance import DEFAULT_SEED

    parser = argparse.ArgumentParser(prog="ctrwlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=False, jobs=False):
        p.add_argument("--seed", type=_seed, default=DEFAULT_SEED, help="64-bit master seed")
        p.add_argument("--out", required=out_required, help="output directory")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, help="worker process cap")

    p = sub.add_parser("simulate", help="simulate one path to CSV")
    p.add_argument("--config", help="TOML process description")
    common(p, out_required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metric", help="distance between two path CSV files")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--mode", choices=("uniform", "j1", "m1", "all"), default="all")
    p.add_argument("--horizon", type=float)
    p.add_argument("--resolution", type=float, help="M1 resolution")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("scenario", help="run a scenario driver")
    p.add_argument("name", choices=sorted(SCENARIOS))
    p.add_argument("--config", help="TOML overrides")
    common(p, jobs=True)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("selftest", help="run the acceptance criteria")
    p.add_argument("--quick", action="store_true", help="reduced replication counts")
    p.add_argument("--only", help="comma-separated criterion numbers")
    common(p, jobs=True)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ReplicationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
