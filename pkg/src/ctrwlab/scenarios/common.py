"""Configuration parsing and helpers shared by the scenario drivers."""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..ctrw import Coefficients, HeavyTail, UnitSpacing
from ..randlaw import (
    CenteredParetoTail,
    ExactStable,
    InnovationLaw,
    StableLaw,
    SymmetricParetoTail,
    TemperingSpec,
)

__all__ = [
    "ScenarioConfig",
    "Expression",
    "parse_innovation",
    "parse_coefficients",
    "parse_waiting",
    "require_centering",
]

COMMON_KEYS = ("horizon", "n_ladder", "replications", "limit_replications", "thresholds",
               "grid_step", "chunk")


@dataclass
class ScenarioConfig:
    """Scale knobs shared by all scenarios plus scenario-specific ``params``.

    Top-level keys of a config mapping other than :data:`COMMON_KEYS` are
    scenario parameters; unknown parameter names are rejected.
    """

    scenario: str
    horizon: float = 1.0
    n_ladder: Tuple[int, ...] = (100, 1000, 10000)
    replications: int = 10000
    limit_replications: Optional[int] = None
    thresholds: Dict[str, float] = field(default_factory=dict)
    grid_step: Optional[float] = None
    chunk: int = 500
    params: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.n_ladder = tuple(int(n) for n in self.n_ladder)
        if not self.n_ladder or any(b <= a for a, b in zip(self.n_ladder, self.n_ladder[1:])):
            raise ValueError("n_ladder must be a non-empty increasing sequence")
        if self.n_ladder[0] < 1:
            raise ValueError("n_ladder entries must be positive")
        if self.replications < 0:
            raise ValueError("replications must be non-negative")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.limit_replications is None:
            self.limit_replications = self.replications

    @classmethod
    def from_mapping(cls, scenario: str, mapping: Mapping, defaults: Mapping) -> "ScenarioConfig":
        """Merge ``mapping`` over scenario ``defaults`` (common keys and params alike)."""
        merged = dict(defaults)
        merged.update(mapping or {})
        merged.pop("scenario", None)
        common = {k: merged.pop(k) for k in COMMON_KEYS if k in merged}
        params = dict(merged.pop("params", {}) or {})
        params.update(merged)
        known = set(defaults) - set(COMMON_KEYS)
        unknown = sorted(set(params) - known)
        if unknown:
            raise ValueError(f"unknown {scenario} parameters: {', '.join(unknown)}")
        if "thresholds" in common:
            base = dict(defaults.get("thresholds", {}))
            base.update(common["thresholds"])
            common["thresholds"] = base
        return cls(scenario=scenario, params=params, **common)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in COMMON_KEYS}
        out["n_ladder"] = list(self.n_ladder)
        out["thresholds"] = dict(sorted(self.thresholds.items()))
        out.update(self.params)
        out["scenario"] = self.scenario
        return out

    def step(self) -> float:
        return 1e-3 * self.horizon if self.grid_step is None else float(self.grid_step)


# -- laws from plain mappings -------------------------------------------------


def parse_innovation(spec: Mapping) -> InnovationLaw:
    """Innovation law from ``{"family": ..., ...}``.

    Families: ``stable`` (alpha, scale, skew, shift), ``symmetric_pareto`` and
    ``centered_pareto`` (alpha, cutoff).  An optional ``tempering`` rate
    applies exponential tempering.
    """
    spec = dict(spec)
    family = spec.pop("family")
    rate = spec.pop("tempering", None)
    if family == "stable":
        kind = ExactStable(StableLaw(float(spec.pop("alpha")), float(spec.pop("skew", 0.0)),
                                     float(spec.pop("scale", 1.0)), float(spec.pop("shift", 0.0))))
    elif family == "symmetric_pareto":
        kind = SymmetricParetoTail(float(spec.pop("alpha")), float(spec.pop("cutoff", 1.0)))
    elif family == "centered_pareto":
        kind = CenteredParetoTail(float(spec.pop("alpha")), float(spec.pop("cutoff", 1.0)))
    else:
        raise ValueError(f"unknown innovation family {family!r}")
    if spec:
        raise ValueError(f"unused innovation keys: {', '.join(sorted(spec))}")
    return InnovationLaw(kind, None if rate is None else TemperingSpec(float(rate)))


def parse_coefficients(spec) -> Coefficients:
    """Coefficients from a list (finite) or ``{"kind": "geometric"|"power", ...}``."""
    if isinstance(spec, (list, tuple)):
        return Coefficients.finite(spec)
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind == "finite":
        return Coefficients.finite(spec["values"])
    if kind == "geometric":
        return Coefficients.geometric(float(spec["rate"]), float(spec.get("scale", 1.0)))
    if kind == "power":
        return Coefficients.power(float(spec["exponent"]), float(spec.get("scale", 1.0)))
    raise ValueError(f"unknown coefficient kind {kind!r}")


def parse_waiting(beta: float, family: str):
    if beta == 1.0:
        return UnitSpacing()
    return HeavyTail(float(beta), family)


def require_centering(law: InnovationLaw, alpha: float, what: str = "innovations") -> None:
    """Mean zero for ``1 < alpha <= 2``, symmetry for ``alpha == 1``."""
    if 1.0 < alpha <= 2.0 and not law.is_centered:
        raise ValueError(f"{what} must be centered for 1 < alpha <= 2")
    if alpha == 1.0 and not law.is_symmetric:
        raise ValueError(f"{what} must be symmetric for alpha = 1")


# -- user expressions ---------------------------------------------------------

_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "tanh": np.tanh, "sinh": np.sinh,
    "cosh": np.cosh, "exp": np.exp, "arctan": np.arctan, "abs": np.abs, "sqrt": np.sqrt,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


class Expression:
    """Vectorized function from a restricted arithmetic expression.

    Allowed: numbers, the named variables, ``pi``, ``e``, ``+ - * / **`` and
    the functions in ``_FUNCS``.  Instances pickle by source text.
    """

    def __init__(self, source: str, variables: Sequence[str] = ("x",)):
        self.source = source
        self.variables = tuple(variables)
        try:
            self._tree = ast.parse(source, mode="eval").body
        except SyntaxError as exc:
            raise ValueError(f"cannot parse expression {source!r}") from exc
        self._validate(self._tree)

    def __reduce__(self):
        return (Expression, (self.source, self.variables))

    def __repr__(self):
        return f"Expression({self.source!r})"

    def _validate(self, node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return
        if isinstance(node, ast.Name):
            if node.id not in self.variables and node.id not in _CONSTS:
                raise ValueError(f"unknown name {node.id!r} in expression")
            return
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            self._validate(node.left)
            self._validate(node.right)
            return
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            self._validate(node.operand)
            return
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            self._validate(node.args[0])
            return
        raise ValueError(f"unsupported syntax in expression {self.source!r}")

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNOPS[type(node.op)](self._eval(node.operand, env))
        return _FUNCS[node.func.id](self._eval(node.args[0], env))

    def __call__(self, *args):
        if len(args) != len(self.variables):
            raise TypeError(f"expected {len(self.variables)} arguments")
        env = {k: np.asarray(v, dtype=float) for k, v in zip(self.variables, args)}
        shape = np.broadcast(*env.values()).shape
        return np.broadcast_to(self._eval(self._tree, env), shape).astype(float)
