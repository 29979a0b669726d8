"""Stable laws, heavy-tailed innovations and waiting times, seed derivation.

Stable laws use the 1-parametrization: ``X ~ S_alpha(scale, skew, shift)`` has

    log E exp(iuX) = -scale^alpha |u|^alpha (1 - i skew sign(u) tan(pi alpha / 2)) + i shift u

for ``alpha != 1`` and

    log E exp(iuX) = -scale |u| (1 + i skew (2/pi) sign(u) log|u|) + i shift u

for ``alpha == 1``.  With ``alpha == 2`` the law is Normal(shift, 2 scale^2).

Every sampler draws its uniforms as a ``(size, k)`` block, so the first ``m``
draws of a longer request coincide with a request of size ``m``.  The CTRW
builders rely on this prefix property for seed-replay checks.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import gamma

__all__ = [
    "StableLaw",
    "TemperingSpec",
    "ExactStable",
    "SymmetricParetoTail",
    "CenteredParetoTail",
    "InnovationLaw",
    "SeedSpec",
    "as_generator",
    "stable_from_uniforms",
    "sample_stable",
    "innovation_quantile",
    "sample_innovation",
    "waiting_quantile",
    "sample_waiting_time",
    "temper_jump",
    "stable_tail_constant",
    "subordinator_law",
    "domain_limit",
]

_HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class StableLaw:
    """Parameters of a stable law in the 1-parametrization."""

    alpha: float
    skew: float = 0.0
    scale: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if abs(self.skew) > 1.0:
            raise ValueError(f"skew must lie in [-1, 1], got {self.skew}")
        if not self.scale > 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @property
    def is_gaussian(self) -> bool:
        return self.alpha == 2.0

    @property
    def is_strictly_stable(self) -> bool:
        """True if sums of n copies equal n^(1/alpha) times one copy in law."""
        if self.alpha == 2.0:
            return self.shift == 0.0
        if self.alpha == 1.0:
            return self.skew == 0.0
        return self.shift == 0.0

    def scaled(self, factor: float) -> "StableLaw":
        """Law of ``factor * X`` for a positive factor (strictly stable laws only)."""
        if factor <= 0:
            raise ValueError("factor must be positive")
        if not self.is_strictly_stable:
            raise ValueError("scaling implemented for strictly stable laws only")
        return StableLaw(self.alpha, self.skew, self.scale * factor, self.shift * factor)


@dataclass(frozen=True)
class TemperingSpec:
    rate: float

    def __post_init__(self):
        if not self.rate > 0.0:
            raise ValueError(f"tempering rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class ExactStable:
    law: StableLaw


@dataclass(frozen=True)
class SymmetricParetoTail:
    """Symmetric law with ``P(|X| > x) = (x / cutoff)^-alpha`` for ``x >= cutoff``.

    ``alpha > 2`` gives a finite-variance member of the Gaussian domain of
    attraction.
    """

    alpha: float
    cutoff: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError("alpha must be positive")
        if not self.cutoff > 0.0:
            raise ValueError("cutoff must be positive")


@dataclass(frozen=True)
class CenteredParetoTail:
    """One-sided Pareto ``(x / cutoff)^-alpha`` tail shifted to mean zero.

    The mean only exists for ``alpha > 1``, so smaller indices are rejected.
    """

    alpha: float
    cutoff: float = 1.0

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise ValueError("CenteredParetoTail needs alpha > 1 for a finite mean")
        if not self.cutoff > 0.0:
            raise ValueError("cutoff must be positive")

    @property
    def offset(self) -> float:
        return self.cutoff * self.alpha / (self.alpha - 1.0)


InnovationKind = Union[ExactStable, SymmetricParetoTail, CenteredParetoTail]


@dataclass(frozen=True)
class InnovationLaw:
    kind: InnovationKind
    tempering: Optional[TemperingSpec] = None

    @property
    def tail_index(self) -> float:
        if isinstance(self.kind, ExactStable):
            return self.kind.law.alpha
        return self.kind.alpha

    @property
    def is_symmetric(self) -> bool:
        if isinstance(self.kind, SymmetricParetoTail):
            return True
        if isinstance(self.kind, ExactStable):
            law = self.kind.law
            return law.shift == 0.0 and (law.skew == 0.0 or law.alpha == 2.0)
        return False

    @property
    def is_centered(self) -> bool:
        """Mean zero (and the mean exists)."""
        if isinstance(self.kind, CenteredParetoTail):
            return True
        if isinstance(self.kind, SymmetricParetoTail):
            return self.kind.alpha > 1.0
        law = self.kind.law
        return law.alpha > 1.0 and law.shift == 0.0

    @property
    def _uniforms_per_draw(self) -> int:
        k = 2 if isinstance(self.kind, ExactStable) else 1
        return k + (1 if self.tempering is not None else 0)


@dataclass(frozen=True)
class SeedSpec:
    """Counter-based seed derivation.

    Each ``(stream_id, replication_id, substream)`` triple selects an
    independent Philox stream keyed off ``master_seed``, so results do not
    depend on the order in which replications are executed.
    """

    master_seed: int
    stream_id: int = 0
    replication_id: int = 0

    def __post_init__(self):
        if not (0 <= self.master_seed < 2**64):
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.stream_id < 0 or self.replication_id < 0:
            raise ValueError("stream and replication ids must be non-negative")

    def generator(self, substream: int = 0) -> np.random.Generator:
        seq = np.random.SeedSequence(
            self.master_seed,
            spawn_key=(self.stream_id, self.replication_id, substream),
        )
        return np.random.Generator(np.random.Philox(seq))

    def replication(self, replication_id: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, self.stream_id, replication_id)

    def stream(self, label: Union[int, str]) -> "SeedSpec":
        """Child stream derived from this stream and ``label`` (stable across runs)."""
        key = f"{self.stream_id}:{label}".encode("utf-8")
        return SeedSpec(self.master_seed, zlib.crc32(key), self.replication_id)


def as_generator(seed, substream: int = 0) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedSpec):
        return seed.generator(substream)
    raise TypeError(f"expected SeedSpec or numpy Generator, got {type(seed).__name__}")


def _uniform_block(seed, size, k: int):
    rng = as_generator(seed)
    m = 1 if size is None else int(np.prod(size))
    return rng.random((m, k))


def _shape(values, size):
    if size is None:
        return float(values[0])
    return values.reshape(size)


def stable_from_uniforms(law: StableLaw, u1, u2) -> np.ndarray:
    """Chambers-Mallows-Stuck transform of two independent uniforms on [0, 1)."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    v = math.pi * (u1 - 0.5)
    w = -np.log1p(-u2)
    a, b = law.alpha, law.skew
    if a == 2.0:
        x = 2.0 * np.sqrt(w) * np.sin(v)
        return law.scale * x + law.shift
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if a == 1.0:
            hb = _HALF_PI + b * v
            x = (hb * np.tan(v) - b * np.log(_HALF_PI * w * np.cos(v) / hb)) / _HALF_PI
            return law.scale * x + (b * law.scale * math.log(law.scale)) / _HALF_PI + law.shift
        t = b * math.tan(_HALF_PI * a)
        shift_angle = math.atan(t) / a
        factor = (1.0 + t * t) ** (1.0 / (2.0 * a))
        av = a * (v + shift_angle)
        x = (
            factor
            * np.sin(av)
            / np.cos(v) ** (1.0 / a)
            * (np.cos(v - av) / w) ** ((1.0 - a) / a)
        )
    return law.scale * x + law.shift


def sample_stable(law: StableLaw, seed, size=None):
    """Draw from ``law``; returns a float when ``size`` is None."""
    u = _uniform_block(seed, size, 2)
    return _shape(stable_from_uniforms(law, u[:, 0], u[:, 1]), size)


def innovation_quantile(kind, u):
    """Closed-form quantile function of the Pareto-tail innovation families."""
    u = np.asarray(u, dtype=float)
    if isinstance(kind, SymmetricParetoTail):
        a, c = kind.alpha, kind.cutoff
        with np.errstate(divide="ignore"):
            upper = c * (2.0 * (1.0 - u)) ** (-1.0 / a)
            lower = -c * (2.0 * u) ** (-1.0 / a)
        return np.where(u >= 0.5, upper, lower)
    if isinstance(kind, CenteredParetoTail):
        with np.errstate(divide="ignore"):
            return kind.cutoff * (1.0 - u) ** (-1.0 / kind.alpha) - kind.offset
    raise TypeError(f"no closed-form quantile for {type(kind).__name__}")


def _temper(theta, rate, u):
    e = -np.log1p(-u) / rate
    return np.sign(theta) * np.minimum(np.abs(theta), e)


def _innovations_from_uniforms(law: InnovationLaw, u: np.ndarray) -> np.ndarray:
    if isinstance(law.kind, ExactStable):
        theta = stable_from_uniforms(law.kind.law, u[:, 0], u[:, 1])
        used = 2
    else:
        theta = innovation_quantile(law.kind, u[:, 0])
        used = 1
    if law.tempering is not None:
        theta = _temper(theta, law.tempering.rate, u[:, used])
    return theta


def sample_innovation(law: InnovationLaw, seed, size=None):
    u = _uniform_block(seed, size, law._uniforms_per_draw)
    return _shape(_innovations_from_uniforms(law, u), size)


def waiting_quantile(beta: float, u):
    """Quantile of the Pareto waiting time ``P(J > x) = x^-beta``, ``x >= 1``."""
    _check_beta(beta)
    with np.errstate(divide="ignore"):
        return (1.0 - np.asarray(u, dtype=float)) ** (-1.0 / beta)


def _check_beta(beta):
    if not (0.0 < beta < 1.0):
        raise ValueError(f"beta must lie in (0, 1), got {beta}")


def sample_waiting_time(beta: float, seed, size=None, family: str = "pareto"):
    """Positive waiting times in the normal domain of attraction of a beta-stable law.

    ``family="pareto"`` gives ``P(J > x) = x^-beta`` for ``x >= 1``;
    ``family="stable"`` gives exact one-sided stable draws with the same
    scaling limit (see :func:`subordinator_law`).
    """
    _check_beta(beta)
    if family == "pareto":
        u = _uniform_block(seed, size, 1)
        return _shape(waiting_quantile(beta, u[:, 0]), size)
    if family == "stable":
        u = _uniform_block(seed, size, 2)
        j = stable_from_uniforms(subordinator_law(beta), u[:, 0], u[:, 1])
        # guard against underflow to exactly zero in the far left tail
        j = np.maximum(j, np.finfo(float).tiny)
        return _shape(j, size)
    raise ValueError(f"unknown waiting-time family {family!r}")


def temper_jump(theta, spec: TemperingSpec, seed):
    """``sign(theta) * min(|theta|, E)`` with ``E ~ Exponential(spec.rate)`` independent."""
    theta_arr = np.asarray(theta, dtype=float)
    u = _uniform_block(seed, theta_arr.shape if theta_arr.ndim else None, 1)[:, 0]
    out = _temper(theta_arr.reshape(-1), spec.rate, u)
    return float(out[0]) if theta_arr.ndim == 0 else out.reshape(theta_arr.shape)


def stable_tail_constant(alpha: float) -> float:
    """``C_alpha`` with ``P(X > x) ~ C_alpha (1 + skew) / 2 * scale^alpha * x^-alpha``."""
    if not (0.0 < alpha < 2.0):
        raise ValueError("tail constant defined for 0 < alpha < 2")
    if alpha == 1.0:
        return 2.0 / math.pi
    return (1.0 - alpha) / (gamma(2.0 - alpha) * math.cos(_HALF_PI * alpha))


def subordinator_law(beta: float) -> StableLaw:
    """Law of ``D_1`` for the limit of ``n^(-1/beta) (J_1 + ... + J_n)``.

    For Pareto waiting times with unit cutoff the limit has Laplace transform
    ``exp(-Gamma(1 - beta) s^beta)``.
    """
    _check_beta(beta)
    scale = (gamma(1.0 - beta) * math.cos(_HALF_PI * beta)) ** (1.0 / beta)
    return StableLaw(beta, 1.0, scale, 0.0)


def domain_limit(law: InnovationLaw) -> StableLaw:
    """Strictly stable limit of ``n^(-1/alpha) * (theta_1 + ... + theta_n)``."""
    if law.tempering is not None:
        raise ValueError("tempered innovations have no stable scaling limit")
    kind = law.kind
    if isinstance(kind, ExactStable):
        if not kind.law.is_strictly_stable:
            raise ValueError("exact stable innovations must be strictly stable")
        return kind.law
    a, c = kind.alpha, kind.cutoff
    if a == 2.0:
        raise ValueError("Pareto index 2 is not in a normal domain of attraction")
    if a > 2.0:
        if isinstance(kind, SymmetricParetoTail):
            var = c * c * a / (a - 2.0)
        else:
            var = c * c * a / ((a - 1.0) ** 2 * (a - 2.0))
        return StableLaw(2.0, 0.0, math.sqrt(var / 2.0), 0.0)
    scale = (c**a / stable_tail_constant(a)) ** (1.0 / a)
    if isinstance(kind, SymmetricParetoTail):
        return StableLaw(a, 0.0, scale, 0.0)
    # centered one-sided tail: totally skewed, mean zero (alpha > 1 enforced)
    return StableLaw(a, 1.0, scale, 0.0)
