"""Pre-limit CTRWs, price CTRWs and simulation of their scaling limits.

A CTRW with scale parameter ``n`` jumps at times ``L_k / n`` (``L_k`` the
partial sums of the waiting times) by ``n^(-beta/alpha) * zeta_k`` where
``zeta_i = sum_j c_j theta_{i-j}`` is a moving average of i.i.d. innovations.

Random inputs are drawn from fixed substreams of a :class:`SeedSpec` in
row-major uniform blocks: substream 0 feeds innovations (the first ``K``
rows are the warm-up innovations ``theta_{1-K}, ..., theta_0``) and
substream 1 feeds waiting times.  Because blocks are prefix-stable, the
first ``k`` jumps depend only on the first ``K + k`` innovation rows and the
first ``k`` waiting times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Protocol, Tuple, Union

import numpy as np
from scipy.special import betaincinv
from scipy.special import zeta as hurwitz_zeta

from .cadlag import GridPath, StepPath, exp_transform
from .randlaw import (
    InnovationLaw,
    SeedSpec,
    StableLaw,
    _innovations_from_uniforms,
    as_generator,
    stable_from_uniforms,
    subordinator_law,
    waiting_quantile,
)

__all__ = [
    "Coefficients",
    "UnitSpacing",
    "HeavyTail",
    "CanonicalCoupling",
    "IndependentCoupling",
    "CtrwSpec",
    "LimitSpec",
    "renewal_count",
    "draw_waiting_times",
    "draw_innovations",
    "moving_average",
    "assemble_ctrw",
    "ctrw_jumps",
    "build_ctrw",
    "build_uncorrelated_ctrw",
    "assemble_price_ctrw",
    "build_price_ctrw",
    "risk_free_bound_violations",
    "build_coupled_ctrw",
    "coupled_jumps",
    "limit_skeleton",
    "simulate_limit",
    "limit_terminal",
]

INNOVATION_SUBSTREAM = 0
WAITING_SUBSTREAM = 1
MAX_LAGS = 1_000_000


# -- coefficients ------------------------------------------------------------


@dataclass(frozen=True)
class Coefficients:
    """Non-negative moving-average weights ``c_0, c_1, ...``.

    ``finite``: explicit values.  ``geometric``: ``scale * rate^j``.
    ``power``: ``scale * (j + 1)^-exponent``.  Infinite sequences are cut at
    the smallest ``K`` whose tail ``sum_{j>K} c_j`` is below ``tolerance``.
    """

    kind: str
    values: Tuple[float, ...] = ()
    rate: float = 0.0
    exponent: float = 0.0
    scale: float = 1.0
    tolerance: float = 1e-8

    def __post_init__(self):
        if self.kind == "finite":
            if len(self.values) == 0:
                raise ValueError("finite coefficients need at least one value")
            if any(v < 0 for v in self.values):
                raise ValueError("coefficients must be non-negative")
        elif self.kind == "geometric":
            if not (0.0 < self.rate < 1.0):
                raise ValueError("geometric rate must lie in (0, 1)")
        elif self.kind == "power":
            if not self.exponent > 1.0:
                raise ValueError("power coefficients need exponent > 1 to be summable")
        else:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.kind != "finite" and not self.scale > 0.0:
            raise ValueError("scale must be positive")

    @classmethod
    def finite(cls, values) -> "Coefficients":
        return cls("finite", tuple(float(v) for v in values))

    @classmethod
    def geometric(cls, rate: float, scale: float = 1.0, tolerance: float = 1e-8) -> "Coefficients":
        return cls("geometric", rate=rate, scale=scale, tolerance=tolerance)

    @classmethod
    def power(cls, exponent: float, scale: float = 1.0, tolerance: float = 1e-8) -> "Coefficients":
        return cls("power", exponent=exponent, scale=scale, tolerance=tolerance)

    def tail_sum(self, k: int) -> float:
        """``sum_{j > k} c_j``."""
        if self.kind == "finite":
            return float(sum(self.values[k + 1:]))
        if self.kind == "geometric":
            return self.scale * self.rate ** (k + 1) / (1.0 - self.rate)
        return self.scale * float(hurwitz_zeta(self.exponent, k + 2))

    def total(self) -> float:
        if self.kind == "finite":
            return float(sum(self.values))
        return self.tail_sum(-1)

    def truncation_index(self) -> int:
        if self.kind == "finite":
            return len(self.values) - 1
        if self.kind == "geometric":
            k = math.ceil(math.log(self.tolerance * (1.0 - self.rate) / self.scale)
                          / math.log(self.rate)) - 1
            k = max(k, 0)
            while self.tail_sum(k) >= self.tolerance:
                k += 1
            while k > 0 and self.tail_sum(k - 1) < self.tolerance:
                k -= 1
            return k
        p = self.exponent
        # tail ~ scale (k + 1.5)^(1-p) / (p - 1); refine by bisection on the exact tail
        log_guess = -math.log(self.tolerance * (p - 1.0) / self.scale) / (p - 1.0)
        if log_guess > math.log(MAX_LAGS):
            raise ValueError(
                f"truncation tail above tolerance: more than {MAX_LAGS} lags needed"
            )
        lo, hi = 0, int(math.exp(log_guess)) + 2
        while self.tail_sum(hi) >= self.tolerance:
            hi *= 2
            if hi > MAX_LAGS:
                raise ValueError("truncation tail above tolerance")
        while lo < hi:
            mid = (lo + hi) // 2
            if self.tail_sum(mid) < self.tolerance:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def truncated(self) -> np.ndarray:
        """``c_0, ..., c_K`` as an array."""
        k = self.truncation_index()
        j = np.arange(k + 1, dtype=float)
        if self.kind == "finite":
            return np.asarray(self.values, dtype=float)
        if self.kind == "geometric":
            return self.scale * self.rate ** j
        return self.scale * (j + 1.0) ** (-self.exponent)

    def is_trivial(self) -> bool:
        """A single lag: the CTRW is uncorrelated."""
        return self.kind == "finite" and len(self.values) == 1

    def satisfies_regularity(self, alpha: float) -> bool:
        """Finite support or monotone with ``sum c_j^rho < inf`` for some ``rho < 1``.

        Only required when ``1 < alpha <= 2``.
        """
        if not (1.0 < alpha <= 2.0) or self.kind in ("finite", "geometric"):
            return True
        return self.exponent > 1.0

    def satisfies_tc(self, alpha: float) -> bool:
        """Summability of the tail sums used by the correlated integral limits.

        ``1 < alpha <= 2``: ``sum_i sum_{j>=i} c_j < inf``.  ``alpha == 1``:
        ``sum_i (sum_{j>=i} c_j)^rho < inf`` for some ``rho < 1``.  Both hold
        for finite and geometric weights; power weights need exponent > 2.
        """
        if self.kind in ("finite", "geometric"):
            return True
        if alpha == 1.0 or 1.0 < alpha <= 2.0:
            return self.exponent > 2.0
        return True


# -- waiting times and couplings ---------------------------------------------


@dataclass(frozen=True)
class UnitSpacing:
    """``J_k = 1``: the CTRW is a moving average."""


@dataclass(frozen=True)
class HeavyTail:
    """Waiting times with tail ``x^-beta``; ``family`` as in ``sample_waiting_time``."""

    beta: float
    family: str = "pareto"

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise ValueError("beta must lie in (0, 1)")
        if self.family not in ("pareto", "stable"):
            raise ValueError(f"unknown waiting-time family {self.family!r}")

    @property
    def uniforms_per_draw(self) -> int:
        return 1 if self.family == "pareto" else 2

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        if self.family == "pareto":
            return waiting_quantile(self.beta, u[:, 0])
        j = stable_from_uniforms(subordinator_law(self.beta), u[:, 0], u[:, 1])
        return np.maximum(j, np.finfo(float).tiny)


Waiting = Union[UnitSpacing, HeavyTail]


class JointSampler(Protocol):
    """Maps a ``(m, uniforms_per_pair)`` uniform block to ``(zeta, waits)``."""

    uniforms_per_pair: int

    def from_uniforms(self, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]: ...


@dataclass(frozen=True)
class CanonicalCoupling:
    """``zeta_k = J_k^(1/alpha_parent) * Y_k`` with ``Y_k`` drawn from ``parent``.

    This is the increment of a strictly stable parent process over the
    duration ``J_k``.  The resulting CTRW index is ``alpha = parent.alpha * beta``.
    """

    parent: StableLaw
    waiting: HeavyTail

    def __post_init__(self):
        if not self.parent.is_strictly_stable:
            raise ValueError("parent law must be strictly stable")

    @property
    def uniforms_per_pair(self) -> int:
        return 2 + self.waiting.uniforms_per_draw

    @property
    def alpha(self) -> float:
        return self.parent.alpha * self.waiting.beta

    def from_uniforms(self, u):
        j = self.waiting.from_uniforms(u[:, 2:])
        y = stable_from_uniforms(self.parent, u[:, 0], u[:, 1])
        return j ** (1.0 / self.parent.alpha) * y, j


@dataclass(frozen=True)
class IndependentCoupling:
    """Jump sizes and waiting times drawn independently (uncoupled case)."""

    innovation: InnovationLaw
    waiting: HeavyTail

    @property
    def uniforms_per_pair(self) -> int:
        return self.innovation._uniforms_per_draw + self.waiting.uniforms_per_draw

    def from_uniforms(self, u):
        k = self.innovation._uniforms_per_draw
        return _innovations_from_uniforms(self.innovation, u[:, :k]), self.waiting.from_uniforms(u[:, k:])


# -- specs -------------------------------------------------------------------


@dataclass(frozen=True)
class CtrwSpec:
    """Recipe for one CTRW sequence ``X^n``."""

    innovation: InnovationLaw
    waiting: Waiting
    alpha: float
    beta: float
    n: float
    coefficients: Coefficients = field(default_factory=lambda: Coefficients.finite([1.0]))
    require_tc: bool = False

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ValueError("alpha must lie in (0, 2]")
        if isinstance(self.waiting, UnitSpacing):
            if self.beta != 1.0:
                raise ValueError("unit spacing requires beta = 1")
        else:
            if not (0.0 < self.beta < 1.0):
                raise ValueError("heavy-tailed waiting times need beta in (0, 1)")
            if self.waiting.beta != self.beta:
                raise ValueError("waiting-time index differs from beta")
        if not self.n > 0:
            raise ValueError("n must be positive")
        if not self.coefficients.satisfies_regularity(self.alpha):
            raise ValueError("coefficients violate the summability conditions for 1 < alpha <= 2")
        if self.require_tc and not self.coefficients.satisfies_tc(self.alpha):
            raise ValueError("coefficients violate the tail-summability condition")

    @property
    def scale(self) -> float:
        return self.n ** (-self.beta / self.alpha)

    def with_n(self, n: float) -> "CtrwSpec":
        return CtrwSpec(self.innovation, self.waiting, self.alpha, self.beta, n,
                        self.coefficients, self.require_tc)


# -- building blocks ---------------------------------------------------------


def renewal_count(waiting_times, t) -> int:
    """``N(t) = max{k : J_1 + ... + J_k <= t}``."""
    waits = np.asarray(waiting_times, dtype=float)
    if np.any(waits <= 0.0):
        raise ValueError("waiting times must be positive")
    return int(np.searchsorted(np.cumsum(waits), t, side="right"))


def _draw_until(rng, k: int, chunk: int, transform, until: float):
    """Draw blocks of ``k`` uniforms per row until the running sum passes ``until``.

    ``transform`` maps a uniform block to ``(weights, payload)`` or to weights.
    Returns the concatenated outputs; the check uses the same ``cumsum`` the
    callers use, so the last cumulative value is strictly above ``until``.
    """
    weights, payloads = [], []
    while True:
        out = transform(rng.random((chunk, k)))
        if isinstance(out, tuple):
            weights.append(out[0])
            payloads.append(out[1])
        else:
            weights.append(out)
        w = np.concatenate(weights)
        cum = np.cumsum(w)
        if cum[-1] > until:
            return w, cum, (np.concatenate(payloads) if payloads else None)
        chunk *= 2


def draw_waiting_times(waiting: Waiting, until: float, seed) -> np.ndarray:
    """Waiting times ``J_1, ..., J_m`` with ``J_1 + ... + J_m > until`` (minimal ``m``)."""
    if isinstance(waiting, UnitSpacing):
        return np.ones(int(math.floor(until)) + 1)
    rng = as_generator(seed, WAITING_SUBSTREAM)
    chunk = max(64, int(2.0 * max(until, 1.0) ** waiting.beta))
    waits, cum, _ = _draw_until(rng, waiting.uniforms_per_draw, chunk, waiting.from_uniforms, until)
    m = int(np.searchsorted(cum, until, side="right")) + 1
    return waits[:m]


def draw_innovations(law: InnovationLaw, count: int, seed) -> np.ndarray:
    rng = as_generator(seed, INNOVATION_SUBSTREAM)
    return _innovations_from_uniforms(law, rng.random((count, law._uniforms_per_draw)))


def moving_average(theta: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``zeta_i = sum_{j=0}^{K} c_j theta_{i-j}``; ``theta`` starts with ``K`` warm-up values."""
    k = c.size - 1
    if theta.size <= k:
        return np.empty(0)
    if k == 0:
        return theta * c[0]
    return np.convolve(theta, c, mode="valid")


def assemble_ctrw(theta, waits, spec: CtrwSpec, horizon: float):
    """Jump times and sizes from explicit innovations and waiting times.

    ``theta`` holds the ``K`` warm-up innovations followed by ``theta_1, ...``.
    If fewer innovations than renewals are supplied the path is cut after
    the last jump they determine.
    """
    c = spec.coefficients.truncated()
    zeta = moving_average(np.asarray(theta, dtype=float), c)
    cum = np.cumsum(np.asarray(waits, dtype=float))
    count = int(np.searchsorted(cum, spec.n * horizon, side="right"))
    count = min(count, zeta.size)
    return cum[:count] / spec.n, spec.scale * zeta[:count]


def ctrw_jumps(spec: CtrwSpec, horizon: float, seed: SeedSpec):
    """Jump times and sizes of ``X^n`` on ``[0, horizon]``."""
    waits = draw_waiting_times(spec.waiting, spec.n * horizon, seed)
    k = spec.coefficients.truncation_index()
    theta = draw_innovations(spec.innovation, k + waits.size - 1, seed)
    return assemble_ctrw(theta, waits, spec, horizon)


def build_ctrw(spec: CtrwSpec, horizon: float, seed: SeedSpec) -> StepPath:
    """``X^n`` as an exact step path on ``[0, horizon]``."""
    times, sizes = ctrw_jumps(spec, horizon, seed)
    return StepPath(times, sizes, horizon=horizon)


def build_uncorrelated_ctrw(spec: CtrwSpec, horizon: float, seed: SeedSpec) -> StepPath:
    """Direct construction with ``zeta_k = theta_k`` (no moving average)."""
    waits = draw_waiting_times(spec.waiting, spec.n * horizon, seed)
    cum = np.cumsum(waits)
    count = int(np.searchsorted(cum, spec.n * horizon, side="right"))
    theta = draw_innovations(spec.innovation, count, seed)
    return StepPath(cum[:count] / spec.n, spec.scale * theta, horizon=horizon)


def assemble_price_ctrw(theta, waits, spec: CtrwSpec, r: float, horizon: float):
    """Log-price ``R^n`` and price ``S^n = exp(R^n)`` from explicit inputs.

    ``R^n`` jumps at ``L_k / n`` by ``n^(-beta/alpha) zeta_k + r J_k / n``.
    """
    waits = np.asarray(waits, dtype=float)
    times, sizes = assemble_ctrw(theta, waits, spec, horizon)
    sizes = sizes + r * waits[: times.size] / spec.n
    log_price = StepPath(times, sizes, horizon=horizon)
    return log_price, exp_transform(log_price)


def build_price_ctrw(spec: CtrwSpec, r: float, horizon: float, seed: SeedSpec,
                     return_waits: bool = False):
    """Log-price ``R^n`` and price ``S^n`` on ``[0, horizon]`` (see :func:`assemble_price_ctrw`)."""
    waits = draw_waiting_times(spec.waiting, spec.n * horizon, seed)
    k = spec.coefficients.truncation_index()
    theta = draw_innovations(spec.innovation, k + waits.size - 1, seed)
    log_price, price = assemble_price_ctrw(theta, waits, spec, r, horizon)
    if return_waits:
        return log_price, price, waits
    return log_price, price


def risk_free_bound_violations(waits, n: float, times) -> int:
    """Count times where ``L_{N(nt)} <= n t < L_{N(nt)} + J_{N(nt)+1}`` fails.

    Dividing by ``n`` and multiplying by ``r > 0`` gives the two-sided bound
    ``r t - r J_{N(nt)+1} / n < sum_{k <= N(nt)} r J_k / n <= r t`` on the
    accumulated risk-free drift.  ``L_k`` are the cumulative sums that define
    the path's jump times and ``L_{N} + J_{N+1}`` is evaluated as ``L_{N+1}``,
    so the comparison involves no further rounding.
    """
    waits = np.asarray(waits, dtype=float)
    cum = np.cumsum(waits)
    nt = n * np.asarray(times, dtype=float)
    count = np.searchsorted(cum, nt, side="right")
    if np.any(count >= waits.size):
        raise ValueError("waiting times do not cover the requested times")
    acc = np.where(count > 0, cum[np.maximum(count - 1, 0)], 0.0)
    ok = (acc <= nt) & (nt < cum[count])
    return int(np.count_nonzero(~ok))


def coupled_jumps(joint: JointSampler, alpha: float, beta: float, n: float, horizon: float,
                  seed: SeedSpec):
    rng = as_generator(seed, INNOVATION_SUBSTREAM)
    until = n * horizon
    chunk = max(64, int(2.0 * max(until, 1.0) ** beta))

    def transform(u):
        z, j = joint.from_uniforms(u)
        return j, z

    _, cum, zeta = _draw_until(rng, joint.uniforms_per_pair, chunk, transform, until)
    count = int(np.searchsorted(cum, until, side="right"))
    return cum[:count] / n, n ** (-beta / alpha) * zeta[:count]


def build_coupled_ctrw(joint: JointSampler, alpha: float, beta: float, n: float,
                       horizon: float, seed: SeedSpec) -> StepPath:
    """CTRW from i.i.d. ``(zeta_k, J_k)`` pairs that may depend within a pair."""
    times, sizes = coupled_jumps(joint, alpha, beta, n, horizon, seed)
    return StepPath(times, sizes, horizon=horizon)


# -- limits ------------------------------------------------------------------

LIMIT_KINDS = ("subordinated", "coupled", "last_passage", "plain_stable")


@dataclass(frozen=True)
class LimitSpec:
    """Recipe for a limit process.

    ``subordinated``: ``Z(D^{-1}(t))``.  ``coupled``: ``((Z^-) o D^{-1})^+``
    with ``Z = Ztilde o D``, ``Ztilde`` having law ``z_law`` at time 1.
    ``last_passage``: ``Ztilde(G(t))`` with ``G`` the last-passage time
    change of ``D``.  ``plain_stable``: ``Z`` itself.  The output is
    ``scale_factor * (process) + drift * t``.  ``beta = 1`` with
    ``subordinated`` replaces ``D`` by the identity.
    """

    kind: str
    z_law: StableLaw
    beta: Optional[float] = None
    scale_factor: float = 1.0
    drift: float = 0.0
    grid_step: Optional[float] = None

    def __post_init__(self):
        if self.kind not in LIMIT_KINDS:
            raise ValueError(f"unknown limit kind {self.kind!r}")
        if self.kind != "plain_stable":
            if self.beta is None or not (0.0 < self.beta <= 1.0):
                raise ValueError("beta in (0, 1] required for time-changed limits")
            if self.beta == 1.0 and self.kind != "subordinated":
                raise ValueError("beta = 1 only as identity time change for 'subordinated'")
        if self.kind in ("coupled", "last_passage") and not self.z_law.is_strictly_stable:
            raise ValueError("parent law must be strictly stable")

    def step(self, horizon: float) -> float:
        h = 1e-3 * horizon if self.grid_step is None else self.grid_step
        k = round(horizon / h)
        if k < 1 or not math.isclose(k * h, horizon, rel_tol=1e-9):
            raise ValueError("grid_step must divide the horizon")
        return h


def _increment_law(law: StableLaw, h: float) -> StableLaw:
    """Law of ``Z(t + h) - Z(t)`` for the Lévy process with ``Z(1) ~ law``."""
    a = law.alpha
    shift = law.shift * h
    if a == 1.0:
        shift -= (2.0 / math.pi) * law.skew * law.scale * h * math.log(h)
        return StableLaw(a, law.skew, law.scale * h, shift)
    return StableLaw(a, law.skew, law.scale * h ** (1.0 / a), shift)


def limit_skeleton(spec: LimitSpec, horizon: float, seed):
    """Jump times ``D_k`` and jumps ``dZ_k`` of the grid skeleton of the limit.

    On a parameter grid of step ``h`` the subordinator increments and the
    outer-process increments are drawn exactly; the time-changed process is
    the step path ``t -> sum_{D_k <= t} dZ_k`` which equals
    ``((Z^-) o D^{-1})^+`` for the skeleton paths.  ``scale_factor`` is applied,
    ``drift`` is not.
    """
    h = spec.step(horizon)
    z_rng = as_generator(seed, INNOVATION_SUBSTREAM)
    d_rng = as_generator(seed, WAITING_SUBSTREAM)
    if spec.kind == "plain_stable" or spec.beta == 1.0:
        m = round(horizon / h)
        inc = _increment_law(spec.z_law, h)
        u = z_rng.random((m, 2))
        dz = stable_from_uniforms(inc, u[:, 0], u[:, 1])
        times = np.minimum(np.arange(1, m + 1) * h, horizon)
        return times, spec.scale_factor * dz
    d_inc = _increment_law(subordinator_law(spec.beta), h)
    est = max(64, int(2.0 * (horizon / d_inc.scale) ** spec.beta))

    def d_transform(u):
        return np.maximum(stable_from_uniforms(d_inc, u[:, 0], u[:, 1]), np.finfo(float).tiny)

    dd, d, _ = _draw_until(d_rng, 2, est, d_transform, horizon)
    m = int(np.searchsorted(d, horizon, side="right"))
    u = z_rng.random((dd.size, 2))[:m]
    if spec.kind == "subordinated":
        dz = stable_from_uniforms(_increment_law(spec.z_law, h), u[:, 0], u[:, 1])
    else:
        y = stable_from_uniforms(spec.z_law, u[:, 0], u[:, 1])
        dz = dd[:m] ** (1.0 / spec.z_law.alpha) * y
    times, sizes = d[:m], spec.scale_factor * dz
    # a zero subordinator increment would tie two jump times; merge them
    if times.size > 1 and np.any(np.diff(times) <= 0.0):
        first = np.concatenate([[True], np.diff(times) > 0.0])
        idx = np.cumsum(first) - 1
        sizes = np.bincount(idx, weights=sizes)
        times = times[first]
    return times, sizes


def simulate_limit(spec: LimitSpec, horizon: float, seed, output: str = "grid"):
    """Sample path of the limit process on ``[0, horizon]``.

    ``output="grid"`` returns a :class:`GridPath` on the time grid of step
    ``spec.grid_step``; ``output="step"`` returns the exact skeleton as a
    :class:`StepPath` (with the drift as a linear drift).
    """
    times, sizes = limit_skeleton(spec, horizon, seed)
    if output == "step":
        return StepPath(times, sizes, drift=spec.drift, horizon=horizon)
    if output != "grid":
        raise ValueError("output must be 'grid' or 'step'")
    h = spec.step(horizon)
    k = round(horizon / h)
    t = np.minimum(np.arange(k + 1) * h, horizon)
    csum = np.concatenate([[0.0], np.cumsum(sizes)])
    values = csum[np.searchsorted(times, t, side="right")] + spec.drift * t
    return GridPath(h, values, horizon=horizon)


def limit_terminal(spec: LimitSpec, horizon: float, seed, size: int) -> np.ndarray:
    """Exact draws of the limit at ``horizon``.

    Uses ``D^{-1}(T) = (T / D_1)^beta`` in law and, for the coupled and
    last-passage limits, ``G(T) / T ~ Beta(beta, 1 - beta)`` independent of
    the parent process.
    """
    rng = as_generator(seed, INNOVATION_SUBSTREAM)
    law = spec.z_law
    if not law.is_strictly_stable:
        raise ValueError("exact terminal law needs a strictly stable outer law")
    u = rng.random((size, 4))
    z1 = stable_from_uniforms(law, u[:, 0], u[:, 1])
    if spec.kind == "plain_stable" or spec.beta == 1.0:
        clock = np.full(size, float(horizon))
    elif spec.kind == "subordinated":
        d1 = stable_from_uniforms(subordinator_law(spec.beta), u[:, 2], u[:, 3])
        clock = (horizon / d1) ** spec.beta
    else:
        clock = horizon * betaincinv(spec.beta, 1.0 - spec.beta, u[:, 2])
    return spec.scale_factor * clock ** (1.0 / law.alpha) * z1 + spec.drift * horizon
