"""Piecewise-affine càdlàg paths and the path algebra used by the CTRW limits.

A path is stored as knots ``0 = s_0 < s_1 < ... < s_{m-1} <= horizon`` with a
right value ``v_k`` and slope ``a_k`` on each piece ``[s_k, s_{k+1})``::

    x(t) = v_k + a_k (t - s_k)

Jumps can only occur at knots.  Step paths (all slopes zero) are evaluated
without any floating-point arithmetic, which keeps jump-by-jump identities
exact.  A path may be flagged ``left_continuous``; it then represents
``t -> x(t-)`` (the càglàd version) and is produced by :func:`regularize`.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "CadlagPath",
    "StepPath",
    "GridPath",
    "eval_path",
    "left_limit",
    "generalized_inverse",
    "compose",
    "regularize",
    "exp_transform",
    "log_transform",
    "last_passage_time_change",
    "linear_combination",
    "pointwise",
    "write_csv",
    "read_csv",
]


class CadlagPath:
    """Right-continuous piecewise-affine path on ``[0, horizon]``."""

    __slots__ = ("knots", "values", "slopes", "horizon", "left_continuous")

    def __init__(self, knots, values, slopes=None, horizon=math.inf, *, left_continuous=False):
        knots = np.asarray(knots, dtype=float).reshape(-1)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if knots.size == 0 or knots[0] != 0.0:
            raise ValueError("knots must start at 0")
        if values.shape[0] != knots.size:
            raise ValueError("one value per knot required")
        if knots.size > 1 and not np.all(np.diff(knots) > 0):
            raise ValueError("knots must be strictly increasing")
        if slopes is None:
            slopes = np.zeros_like(values)
        else:
            slopes = np.asarray(slopes, dtype=float)
            if slopes.ndim == 1 and values.shape[1] == 1 and slopes.size == values.shape[0]:
                slopes = slopes[:, None]
            slopes = np.broadcast_to(slopes, values.shape).copy()
        horizon = float(horizon)
        if knots[-1] > horizon:
            raise ValueError("last knot lies beyond the horizon")
        self.knots = knots
        self.values = values
        self.slopes = slopes
        self.horizon = horizon
        self.left_continuous = bool(left_continuous)

    # -- basic properties -------------------------------------------------

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def is_step(self) -> bool:
        return not np.any(self.slopes)

    def __repr__(self):
        kind = "left-continuous " if self.left_continuous else ""
        return (f"<{type(self).__name__} {kind}dim={self.dim} knots={self.knots.size} "
                f"horizon={self.horizon}>")

    def _check_times(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0) or np.any(t > self.horizon):
            raise ValueError(f"time outside [0, {self.horizon}]")
        return t

    def _out(self, arr, t):
        if self.dim == 1:
            arr = arr[..., 0]
        if np.ndim(t) == 0:
            return float(arr) if self.dim == 1 else arr
        return arr

    def _right(self, t):
        idx = np.searchsorted(self.knots, t, side="right") - 1
        dt = t - self.knots[idx]
        out = self.values[idx]
        if self.is_step:
            return out
        return out + self.slopes[idx] * np.asarray(dt)[..., None]

    def _left(self, t):
        idx = np.searchsorted(self.knots, t, side="left") - 1
        idx = np.maximum(idx, 0)
        dt = t - self.knots[idx]
        out = self.values[idx]
        if self.is_step:
            return out
        return out + self.slopes[idx] * np.asarray(dt)[..., None]

    def eval(self, t):
        """Value at ``t`` (right value, or left limit for a càglàd path)."""
        t = self._check_times(t)
        if self.left_continuous:
            return self._out(self._left(t), t)
        return self._out(self._right(t), t)

    def right_value(self, t):
        """``x(t+)``, the càdlàg value irrespective of ``left_continuous``."""
        t = self._check_times(t)
        return self._out(self._right(t), t)

    def left_limit(self, t):
        t = self._check_times(t)
        if np.any(t <= 0.0):
            raise ValueError("left limit needs t > 0")
        return self._out(self._left(t), t)

    def slope_at(self, t):
        idx = np.searchsorted(self.knots, t, side="right") - 1
        return self.slopes[idx]

    def piece_ends(self) -> np.ndarray:
        return np.append(self.knots[1:], self.horizon)

    def left_values_at_knots(self) -> np.ndarray:
        """Left limits at knots ``1..m-1`` (shape ``(m-1, dim)``)."""
        dt = np.diff(self.knots)[:, None]
        if self.is_step:
            return self.values[:-1]
        return self.values[:-1] + self.slopes[:-1] * dt

    def jumps(self):
        """``(times, sizes)`` of the nonzero jumps; sizes have shape ``(k, dim)``."""
        if self.knots.size == 1:
            return np.empty(0), np.empty((0, self.dim))
        sizes = self.values[1:] - self.left_values_at_knots()
        keep = np.any(sizes != 0.0, axis=1)
        return self.knots[1:][keep], sizes[keep]

    def jump_times(self) -> np.ndarray:
        return self.jumps()[0]

    def component(self, i: int) -> "CadlagPath":
        return CadlagPath(self.knots, self.values[:, i], self.slopes[:, i], self.horizon,
                          left_continuous=self.left_continuous)

    def restrict(self, horizon: float) -> "CadlagPath":
        if horizon > self.horizon:
            raise ValueError("cannot extend a path beyond its horizon")
        keep = self.knots <= horizon
        return CadlagPath(self.knots[keep], self.values[keep], self.slopes[keep], horizon,
                          left_continuous=self.left_continuous)

    def simplified(self) -> "CadlagPath":
        """Drop knots that carry neither a jump nor a change of slope."""
        if self.knots.size <= 1:
            return self
        jumps = self.values[1:] - self.left_values_at_knots()
        kink = self.slopes[1:] != self.slopes[:-1]
        keep = np.concatenate([[True], np.any(jumps != 0.0, axis=1) | np.any(kink, axis=1)])
        return CadlagPath(self.knots[keep], self.values[keep], self.slopes[keep], self.horizon,
                          left_continuous=self.left_continuous)

    def sample_grid(self, grid_step: float, horizon: float | None = None) -> "GridPath":
        """Right-continuous step interpolation of the path on ``0, h, 2h, ...``."""
        horizon = self.horizon if horizon is None else horizon
        k = int(round(horizon / grid_step))
        if not math.isclose(k * grid_step, horizon, rel_tol=1e-9):
            raise ValueError("grid_step must divide the horizon")
        t = np.minimum(np.arange(k + 1) * grid_step, horizon)
        return GridPath(grid_step, self._right(t), horizon=horizon)

    def __neg__(self):
        return linear_combination([(-1.0, self)])

    def __add__(self, other):
        if isinstance(other, CadlagPath):
            return linear_combination([(1.0, self), (1.0, other)])
        return CadlagPath(self.knots, self.values + other, self.slopes, self.horizon,
                          left_continuous=self.left_continuous)

    def __sub__(self, other):
        if isinstance(other, CadlagPath):
            return linear_combination([(1.0, self), (-1.0, other)])
        return self + (-other)

    def __mul__(self, c):
        if isinstance(c, CadlagPath):
            return pointwise(np.multiply, self, c)
        return CadlagPath(self.knots, self.values * c, self.slopes * c, self.horizon,
                          left_continuous=self.left_continuous)

    __rmul__ = __mul__
    __radd__ = __add__


class StepPath(CadlagPath):
    """Finitely many jumps plus an optional linear drift.

    ``value(t) = initial_value + drift * t + sum_{t_i <= t} jump_sizes[i]``.
    Jump times must be strictly increasing and positive; exact ties are
    rejected.
    """

    __slots__ = ("initial_value", "drift", "jump_time_array", "jump_size_array")

    def __init__(self, jump_times=(), jump_sizes=(), *, initial_value=0.0, drift=0.0,
                 horizon=math.inf):
        times = np.asarray(jump_times, dtype=float).reshape(-1)
        x0 = np.atleast_1d(np.asarray(initial_value, dtype=float))
        dim = x0.size
        sizes = np.asarray(jump_sizes, dtype=float).reshape(times.size, -1) if times.size else \
            np.empty((0, dim))
        if sizes.shape[1] != dim:
            if sizes.shape[1] == 1 or dim == 1:
                dim = max(dim, sizes.shape[1])
                x0 = np.broadcast_to(x0, (dim,)).copy()
                sizes = np.broadcast_to(sizes, (times.size, dim)).copy()
            else:
                raise ValueError("jump sizes and initial value differ in dimension")
        drift = np.broadcast_to(np.asarray(drift, dtype=float), (dim,)).copy()
        if times.size:
            if times[0] <= 0.0:
                raise ValueError("jump times must be positive")
            if not np.all(np.diff(times) > 0.0):
                raise ValueError("jump times must be strictly increasing (ties rejected)")
        knots = np.concatenate([[0.0], times])
        values = x0 + np.concatenate([np.zeros((1, dim)), np.cumsum(sizes, axis=0)])
        if np.any(drift):
            values = values + knots[:, None] * drift
        super().__init__(knots, values, np.broadcast_to(drift, values.shape), horizon)
        self.initial_value = x0
        self.drift = drift
        self.jump_time_array = times
        self.jump_size_array = sizes

    def jumps(self):
        keep = np.any(self.jump_size_array != 0.0, axis=1)
        return self.jump_time_array[keep], self.jump_size_array[keep]


class GridPath(CadlagPath):
    """Values at ``0, h, 2h, ...`` with right-continuous step interpolation."""

    __slots__ = ("grid_step",)

    def __init__(self, grid_step: float, values, horizon: float | None = None):
        values = np.asarray(values, dtype=float)
        if not grid_step > 0.0:
            raise ValueError("grid_step must be positive")
        k = values.shape[0]
        if horizon is None:
            horizon = (k - 1) * grid_step
        knots = np.minimum(np.arange(k) * grid_step, horizon)
        super().__init__(knots, values, None, horizon)
        self.grid_step = float(grid_step)

    @property
    def grid_values(self) -> np.ndarray:
        return self.values[:, 0] if self.dim == 1 else self.values



def eval_path(path: CadlagPath, t):
    return path.eval(t)


def left_limit(path: CadlagPath, t):
    return path.left_limit(t)


def _require_nondecreasing(d: CadlagPath, name: str):
    if d.dim != 1:
        raise ValueError(f"{name} must be scalar")
    if d.values[0, 0] < 0.0:
        raise ValueError(f"{name} must start at a non-negative value")
    if np.any(d.slopes < 0.0):
        raise ValueError(f"{name} must be nondecreasing")
    if d.knots.size > 1:
        left = d.left_values_at_knots()[:, 0]
        # affine pieces may overshoot the next knot value by a few ulps
        slack = 1e-12 * np.maximum(1.0, np.abs(left))
        if np.any(d.values[1:, 0] < left - slack):
            raise ValueError(f"{name} must be nondecreasing")


def _events_to_path(t, val, slope, horizon):
    keep_t = t <= horizon
    t, val, slope = t[keep_t], val[keep_t], slope[keep_t]
    # right-continuity: among equal times the last event wins
    last = np.append(t[1:] != t[:-1], True)
    return CadlagPath(t[last], val[last], slope[last], horizon)


def _pieces(d: CadlagPath):
    s = d.knots
    s_next = d.piece_ends()
    v = d.values[:, 0]
    m = d.slopes[:, 0]
    w = v + m * (s_next - s)
    v_next = np.append(v[1:], np.inf)
    scale = np.maximum(1.0, np.abs(w))
    gap = (m > 0.0) & (v_next - w > 1e-14 * scale)
    return s, s_next, v, m, w, gap


def generalized_inverse(d: CadlagPath, horizon: float) -> CadlagPath:
    """``D^{-1}(t) = inf{s >= 0 : D(s) > t}`` on ``[0, horizon]``.

    Flat where ``D`` jumps, jumping where ``D`` is flat.  Raises if ``D``
    never exceeds ``horizon`` within its own horizon.
    """
    _require_nondecreasing(d, "time change")
    if not math.isfinite(d.horizon) or not d.eval(d.horizon) > horizon:
        raise ValueError("horizon unreachable: D does not exceed the requested horizon")
    s, s_next, v, m, w, gap = _pieces(d)
    inc = m > 0.0
    with np.errstate(divide="ignore"):
        a_val = np.where(inc, s, s_next)
        a_slope = np.where(inc, 1.0 / np.where(inc, m, 1.0), 0.0)
    t = np.stack([v, w], axis=1)
    val = np.stack([a_val, s_next], axis=1)
    slope = np.stack([a_slope, np.zeros_like(a_slope)], axis=1)
    mask = np.stack([np.ones_like(gap), gap], axis=1)
    t, val, slope = t[mask], val[mask], slope[mask]
    if v[0] > 0.0:
        t = np.concatenate([[0.0], t])
        val = np.concatenate([[0.0], val])
        slope = np.concatenate([[0.0], slope])
    return _events_to_path(t, val, slope, horizon)


def last_passage_time_change(d: CadlagPath, horizon: float) -> CadlagPath:
    """``G(t) = g(t+)`` with ``g(t) = sup{s < t : s in closure of range(D)}``.

    The range is taken to contain ``0`` (``D(0-) = 0``), so ``G(t)`` is the
    largest point of the closed range not exceeding ``t``.
    """
    _require_nondecreasing(d, "time change")
    if not math.isfinite(d.horizon) or d.eval(d.horizon) < horizon:
        raise ValueError("horizon unreachable: range of D not known up to the horizon")
    s, s_next, v, m, w, gap = _pieces(d)
    inc = (m > 0.0).astype(float)
    t = np.stack([v, w], axis=1)
    val = np.stack([v, w], axis=1)
    slope = np.stack([inc, np.zeros_like(inc)], axis=1)
    mask = np.stack([np.ones_like(gap), gap], axis=1)
    t = np.concatenate([[0.0], t[mask]])
    val = np.concatenate([[0.0], val[mask]])
    slope = np.concatenate([[0.0], slope[mask]])
    return _events_to_path(t, val, slope, horizon)


def compose(x: CadlagPath, tau: CadlagPath) -> CadlagPath:
    """``t -> x(tau(t))`` for a nondecreasing time change ``tau``.

    The result is returned in its right-continuous version ``(x o tau)^+``;
    for càdlàg ``x`` this is ``x o tau`` itself.  With a càglàd ``x`` (from
    ``regularize(z, "pre_limit")``) it yields ``((z^-) o tau)^+``.
    """
    _require_nondecreasing(tau, "time change")
    if not math.isfinite(tau.horizon):
        raise ValueError("time change needs a finite horizon")
    if tau.eval(tau.horizon) > x.horizon:
        raise ValueError("range of the time change exceeds the domain of x")
    a = tau.knots
    a_next = tau.piece_ends()
    p = tau.values[:, 0]
    q = tau.slopes[:, 0]
    r = p + q * (a_next - a)
    out_t, out_v, out_s = [], [], []
    for j in range(a.size):
        if q[j] == 0.0:
            out_t.append(a[j])
            out_v.append(x.eval(p[j]) if x.dim > 1 else np.atleast_1d(x.eval(p[j])))
            out_s.append(np.zeros(x.dim))
            continue
        out_t.append(a[j])
        out_v.append(np.atleast_1d(x.right_value(p[j])))
        out_s.append(x.slope_at(p[j]) * q[j])
        lo = np.searchsorted(x.knots, p[j], side="right")
        hi = np.searchsorted(x.knots, r[j], side="left")
        for k in range(lo, hi):
            sigma = x.knots[k]
            tk = a[j] + (sigma - p[j]) / q[j]
            if tk <= out_t[-1]:
                continue
            out_t.append(tk)
            out_v.append(x.values[k])
            out_s.append(x.slopes[k] * q[j])
    return CadlagPath(np.array(out_t), np.array(out_v), np.array(out_s), tau.horizon)


def regularize(x: CadlagPath, mode: str) -> CadlagPath:
    """``pre_limit``: ``t -> x(t-)``; ``post_limit``: ``t -> x(t+)``."""
    if mode not in ("pre_limit", "post_limit"):
        raise ValueError("mode must be 'pre_limit' or 'post_limit'")
    return CadlagPath(x.knots, x.values, x.slopes, x.horizon,
                      left_continuous=(mode == "pre_limit"))


def exp_transform(x: CadlagPath) -> CadlagPath:
    """Pointwise exponential of a scalar step path."""
    if x.dim != 1:
        raise ValueError("exp_transform needs a scalar path")
    if not x.is_step:
        raise ValueError("exp_transform needs a step path; sample drifted paths onto a grid")
    return CadlagPath(x.knots, np.exp(x.values), None, x.horizon,
                      left_continuous=x.left_continuous)


def log_transform(x: CadlagPath) -> CadlagPath:
    if x.dim != 1 or not x.is_step:
        raise ValueError("log_transform needs a scalar step path")
    if np.any(x.values <= 0.0):
        raise ValueError("log of a non-positive path")
    return CadlagPath(x.knots, np.log(x.values), None, x.horizon,
                      left_continuous=x.left_continuous)


def _merged_knots(paths: Sequence[CadlagPath]) -> np.ndarray:
    return np.unique(np.concatenate([p.knots for p in paths]))


def _common_horizon(paths: Sequence[CadlagPath]) -> float:
    horizons = {p.horizon for p in paths}
    if len(horizons) != 1:
        raise ValueError("paths have different horizons")
    return horizons.pop()


def linear_combination(terms: Iterable) -> CadlagPath:
    """``sum c_i x_i`` for ``(c_i, x_i)`` pairs sharing a horizon."""
    terms = list(terms)
    paths = [p for _, p in terms]
    horizon = _common_horizon(paths)
    knots = _merged_knots(paths)
    values = 0.0
    slopes = 0.0
    for c, p in terms:
        values = values + c * p._right(knots)
        slopes = slopes + c * p.slopes[np.searchsorted(p.knots, knots, side="right") - 1]
    return CadlagPath(knots, values, slopes, horizon)


def pointwise(func, *paths: CadlagPath) -> CadlagPath:
    """Apply ``func`` to the values of step paths on their merged knots."""
    if not all(p.is_step for p in paths):
        raise ValueError("pointwise operations need step paths")
    horizon = _common_horizon(paths)
    knots = _merged_knots(paths)
    values = func(*[p._right(knots) for p in paths])
    return CadlagPath(knots, values, None, horizon)


def write_csv(path: CadlagPath, target: Union[str, Path, io.TextIOBase]) -> None:
    """Write knots as ``time,value[,slope]`` rows; the last row sits at the horizon."""
    if path.left_continuous:
        raise ValueError("serialize the càdlàg version of the path")
    d = path.dim
    vcols = ["value"] if d == 1 else [f"value_{i}" for i in range(d)]
    scols = [] if path.is_step else (["slope"] if d == 1 else [f"slope_{i}" for i in range(d)])
    rows_t = list(path.knots)
    rows_v = list(path.values)
    rows_s = list(path.slopes)
    if math.isfinite(path.horizon) and path.horizon > path.knots[-1]:
        rows_t.append(path.horizon)
        rows_v.append(path._right(np.array(path.horizon)))
        rows_s.append(path.slopes[-1])
    own = not isinstance(target, io.TextIOBase)
    fh = open(target, "w", newline="") if own else target
    try:
        w = csv.writer(fh)
        w.writerow(["time"] + vcols + scols)
        for t, v, s in zip(rows_t, rows_v, rows_s):
            row = [repr(float(t))] + [repr(float(a)) for a in v]
            if scols:
                row += [repr(float(a)) for a in s]
            w.writerow(row)
    finally:
        if own:
            fh.close()


def read_csv(source: Union[str, Path, io.TextIOBase]) -> CadlagPath:
    own = not isinstance(source, io.TextIOBase)
    fh = open(source, newline="") if own else source
    try:
        rows = list(csv.reader(fh))
    finally:
        if own:
            fh.close()
    header, body = rows[0], rows[1:]
    if not header or header[0] != "time":
        raise ValueError("first column must be 'time'")
    data = np.array([[float(c) for c in r] for r in body if r], dtype=float)
    vidx = [i for i, h in enumerate(header) if h.startswith("value")]
    sidx = [i for i, h in enumerate(header) if h.startswith("slope")]
    t = data[:, 0]
    values = data[:, vidx]
    slopes = data[:, sidx] if sidx else None
    return CadlagPath(t, values, slopes, horizon=t[-1])
