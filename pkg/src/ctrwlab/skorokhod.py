"""Uniform, J1 and M1 distances between càdlàg paths on ``[0, T]``.

J1 is computed exactly for step paths.  For a level ``eps`` a monotone walk
over states ``(i, j)`` ("``x`` has made ``i`` jumps, ``y`` has made ``j``")
decides whether some time change ``lambda`` with ``|lambda - id| <= eps``
achieves ``|x o lambda - y| <= eps``.  The three moves are a matched jump
(``|a_i - b_j| <= eps``), an ``x`` jump placed inside a gap of ``y`` and a
``y`` jump placed inside a gap of ``x``.  Feasibility is monotone in
``eps``, so bisection followed by a scan of the finitely many critical
values gives the exact distance.

M1 is the Fréchet distance between completed graphs in the max norm on
(time, space).  It is approximated by the discrete Fréchet distance of the
completed graphs densified at a given resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

from .cadlag import CadlagPath

__all__ = ["MetricResult", "d_uniform", "d_j1", "d_m1", "completed_graph"]

J1_MAX_STATES = 10**8
M1_MAX_POINTS = 2 * 10**5


@dataclass(frozen=True)
class MetricResult:
    """Distance value with a guaranteed error bound ``|value - true| <= tolerance``."""

    value: float
    mode: str
    tolerance: float = 0.0
    witness: Optional[dict] = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "value": self.value, "tolerance": self.tolerance,
                "witness": self.witness}


def _check(x: CadlagPath, y: CadlagPath, T: float):
    if not T > 0:
        raise ValueError("T must be positive")
    if T > x.horizon or T > y.horizon:
        raise ValueError("horizon mismatch: paths are not defined on [0, T]")
    if x.dim != y.dim:
        raise ValueError("paths differ in dimension")


def d_uniform(x: CadlagPath, y: CadlagPath, T: float) -> MetricResult:
    """``sup_{t <= T} |x(t) - y(t)|`` (max norm for vector paths), exact."""
    _check(x, y, T)
    knots = np.unique(np.concatenate([x.knots[x.knots <= T], y.knots[y.knots <= T], [T]]))
    diff = np.abs(x._right(knots) - y._right(knots))
    best = float(diff.max())
    if knots.size > 1:
        inner = knots[1:]
        left = np.abs(x._left(inner) - y._left(inner))
        best = max(best, float(left.max()))
    return MetricResult(best, "Uniform", 0.0)


# -- J1 ----------------------------------------------------------------------


def _step_data(x: CadlagPath, T: float):
    if not x.is_step:
        raise ValueError("J1 distance implemented for step paths only")
    times, _ = x.jumps()
    times = times[times <= T]
    values = x._right(np.concatenate([[0.0], times]))
    return times, values


@numba.njit(cache=True)
def _linf(u, v):
    m = 0.0
    for k in range(u.shape[0]):
        d = abs(u[k] - v[k])
        if d > m:
            m = d
    return m


@numba.njit(cache=True)
def _j1_feasible(a, b, xv, yv, T, eps, keep):
    """Reachability of state (p, q); ``keep`` stores the full table for backtracking."""
    p = a.shape[0]
    q = b.shape[0]
    prev = np.zeros(q + 1, dtype=np.bool_)
    cur = np.zeros(q + 1, dtype=np.bool_)
    for i in range(p + 1):
        for j in range(q + 1):
            ok = False
            if _linf(xv[i], yv[j]) <= eps:
                if i == 0 and j == 0:
                    ok = True
                else:
                    if i > 0 and j > 0 and prev[j - 1] and abs(a[i - 1] - b[j - 1]) <= eps:
                        ok = True
                    if not ok and i > 0 and prev[j]:
                        # x jump i placed in the y gap [b_j, b_{j+1}]
                        lo = b[j - 1] if j > 0 else 0.0
                        hi = b[j] if j < q else T
                        if a[i - 1] + eps >= lo and a[i - 1] - eps <= hi:
                            ok = True
                    if not ok and j > 0 and cur[j - 1]:
                        lo = a[i - 1] if i > 0 else 0.0
                        hi = a[i] if i < p else T
                        if b[j - 1] + eps >= lo and b[j - 1] - eps <= hi:
                            ok = True
            cur[j] = ok
            if keep.shape[0] > 0:
                keep[i, j] = ok
        for j in range(q + 1):
            prev[j] = cur[j]
            cur[j] = False
    return prev[q]


@numba.njit(cache=True)
def _j1_candidates_in(a, b, xv, yv, T, lo, hi):
    """Smallest critical value in ``[lo, hi]``."""
    best = hi
    p = a.shape[0]
    q = b.shape[0]
    for i in range(p + 1):
        for j in range(q + 1):
            c = _linf(xv[i], yv[j])
            if lo <= c < best:
                best = c
    ends_a = np.empty(p + 2)
    ends_a[0] = 0.0
    ends_a[1:p + 1] = a
    ends_a[p + 1] = T
    ends_b = np.empty(q + 2)
    ends_b[0] = 0.0
    ends_b[1:q + 1] = b
    ends_b[q + 1] = T
    for i in range(p + 2):
        for j in range(q + 2):
            c = abs(ends_a[i] - ends_b[j])
            if lo <= c < best:
                best = c
    return best


def _j1_witness(a, b, xv, yv, T, eps):
    p, q = a.size, b.size
    table = np.zeros((p + 1, q + 1), dtype=np.bool_)
    _j1_feasible(a, b, xv, yv, T, eps, table)
    i, j, matched = p, q, []
    while i > 0 or j > 0:
        if i > 0 and j > 0 and table[i - 1, j - 1] and abs(a[i - 1] - b[j - 1]) <= eps:
            matched.append((float(a[i - 1]), float(b[j - 1])))
            i, j = i - 1, j - 1
        elif i > 0 and table[i - 1, j]:
            i -= 1
        else:
            j -= 1
    return {"matched_jumps": matched[::-1], "unmatched_x": p - len(matched),
            "unmatched_y": q - len(matched)}


def d_j1(x: CadlagPath, y: CadlagPath, T: float, *, max_states: int = J1_MAX_STATES,
         witness: bool = True) -> MetricResult:
    """Skorokhod J1 distance on ``[0, T]`` for step paths.

    Exact when ``(jumps_x + 1) * (jumps_y + 1) <= max_states``.  Otherwise the
    uniform distance is returned with a tolerance from a lower bound built
    from endpoint values and largest jumps.
    """
    _check(x, y, T)
    a, xv = _step_data(x, T)
    b, yv = _step_data(y, T)
    if (a.size + 1) * (b.size + 1) > max_states:
        upper = d_uniform(x, y, T).value
        lower = max(
            float(np.max(np.abs(xv[0] - yv[0]))),
            float(np.max(np.abs(xv[-1] - yv[-1]))),
            0.5 * abs(_max_jump(xv) - _max_jump(yv)),
        )
        return MetricResult(upper, "J1", upper - lower, {"fallback": "uniform"})
    empty = np.zeros((0, 0), dtype=np.bool_)
    hi = d_uniform(x, y, T).value
    if hi == 0.0:
        return MetricResult(0.0, "J1", 0.0, {"matched_jumps": [(float(t), float(t)) for t in a]}
                            if witness else None)
    lo = 0.0
    if _j1_feasible(a, b, xv, yv, T, 0.0, empty):
        hi = 0.0
    else:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if _j1_feasible(a, b, xv, yv, T, mid, empty):
                hi = mid
            else:
                lo = mid
        snap = _j1_candidates_in(a, b, xv, yv, T, lo, hi)
        if _j1_feasible(a, b, xv, yv, T, snap, empty):
            hi = snap
    wit = _j1_witness(a, b, xv, yv, T, hi) if witness and a.size * b.size <= 10**6 else None
    return MetricResult(float(hi), "J1", 0.0, wit)


def _max_jump(values):
    if values.shape[0] < 2:
        return 0.0
    return float(np.max(np.abs(np.diff(values, axis=0))))


# -- M1 ----------------------------------------------------------------------


def completed_graph(x: CadlagPath, T: float) -> np.ndarray:
    """Vertices ``(t, value)`` of the completed graph of a scalar path on ``[0, T]``.

    Each jump contributes a vertical segment from the left limit to the value.
    """
    if x.dim != 1:
        raise ValueError("M1 distance implemented for scalar paths")
    knots = x.knots[x.knots <= T]
    right = x.values[: knots.size, 0]
    pts = [(0.0, right[0])]
    if knots.size > 1:
        left = x.left_values_at_knots()[: knots.size - 1, 0]
        for t, lv, rv in zip(knots[1:], left, right[1:]):
            pts.append((t, lv))
            if rv != lv:
                pts.append((t, rv))
    pts.append((T, float(x._right(np.array([T]))[0, 0])))
    return np.array(pts, dtype=float)


def _densify(vertices: np.ndarray, resolution: float) -> np.ndarray:
    seg = np.diff(vertices, axis=0)
    length = np.max(np.abs(seg), axis=1)
    # count before allocating so an absurd resolution fails fast
    if 1 + np.sum(np.ceil(length / resolution)) > M1_MAX_POINTS:
        raise ValueError("resolution too fine: densified graphs exceed the point budget")
    pieces = np.maximum(np.ceil(length / resolution).astype(np.int64), 1)
    pieces[length == 0.0] = 0
    out = [vertices[:1]]
    for k in np.nonzero(pieces)[0]:
        frac = np.arange(1, pieces[k] + 1)[:, None] / pieces[k]
        out.append(vertices[k] + frac * seg[k])
    return np.concatenate(out)


@numba.njit(cache=True)
def _discrete_frechet_linf(p, q):
    n = p.shape[0]
    m = q.shape[0]
    prev = np.empty(m)
    cur = np.empty(m)
    for i in range(n):
        for j in range(m):
            d = max(abs(p[i, 0] - q[j, 0]), abs(p[i, 1] - q[j, 1]))
            if i == 0 and j == 0:
                best = d
            elif i == 0:
                best = max(cur[j - 1], d)
            elif j == 0:
                best = max(prev[0], d)
            else:
                best = max(min(prev[j], prev[j - 1], cur[j - 1]), d)
            cur[j] = best
        for j in range(m):
            prev[j] = cur[j]
    return prev[m - 1]


def default_m1_resolution(x: CadlagPath, y: CadlagPath, T: float) -> float:
    """``1e-3 * max(oscillation of x and y, T)``."""
    osc = 0.0
    for path in (x, y):
        g = completed_graph(path, T)
        osc = max(osc, float(g[:, 1].max() - g[:, 1].min()))
    return 1e-3 * max(osc, T)


def d_m1(x: CadlagPath, y: CadlagPath, T: float, resolution: Optional[float] = None,
         *, max_tolerance: Optional[float] = None) -> MetricResult:
    """Strong M1 distance for scalar paths, to within ``resolution``.

    The completed graphs are densified so that consecutive points are at most
    ``resolution`` apart in the max norm; their discrete Fréchet distance
    differs from the continuous one by at most ``resolution``.
    """
    _check(x, y, T)
    if resolution is None:
        resolution = default_m1_resolution(x, y, T)
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    if max_tolerance is not None and resolution > max_tolerance:
        raise ValueError("resolution too coarse for the requested tolerance")
    gx = completed_graph(x, T)
    gy = completed_graph(y, T)
    px = _densify(gx, resolution)
    py = _densify(gy, resolution)
    if np.array_equal(gx, gy):
        return MetricResult(0.0, "M1", 0.0, {"resolution": resolution})
    value = float(_discrete_frechet_linf(px, py))
    return MetricResult(value, "M1", float(resolution), {"resolution": resolution})
