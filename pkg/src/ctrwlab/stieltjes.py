"""Pathwise Stieltjes integrals with predictable integrands and the reserve equation.

Integrands are always evaluated at left limits ``H(s-)``.  For piecewise-affine
paths the integral

    I(t) = sum_{s <= t} H(s-) dX_s + int_0^t H(s) X'(s) ds

is computed exactly whenever at most one of ``H`` and ``X`` has nonzero slope,
or ``X`` is a step path and ``H`` is an arbitrary continuous function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .cadlag import CadlagPath, GridPath, exp_transform, pointwise

__all__ = [
    "IntegralPath",
    "OuterIntegral",
    "ReserveCheck",
    "integrate",
    "outer_integral",
    "integration_by_parts_check",
    "reserve_path",
    "verify_reserve_sde",
]

Integrand = Union[CadlagPath, Callable[[np.ndarray], np.ndarray]]


class IntegralPath(CadlagPath):
    """``t -> int_0^t H(s-) dX_s`` together with its integrand and integrator."""

    __slots__ = ("integrand", "integrator", "mode")

    def __init__(self, knots, values, slopes, horizon, integrand, integrator, mode):
        super().__init__(knots, values, slopes, horizon)
        self.integrand = integrand
        self.integrator = integrator
        self.mode = mode


def _horizon_check(paths, T):
    for p in paths:
        if isinstance(p, CadlagPath) and T > p.horizon:
            raise ValueError("horizon mismatch: path not defined on [0, T]")


def _times_up_to(path: CadlagPath, T: float) -> np.ndarray:
    return path.knots[path.knots <= T]


def integrate(H: Integrand, X: CadlagPath, T: float, mode: str = "exact",
              grid_step: Optional[float] = None) -> IntegralPath:
    """``int_0^t H(s-) dX_s`` on ``[0, T]``.

    ``H`` is a path (scalar or of the same dimension as ``X``, multiplied
    componentwise) or a vectorized continuous function of time.  ``mode="grid"``
    resamples both paths on a grid of step ``grid_step`` and returns the forward
    sum ``sum_k H(t_k) (X(t_{k+1}) - X(t_k))``.
    """
    _horizon_check((H, X), T)
    if mode == "grid":
        return _integrate_grid(H, X, T, grid_step)
    if mode != "exact":
        raise ValueError("mode must be 'exact' or 'grid'")
    if callable(H) and not isinstance(H, CadlagPath):
        return _integrate_function(H, X, T)
    if H.dim not in (1, X.dim):
        raise ValueError("integrand dimension must be 1 or match the integrator")
    if not (H.is_step or X.is_step):
        raise ValueError("exact mode needs a step integrand or a step integrator; use mode='grid'")
    knots = np.unique(np.concatenate([_times_up_to(H, T), _times_up_to(X, T)]))
    dim = max(H.dim, X.dim)
    dx_jump = X._right(knots[1:]) - X._left(knots[1:])
    jump_part = H._left(knots[1:]) * dx_jump
    if X.is_step:
        slope = np.zeros((knots.size, dim))
    else:
        # H is a step path here, so H(s) = H(u_k) on each piece
        x_slope = X.slopes[np.searchsorted(X.knots, knots, side="right") - 1]
        slope = H._right(knots) * x_slope
    values = np.zeros((knots.size, dim))
    if knots.size > 1:
        values[1:] = np.cumsum(slope[:-1] * np.diff(knots)[:, None] + jump_part, axis=0)
    return IntegralPath(knots, values, slope, T, H, X, "exact")


def _integrate_function(f, X: CadlagPath, T: float) -> IntegralPath:
    if not X.is_step:
        raise ValueError("function integrands need a step integrator in exact mode")
    times, sizes = X.jumps()
    keep = times <= T
    times, sizes = times[keep], sizes[keep]
    weights = np.asarray(f(times), dtype=float).reshape(times.size, -1)
    inc = weights * sizes
    knots = np.concatenate([[0.0], times])
    values = np.concatenate([np.zeros((1, inc.shape[1])), np.cumsum(inc, axis=0)])
    return IntegralPath(knots, values, None, T, f, X, "exact")


def _integrate_grid(H, X, T, grid_step):
    if grid_step is None:
        grid_step = X.grid_step if isinstance(X, GridPath) else 1e-3 * T
    k = round(T / grid_step)
    if k < 1 or not math.isclose(k * grid_step, T, rel_tol=1e-9):
        raise ValueError("grid_step must divide T")
    t = np.minimum(np.arange(k + 1) * grid_step, T)
    xv = X._right(t)
    if isinstance(H, CadlagPath):
        hv = H._right(t[:-1])
    else:
        hv = np.asarray(H(t[:-1]), dtype=float).reshape(k, -1)
    inc = hv * np.diff(xv, axis=0)
    values = np.concatenate([np.zeros((1, inc.shape[1])), np.cumsum(inc, axis=0)])
    out = GridPath(grid_step, values, horizon=T)
    return IntegralPath(out.knots, out.values, None, T, H, X, "grid")


@dataclass
class OuterIntegral:
    """Matrix of integrals ``int Z^i_- dZtilde^j``."""

    entries: list

    @property
    def shape(self):
        return len(self.entries), len(self.entries[0])

    def eval(self, t) -> np.ndarray:
        return np.array([[e.eval(t) for e in row] for row in self.entries])


def outer_integral(Z: CadlagPath, Zt: CadlagPath, T: float, mode: str = "exact",
                   grid_step: Optional[float] = None) -> OuterIntegral:
    """``(i, j) -> int_0^. Z^i(s-) dZtilde^j_s``."""
    _horizon_check((Z, Zt), T)
    entries = [
        [integrate(Z.component(i), Zt.component(j), T, mode, grid_step) for j in range(Zt.dim)]
        for i in range(Z.dim)
    ]
    return OuterIntegral(entries)


def integration_by_parts_check(H: CadlagPath, X: CadlagPath, T: float) -> float:
    """Residual of ``H X |_0^T = int H_- dX + int X_- dH + sum dH dX`` for step paths."""
    if not (H.is_step and X.is_step) or H.dim != 1 or X.dim != 1:
        raise ValueError("integration by parts check needs scalar step paths")
    _horizon_check((H, X), T)
    i_hx = integrate(H, X, T).eval(T)
    i_xh = integrate(X, H, T).eval(T)
    knots = np.unique(np.concatenate([_times_up_to(H, T), _times_up_to(X, T)]))[1:]
    dh = H._right(knots)[:, 0] - H._left(knots)[:, 0]
    dx = X._right(knots)[:, 0] - X._left(knots)[:, 0]
    cross = math.fsum(dh * dx)
    total = math.fsum([H.eval(T) * X.eval(T), -H.eval(0.0) * X.eval(0.0), -i_hx, -i_xh, -cross])
    return abs(total)


def reserve_path(U0: float, R: CadlagPath, P: CadlagPath, T: float, mode: str = "exact",
                 grid_step: Optional[float] = None) -> CadlagPath:
    """``U_t = exp(R_t) (U0 + int_0^t exp(-R_{s-}) dP_s)``.

    Exact mode needs step paths without common jump times; grid mode
    resamples on a grid and uses the forward-sum integral.
    """
    _horizon_check((R, P), T)
    if mode == "grid":
        if grid_step is None:
            grid_step = R.grid_step if isinstance(R, GridPath) else 1e-3 * T
        r_grid = R.sample_grid(grid_step, T)
        integral = integrate(lambda t: np.exp(-r_grid._right(t)), P, T, "grid", grid_step)
        k = round(T / grid_step)
        t = np.minimum(np.arange(k + 1) * grid_step, T)
        values = np.exp(r_grid._right(t)[:, 0]) * (U0 + integral._right(t)[:, 0])
        return GridPath(grid_step, values, horizon=T)
    if not (R.is_step and P.is_step):
        raise ValueError("exact mode needs step paths; use mode='grid'")
    rt = R.jump_times()
    pt = P.jump_times()
    common = np.intersect1d(rt[rt <= T], pt[pt <= T])
    if common.size:
        raise ValueError(f"common jump time detected at t={common[0]!r}")
    r_T = R.restrict(T) if R.horizon > T else R
    p_T = P.restrict(T) if P.horizon > T else P
    discount = exp_transform(-r_T)
    integral = integrate(discount, p_T, T)
    return pointwise(lambda s, i: s * (U0 + i), exp_transform(r_T), integral)


@dataclass(frozen=True)
class ReserveCheck:
    ok: bool
    time: Optional[float] = None
    max_error: float = 0.0

    def __bool__(self) -> bool:
        return self.ok


def verify_reserve_sde(U: CadlagPath, S: CadlagPath, P: CadlagPath, tol: float = 1e-10) -> ReserveCheck:
    """Check ``dU = U_- dS / S_- + dP`` jump by jump.

    At each jump time the defect ``|dU - (U_- dS / S_- + dP)|`` must not exceed
    ``tol * max(|U_-|, |U|, |dP|)``; with step ``S`` and ``P`` the path ``U``
    must also be constant between jumps.
    """
    if not (S.is_step and P.is_step):
        raise ValueError("reserve check needs step paths S and P")
    if not U.is_step:
        return ReserveCheck(False, float(U.knots[np.argmax(np.any(U.slopes != 0, axis=1))]), math.inf)
    T = min(U.horizon, S.horizon, P.horizon)
    knots = np.unique(np.concatenate([_times_up_to(U, T), _times_up_to(S, T), _times_up_to(P, T)]))
    knots = knots[knots > 0.0]
    if knots.size == 0:
        return ReserveCheck(True)
    u_l, u_r = U._left(knots)[:, 0], U._right(knots)[:, 0]
    s_l, s_r = S._left(knots)[:, 0], S._right(knots)[:, 0]
    p_l, p_r = P._left(knots)[:, 0], P._right(knots)[:, 0]
    du, ds, dp = u_r - u_l, s_r - s_l, p_r - p_l
    err = np.abs(du - (u_l * ds / s_l + dp))
    scale = np.maximum.reduce([np.abs(u_l), np.abs(u_r), np.abs(dp)])
    bad = err > tol * scale
    rel = np.where(scale > 0, err / np.where(scale > 0, scale, 1.0), err)
    if np.any(bad):
        k = int(np.argmax(bad))
        return ReserveCheck(False, float(knots[k]), float(rel.max()))
    return ReserveCheck(True, None, float(rel.max()))
