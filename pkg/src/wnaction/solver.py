"""Exact maximization of the action over grid profiles.

States are grid heights at the integer points; the transition weight of a
unit interval is its column-midpoint noise sum minus ``slope**2 / 2``.
All maximizers share one tie-break: among optimal profiles the one that is
lexicographically smallest when its heights are read from the right end
(so a smaller predecessor height always wins a tie).

Heights passed to this module are real numbers on the y-grid of the field.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels as K
from .errors import InstanceTooLargeError, InvalidConfigError, OutOfWindowError
from .noise import NoiseField, regrow
from .profile import HeightProfile, coarsen, dyadic_scales

__all__ = [
    "DPSolution",
    "SweepResult",
    "maximize_fixed_bc",
    "brute_force_max",
    "boundary_sweep",
    "extremal_actions",
    "linear_action",
    "chain_action",
    "conditional_interval_max",
    "bin_extremal_interval",
    "coarse_sweep",
    "pasted_competitor",
    "two_scale_upper_bound",
    "BRUTE_FORCE_LIMIT",
    "MAX_DOUBLINGS",
]

BRUTE_FORCE_LIMIT = 10**7
MAX_DOUBLINGS = 4
_BIN_LIMIT = 64


@dataclass(frozen=True, eq=False)
class DPSolution:
    """Result of a boundary-constrained maximization.

    ``value`` is the maximum of ``(W - D)/L``.  ``value_function[x, k]`` is
    the best partial action (not normalized) over ``[0, x]`` ending at
    height ``heights[k]``; it is ``None`` for brute-force solutions.
    """

    value: float
    argmax: HeightProfile
    value_function: np.ndarray | None
    heights: np.ndarray
    cap_saturated: bool
    y_cap: float


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Inner maxima over a grid of boundary pairs.

    ``M[i, k]`` refers to the pair ``(boundary_grid[i], boundary_grid[k])``.
    """

    L: int
    window: float
    db: float
    boundary_grid: np.ndarray
    M: np.ndarray
    values: np.ndarray
    linear: np.ndarray
    midpoints: np.ndarray
    per_scale_D_max: dict = dc_field(default_factory=dict)
    cap_saturated: bool = False
    y_cap: float = 0.0

    def index(self, y: float) -> int:
        hits = np.flatnonzero(self.boundary_grid == y)
        if hits.size == 0:
            raise KeyError(f"{y} is not on the boundary grid")
        return int(hits[0])

    def pair(self, y0: float, y1: float) -> float:
        return float(self.M[self.index(y0), self.index(y1)])


def _grid_index(field: NoiseField, y: float) -> int:
    t = y / field.dy
    if t != round(t):
        raise InvalidConfigError(f"height {y} is not a multiple of dy={field.dy}")
    return int(round(t))


def _ensure_window(field: NoiseField, ys, auto: bool) -> NoiseField:
    reach = max(abs(float(y)) for y in ys)
    if reach <= field.y_cap:
        return field
    if not auto:
        raise OutOfWindowError(f"boundary height {reach} outside the window {field.y_cap}")
    cap = field.y_cap
    while reach > cap:
        cap *= 2
    return regrow(field, cap)


def _is_saturated(idx: np.ndarray, J: int) -> bool:
    return bool(np.any(np.abs(idx) >= J - 1))


def _profile(field: NoiseField, idx: np.ndarray, scale: int = 1) -> HeightProfile:
    return HeightProfile(field.L, scale, idx * field.dy, field.dy)


def _paths(field: NoiseField) -> np.ndarray:
    return np.ascontiguousarray(field.paths)


def chain_action(field: NoiseField, h: HeightProfile) -> float:
    """``(W - D)(h)`` summed in the same order as the dynamic program.

    Node values of ``h`` must lie on the y-grid.
    """
    idx = np.array([_grid_index(field, y) for y in h.values], dtype=np.int64)
    if np.any(np.abs(idx) > field.J):
        raise OutOfWindowError("profile leaves the sampled window")
    return float(K.path_total(_paths(field), field.J, field.m, h.scale, field.dy, idx))


def linear_action(field: NoiseField, y0: float, y1: float) -> float:
    """``(W - D)(a_{y0, y1})`` with the solver's quadrature and summation order."""
    i0, i1 = _grid_index(field, y0), _grid_index(field, y1)
    if max(abs(i0), abs(i1)) > field.J:
        raise OutOfWindowError("boundary height outside the window")
    out = K.linear_totals(
        _paths(field), field.J, field.m, field.L, field.dy,
        np.array([i0], dtype=np.int64), np.array([i1], dtype=np.int64),
    )
    return float(out[0, 0])


def maximize_fixed_bc(
    field: NoiseField, y0: float = 0.0, y1: float = 0.0, *, max_doublings: int = MAX_DOUBLINGS
) -> DPSolution:
    """Maximize ``(W - D)(h)/L`` over grid profiles with ``h(0)=y0``, ``h(L)=y1``.

    If the maximizer comes within one grid step of the window edge the
    field is regrown with a doubled cap, at most ``max_doublings`` times;
    the returned solution reports whether it is still saturated.
    """
    field = _ensure_window(field, (y0, y1), auto=max_doublings > 0)
    for attempt in range(max_doublings + 1):
        i0, i1 = _grid_index(field, y0), _grid_index(field, y1)
        J = field.J
        F, P = K.forward_dp(_paths(field), J, field.m, 1, field.L, field.dy, i0)
        idx = K.backtrack(P, J, i1)
        saturated = _is_saturated(idx, J)
        if not saturated or attempt == max_doublings:
            break
        field = regrow(field, 2 * field.y_cap)
    heights = np.arange(-J, J + 1) * field.dy
    return DPSolution(
        value=float(F[field.L, J + i1]) / field.L,
        argmax=_profile(field, idx),
        value_function=F,
        heights=heights,
        cap_saturated=saturated,
        y_cap=field.y_cap,
    )


def brute_force_max(field: NoiseField, y0: float = 0.0, y1: float = 0.0) -> DPSolution:
    """Exhaustive enumeration of all interior heights (tiny instances only).

    Raises
    ------
    InstanceTooLargeError
        If ``K**(L-1)`` exceeds ``BRUTE_FORCE_LIMIT``.
    """
    J = field.J
    n_heights = 2 * J + 1
    if n_heights ** max(field.L - 1, 0) > BRUTE_FORCE_LIMIT:
        raise InstanceTooLargeError(
            f"{n_heights}**{field.L - 1} assignments exceed the limit {BRUTE_FORCE_LIMIT}"
        )
    i0, i1 = _grid_index(field, y0), _grid_index(field, y1)
    if max(abs(i0), abs(i1)) > J:
        raise OutOfWindowError("boundary height outside the window")
    W = K.weight_tables(_paths(field), J, field.m, 1, field.L, field.dy)
    best, idx = K.brute_force(W, J, i0, i1)
    return DPSolution(
        value=float(best) / field.L,
        argmax=_profile(field, idx),
        value_function=None,
        heights=np.arange(-J, J + 1) * field.dy,
        cap_saturated=_is_saturated(idx, J),
        y_cap=field.y_cap,
    )


def _boundary_grid(window: float, db: float, dy: float) -> np.ndarray:
    if db <= 0 or window < 0:
        raise InvalidConfigError("need db > 0 and window >= 0")
    if db / dy != round(db / dy):
        raise InvalidConfigError(f"db={db} is not a multiple of dy={dy}")
    k = int(np.floor(window / db + 1e-12))
    return np.arange(-k, k + 1) * db


def boundary_sweep(
    field: NoiseField, window: float, db: float, *, max_doublings: int = MAX_DOUBLINGS
) -> SweepResult:
    """Inner maxima relative to the linear part over ``|y0|, |y1| <= window``.

    The boundary grid is the multiples of ``db`` in ``[-window, window]``.
    Alongside ``M`` the result records the argmax height at ``L/2`` for
    every pair and, per dyadic ``rho``, the largest ``D(h*_rho)/L`` over
    pairs.
    """
    ys = _boundary_grid(window, db, field.dy)
    field = _ensure_window(field, ys, auto=max_doublings > 0)
    L = field.L
    for attempt in range(max_doublings + 1):
        idx = np.round(ys / field.dy).astype(np.int64)
        B = _paths(field)
        values, mids, emax, saturated = K.sweep_summary(
            B, field.J, field.m, L, field.dy, idx, idx, L // 2
        )
        if not saturated or attempt == max_doublings:
            break
        field = regrow(field, 2 * field.y_cap)
    lin = K.linear_totals(B, field.J, field.m, L, field.dy, idx, idx)
    if L == 1:
        midpoints = 0.5 * (ys[:, None] + ys[None, :])
    else:
        midpoints = mids * field.dy
    return SweepResult(
        L=L,
        window=float(window),
        db=float(db),
        boundary_grid=ys,
        M=(values - lin) / L,
        values=values / L,
        linear=lin / L,
        midpoints=midpoints,
        per_scale_D_max={rho: float(e) / L for rho, e in zip(dyadic_scales(1, L), emax)},
        cap_saturated=bool(saturated),
        y_cap=field.y_cap,
    )


def extremal_actions(sweep: SweepResult) -> tuple[float, float]:
    """``(A_plus, A_minus)``: max and min of ``M`` over the swept pairs."""
    return float(np.max(sweep.M)), float(np.min(sweep.M))


def _conditional(field: NoiseField, y0: float, y1: float) -> tuple[float, DPSolution]:
    sol = maximize_fixed_bc(field, y0, y1)
    return sol.value - linear_action(field, y0, y1) / field.L, sol


def _check_interval(field: NoiseField, n: int, l: int) -> None:
    if field.L % l or not (1 <= n <= field.L // l):
        raise IndexError(f"interval {n} of length {l} outside [0, {field.L}]")


def conditional_interval_max(field: NoiseField, base: HeightProfile, n: int, l: int | None = None) -> float:
    """Best zero-boundary correction of ``base`` on the ``n``-th interval.

    Returns ``max (W_n - D)(h_n) / l`` where ``h_n`` ranges over corrections
    making ``base + h_n`` a grid profile on ``[(n-1) l, n l]``.  Because
    ``base`` is linear there, this is the inner maximum relative to the
    linear part of the sub-problem with the base's end values.
    """
    l = base.scale if l is None else l
    _check_interval(field, n, l)
    y0, y1 = float(base.at((n - 1) * l)), float(base.at(n * l))
    value, _ = _conditional(field.window((n - 1) * l, l), y0, y1)
    return value


def bin_extremal_interval(
    field: NoiseField, bin, n: int, l: int, offsets_window: float | None = None
) -> tuple[float, float]:
    """Sup and inf of ``conditional_interval_max`` over the members of a bin.

    Members are coarse profiles whose node values lie on the y-grid in
    ``[Pi - w, Pi + w)`` around the net point ``bin`` (``w = l/2`` unless
    ``offsets_window`` is smaller).  Only the two end nodes of interval
    ``n`` matter, so all endpoint offsets are solved in one sweep.
    """
    _check_interval(field, n, l)
    w = l / 2 if offsets_window is None else float(offsets_window)
    if w > l / 2 or w < 0:
        raise InvalidConfigError("offsets_window must lie in [0, l/2]")
    count = int(np.ceil(w / field.dy)) if w > 0 else 0
    offsets = np.arange(-count, max(count, 1)) * field.dy
    if offsets.size > _BIN_LIMIT:
        raise InstanceTooLargeError(f"{offsets.size} offsets per endpoint exceed {_BIN_LIMIT}")
    vals = np.asarray(bin.values, dtype=np.float64)
    sub = field.window((n - 1) * l, l)
    starts = vals[n - 1] + offsets
    ends = vals[n] + offsets
    sub = _ensure_window(sub, np.concatenate([starts, ends]), auto=True)
    for attempt in range(MAX_DOUBLINGS + 1):
        s_idx = np.round(starts / sub.dy).astype(np.int64)
        e_idx = np.round(ends / sub.dy).astype(np.int64)
        B = _paths(sub)
        values, profiles = K.sweep(B, sub.J, sub.m, 1, l, sub.dy, s_idx, e_idx, True)
        if not _is_saturated(profiles, sub.J) or attempt == MAX_DOUBLINGS:
            break
        sub = regrow(sub, 2 * sub.y_cap)
    lin = K.linear_totals(B, sub.J, sub.m, l, sub.dy, s_idx, e_idx)
    M = (values - lin) / l
    return float(np.max(M)), float(np.min(M))


def coarse_sweep(field: NoiseField, l: int, ys: np.ndarray, *, keep_profiles: bool = True):
    """Inner maxima over coarse profiles (nodes at multiples of ``l``).

    Returns ``(M, profiles)`` where ``profiles[i, k]`` are the node indices
    of the coarse maximizer for the pair ``(ys[i], ys[k])``.
    """
    if field.L % l:
        raise InvalidConfigError(f"l={l} does not divide L={field.L}")
    idx = np.array([_grid_index(field, y) for y in ys], dtype=np.int64)
    B = _paths(field)
    values, profiles = K.sweep(B, field.J, field.m, l, field.L // l, field.dy, idx, idx, keep_profiles)
    lin = K.linear_totals(B, field.J, field.m, field.L, field.dy, idx, idx)
    return (values - lin) / field.L, profiles


def pasted_competitor(field: NoiseField, l: int, y0: float = 0.0, y1: float = 0.0) -> tuple[float, HeightProfile]:
    """Two-scale competitor for the problem with boundary values ``(y0, y1)``.

    The coarse maximizer at scale ``l`` is refined on every interval by the
    maximizer of the conditional problem with its end values.  The pasted
    profile is admissible, so its action per length never exceeds the
    optimum.
    """
    M, profiles = coarse_sweep(field, l, np.array([y0, y1]))
    coarse = profiles[0, 1]
    L = field.L
    heights = np.empty(L + 1, dtype=np.int64)
    heights[0] = coarse[0]
    for n in range(1, L // l + 1):
        sub = field.window((n - 1) * l, l)
        _, sol = _conditional(sub, coarse[n - 1] * field.dy, coarse[n] * field.dy)
        heights[(n - 1) * l:n * l + 1] = np.round(sol.argmax.values / field.dy).astype(np.int64)
    h = _profile(field, heights)
    return chain_action(field, h) / L, h


def two_scale_upper_bound(field: NoiseField, l: int, window: float, db: float) -> dict:
    """Both sides of the per-realization two-scale bound on ``A_plus``.

    With ``h*`` the maximizer attaining ``A_plus`` and ``Pi`` the net
    projection of ``h*_{>=l}``::

        A_plus <= A_plus(coarse) + mean_n sup_{bin Pi} A_{l,n}.
    """
    from .net import project

    sweep = boundary_sweep(field, window, db)
    a_plus, _ = extremal_actions(sweep)
    i, k = np.unravel_index(int(np.argmax(sweep.M)), sweep.M.shape)
    ys = sweep.boundary_grid
    y0, y1 = float(ys[i]), float(ys[k])
    h_star = maximize_fixed_bc(field, y0, y1).argmax
    M_coarse, _ = coarse_sweep(field, l, ys, keep_profiles=False)
    a_plus_coarse = float(np.max(M_coarse))
    pi = project(coarsen(h_star, l))
    sups = [bin_extremal_interval(field, pi, n, l)[0] for n in range(1, field.L // l + 1)]
    rhs = a_plus_coarse + float(np.mean(sups))
    return {
        "a_plus": a_plus,
        "a_plus_coarse": a_plus_coarse,
        "mean_sup": float(np.mean(sups)),
        "rhs": rhs,
        "pair": (y0, y1),
        "holds": a_plus <= rhs + 1e-9,
    }
