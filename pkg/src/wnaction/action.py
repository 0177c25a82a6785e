"""Noise integral, Dirichlet term and the action of a profile.

The noise integral uses column-midpoint quadrature: inside column ``i`` the
profile is frozen at its value at the column midpoint, snapped to the
y-grid (exact halves round toward zero), so that

    W_hat(h) = sum_i B_i(snap(h(x_i_mid))).

Every profile in the package has dyadic heights, so the snapped index is
computed without rounding error and the dynamic programs in ``solver`` see
exactly the same quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import InvalidConfigError, OutOfWindowError
from .noise import NoiseField
from .profile import (
    HeightProfile,
    coarsen,
    dirichlet,
    linear_part,
    per_scale_dirichlet,
    refine,
)

__all__ = [
    "ActionBreakdown",
    "snapped_indices",
    "noise_integral",
    "action_of",
    "relative_interval_noise",
    "decompose_action",
]


@dataclass(frozen=True)
class ActionBreakdown:
    """The two terms of the action and its per-length normalization."""

    W: float
    D: float
    action: float
    action_per_length: float
    per_scale_D: dict = dc_field(default_factory=dict)


def _snap(t: np.ndarray) -> np.ndarray:
    # round half toward zero
    return np.where(t >= 0, np.ceil(t - 0.5), -np.ceil(-t - 0.5)).astype(np.int64)


def snapped_indices(h: HeightProfile, m: int, dy: float) -> np.ndarray:
    """Signed y-grid index of ``h`` at every column midpoint."""
    n = h.scale * m
    den = 2 * n
    idx = h.values / dy
    a = np.repeat(idx[:-1], n)
    d = np.repeat(np.diff(idx), n)
    odd = np.tile(2 * np.arange(n) + 1, h.n_pieces)
    # a * den + d * odd is exact for dyadic heights; dividing by den is too
    return _snap((a * den + d * odd) / den)


def noise_integral(field: NoiseField, h: HeightProfile) -> float:
    """Quadrature value of the subgraph integral of the noise.

    Raises
    ------
    OutOfWindowError
        If a snapped height leaves the sampled window.
    """
    if h.L != field.L:
        raise InvalidConfigError(f"profile length {h.L} does not match field length {field.L}")
    j = snapped_indices(h, field.m, field.dy)
    J = field.J
    worst = int(np.max(np.abs(j))) if j.size else 0
    if worst > J:
        raise OutOfWindowError(f"profile reaches index {worst}, window holds {J}")
    cols = np.arange(j.shape[0])
    return float(np.sum(field.paths[cols, J + j]))


def action_of(field: NoiseField, h: HeightProfile) -> ActionBreakdown:
    W = noise_integral(field, h)
    D = dirichlet(h)
    act = W - D
    psd = {rho: e / h.L for rho, e in per_scale_dirichlet(h).items()}
    return ActionBreakdown(W=W, D=D, action=act, action_per_length=act / h.L, per_scale_D=psd)


def _interval_base(base: HeightProfile, n: int, l: int) -> HeightProfile:
    x0 = (n - 1) * l
    y0, y1 = base.at(x0), base.at(x0 + l)
    if base.scale < l:
        seg = base.values[x0 // base.scale:(x0 + l) // base.scale + 1]
        if not np.array_equal(seg, linear_part(float(y0), float(y1), l, base.scale).values):
            raise InvalidConfigError("base must be linear on each interval of length l")
    return linear_part(float(y0), float(y1), l, dy=base.dy)


def relative_interval_noise(
    field: NoiseField, base: HeightProfile, n: int, l: int, correction: HeightProfile
) -> float:
    """``W_I(base + correction) - W_I(base)`` on ``I = [(n-1) l, n l]``.

    ``correction`` lives on ``[0, l]`` with zero boundary values and is
    shifted onto the ``n``-th interval (``n`` counts from 1).
    """
    if base.L != field.L:
        raise InvalidConfigError("base length does not match the field")
    if not (1 <= n <= field.L // l) or field.L % l:
        raise IndexError(f"interval {n} of length {l} outside [0, {field.L}]")
    if correction.L != l:
        raise InvalidConfigError(f"correction must live on [0, {l}]")
    if correction.values[0] != 0 or correction.values[-1] != 0:
        raise InvalidConfigError("correction must vanish at both ends")
    local = _interval_base(base, n, l)
    sub = field.window((n - 1) * l, l)
    return noise_integral(sub, local + correction) - noise_integral(sub, local)


def decompose_action(field: NoiseField, h: HeightProfile, l: int):
    """Split the action of ``h`` into a coarse part and interval corrections.

    Returns
    -------
    coarse : ActionBreakdown
        Breakdown of ``h_{>=l}``.
    fine_terms : list of float
        ``(W_n - D)(h_n) / l`` for ``n = 1, ..., L / l``.
    residual : float
        ``(W-D)(h)/L - (W-D)(h_{>=l})/L - (l/L) * sum(fine_terms)``; zero up to
        rounding for every input.
    """
    if h.scale > l:
        raise InvalidConfigError(f"profile scale {h.scale} is coarser than l={l}")
    hc = coarsen(h, l)
    coarse = action_of(field, hc)
    full = action_of(field, h)
    delta = (h - refine(hc, h.scale)).values
    k = l // h.scale
    terms = []
    for n in range(1, h.L // l + 1):
        piece = HeightProfile(l, h.scale, delta[(n - 1) * k:n * k + 1], h.dy)
        wn = relative_interval_noise(field, hc, n, l, piece)
        terms.append((wn - dirichlet(piece)) / l)
    residual = full.action_per_length - coarse.action_per_length - (l / h.L) * sum(terms)
    return coarse, terms, residual
