"""Piecewise-linear height profiles and their multiscale structure.

A profile is stored by its values at the multiples of a dyadic ``scale``
and interpolated linearly in between.  Heights are float64 in y-units.
Every height produced by this package is a dyadic rational of modest size,
so coarsening, differencing and interpolation are exact in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigError
from .noise import is_dyadic_int

__all__ = [
    "HeightProfile",
    "RescaleSpec",
    "coarsen",
    "refine",
    "scale_component",
    "dyadic_scales",
    "linear_part",
    "dirichlet",
    "dirichlet_bilinear",
    "per_scale_dirichlet",
    "green_profile",
    "rescale",
]


@dataclass(frozen=True, eq=False)
class HeightProfile:
    """Grid values ``h(n * scale)`` for ``n = 0, ..., L / scale``.

    Parameters
    ----------
    L : int
        System length, a power of two.
    scale : int
        Node spacing, a power of two dividing ``L``.
    values : array_like
        Heights at the nodes, in y-units.
    dy : float
        The y-grid step the heights refer to (used for snapping checks and
        serialization only).
    """

    L: int
    scale: int
    values: np.ndarray
    dy: float = 0.25

    def __post_init__(self):
        if not is_dyadic_int(self.L):
            raise InvalidConfigError(f"L must be a power of two, got {self.L!r}")
        if not is_dyadic_int(self.scale) or self.scale > self.L:
            raise InvalidConfigError(f"scale must be a power of two dividing L, got {self.scale!r}")
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.shape[0] != self.L // self.scale + 1:
            raise InvalidConfigError(
                f"expected {self.L // self.scale + 1} node values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidConfigError("profile values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "scale", int(self.scale))

    @classmethod
    def zeros(cls, L: int, scale: int = 1, dy: float = 0.25) -> "HeightProfile":
        return cls(L, scale, np.zeros(L // scale + 1), dy)

    @property
    def n_pieces(self) -> int:
        return self.L // self.scale

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / self.scale

    def at(self, x) -> np.ndarray:
        """Evaluate at arbitrary ``x`` in ``[0, L]``."""
        return np.interp(x, np.arange(self.n_pieces + 1) * self.scale, self.values)

    def lattice_values(self) -> np.ndarray:
        """Values at the integer points ``0, ..., L``."""
        return refine(self, 1).values

    def _binary(self, other: "HeightProfile", op) -> "HeightProfile":
        if not isinstance(other, HeightProfile):
            return NotImplemented
        if other.L != self.L:
            raise InvalidConfigError(f"length mismatch: {self.L} vs {other.L}")
        scale = min(self.scale, other.scale)
        a, b = refine(self, scale), refine(other, scale)
        return HeightProfile(self.L, scale, op(a.values, b.values), self.dy)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return HeightProfile(self.L, self.scale, -self.values, self.dy)

    def scaled(self, factor: float) -> "HeightProfile":
        return HeightProfile(self.L, self.scale, factor * self.values, self.dy)

    def equals(self, other: "HeightProfile") -> bool:
        """Equality as functions on ``[0, L]``."""
        if other.L != self.L:
            return False
        return bool(np.array_equal((self - other).values, np.zeros(self.L // min(self.scale, other.scale) + 1)))

    def __repr__(self):
        return f"HeightProfile(L={self.L}, scale={self.scale}, values={self.values.tolist()})"


@dataclass(frozen=True)
class RescaleSpec:
    """Anisotropic rescaling ``x -> lam * x``, ``y -> mu * y``."""

    lam: int
    mu: float

    def __post_init__(self):
        if not is_dyadic_int(self.lam):
            raise InvalidConfigError(f"lam must be a power of two >= 1, got {self.lam!r}")
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise InvalidConfigError(f"mu must be positive, got {self.mu!r}")


def _check_scale(h: HeightProfile, l: int, *, coarser: bool) -> None:
    if not is_dyadic_int(l) or h.L % l:
        raise InvalidConfigError(f"scale {l!r} is not a power of two dividing L={h.L}")
    if coarser and l < h.scale:
        raise InvalidConfigError(f"scale {l} is finer than the profile's scale {h.scale}")


def coarsen(h: HeightProfile, l: int) -> HeightProfile:
    """Linear interpolation of ``h`` on the grid of spacing ``l``."""
    _check_scale(h, l, coarser=True)
    return HeightProfile(h.L, l, h.values[:: l // h.scale], h.dy)


def refine(h: HeightProfile, l: int) -> HeightProfile:
    """The same function described on the finer grid of spacing ``l``."""
    if not is_dyadic_int(l) or l > h.scale:
        raise InvalidConfigError(f"cannot refine scale {h.scale} to {l!r}")
    if l == h.scale:
        return h
    k = h.scale // l
    v = h.values
    frac = np.arange(k) / k
    body = v[:-1, None] + (v[1:] - v[:-1])[:, None] * frac[None, :]
    return HeightProfile(h.L, l, np.append(body.ravel(), v[-1]), h.dy)


def dyadic_scales(lo: int, L: int) -> list[int]:
    """``[lo, 2 lo, ..., L]``."""
    out, rho = [], lo
    while rho <= L:
        out.append(rho)
        rho *= 2
    return out


def scale_component(h: HeightProfile, rho: int) -> HeightProfile:
    """The band ``h_{>=rho} - h_{>=2 rho}`` (``h_{>=L}`` itself at ``rho = L``).

    Returned on the grid of spacing ``rho``.  Summed over ``rho = h.scale,
    ..., L`` the components reproduce ``h``.
    """
    _check_scale(h, rho, coarser=True)
    fine = coarsen(h, rho)
    if rho == h.L:
        return fine
    return fine - refine(coarsen(h, 2 * rho), rho)


def linear_part(y0: float, y1: float, L: int, scale: int = 1, dy: float = 0.25) -> HeightProfile:
    """The affine profile ``a_{y0, y1}`` on ``[0, L]``."""
    if not (math.isfinite(y0) and math.isfinite(y1)):
        raise InvalidConfigError("boundary values must be finite")
    n = L // scale
    # exact for dyadic data: y0 + (y1 - y0) * k / n with n a power of two
    values = y0 + (y1 - y0) * (np.arange(n + 1) / n)
    return HeightProfile(L, scale, values, dy)


def dirichlet(h: HeightProfile) -> float:
    """``(1/2) * integral of h'^2``."""
    d = np.diff(h.values)
    return 0.5 * float(np.dot(d, d)) / h.scale


def dirichlet_bilinear(h: HeightProfile, g: HeightProfile) -> float:
    """``(1/2) * integral of h' g'``, on the finer of the two grids."""
    if h.L != g.L:
        raise InvalidConfigError(f"length mismatch: {h.L} vs {g.L}")
    scale = min(h.scale, g.scale)
    dh = np.diff(refine(h, scale).values)
    dg = np.diff(refine(g, scale).values)
    return 0.5 * float(np.dot(dh, dg)) / scale


def per_scale_dirichlet(h: HeightProfile) -> dict[int, float]:
    """``rho -> D(h_rho)`` over every dyadic ``rho`` from ``h.scale`` to ``L``."""
    return {rho: dirichlet(scale_component(h, rho)) for rho in dyadic_scales(h.scale, h.L)}


def green_profile(x: int, L: int, dy: float = 0.25) -> HeightProfile:
    """Tent ``G(x, .)`` with ``dirichlet_bilinear(h, G) = h(x)`` for zero-boundary ``h``.

    Solves ``g'' = -2 delta_x`` with zero boundary values; the peak is
    ``2 x (L - x) / L``.
    """
    if not isinstance(x, (int, np.integer)) or not 0 < x < L:
        raise InvalidConfigError(f"x must be an interior lattice point of [0, {L}], got {x!r}")
    k = np.arange(L + 1, dtype=np.float64)
    values = np.where(k <= x, 2.0 * k * (L - x) / L, 2.0 * x * (L - k) / L)
    return HeightProfile(L, 1, values, dy)


def rescale(h: HeightProfile, spec: RescaleSpec, dy: float | None = None) -> HeightProfile:
    """``h_hat(lam * x) = mu * h(x)`` on ``[0, lam * L]``.

    Refuses when ``mu * h`` leaves the target y-grid ``dy`` (default
    ``h.dy``) so every downstream comparison stays exact.
    """
    target = h.dy if dy is None else dy
    vals = spec.mu * h.values
    ratio = vals / target
    if not np.array_equal(ratio, np.round(ratio)):
        raise InvalidConfigError(f"rescaled heights are not multiples of dy={target}")
    return HeightProfile(h.L * spec.lam, h.scale * spec.lam, vals, target)
