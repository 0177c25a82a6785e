"""Estimators and fits for the Monte Carlo observables.

All estimators are deterministic functions of their inputs; samples are
sorted before any reduction so the result does not depend on input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidConfigError, SampleError

__all__ = [
    "OrliczEstimate",
    "ScalingFit",
    "BandReport",
    "orlicz_norm",
    "orlicz_bootstrap_se",
    "tail_consistency",
    "fit_scaling",
    "equipartition",
    "midpoint_deviation",
    "dirichlet_equipartition",
    "linear_action_statistic",
    "EXPONENTS",
]

# Orlicz exponent attached to each observable
EXPONENTS = {"A_L": 1.5, "H_L": 3.0, "m40": 2.0, "dirichlet": 1.0}

_REL_WIDTH = 1e-6


@dataclass(frozen=True)
class OrliczEstimate:
    s: float
    norm: float
    sample_size: int
    bracket: tuple


def _excess(x: np.ndarray, N: float, s: float) -> float:
    # log(mean exp((x/N)^s)) - 1; feasible when <= 0
    return float(logsumexp((x / N) ** s) - math.log(x.shape[0]) - 1.0)


def orlicz_norm(samples, s: float) -> OrliczEstimate:
    """Plug-in Orlicz norm: smallest ``N`` with ``mean exp((|x|/N)**s) <= e``.

    Bisection on ``[max|x|/50, 50 max|x|]`` until the bracket's relative
    width is below 1e-6; the upper (feasible) end is returned.
    """
    x = np.sort(np.abs(np.asarray(samples, dtype=np.float64)))
    if x.size == 0:
        raise SampleError("orlicz_norm needs at least one sample")
    if s < 1:
        raise InvalidConfigError(f"exponent s must be >= 1, got {s}")
    top = float(x[-1])
    if top == 0.0:
        return OrliczEstimate(s, 0.0, int(x.size), (0.0, 0.0))
    lo, hi = top / 50.0, top * 50.0
    while (hi - lo) > _REL_WIDTH * hi:
        mid = 0.5 * (lo + hi)
        if _excess(x, mid, s) <= 0.0:
            hi = mid
        else:
            lo = mid
    return OrliczEstimate(s, hi, int(x.size), (lo, hi))


def orlicz_bootstrap_se(samples, s: float, n_boot: int = 200, seed: int = 0) -> float:
    """Bootstrap standard error of :func:`orlicz_norm` (fixed seed)."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    if x.size < 2:
        raise SampleError("bootstrap needs at least two samples")
    rng = np.random.default_rng(seed)
    reps = [orlicz_norm(rng.choice(x, size=x.size, replace=True), s).norm for _ in range(n_boot)]
    return float(np.std(reps, ddof=1))


def tail_consistency(samples, s: float, block_size: int = 100) -> dict:
    """Check the stretched-exponential tail implied by a finite Orlicz norm.

    A norm ``N`` forces ``P(|X| >= nu) <= e * exp(-(nu/N)**s)``, so for
    ``nu >= 2 N`` one has ``ln P <= -c (nu/N)**s`` with ``c = 1 - 2**-s``.
    The norm is taken as the median of plug-in norms over ``n // block_size``
    strided blocks of the sorted sample (block ``b`` holds every
    ``nblocks``-th order statistic starting at ``b``); unlike the whole-sample
    plug-in, which the empirical law satisfies by construction, it is not
    dragged up by a few extreme values.  A sample value ``nu >= 2 N`` is a
    violation when ``ln P_hat(|X| >= nu) > 1 - (nu/N)**s``.  The reported
    ``c`` is the median of ``-ln P_hat(|X| >= nu) / (nu/N)**s`` over those ``nu``.

    Returns
    -------
    dict
        ``norm``, ``c`` (None when vacuous), ``vacuous``, ``n_points``,
        ``largest_violation`` (None when there is none) and ``message``.
    """
    x = np.abs(np.asarray(samples, dtype=np.float64))
    if x.size < 1000:
        raise SampleError(f"tail_consistency needs at least 1000 samples, got {x.size}")
    xs = np.sort(x)
    nblocks = xs.size // block_size
    norms = [orlicz_norm(xs[b::nblocks], s).norm for b in range(nblocks)]
    N = float(np.median(norms))
    nus = np.unique(xs[xs >= 2.0 * N]) if N > 0 else np.empty(0)
    if nus.size == 0:
        return {
            "norm": N, "c": None, "vacuous": True, "n_points": 0,
            "largest_violation": None,
            "message": "vacuous: no sample reaches twice the norm",
        }
    tail = (xs.size - np.searchsorted(xs, nus, side="left")) / xs.size
    scaled = (nus / N) ** s
    c = float(np.median(-np.log(tail) / scaled))
    bad = nus[np.log(tail) > 1.0 - scaled]
    worst = float(bad.max()) if bad.size else None
    return {
        "norm": N, "c": c, "vacuous": False, "n_points": int(nus.size),
        "largest_violation": worst,
        "message": "consistent" if worst is None else f"tail heavier than s={s} at nu={worst:.4g}",
    }


@dataclass(frozen=True)
class ScalingFit:
    """Weighted least-squares fit of ``mean A_L = a_star ln L + intercept``."""

    points: list
    a_star: float
    intercept: float
    a_star_se: float
    intercept_se: float
    residuals: list
    residual_se: list
    jackknife: list = dc_field(default_factory=list)
    excluded: list = dc_field(default_factory=list)

    @property
    def max_residual_ratio(self) -> float:
        ratios = [abs(r) / se if se > 0 else (0.0 if r == 0 else math.inf)
                  for r, se in zip(self.residuals, self.residual_se)]
        return max(ratios)

    def jackknife_stable(self, k: float = 3.0) -> bool:
        for slope, se in self.jackknife:
            comb = math.hypot(self.a_star_se, se)
            if abs(slope - self.a_star) > k * comb and not (comb == 0 and slope == self.a_star):
                return False
        return True


def _wls(x, y, w):
    W = w.sum()
    xm = (w * x).sum() / W
    ym = (w * y).sum() / W
    sxx = (w * (x - xm) ** 2).sum()
    if sxx == 0:
        raise InvalidConfigError("degenerate design: all L equal")
    slope = (w * (x - xm) * (y - ym)).sum() / sxx
    icpt = ym - slope * xm
    var_slope = 1.0 / sxx
    var_icpt = 1.0 / W + xm * xm / sxx
    cov = -xm / sxx
    return slope, icpt, var_slope, var_icpt, cov


def fit_scaling(points, min_L: int = 3) -> ScalingFit:
    """Fit ``mean A_L`` against ``ln L`` with inverse-variance weights.

    Parameters
    ----------
    points : iterable of (L, mean, se)
        Points with ``L < min_L`` are excluded (boundary-dominated sizes).
        If any standard error is zero all points get unit weight.

    Notes
    -----
    Residual standard errors combine the point's own error with the
    variance of the fitted value, ``sqrt(se_i**2 + var(yhat_i))``.  The
    jackknife entries are ``(slope, slope_se)`` with each point left out
    (only when at least four points remain in the full fit).
    """
    pts = sorted((int(L), float(m), float(se)) for L, m, se in points)
    kept = [p for p in pts if p[0] >= min_L]
    excluded = [p for p in pts if p[0] < min_L]
    if len({p[0] for p in kept}) < 3:
        raise InvalidConfigError("fit_scaling needs at least three distinct L values")
    x = np.log([p[0] for p in kept])
    y = np.array([p[1] for p in kept])
    se = np.array([p[2] for p in kept])
    unit = np.any(se <= 0)
    w = np.ones_like(se) if unit else 1.0 / se ** 2
    slope, icpt, vs, vi, cov = _wls(x, y, w)
    if unit:
        # no error model: scale by the residual variance
        resid = y - (slope * x + icpt)
        dof = max(len(x) - 2, 1)
        sigma2 = float((resid ** 2).sum()) / dof
        vs, vi, cov = vs * sigma2, vi * sigma2, cov * sigma2
    yhat = slope * x + icpt
    resid = y - yhat
    var_fit = vi + x * x * vs + 2 * x * cov
    rse = np.sqrt(np.maximum(se ** 2 + var_fit, 0.0))
    jack = []
    if len(kept) >= 4:
        for i in range(len(kept)):
            sub = [p for j, p in enumerate(kept) if j != i]
            f = fit_scaling(sub, min_L=min_L)
            jack.append((f.a_star, f.a_star_se))
    return ScalingFit(
        points=[(math.log(p[0]), p[1], p[2]) for p in kept],
        a_star=float(slope),
        intercept=float(icpt),
        a_star_se=float(math.sqrt(max(vs, 0.0))),
        intercept_se=float(math.sqrt(max(vi, 0.0))),
        residuals=[float(r) for r in resid],
        residual_se=[float(r) for r in rse],
        jackknife=jack,
        excluded=[p[0] for p in excluded],
    )


@dataclass(frozen=True)
class BandReport:
    """Per-band increments of the coarse-grained maximal action.

    ``bands`` holds dicts with keys ``l_fine``, ``l_coarse``, ``mean``,
    ``se`` and ``predicted``.  ``slope`` is the common per-``ln 2`` slope
    fitted to the elementary bands.
    """

    bands: list
    slope: float
    slope_se: float
    consistent: bool
    worst_z: float
    telescoping_error: float
    a_star: float | None = None
    a_star_se: float | None = None

    def agrees_with(self, a_star: float, a_star_se: float, k: float = 3.0) -> bool:
        return abs(self.slope - a_star) <= k * math.hypot(self.slope_se, a_star_se)


def equipartition(coarse_actions: dict, a_star: float | None = None, a_star_se: float = 0.0) -> BandReport:
    """Band increments ``(W-D)(h*_{>=l'})/L - (W-D)(h*_{>=l})/L`` for ``l = 2 l'``.

    Parameters
    ----------
    coarse_actions : dict
        ``l -> per-replica array`` of ``(W-D)(h*_{>=l})/L`` over a full dyadic
        chain ``1, 2, ..., L``.
    a_star : float, optional
        Slope used for the ``a_star ln(l/l')`` predictions.
    """
    scales = sorted(int(l) for l in coarse_actions)
    if not scales:
        raise InvalidConfigError("no coarse actions given")
    for a, b in zip(scales, scales[1:]):
        if b != 2 * a:
            raise InvalidConfigError(f"missing chain members between l={a} and l={b}")
    acts = {l: np.asarray(coarse_actions[l], dtype=np.float64) for l in scales}
    n = {a.shape[0] for a in acts.values()}
    if len(n) != 1:
        raise InvalidConfigError("coarse actions must cover the same replicas")
    n = n.pop()
    bands, incs, ses = [], [], []
    total = np.zeros(n)
    for fine, coarse in zip(scales, scales[1:]):
        inc = acts[fine] - acts[coarse]
        total += inc
        mean = float(np.mean(inc)) if n else 0.0
        se = float(np.std(inc, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        incs.append(mean)
        ses.append(se)
        bands.append({
            "l_fine": fine, "l_coarse": coarse, "mean": mean, "se": se,
            "predicted": None if a_star is None else a_star * math.log(coarse / fine),
        })
    tele = float(np.max(np.abs(total - (acts[scales[0]] - acts[scales[-1]])))) if n and bands else 0.0
    if not bands:
        return BandReport([], 0.0, 0.0, True, 0.0, tele, a_star, a_star_se)
    incs, ses = np.array(incs), np.array(ses)
    ln2 = math.log(2.0)
    if np.all(ses > 0):
        w = 1.0 / ses ** 2
        slope = float((w * incs).sum() / w.sum() / ln2)
        slope_se = float(1.0 / math.sqrt(w.sum()) / ln2)
    else:
        slope = float(incs.mean() / ln2)
        slope_se = 0.0
    z = []
    for inc, se in zip(incs, ses):
        comb = math.hypot(se, slope_se * ln2)
        z.append(abs(inc - slope * ln2) / comb if comb > 0 else (0.0 if inc == slope * ln2 else math.inf))
    worst = float(max(z))
    return BandReport(bands, slope, slope_se, worst <= 3.0, worst, tele, a_star, a_star_se)


def midpoint_deviation(sweep) -> float:
    """``H_L``: largest ``|h*(L/2) - (y0 + y1)/2| / L`` over the swept pairs."""
    ys = sweep.boundary_grid
    centre = 0.5 * (ys[:, None] + ys[None, :])
    return float(np.max(np.abs(sweep.midpoints - centre))) / sweep.L


def dirichlet_equipartition(per_scale, include_linear: bool = False) -> dict:
    """Orlicz-1 norms, per ``rho``, of ``max over pairs D(h*_rho)/L``.

    ``per_scale`` is a sequence of per-replica maps ``rho -> value`` (as in
    ``SweepResult.per_scale_D_max``).  The ``rho = L`` entry is the linear
    part, fixed by the boundary window rather than by the noise, and is left
    out unless ``include_linear``.
    """
    per_scale = list(per_scale)
    if not per_scale:
        raise SampleError("no replicas given")
    rhos = sorted(per_scale[0])
    top = max(rhos)
    out = {}
    for rho in rhos:
        if rho == top and not include_linear and len(rhos) > 1:
            continue
        out[rho] = orlicz_norm([row[rho] for row in per_scale], 1.0)
    return out


def linear_action_statistic(field, window: float, db: float) -> float:
    """Largest ``|W - D|(a_{y0, y1})/L`` over the boundary grid."""
    from . import _kernels
    from .solver import _boundary_grid, _ensure_window

    ys = _boundary_grid(window, db, field.dy)
    field = _ensure_window(field, ys, auto=True)
    idx = np.round(ys / field.dy).astype(np.int64)
    lin = _kernels.linear_totals(
        np.ascontiguousarray(field.paths), field.J, field.m, field.L, field.dy, idx, idx
    )
    return float(np.max(np.abs(lin))) / field.L
