"""Summaries of simulate output: scaling fit, bands and concentration."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..errors import SchemaError
from ..profile import dyadic_scales
from ..stats import EXPONENTS, equipartition, fit_scaling, orlicz_norm
from .io import read_run_csv

__all__ = [
    "load_run",
    "scaling_points",
    "scaling_summary",
    "band_summary",
    "concentration_summary",
]


def load_run(out_dir) -> tuple[dict, dict]:
    """``({L: rows}, echo)`` from a simulate output directory."""
    out = Path(out_dir)
    echo_path = out / "config.json"
    if not echo_path.exists():
        raise SchemaError(f"{out}: no config.json")
    echo = json.loads(echo_path.read_text())
    runs = {}
    for L, name in echo["files"].items():
        rows, meta = read_run_csv(out / name)
        if meta.get("config_hash") != echo["config_hash"]:
            raise SchemaError(f"{name}: config hash does not match config.json", row=1)
        runs[int(L)] = rows
    return runs, echo


def scaling_points(runs: dict) -> list[tuple]:
    pts = []
    for L, rows in sorted(runs.items()):
        a = np.array([r["A_L"] for r in rows])
        if a.size < 2:
            continue
        pts.append((L, float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size))))
    return pts


def scaling_summary(runs: dict) -> dict:
    fit = fit_scaling(scaling_points(runs))
    return {
        "a_star": fit.a_star,
        "a_star_se": fit.a_star_se,
        "intercept": fit.intercept,
        "intercept_se": fit.intercept_se,
        "points": fit.points,
        "residuals": fit.residuals,
        "residual_se": fit.residual_se,
        "max_residual_ratio": fit.max_residual_ratio,
        "jackknife": fit.jackknife,
        "jackknife_stable": fit.jackknife_stable(),
        "excluded_L": fit.excluded,
    }


def band_summary(rows: list[dict], a_star: float | None = None, a_star_se: float = 0.0) -> dict:
    L = int(rows[0]["L"])
    coarse = {l: [r[f"coarse_{l}"] for r in rows] for l in dyadic_scales(1, L)}
    rep = equipartition(coarse, a_star, a_star_se)
    out = {
        "L": L,
        "bands": rep.bands,
        "slope": rep.slope,
        "slope_se": rep.slope_se,
        "consistent": rep.consistent,
        "worst_z": rep.worst_z,
        "telescoping_error": rep.telescoping_error,
    }
    pairs = []
    scales = sorted(coarse)
    for i, fine in enumerate(scales):
        for c in scales[i + 1:]:
            inc = np.asarray(coarse[fine]) - np.asarray(coarse[c])
            se = float(inc.std(ddof=1) / math.sqrt(inc.size)) if inc.size > 1 else 0.0
            pairs.append({"l_fine": fine, "l_coarse": c, "log_ratio": math.log(c / fine),
                          "mean": float(inc.mean()) if inc.size else 0.0, "se": se})
    out["pairs"] = pairs
    if a_star is not None:
        out["agrees_with_a_star"] = rep.agrees_with(a_star, a_star_se)
    return out


def _spread(values: dict) -> float:
    v = [x for x in values.values() if x > 0]
    if not v:
        return 1.0
    return max(v) / min(v)


def concentration_summary(runs: dict, L_min: int = 8) -> dict:
    """Plug-in Orlicz norms of the fluctuation observables per ``L``.

    For the per-scale Dirichlet energies the value recorded per ``L`` is
    the largest Orlicz-1 norm over ``rho < L``.
    """
    table = {"A_L": {}, "H_L": {}, "m40": {}, "dirichlet": {}}
    per_rho = {}
    for L, rows in sorted(runs.items()):
        if L < L_min or len(rows) < 2:
            continue
        a = np.array([r["A_L"] for r in rows])
        table["A_L"][L] = orlicz_norm(a - a.mean(), EXPONENTS["A_L"]).norm
        table["H_L"][L] = orlicz_norm([r["H_L"] for r in rows], EXPONENTS["H_L"]).norm
        table["m40"][L] = orlicz_norm([r["m40"] for r in rows], EXPONENTS["m40"]).norm
        norms = {rho: orlicz_norm([r[f"psd_{rho}"] for r in rows], EXPONENTS["dirichlet"]).norm
                 for rho in dyadic_scales(1, L // 2)}
        per_rho[L] = norms
        table["dirichlet"][L] = max(norms.values())
    spreads = {k: _spread(v) for k, v in table.items()}
    return {
        "norms": {k: {str(L): v for L, v in t.items()} for k, t in table.items()},
        "dirichlet_per_rho": {str(L): {str(r): v for r, v in n.items()} for L, n in per_rho.items()},
        "spread": spreads,
        "within_factor_2": {k: s < 2.0 for k, s in spreads.items()},
    }
