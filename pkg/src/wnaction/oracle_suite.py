"""Exact per-realization checks run at tiny scale.

Every identity and inequality that holds realization by realization is
checked here on a fixed seed list.  Failures are report entries, never
exceptions, and each failing entry carries the seed and configuration that
reproduce it.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field as dc_field
from typing import Callable

import numpy as np

from .action import decompose_action, noise_integral, snapped_indices
from .net import NetBallSpec, NetPoint, enumerate_net_ball, project, rectangle_scan_count
from .noise import FieldConfig, NoiseField, generate_field, regrow
from .profile import (
    HeightProfile,
    coarsen,
    dirichlet,
    dirichlet_bilinear,
    dyadic_scales,
    green_profile,
    linear_part,
    per_scale_dirichlet,
    scale_component,
)
from .solver import (
    boundary_sweep,
    brute_force_max,
    chain_action,
    extremal_actions,
    maximize_fixed_bc,
    pasted_competitor,
    two_scale_upper_bound,
)

__all__ = ["CheckResult", "ValidationReport", "Hooks", "validate_all", "PROFILES", "TOL"]

TOL = 1e-9
PROFILES = {"quick": 10, "full": 100}

# tiny instance used for the exhaustive oracle comparison
ORACLE_CONFIG = dict(L=4, m=2, dy=0.5, y_cap=2.0)
ORACLE_PAIRS = [(y0, y1) for y0 in (-1.0, 0.0, 1.0) for y1 in (-1.0, 0.0, 1.0)]
# instance used by the two-scale checks
TWO_SCALE_CONFIG = dict(L=8, m=2, dy=0.25, y_cap=4.0)
TWO_SCALE_L = 2


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    instances: int
    reproducer: dict | None = None
    detail: str = ""


@dataclass
class ValidationReport:
    profile: str
    seeds: list
    checks: list = dc_field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "profile": self.profile,
            "seeds": list(self.seeds),
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"validation profile={self.profile} seeds={len(self.seeds)}"]
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            lines.append(f"  {mark}  {c.name:<28} worst={c.worst:.3g}  n={c.instances}  {c.detail}".rstrip())
            if c.reproducer:
                lines.append(f"        reproduce with {json.dumps(c.reproducer, sort_keys=True)}")
        lines.append("all checks passed" if self.passed else "some checks FAILED")
        return "\n".join(lines)


@dataclass
class Hooks:
    """Injection points for negative controls.

    ``field`` post-processes every generated noise field; ``dp`` replaces
    the production solver in the oracle comparison.
    """

    field: Callable[[NoiseField], NoiseField] | None = None
    dp: Callable | None = None


class _Tracker:
    """Running worst discrepancy plus the first failing instance."""

    def __init__(self, name: str, tol: float = TOL):
        self.name, self.tol = name, tol
        self.worst, self.n, self.fail = 0.0, 0, None
        self.detail = ""

    def add(self, err: float, reproducer: dict, *, ok: bool | None = None) -> None:
        self.n += 1
        err = float(err)
        if err > self.worst or math.isnan(err):
            self.worst = err
        good = (err <= self.tol) if ok is None else ok
        if not good and self.fail is None:
            self.fail = reproducer

    def result(self) -> CheckResult:
        return CheckResult(self.name, self.fail is None, self.worst, self.n, self.fail, self.detail)


def _field(cfg: dict, seed: int, hooks: Hooks, replica: int = 0) -> NoiseField:
    f = generate_field(FieldConfig(seed=seed, replica=replica, **cfg))
    return hooks.field(f) if hooks.field else f


def _random_profile(rng, L: int, scale: int, dy: float, reach: float) -> HeightProfile:
    k = int(reach / dy)
    vals = rng.integers(-k, k + 1, size=L // scale + 1) * dy
    return HeightProfile(L, scale, vals, dy)


def _zero_ends(h: HeightProfile) -> HeightProfile:
    return h - linear_part(float(h.values[0]), float(h.values[-1]), h.L, dy=h.dy)


# individual checks -------------------------------------------------------

def _noise_calibration(seeds, hooks) -> CheckResult:
    cfg = dict(L=2, m=2, dy=0.5, y_cap=2.0)
    n_rep = 200 * len(seeds)
    probe_h = HeightProfile(2, 1, [0.0, 1.5, -1.0], 0.5)
    fields = [_field(cfg, seeds[0], hooks, replica=r) for r in range(n_rep)]
    stack = np.stack([f.paths for f in fields])
    f0 = fields[0]
    tr = _Tracker("noise_calibration", tol=5.0)
    for col in range(stack.shape[1]):
        for j in range(-f0.J, f0.J + 1):
            if j == 0:
                continue
            x = stack[:, col, f0.J + j]
            target = f0.dx * abs(j) * f0.dy
            se = target * math.sqrt(2.0 / (n_rep - 1))
            tr.add(abs(x.var(ddof=1) - target) / se,
                   {"seed": seeds[0], "replicas": n_rep, "column": col, "j": j, **cfg})
    w = np.array([noise_integral(f, probe_h) for f in fields])
    idx = snapped_indices(probe_h, f0.m, f0.dy)
    target = f0.dx * f0.dy * float(np.sum(np.abs(idx)))
    se = target * math.sqrt(2.0 / (n_rep - 1))
    tr.add(abs(w.var(ddof=1) - target) / se,
           {"seed": seeds[0], "replicas": n_rep, "probe": probe_h.values.tolist(), **cfg})
    tr.detail = "in standard errors"
    return tr.result()


def _decomposition(seeds, hooks) -> CheckResult:
    tr = _Tracker("decomposition")
    cfg = dict(L=16, m=2, dy=0.25, y_cap=8.0)
    for seed in seeds:
        f = _field(cfg, seed, hooks)
        rng = np.random.default_rng(seed)
        for _ in range(5):
            l = int(rng.choice(dyadic_scales(1, 16)))
            h = _random_profile(rng, 16, 1, 0.25, 6.0)
            _, _, res = decompose_action(f, h, l)
            tr.add(abs(res), {"seed": seed, "l": l, "h": h.values.tolist(), **cfg})
    return tr.result()


def _orthogonality(seeds, hooks) -> CheckResult:
    tr = _Tracker("dirichlet_orthogonality")
    for seed in seeds:
        rng = np.random.default_rng(10_000 + seed)
        for _ in range(5):
            L = int(rng.choice([4, 8, 16, 32]))
            h = _random_profile(rng, L, 1, 0.25, 8.0)
            rep = {"seed": seed, "h": h.values.tolist()}
            parts = per_scale_dirichlet(h)
            tr.add(abs(sum(parts.values()) - dirichlet(h)), rep)
            comps = [scale_component(h, rho) for rho in dyadic_scales(1, L)]
            for i in range(len(comps)):
                for k in range(i + 1, len(comps)):
                    tr.add(abs(dirichlet_bilinear(comps[i], comps[k])), rep)
            a = linear_part(float(h.values[0]), float(h.values[-1]), L)
            tr.add(abs(dirichlet(h) - dirichlet(a) - dirichlet(h - a)), rep)
    return tr.result()


def _oracle_equivalence(seeds, hooks) -> CheckResult:
    tr = _Tracker("oracle_equivalence")
    solve = hooks.dp or (lambda f, y0, y1: maximize_fixed_bc(f, y0, y1, max_doublings=0))
    fields = [(seed, _field(ORACLE_CONFIG, seed, hooks)) for seed in seeds]
    # a silent field makes every tie-break decision visible
    silent = NoiseField(FieldConfig(seed=0, **ORACLE_CONFIG),
                        np.zeros_like(fields[0][1].paths), zeroed=True)
    fields.append(("zero-noise", silent))
    for seed, f in fields:
        for y0, y1 in ORACLE_PAIRS:
            dp = solve(f, y0, y1)
            bf = brute_force_max(f, y0, y1)
            same = np.array_equal(dp.argmax.values, bf.argmax.values)
            err = abs(dp.value - bf.value)
            tr.add(err, {"seed": seed, "y0": y0, "y1": y1, **ORACLE_CONFIG},
                   ok=err <= TOL and same)
    return tr.result()


def _restriction_optimality(seeds, hooks) -> CheckResult:
    tr = _Tracker("restriction_optimality")
    cfg = dict(L=16, m=2, dy=0.25, y_cap=8.0)
    for seed in seeds:
        f = _field(cfg, seed, hooks)
        sol = maximize_fixed_bc(f, 0.0, 0.0)
        g = regrow(f, sol.y_cap) if sol.y_cap > f.y_cap else f
        h = sol.argmax.values
        for l in (2, 4, 8):
            for n in range(16 // l):
                a, b = n * l, (n + 1) * l
                sub = g.window(a, l)
                piece = HeightProfile(l, 1, h[a:b + 1], g.dy)
                own = chain_action(sub, piece)
                best = maximize_fixed_bc(sub, float(h[a]), float(h[b])).value * l
                # the restriction is optimal: no better completion exists
                tr.add(max(0.0, best - own), {"seed": seed, "interval": [a, b], **cfg})
    return tr.result()


def _green_identity(seeds, hooks) -> CheckResult:
    tr = _Tracker("green_reproducing")
    for seed in seeds:
        rng = np.random.default_rng(20_000 + seed)
        for _ in range(5):
            L = int(rng.choice([4, 8, 16, 32]))
            h = _zero_ends(_random_profile(rng, L, 1, 0.25, 8.0))
            for x in range(1, L):
                tr.add(abs(dirichlet_bilinear(h, green_profile(x, L)) - float(h.values[x])),
                       {"seed": seed, "x": x, "h": h.values.tolist()})
    return tr.result()


def _green_perturbation(seeds, hooks) -> CheckResult:
    tr = _Tracker("green_perturbation")
    cfg = TWO_SCALE_CONFIG
    L, dy = cfg["L"], cfg["dy"]
    for seed in seeds:
        f = _field(cfg, seed, hooks)
        sol = maximize_fixed_bc(f, 0.0, 0.0)
        g = regrow(f, sol.y_cap) if sol.y_cap > f.y_cap else f
        best = sol.value * L
        h = sol.argmax
        bumps = []
        for x in range(1, L):
            e = np.zeros(L + 1)
            e[x] = dy
            bumps.append(HeightProfile(L, 1, e, dy))
            # dy * L / 2 keeps every value of G on the y-grid
            bumps.append(green_profile(x, L).scaled(dy * L / 2))
        for bump in bumps:
            for sign in (1.0, -1.0):
                cand = h + bump.scaled(sign)
                if np.max(np.abs(cand.values)) > g.y_cap:
                    continue
                gain = chain_action(g, cand) - best
                tr.add(max(0.0, gain), {"seed": seed, "bump": (sign * bump.values).tolist(), **cfg})
    return tr.result()


def _two_scale(seeds, hooks):
    sandwich = _Tracker("sandwich")
    upper = _Tracker("two_scale_upper")
    lower = _Tracker("pasted_competitor")
    cfg = TWO_SCALE_CONFIG
    L, l = cfg["L"], TWO_SCALE_L
    window, db = 2.0, 0.5
    for seed in seeds:
        f = _field(cfg, seed, hooks)
        rep = {"seed": seed, "l": l, "window": window, "db": db, **cfg}
        sweep = boundary_sweep(f, window, db)
        a_plus, a_minus = extremal_actions(sweep)
        a_L = maximize_fixed_bc(f, 0.0, 0.0).value
        sandwich.add(max(0.0, a_minus - a_L, a_L - a_plus), rep)
        bound = two_scale_upper_bound(f, l, window, db)
        upper.add(max(0.0, bound["a_plus"] - bound["rhs"]), rep)
        comp, _ = pasted_competitor(f, l)
        lower.add(max(0.0, comp - a_L), rep)
    return sandwich.result(), upper.result(), lower.result()


def _bin_geometry(seeds, hooks) -> CheckResult:
    tr = _Tracker("projection_bins")
    for seed in seeds:
        rng = np.random.default_rng(30_000 + seed)
        for _ in range(10):
            l = int(rng.choice([1, 2, 4]))
            h = _random_profile(rng, 16, l, 0.25, 8.0)
            p = project(h)
            rep = {"seed": seed, "l": l, "h": h.values.tolist()}
            on_lattice = np.array_equal(p.values / l, np.round(p.values / l))
            in_bin = np.all((p.values - l / 2 <= h.values) & (h.values < p.values + l / 2))
            fixed = project(p) == p
            tr.add(0.0 if on_lattice and in_bin and fixed else 1.0, rep)
    return tr.result()


def _net_cross_check(seeds, hooks) -> CheckResult:
    tr = _Tracker("net_count")
    spec = NetBallSpec(L=2, l=1, nu=math.e)
    count, stream = enumerate_net_ball(spec, members=True)
    members = set(stream)
    scan = rectangle_scan_count(spec)
    rep = {"L": 2, "l": 1, "nu": "e"}
    tr.add(abs(count - scan), rep)
    tr.add(abs(count - len(members)), rep)
    tr.detail = f"count={count}"
    return tr.result()


def validate_all(profile: str = "quick", seeds=None, hooks: Hooks | None = None) -> ValidationReport:
    """Run the battery in its fixed order.

    ``profile`` picks the seed count (10 for ``quick``, 100 for ``full``)
    unless ``seeds`` is given explicitly.
    """
    if profile not in PROFILES:
        raise ValueError(f"profile must be one of {sorted(PROFILES)}")
    seeds = list(range(PROFILES[profile])) if seeds is None else [int(s) for s in seeds]
    hooks = hooks or Hooks()
    t0 = time.perf_counter()
    report = ValidationReport(profile, seeds)
    report.checks.append(_noise_calibration(seeds, hooks))
    report.checks.append(_decomposition(seeds, hooks))
    report.checks.append(_orthogonality(seeds, hooks))
    report.checks.append(_oracle_equivalence(seeds, hooks))
    report.checks.append(_restriction_optimality(seeds, hooks))
    report.checks.append(_green_identity(seeds, hooks))
    report.checks.append(_green_perturbation(seeds, hooks))
    report.checks.extend(_two_scale(seeds, hooks))
    report.checks.append(_bin_geometry(seeds, hooks))
    report.checks.append(_net_cross_check(seeds, hooks))
    report.seconds = time.perf_counter() - t0
    return report
