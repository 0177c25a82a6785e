import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wnaction.errors import InvalidConfigError, SampleError
from wnaction.noise import FieldConfig, generate_field, zero_field
from wnaction.solver import boundary_sweep, linear_action, maximize_fixed_bc
from wnaction.stats import (
    dirichlet_equipartition,
    equipartition,
    fit_scaling,
    linear_action_statistic,
    midpoint_deviation,
    orlicz_bootstrap_se,
    orlicz_norm,
    tail_consistency,
)

samples = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=50)


@pytest.mark.parametrize("s", [1.0, 1.5, 2.0, 3.0])
def test_orlicz_constant(s):
    assert orlicz_norm([2.5] * 10, s).norm == pytest.approx(2.5, rel=1e-6)


def test_orlicz_zero_and_errors():
    assert orlicz_norm([0.0, 0.0], 2).norm == 0.0
    with pytest.raises(SampleError):
        orlicz_norm([], 1)
    with pytest.raises(InvalidConfigError):
        orlicz_norm([1.0], 0.5)


def test_orlicz_exponential_limit():
    x = np.random.default_rng(0).exponential(size=100_000)
    est = orlicz_norm(x, 1.0)
    se = orlicz_bootstrap_se(x, 1.0, n_boot=40)
    target = math.e / (math.e - 1)
    assert abs(est.norm - target) <= 3 * se
    lo, hi = est.bracket
    assert hi - lo <= 1e-6 * hi


@given(samples, st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_orlicz_properties(x, s):
    est = orlicz_norm(x, s)
    assert est.norm >= abs(np.mean(x)) * (1 - 1e-6)
    assert orlicz_norm(2 * np.asarray(x), s).norm == 2 * est.norm
    bigger = np.abs(x) + 1.0
    assert orlicz_norm(bigger, s).norm >= est.norm
    assert orlicz_norm(x[::-1], s).norm == est.norm


def test_tail_consistency_cases():
    rng = np.random.default_rng(1)
    g = rng.standard_normal(20_000)
    rep = tail_consistency(g, 2.0)
    assert rep["largest_violation"] is None and not rep["vacuous"]
    assert 0.1 <= rep["c"] <= 2.0
    assert tail_consistency(np.full(2000, 3.0), 2.0)["vacuous"]
    assert tail_consistency(rng.standard_normal(20_000) ** 3, 2.0)["largest_violation"] is not None
    with pytest.raises(SampleError):
        tail_consistency(g[:999], 2.0)


def test_fit_exact_affine():
    pts = [(L, 0.7 * math.log(L) + 0.3, 0.01) for L in (4, 8, 16, 32, 64)]
    fit = fit_scaling(pts)
    assert fit.a_star == pytest.approx(0.7, abs=1e-12)
    assert fit.intercept == pytest.approx(0.3, abs=1e-12)
    assert max(abs(r) for r in fit.residuals) <= 1e-12
    assert fit.jackknife_stable()


def test_fit_unweighted_exact_affine():
    fit = fit_scaling([(L, 0.7 * math.log(L) + 0.3, 0.0) for L in (4, 8, 16)])
    assert fit.a_star == pytest.approx(0.7, abs=1e-12)
    assert max(abs(r) for r in fit.residuals) <= 1e-12


def test_fit_rejects_small_designs_and_excludes_tiny_L():
    with pytest.raises(InvalidConfigError):
        fit_scaling([(4, 1.0, 0.1), (8, 1.5, 0.1)])
    with pytest.raises(InvalidConfigError):
        fit_scaling([(4, 1.0, 0.1), (4, 1.5, 0.1), (4, 1.2, 0.1)])
    fit = fit_scaling([(1, 9.0, 0.1), (2, 9.0, 0.1)] + [(L, math.log(L), 0.1) for L in (4, 8, 16)])
    assert fit.excluded == [1, 2]
    assert fit.a_star == pytest.approx(1.0)


def test_jackknife_on_noisy_input():
    rng = np.random.default_rng(3)
    pts = [(L, 0.5 * math.log(L) + rng.normal(0, 0.02), 0.02) for L in (4, 8, 16, 32, 64)]
    fit = fit_scaling(pts)
    assert len(fit.jackknife) == 5
    assert fit.jackknife_stable()
    assert fit.max_residual_ratio <= 3


def test_equipartition_basics():
    rng = np.random.default_rng(4)
    n = 300
    acts = {64: np.zeros(n)}
    total = np.zeros(n)
    for l in (32, 16, 8, 4, 2, 1):
        total = total + 0.3 * math.log(2) + rng.normal(0, 0.05, n)
        acts[l] = total.copy()
    rep = equipartition(acts, a_star=0.3, a_star_se=0.01)
    assert len(rep.bands) == 6
    assert rep.telescoping_error <= 1e-9
    assert rep.consistent and rep.agrees_with(0.3, 0.01)
    assert sum(b["mean"] for b in rep.bands) == pytest.approx(float(np.mean(acts[1])), abs=1e-9)
    assert rep.bands[0]["predicted"] == pytest.approx(0.3 * math.log(2))
    single = equipartition({4: [1.0, 2.0]})
    assert single.bands == []
    with pytest.raises(InvalidConfigError):
        equipartition({1: [0.0], 4: [0.0]})


def test_equipartition_flags_inconsistent_bands():
    rng = np.random.default_rng(5)
    n = 400
    acts = {8: np.zeros(n), 4: rng.normal(0.1, 0.01, n)}
    acts[2] = acts[4] + rng.normal(1.0, 0.01, n)
    acts[1] = acts[2] + rng.normal(0.1, 0.01, n)
    assert not equipartition(acts).consistent


def test_midpoint_deviation():
    f = generate_field(FieldConfig(L=8, m=2, dy=0.25, y_cap=6.0, seed=1))
    single = boundary_sweep(zero_field(FieldConfig(L=8, m=2)), 4.0, 16.0)
    assert midpoint_deviation(single) == 0.0
    sweep = boundary_sweep(f, 4.0, 2.0)
    h = maximize_fixed_bc(f).argmax
    assert midpoint_deviation(sweep) >= abs(h.values[4]) / 8


def test_dirichlet_equipartition():
    z = boundary_sweep(zero_field(FieldConfig(L=8, m=2)), 4.0, 16.0)
    flat = dirichlet_equipartition([z.per_scale_D_max] * 3)
    assert all(est.norm == 0.0 for est in flat.values())
    assert sorted(flat) == [1, 2, 4]
    with pytest.raises(SampleError):
        dirichlet_equipartition([])
    rows = [boundary_sweep(generate_field(FieldConfig(L=8, m=2, seed=s)), 4.0, 2.0).per_scale_D_max
            for s in range(5)]
    full = dirichlet_equipartition(rows, include_linear=True)
    assert 8 in full and full[8].norm > 0


def test_per_pair_energies_sum_to_total():
    from wnaction.profile import dirichlet, per_scale_dirichlet

    f = generate_field(FieldConfig(L=16, m=2, dy=0.25, y_cap=8.0, seed=2))
    h = maximize_fixed_bc(f, 1.0, -2.0).argmax
    assert abs(sum(per_scale_dirichlet(h).values()) / 16 - dirichlet(h) / 16) <= 1e-9


def test_linear_action_statistic():
    f = generate_field(FieldConfig(L=8, m=2, dy=0.25, y_cap=6.0, seed=6))
    assert linear_action_statistic(f, 0.0, 1.0) == 0.0
    stat = linear_action_statistic(f, 4.0, 1.0)
    assert stat >= abs(linear_action(f, 0.0, 4.0)) / 8
    assert stat >= abs(linear_action(f, -3.0, 2.0)) / 8
