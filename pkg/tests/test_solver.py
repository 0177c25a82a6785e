import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from conftest import fields
from wnaction.action import action_of
from wnaction.errors import InstanceTooLargeError, OutOfWindowError
from wnaction.net import NetPoint
from wnaction.noise import FieldConfig, generate_field, regrow, zero_field
from wnaction.profile import HeightProfile, green_profile, linear_part
from wnaction.solver import (
    boundary_sweep,
    brute_force_max,
    chain_action,
    coarse_sweep,
    conditional_interval_max,
    bin_extremal_interval,
    extremal_actions,
    linear_action,
    maximize_fixed_bc,
    pasted_competitor,
    two_scale_upper_bound,
)

TINY = dict(L=4, m=2, dy=0.5, y_cap=2.0)


def tiny(seed):
    return generate_field(FieldConfig(seed=seed, **TINY))


def test_unit_length_is_trivial():
    f = generate_field(FieldConfig(L=1, m=2, dy=0.5, y_cap=1.0))
    sol = maximize_fixed_bc(f)
    assert sol.value == 0.0 and sol.argmax.values.tolist() == [0.0, 0.0]


@pytest.mark.parametrize("seed", range(50))
def test_dp_matches_brute_force(seed):
    f = tiny(seed)
    for y0 in (-1.0, 0.0, 1.0):
        for y1 in (-1.0, 0.0, 1.0):
            dp = maximize_fixed_bc(f, y0, y1, max_doublings=0)
            bf = brute_force_max(f, y0, y1)
            assert abs(dp.value - bf.value) <= 1e-9
            assert np.array_equal(dp.argmax.values, bf.argmax.values)


def test_tie_break_prefers_smaller_heights():
    # without noise one unit step must go somewhere; every placement ties
    f = zero_field(FieldConfig(**TINY))
    sol = maximize_fixed_bc(f, 0.0, 0.5, max_doublings=0)
    assert sol.argmax.values.tolist() == [0.0, 0.0, 0.0, 0.0, 0.5]
    assert np.array_equal(brute_force_max(f, 0.0, 0.5).argmax.values, sol.argmax.values)


def test_brute_force_small_and_limits():
    f = generate_field(FieldConfig(L=2, m=2, dy=0.5, y_cap=2.0, seed=4))
    bf = brute_force_max(f)
    best = max(chain_action(f, HeightProfile(2, 1, [0, y, 0], 0.5)) for y in np.arange(-4, 5) * 0.5)
    assert bf.value == pytest.approx(best / 2, abs=1e-12)
    with pytest.raises(InstanceTooLargeError):
        brute_force_max(generate_field(FieldConfig(L=16, m=1, dy=0.25, y_cap=4.0)))


@given(seed=st.integers(0, 10**6))
def test_argmax_attains_value(seed):
    f = generate_field(FieldConfig(L=8, m=2, dy=0.25, y_cap=6.0, seed=seed))
    sol = maximize_fixed_bc(f)
    g = regrow(f, sol.y_cap) if sol.y_cap > f.y_cap else f
    assert abs(action_of(g, sol.argmax).action_per_length - sol.value) <= 1e-9
    assert sol.value >= 0.0
    assert not sol.cap_saturated


@given(seed=st.integers(0, 10**6))
def test_single_site_and_green_perturbations(seed):
    f = generate_field(FieldConfig(L=8, m=2, dy=0.25, y_cap=8.0, seed=seed))
    sol = maximize_fixed_bc(f, max_doublings=0)
    best = sol.value * 8
    for x in range(1, 8):
        for k in range(1, 9):
            for t in (k * 0.25, -k * 0.25):
                bump = np.zeros(9)
                bump[x] = t
                cand = sol.argmax + HeightProfile(8, 1, bump, 0.25)
                if np.max(np.abs(cand.values)) <= f.y_cap:
                    assert chain_action(f, cand) <= best + 1e-9
        g = green_profile(x, 8)
        tent = g.values / g.values[x]
        for k in range(1, 9):
            for t in (k * 0.25, -k * 0.25):
                # unit-peak tent scaled by t and snapped to the y-grid
                bump = np.round(t * tent / 0.25) * 0.25
                cand = sol.argmax + HeightProfile(8, 1, bump, 0.25)
                if np.max(np.abs(cand.values)) <= f.y_cap:
                    assert chain_action(f, cand) <= best + 1e-9


@given(seed=st.integers(0, 10**6))
def test_restriction_optimality(seed):
    f = generate_field(FieldConfig(L=16, m=2, dy=0.25, y_cap=8.0, seed=seed))
    sol = maximize_fixed_bc(f, max_doublings=0)
    h = sol.argmax.values
    for a, b in ((0, 8), (8, 16), (4, 8), (12, 16), (2, 4)):
        sub = f.window(a, b - a)
        own = chain_action(sub, HeightProfile(b - a, 1, h[a:b + 1], 0.25))
        again = maximize_fixed_bc(sub, float(h[a]), float(h[b]), max_doublings=0).value * (b - a)
        assert abs(own - again) <= 1e-9


def test_cap_monotonicity():
    for seed in range(10):
        f = tiny(seed)
        small = brute_force_max(generate_field(FieldConfig(seed=seed, **{**TINY, "y_cap": 1.0})))
        assert brute_force_max(f).value >= small.value


def test_out_of_window_without_regrowth():
    with pytest.raises(OutOfWindowError):
        maximize_fixed_bc(tiny(0), 0.0, 3.0, max_doublings=0)
    sol = maximize_fixed_bc(tiny(0), 0.0, 3.0)
    assert sol.y_cap >= 3.0


def test_saturation_triggers_regrowth():
    f = generate_field(FieldConfig(L=8, m=1, dy=0.25, y_cap=0.25, seed=1))
    sol = maximize_fixed_bc(f)
    assert sol.y_cap > 0.25
    flagged = maximize_fixed_bc(f, max_doublings=0)
    assert flagged.cap_saturated


def test_sweep_degenerate_and_consistent():
    f = generate_field(FieldConfig(L=8, m=2, dy=0.25, y_cap=6.0, seed=2))
    sweep = boundary_sweep(f, 4.0, 4.0)
    assert sweep.M.shape == (3, 3)
    assert sweep.pair(0.0, 0.0) == maximize_fixed_bc(f).value
    for y0 in (-4.0, 0.0, 4.0):
        for y1 in (-4.0, 4.0):
            expected = maximize_fixed_bc(f, y0, y1).value - linear_action(f, y0, y1) / 8
            assert sweep.pair(y0, y1) == pytest.approx(expected, abs=1e-12)
    single = boundary_sweep(f, 4.0, 16.0)
    a_plus, a_minus = extremal_actions(single)
    assert a_plus == a_minus == single.pair(0.0, 0.0)


def test_sweep_sandwich_and_tilde():
    for seed in range(10):
        f = generate_field(FieldConfig(L=8, m=2, dy=0.25, y_cap=6.0, seed=seed))
        s = boundary_sweep(f, 4.0, 1.0)
        a_plus, a_minus = extremal_actions(s)
        a_L = maximize_fixed_bc(f).value
        assert a_minus <= a_L <= a_plus
        wide = boundary_sweep(f, 16.0, 1.0)
        assert extremal_actions(wide)[1] <= a_minus


def test_sweep_sign_symmetry_in_law():
    R = 1500
    fs = fields(2 * R, L=4, m=2, dy=0.5, y_cap=4.0)
    a = [boundary_sweep(f, 2.0, 2.0).pair(2.0, -2.0) for f in fs[:R]]
    b = [boundary_sweep(f, 2.0, 2.0).pair(-2.0, 2.0) for f in fs[R:]]
    assert sps.ks_2samp(a, b).pvalue > 1e-3


def test_conditional_interval_max():
    f = generate_field(FieldConfig(L=8, m=2, dy=0.25, y_cap=6.0, seed=3))
    zero = HeightProfile.zeros(8, 2)
    assert conditional_interval_max(f, HeightProfile.zeros(8, 1), 3) == 0.0
    for n in range(1, 5):
        assert conditional_interval_max(f, zero, n) == maximize_fixed_bc(f.window(2 * (n - 1), 2)).value
    with pytest.raises(IndexError):
        conditional_interval_max(f, zero, 5)


def test_conditional_shear_invariance_in_law():
    R = 2000
    fs = fields(2 * R, L=8, m=2, dy=0.5, y_cap=4.0)
    base = HeightProfile(8, 4, [0.0, 1.0, -1.0], 0.5)
    zero = HeightProfile.zeros(8, 4, 0.5)
    a = [conditional_interval_max(f, base, 2) for f in fs[:R]]
    b = [conditional_interval_max(f, zero, 2) for f in fs[R:]]
    assert sps.ks_2samp(a, b).pvalue > 1e-3


def test_bin_extremal_interval():
    f = generate_field(FieldConfig(L=8, m=2, dy=0.25, y_cap=6.0, seed=8))
    p = NetPoint(8, 2, [0, 2, 0, -2, 0])
    sup, inf = bin_extremal_interval(f, p, 2, 2, offsets_window=0.0)
    single = conditional_interval_max(f, p.as_profile(), 2)
    assert sup == inf == single
    sup, inf = bin_extremal_interval(f, p, 2, 2)
    for d0 in np.arange(-4, 4) * 0.25:
        for d1 in np.arange(-4, 4) * 0.25:
            member = HeightProfile(8, 2, p.values + np.array([0, d0, d1, 0, 0]))
            assert inf - 1e-12 <= conditional_interval_max(f, member, 2) <= sup + 1e-12
    with pytest.raises(InstanceTooLargeError):
        big = generate_field(FieldConfig(L=64, m=1, dy=0.25, y_cap=2.0))
        bin_extremal_interval(big, NetPoint(64, 64, [0, 0]), 1, 64)


def test_two_scale_inequalities():
    for seed in range(20):
        f = generate_field(FieldConfig(L=8, m=2, dy=0.25, y_cap=4.0, seed=seed))
        assert two_scale_upper_bound(f, 2, 2.0, 0.5)["holds"]
        comp, prof = pasted_competitor(f, 2)
        assert prof.values[0] == prof.values[-1] == 0.0
        assert comp <= maximize_fixed_bc(f).value + 1e-9
        assert comp == pytest.approx(action_of(f, prof).action_per_length, abs=1e-9)


def test_coarse_sweep_matches_coarse_profile():
    f = generate_field(FieldConfig(L=8, m=2, dy=0.25, y_cap=6.0, seed=12))
    ys = np.array([-1.0, 0.0, 1.0])
    M, profiles = coarse_sweep(f, 2, ys)
    h = HeightProfile(8, 2, profiles[1, 2] * 0.25)
    expected = (chain_action(f, h) - linear_action(f, 0.0, 1.0)) / 8
    assert M[1, 2] == pytest.approx(expected, abs=1e-12)
    assert linear_action(f, 0.0, 0.0) == 0.0
    assert chain_action(f, linear_part(-1.0, 1.0, 8, dy=0.25)) == pytest.approx(linear_action(f, -1.0, 1.0))
