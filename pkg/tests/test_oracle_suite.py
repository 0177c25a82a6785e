import json

import numpy as np
import pytest

from wnaction import _kernels as K
from wnaction.noise import NoiseField
from wnaction.oracle_suite import Hooks, validate_all
from wnaction.profile import HeightProfile
from wnaction.solver import DPSolution

ORDER = [
    "noise_calibration",
    "decomposition",
    "dirichlet_orthogonality",
    "oracle_equivalence",
    "restriction_optimality",
    "green_reproducing",
    "green_perturbation",
    "sandwich",
    "two_scale_upper",
    "pasted_competitor",
    "projection_bins",
    "net_count",
]


def corrupt_one_increment(field: NoiseField) -> NoiseField:
    """Inflate the first upward increment of column 0 tenfold."""
    p = field.paths.copy()
    J = field.J
    p[0, J + 1:] += 9.0 * (p[0, J + 1] - p[0, J])
    return NoiseField(field.config, p, field.x_origin, field.zeroed)


def larger_predecessor_dp(field, y0, y1):
    """Exact DP whose tie-break keeps the larger predecessor height."""
    J = field.J
    W = K.weight_tables(np.ascontiguousarray(field.paths), J, field.m, 1, field.L, field.dy)
    i0, i1 = int(round(y0 / field.dy)), int(round(y1 / field.dy))
    F = np.full(2 * J + 1, -np.inf)
    F[J + i0] = 0.0
    back = []
    for s in range(field.L):
        G = np.full(2 * J + 1, -np.inf)
        arg = np.zeros(2 * J + 1, dtype=int)
        for b in range(2 * J + 1):
            for a in range(2 * J + 1):
                v = F[a] + W[s, a, b]
                if v >= G[b]:
                    G[b], arg[b] = v, a
        back.append(arg)
        F = G
    idx = [J + i1]
    for arg in reversed(back):
        idx.append(arg[idx[-1]])
    heights = (np.array(idx[::-1]) - J) * field.dy
    return DPSolution(F[J + i1] / field.L, HeightProfile(field.L, 1, heights, field.dy),
                      None, None, False, field.y_cap)


@pytest.fixture(scope="module")
def quick():
    return validate_all("quick")


def test_quick_profile_passes(quick):
    assert [c.name for c in quick.checks] == ORDER
    assert quick.passed and quick.exit_code == 0
    for name in ORDER[1:7] + ORDER[7:10]:
        assert quick.check(name).worst <= 1e-9
    assert quick.check("net_count").detail == "count=935"


def test_report_serializations(quick):
    data = json.loads(quick.to_json())
    assert data["passed"] and len(data["checks"]) == len(ORDER)
    text = quick.to_text()
    assert "all checks passed" in text and text.count("PASS") == len(ORDER)


def test_deterministic_given_seeds():
    a = validate_all("quick", seeds=[3, 4])
    b = validate_all("quick", seeds=[3, 4])
    assert a.to_json() == b.to_json()


def test_corrupted_noise_fails_calibration_only_there():
    rep = validate_all("quick", seeds=[0, 1], hooks=Hooks(field=corrupt_one_increment))
    assert not rep.check("noise_calibration").passed
    assert rep.check("noise_calibration").reproducer["column"] == 0
    assert rep.check("decomposition").passed
    assert rep.exit_code == 1
    assert "FAIL" in rep.to_text() and "reproduce with" in rep.to_text()


def test_broken_tie_break_is_caught():
    rep = validate_all("quick", seeds=[0], hooks=Hooks(dp=larger_predecessor_dp))
    check = rep.check("oracle_equivalence")
    assert not check.passed
    assert check.reproducer is not None and {"seed", "y0", "y1", "L"} <= set(check.reproducer)


def test_unknown_profile():
    with pytest.raises(ValueError):
        validate_all("exhaustive")
