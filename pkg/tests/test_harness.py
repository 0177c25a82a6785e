import json
import math
import xml.etree.ElementTree as ET

import pytest

from wnaction.errors import InvalidConfigError, SchemaError
from wnaction.harness import RunConfig, load_config_file, simulate
from wnaction.harness.analysis import band_summary, load_run
from wnaction.harness.cli import main
from wnaction.harness.config import OUT_DIR_ENV, default_out_dir
from wnaction.harness.io import (
    read_points_csv,
    read_run_csv,
    run_columns,
    write_points_csv,
    write_run_csv,
)
from wnaction.harness.svg import scatter_plot, table_svg

SMALL = RunConfig(L=(4, 8), replicas=3, seed=5)


def test_config_defaults_and_resolution():
    cfg = RunConfig()
    assert cfg.L == (4, 8, 16, 32, 64) and cfg.replicas == 200 and cfg.dy == 0.25
    assert cfg.cap_for(16) == 32.0
    assert cfg.db_for(4) == 0.25 and cfg.db_for(64) == 0.5
    assert cfg.competitor_scale_for(64) == 8 and cfg.competitor_scale_for(2) is None
    per_L = cfg.resolved()["per_L"]
    assert set(per_L) == {"4", "8", "16", "32", "64"}
    assert per_L["64"]["window"] == 32 and per_L["64"]["tilde_window"] == 128


def test_config_hash_tracks_every_parameter():
    base = RunConfig()
    assert base.hash() == RunConfig().hash()
    changed = [base.replace(replicas=199), base.replace(seed=1), base.replace(m=2),
               base.replace(db=1.0), base.replace(tilde=False), base.replace(L=(4, 8))]
    hashes = {c.hash() for c in changed}
    assert len(hashes) == len(changed) and base.hash() not in hashes


@pytest.mark.parametrize("bad", [dict(L=(3,)), dict(m=3), dict(dy=0.3), dict(replicas=-1),
                                 dict(db=0.3), dict(competitor_scale=3)])
def test_config_validation(bad):
    with pytest.raises(InvalidConfigError):
        RunConfig(**bad)


def test_config_file_and_flags(tmp_path, monkeypatch):
    p = tmp_path / "run.cfg"
    p.write_text("# desk run\nL = 4, 8\nreplicas = 2\nseed = 3  # trailing comment\ntilde = no\n")
    assert load_config_file(p) == {"L": (4, 8), "replicas": 2, "seed": 3, "tilde": False}
    (tmp_path / "bad.cfg").write_text("colour = blue\n")
    with pytest.raises(InvalidConfigError):
        load_config_file(tmp_path / "bad.cfg")
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "env-out"))
    assert default_out_dir() == tmp_path / "env-out"
    rc = main(["simulate", "--config", str(p), "--replicas", "1", "--L", "4", "--quiet"])
    assert rc == 0
    echo = json.loads((tmp_path / "env-out" / "config.json").read_text())
    # flags win over the file, the file wins over defaults
    assert echo["config"]["replicas"] == 1 and echo["config"]["L"] == [4]
    assert echo["config"]["seed"] == 3 and echo["config"]["tilde"] is False
    assert echo["config"]["m"] == 4


def test_zero_replicas_header_only(tmp_path):
    echo = simulate(RunConfig(L=(4,), replicas=0), tmp_path)
    lines = (tmp_path / "run_L4.csv").read_text().splitlines()
    assert lines[0].startswith("# wnaction-run v1 config_hash=")
    assert lines[1] == ",".join(run_columns(4)) and len(lines) == 2
    assert json.loads((tmp_path / "config.json").read_text())["config_hash"] == echo["config_hash"]


def test_simulate_deterministic(tmp_path):
    simulate(SMALL, tmp_path / "a")
    simulate(SMALL, tmp_path / "b")
    for name in ("run_L4.csv", "run_L8.csv", "config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    runs, echo = load_run(tmp_path / "a")
    assert sorted(runs) == [4, 8] and len(runs[8]) == 3


def test_simulate_sandwich_at_16(tmp_path):
    simulate(RunConfig(L=(16,), replicas=50, seed=2), tmp_path)
    rows, meta = read_run_csv(tmp_path / "run_L16.csv")
    assert len(rows) == 50 and meta["L"] == 16
    for r in rows:
        assert r["A_minus"] <= r["A_L"] <= r["A_plus"]
        assert r["A_tilde_minus"] <= r["A_minus"]
        assert r["competitor"] <= r["A_L"] + 1e-9
        assert r["cap_saturated"] == 0


def test_zero_noise_run_has_flat_bands(tmp_path):
    simulate(RunConfig(L=(8,), replicas=2, zero_noise=True, tilde=False), tmp_path)
    rows, _ = read_run_csv(tmp_path / "run_L8.csv")
    assert all(r["A_L"] == 0.0 for r in rows)
    bands = band_summary(rows)
    assert all(b["mean"] == 0.0 for b in bands["bands"])
    assert main(["equipartition", "--out-dir", str(tmp_path), "--a-star", "0.5"]) == 0
    report = json.loads((tmp_path / "equipartition_L8.json").read_text())
    assert all(b["mean"] == 0.0 for b in report["bands"])


def test_run_csv_schema_errors(tmp_path):
    good = tmp_path / "run.csv"
    row = {c: 0 for c in run_columns(2)}
    row["L"] = 2
    write_run_csv(good, [row], run_columns(2), "abc")
    rows, meta = read_run_csv(good)
    assert meta["config_hash"] == "abc" and rows[0]["L"] == 2
    text = good.read_text()
    (tmp_path / "v2.csv").write_text(text.replace("wnaction-run v1", "wnaction-run v2"))
    with pytest.raises(SchemaError, match="unsupported schema version"):
        read_run_csv(tmp_path / "v2.csv")
    (tmp_path / "nover.csv").write_text("\n".join(text.splitlines()[1:]))
    with pytest.raises(SchemaError):
        read_run_csv(tmp_path / "nover.csv")
    lines = text.splitlines()
    lines[2] = lines[2].replace("0", "zero", 3)
    (tmp_path / "bad.csv").write_text("\n".join(lines))
    with pytest.raises(SchemaError) as err:
        read_run_csv(tmp_path / "bad.csv")
    assert err.value.row == 3 and err.value.column is not None
    r4 = {c: 0 for c in run_columns(4)}
    r4["L"] = 4
    write_run_csv(tmp_path / "cols.csv", [r4], run_columns(4)[:-1], "abc")
    with pytest.raises(SchemaError) as err:
        read_run_csv(tmp_path / "cols.csv")
    assert err.value.column == "cap_saturated"


def test_points_roundtrip(tmp_path):
    pts = [(4, 0.1, 0.01), (8, 0.2, 0.01), (16, 0.3, 0.02)]
    write_points_csv(tmp_path / "p.csv", pts)
    assert read_points_csv(tmp_path / "p.csv") == pts
    (tmp_path / "q.csv").write_text("L,avg,se\n4,1,1\n")
    with pytest.raises(SchemaError):
        read_points_csv(tmp_path / "q.csv")


def test_cli_fit_scaling_exact_affine(tmp_path, capsys):
    pts = [(L, 0.7 * math.log(L) + 0.3, 0.05) for L in (4, 8, 16, 32, 64)]
    write_points_csv(tmp_path / "p.csv", pts)
    assert main(["fit-scaling", "--points", str(tmp_path / "p.csv"), "--out-dir", str(tmp_path), "--svg"]) == 0
    data = json.loads((tmp_path / "fit_scaling.json").read_text())
    assert set(data) >= {"a_star", "intercept", "residuals", "bands", "orlicz", "config_hash"}
    assert data["a_star"] == pytest.approx(0.7) and max(map(abs, data["residuals"])) <= 1e-12
    root = ET.parse(tmp_path / "scaling.svg").getroot()
    assert "L,ln_L,mean,se,residual" in root.find("{http://www.w3.org/2000/svg}metadata").text


def test_cli_full_pipeline(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["simulate", "--L", "4,8,16", "--replicas", "4", "--out-dir", out, "--quiet"]) == 0
    assert main(["fit-scaling", "--out-dir", out]) == 0
    summary = json.loads((tmp_path / "fit_scaling.json").read_text())
    assert summary["config_hash"] == json.loads((tmp_path / "config.json").read_text())["config_hash"]
    assert summary["orlicz"]["A_L"]["s"] == 1.5 and len(summary["bands"]) == 4
    assert main(["equipartition", "--out-dir", out, "--svg"]) == 0
    ET.parse(tmp_path / "bands_L16.svg")
    assert main(["orlicz", "--out-dir", out]) == 0
    assert "within_factor_2" in json.loads((tmp_path / "concentration.json").read_text())
    assert main(["boundary-sweep", "--L", "8", "--out-dir", out]) == 0
    sweep = json.loads((tmp_path / "sweep_L8_seed0_r0.json").read_text())
    assert sweep["A_minus"] <= sweep["A_L"] <= sweep["A_plus"]


def test_cli_orlicz_samples(tmp_path):
    (tmp_path / "x.csv").write_text("# samples\n" + "\n".join(["2.0"] * 1200) + "\n")
    assert main(["orlicz", "--samples", str(tmp_path / "x.csv"), "--s", "2", "--out-dir", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "orlicz.json").read_text())
    assert data["norm"] == pytest.approx(2.0, rel=1e-6) and data["tail"]["vacuous"]


def test_cli_count_net_matches_oracle(tmp_path):
    out = str(tmp_path)
    assert main(["count-net", "--ratios", "2", "--nu", repr(math.e), "--oracle", "--svg", "--out-dir", out]) == 0
    data = json.loads((tmp_path / "count_net.json").read_text())
    assert data["oracle"]["count"] == data["oracle"]["rectangle_scan"] == 935
    lines = (tmp_path / "count_net.csv").read_text().splitlines()
    assert lines[1] == "L,l,nu,count,ratio" and lines[2].startswith("2,1,")
    ET.parse(tmp_path / "count_net.svg")


def test_cli_validate_exit_code(tmp_path, capsys):
    assert main(["validate", "--seeds", "0", "1", "--out-dir", str(tmp_path)]) == 0
    assert "all checks passed" in capsys.readouterr().out
    assert json.loads((tmp_path / "validation.json").read_text())["passed"]


def test_cli_reports_schema_errors(tmp_path, capsys):
    (tmp_path / "p.csv").write_text("L,mean\n4,1\n")
    assert main(["fit-scaling", "--points", str(tmp_path / "p.csv"), "--out-dir", str(tmp_path)]) == 2
    assert "row 1" in capsys.readouterr().err  # the header line


def test_svg_helpers_are_valid_xml():
    ET.fromstring(table_svg("t", ["a", "b"], [[1, 2.5], ["x<y", 3]]))
    ET.fromstring(scatter_plot("s", "x", "y", [(0, 1, 0.1), (1, 2, 0.0)], line=(1.0, 1.0)))
    ET.fromstring(scatter_plot("flat", "x", "y", [(1, 1, 0)]))
