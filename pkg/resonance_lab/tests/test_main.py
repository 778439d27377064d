# resonance_lab/tests/test_main.py

import csv
import json
import math

import pytest

from resonance_lab import config
from resonance_lab.main import EXIT_CONFIG, EXIT_OK, main
from resonance_lab.persistence import load_manifest, read_results
from resonance_lab.semiclassical.quadrature import period

CONSTANT_WELL = """\
h_list = [{h}]
tier = "{tier}"

[potential]
name = "constant well"
support_right = 1.0

[[potential.pieces]]
kind = "polynomial"
interval = [0.0, 1.0]
coefficients = [1.0]

[window]
a = {a}
b = {b}
M = 3.0
"""

PARABOLA = """\
h_list = [{h}]

[potential]
name = "x(1-x)"
support_right = 1.0

[[potential.pieces]]
kind = "polynomial"
coefficients = [0.0, 1.0, -1.0]

[window]
a = 1.5
b = 2.5
"""


@pytest.fixture(autouse=True)
def no_default_dirs(monkeypatch):
    monkeypatch.setattr(config, "REQUIRED_DIRS", [])


def write_config(tmp_path, template, **values):
    path = tmp_path / "run.toml"
    path.write_text(template.format(**values), encoding="utf-8")
    return path


def constant_well(tmp_path, h=0.05, a=2.0, b=3.0, tier="closed_form"):
    return write_config(tmp_path, CONSTANT_WELL, h=h, a=a, b=b, tier=tier)


def run(command, config_path, out, *extra):
    return main([command, "--config", str(config_path), "--out", str(out), *extra])


def test_predict_constant_well(tmp_path):
    out = tmp_path / "out"
    assert run("predict", constant_well(tmp_path, h=0.02), out) == EXIT_OK
    document = read_results(out / "predict_h0.02.json")
    assert [p.n for p in document["records"]] == list(range(16, 23))
    assert document["summary"]["count"] == 7
    with open(out / "predict_h0.02.csv", newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 7
    assert {"n", "h", "re_z", "im_z", "E_n", "tier"} <= set(rows[0])
    manifest = load_manifest(out / "manifest_predict.json")
    assert manifest["results"][0]["status"] == "ok"
    assert manifest["results"][0]["validation"] == {"files_exist": True, "round_trip": True}


def test_predict_empty_index_set(tmp_path, caplog):
    out = tmp_path / "out"
    assert run("predict", constant_well(tmp_path, a=2.0, b=2.0001), out) == EXIT_OK
    assert read_results(out / "predict_h0.05.json")["records"] == []
    assert "empty" in caplog.text


def test_window_below_sup_writes_nothing(tmp_path):
    out = tmp_path / "out"
    assert run("predict", constant_well(tmp_path, a=0.5), out) == EXIT_CONFIG
    assert not out.exists()


def test_invalid_h_override(tmp_path):
    assert run("predict", constant_well(tmp_path), tmp_path / "out", "--h", "1.5") == EXIT_CONFIG


def test_missing_config(tmp_path):
    assert run("predict", tmp_path / "missing.toml", tmp_path / "out") == EXIT_CONFIG


def test_oracle_constant_well(tmp_path):
    out = tmp_path / "out"
    assert run("oracle", constant_well(tmp_path), out) == EXIT_OK
    summary = read_results(out / "oracle_h0.05.json")["summary"]
    assert summary["agree"]
    assert summary["oracle_count"] == summary["shooting_count"] == 3
    assert summary["max_abs_dz_shooting"] <= 1e-8


def test_oracle_needs_a_constant_piece(tmp_path):
    assert run("oracle", write_config(tmp_path, PARABOLA, h=0.05), tmp_path / "out") == EXIT_CONFIG


def test_count_constant_well(tmp_path):
    out = tmp_path / "out"
    assert run("count", constant_well(tmp_path), out) == EXIT_OK
    record = read_results(out / "count_h0.05.json")["records"][0]
    assert record["winding"] == record["index_count"] == 3
    assert record["difference"] == 0


def test_compute_is_deterministic(tmp_path):
    path = constant_well(tmp_path)
    first, second = tmp_path / "first", tmp_path / "second"
    assert run("compute", path, first) == EXIT_OK
    assert run("compute", path, second) == EXIT_OK
    for name in ("compute_h0.05.json", "compute_h0.05.csv", "manifest_compute.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    document = json.loads((first / "compute_h0.05.json").read_text(encoding="utf-8"))
    assert len(document["records"]) == 3
    assert document["summary"]["unresolved"] == []


@pytest.mark.slow
def test_compare_constant_well_scaling(tmp_path):
    out = tmp_path / "out"
    assert run("compare", constant_well(tmp_path), out, "--h", "0.05", "0.02", "0.01") == EXIT_OK
    normalized = []
    for h in (0.05, 0.02, 0.01):
        summary = read_results(out / f"compare_h{h:g}.json")["summary"]
        assert not summary["mismatch"]
        normalized.append(summary["max_normalized"])
    assert max(normalized) <= 3 * min(normalized)


@pytest.mark.slow
def test_compare_parabola_scaling(tmp_path):
    out = tmp_path / "out"
    path = write_config(tmp_path, PARABOLA, h=0.02)
    assert run("compare", path, out, "--h", "0.02", "0.01", "0.005") == EXIT_OK
    normalized = []
    for h in (0.02, 0.01, 0.005):
        summary = read_results(out / f"compare_h{h:g}.json")["summary"]
        assert not summary["mismatch"]
        assert summary["unmatched_predicted"] == []
        assert summary["unresolved"] == []
        # spacing of the computed roots stays near the predicted lattice spacing
        assert 0.5 < summary["computed_spacing_constant"] / summary["spacing_constant"] < 2.0
        normalized.append(summary["max_normalized"])
    assert max(normalized) <= 3 * min(normalized)


@pytest.mark.slow
def test_depth_law_parabola(tmp_path, parabola):
    """Checks the two-term depth: at h=0.005 the O(h) term still adds about 60% to the log(1/h) term alone."""
    h = 0.005
    out = tmp_path / "out"
    assert run("compare", write_config(tmp_path, PARABOLA, h=h), out) == EXIT_OK
    summary = read_results(out / "compare_h0.005.json")["summary"]
    assert summary["pairs"]
    for pair in summary["pairs"]:
        computed, predicted = pair["z_computed"], pair["z_predicted"]
        # two-term depth: the log(1/h) band plus its O(h) endpoint correction
        assert abs(computed["im"] - predicted["im"]) <= 0.15 * abs(predicted["im"])
        leading = h * math.log(1 / h) / period(parabola, predicted["re"])
        assert -computed["im"] > leading


@pytest.mark.slow
def test_gap_band_top_parabola(tmp_path):
    out = tmp_path / "out"
    assert run("gap", write_config(tmp_path, PARABOLA, h=0.005), out) == EXIT_OK
    summary = read_results(out / "gap_h0.005.json")["summary"]
    assert summary["consistent"]
    assert summary["strip_violations"] == []
    # the endpoint correction only pushes resonances deeper than the log band
    assert summary["empirical_band_top"] >= summary["band_top"]
    assert summary["empirical_band_top"] <= 2 * summary["band_top"]
