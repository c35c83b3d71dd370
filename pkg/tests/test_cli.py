"""End-to-end CLI behavior: configs, overrides, reports, exit codes."""

import json
import os

import pytest

from foliation_lab.cli import DEFAULT_CONFIG, SUITES, load_config, main, run_suite

FAST_CFG = {
    "k_values": [2],
    "max_jet_order": 2,
    "grid": {"x_step": 0.01, "t_step": 0.05, "x_radius": 0.65, "t_radius": 0.5},
    "trials": 2,
    "seed": 7,
}


def write_cfg(tmp_path, extra=None):
    cfg = json.loads(json.dumps(FAST_CFG))
    if extra:
        cfg.update(extra)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_load_config_defaults_and_overrides(tmp_path):
    cfg = load_config(None, ["grid.t_step=0.01", "seed=99", "k_values=[1,2]"])
    assert cfg["grid"]["t_step"] == 0.01
    assert cfg["grid"]["x_radius"] == DEFAULT_CONFIG["grid"]["x_radius"]
    assert cfg["seed"] == 99
    assert cfg["k_values"] == [1, 2]
    with pytest.raises(ValueError):
        load_config(None, ["bogus"])
    path = write_cfg(tmp_path)
    cfg2 = load_config(path, [])
    assert cfg2["trials"] == 2


def test_invalid_config_values(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"grid": {"x_step": -1}}))
    with pytest.raises(ValueError):
        load_config(str(path), [])


def test_missing_config_is_usage_error(tmp_path, capsys):
    out = str(tmp_path / "never.json")
    code = main(["classify", "--config", str(tmp_path / "nope.json"), "--out", out])
    assert code == 2
    assert not os.path.exists(out)
    assert "not found" in capsys.readouterr().err


def test_classify_cli_roundtrip(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = str(tmp_path / "classify.json")
    code = main(["classify", "--config", cfg, "--out", out])
    assert code == 0
    report = json.loads(open(out).read())
    assert report["suite"] == "classify"
    assert report["all_passed"] is True
    for rec in report["checks"]:
        assert set(rec) >= {"name", "anchor", "status", "measured", "tolerance"}
    data = [r for r in report["checks"] if "data" in r][0]["data"]
    assert {"k": 2, "variant": "monomial", "epsilon": [-1, 1], "parity_invariant": 0} in data


def test_index_suite_record(tmp_path):
    cfg = load_config(None, [])
    report = run_suite("index", cfg, str(tmp_path / "index.json"))
    assert report["all_passed"]
    gen = [r for r in report["checks"] if r["name"] == "generator_winding_and_boundary_index"][0]
    assert gen["data"]["winding"] == 1
    assert gen["data"]["boundary_index"] == -1
    assert {"symbol_id", "winding", "boundary_index", "fredholm_min_modulus", "residual"} <= set(
        gen["data"]
    )


def test_verify_jets_order_table(tmp_path):
    cfg = load_config(None, ["k_values=[2]", "max_jet_order=3", "trials=3"])
    report = run_suite("verify-jets", cfg, str(tmp_path / "jets.json"))
    byname = {r["name"]: r for r in report["checks"]}
    for q in (0, 1):
        rec = byname[f"commutator_norm_k2_order{q}"]
        assert rec["status"] == "pass" and rec["measured"] <= 1e-10
    for q in (2, 3):
        rec = byname[f"commutator_norm_k2_order{q}"]
        assert rec["status"] == "pass" and rec["measured"] >= 1e-3


def test_reports_deterministic(tmp_path):
    cfg = load_config(None, ["k_values=[2]", "trials=3"])
    r1 = run_suite("verify-coeff", cfg)
    r2 = run_suite("verify-coeff", cfg)
    assert r1["checks"] == r2["checks"]


def test_threaded_run_matches_serial(tmp_path, monkeypatch):
    cfg = load_config(None, ["k_values=[2]", "trials=3"])
    serial = run_suite("verify-flow", cfg)
    monkeypatch.setenv("FOLIATION_LAB_THREADS", "4")
    threaded = run_suite("verify-flow", cfg)
    assert serial["checks"] == threaded["checks"]


def test_demo_suite_writes_norm_csv(tmp_path):
    cfg = load_config(None, [])
    out = str(tmp_path / "demo.json")
    report = run_suite("demo-nonpreservation", cfg, out)
    assert report["all_passed"]
    csv_path = str(tmp_path / "demo_norms.csv")
    assert os.path.exists(csv_path)
    header = open(csv_path).readline().strip().split(",")
    assert header == ["n", "norm", "first_term_norm", "pullback_l2", "pullback_sup"]


def test_failing_check_still_writes_report(tmp_path, monkeypatch):
    # sabotage one suite entry to verify the exit path
    from foliation_lab import cli as cli_mod

    def broken_suite(cfg):
        return [
            lambda: cli_mod._record("always_fails", "plumbing", 1.0, 0.5),
            lambda: cli_mod._record("always_passes", "plumbing", 0.0, 0.5),
        ]

    monkeypatch.setitem(SUITES, "broken", broken_suite)
    out = str(tmp_path / "broken.json")
    code = main(["broken", "--out", out])
    assert code == 1
    report = json.loads(open(out).read())
    assert report["all_passed"] is False
    statuses = {r["name"]: r["status"] for r in report["checks"]}
    assert statuses == {"always_fails": "fail", "always_passes": "pass"}


def test_every_record_carries_anchor(tmp_path):
    cfg = load_config(
        None, ["k_values=[2]", "trials=2", "grid.x_step=0.01", "grid.t_step=0.05"]
    )
    for suite in ("verify-coeff", "verify-jets", "classify", "index"):
        report = run_suite(suite, cfg)
        for rec in report["checks"]:
            assert isinstance(rec["anchor"], str) and rec["anchor"]
