import json
from pathlib import Path

import pytest

from qarray_chaos.cli import main
from qarray_chaos.config import PRESETS, config_hash, parse_run_spec, preset_spec
from qarray_chaos.errors import SpecError
from qarray_chaos.runner import MANIFEST, SWEEP_COLUMNS, execute, read_manifest, verify_outputs

SMALL = """\
name: small
experiment: single-sweep
model: bose-hubbard
graph: {kind: chain, m: 5}
n_exc: 2
grid: {values: [0.01, 0.05, 0.2]}
realizations: 12
master_seed: 4
methods: {fit: false, bootstrap: 10}
"""


def test_minimal_spec_defaults():
    s = parse_run_spec("grid: {start: 0.01, stop: 0.1}\n")
    assert (s.n_cut, s.methods.n_bins, s.realizations) == (50, 50, 200)
    assert s.graph.kind == "chain" and s.graph.m == 8 and s.n_exc == 4
    assert len(s.grid.array()) == 17


def test_misspelled_key_names_key_and_line():
    text = "name: x\ngrid: {values: [0.1]}\nmethods:\n  fit_objectiv: likelihood\n"
    with pytest.raises(SpecError) as info:
        parse_run_spec(text)
    msg = str(info.value)
    assert "fit_objectiv" in msg and "line 4" in msg


def test_schema_violations():
    with pytest.raises(SpecError, match="grid"):
        parse_run_spec("experiment: single-sweep\n")
    with pytest.raises(SpecError):
        parse_run_spec("grid: {values: [0.1]}\nrealizations: 0\n")
    with pytest.raises(SpecError, match="malformed"):
        parse_run_spec("grid: [unclosed\n")
    with pytest.raises(SpecError):
        parse_run_spec("- a\n- b\n")


def test_hash_ignores_output_and_tracks_seed():
    a = parse_run_spec(SMALL + "output: one\n")
    b = parse_run_spec(SMALL + "output: two\n")
    c = parse_run_spec(SMALL.replace("master_seed: 4", "master_seed: 5"))
    assert config_hash(a) == config_hash(b) != config_hash(c)
    assert len(config_hash(a)) == 64


def test_fig3_preset_expansion():
    s = parse_run_spec("experiment: figure-preset\npreset: fig3-reduced\n")
    assert s.experiment == "figure-preset" and len(s.runs) >= 3
    models = {r.model for r in s.runs}
    assert {"transmon-array", "csfq-array", "alternating-array"} <= models
    for r in s.runs:
        assert r.graph.m == 8 and r.n_exc == 4 and r.realizations == 200
    assert config_hash(s) == config_hash(preset_spec("fig3-reduced", "reduced", 0, "elsewhere"))


@pytest.mark.parametrize("name", PRESETS)
def test_every_preset_validates(name):
    for scale in ("reduced", "full"):
        s = preset_spec(name, scale, 1, "out")
        assert s.runs and len(config_hash(s)) == 64


def test_run_writes_artifacts_and_verifies(tmp_path):
    spec = tmp_path / "s.yaml"
    spec.write_text(SMALL)
    out = tmp_path / "out"
    assert main(["run", str(spec), "--out", str(out), "--workers", "1"]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert {"small_sweep.csv", "small_crossings.json", "small_hist_00.csv", "small_hist_02.csv",
            "small_rbar.svg", "run_spec.json", MANIFEST} <= set(names)
    lines = (out / "small_sweep.csv").read_text().splitlines()
    h = config_hash(parse_run_spec(SMALL))
    assert lines[0] == f"# config_hash={h}"
    assert lines[1].split(",") == list(SWEEP_COLUMNS)
    assert len(lines) == 5
    cross = json.loads((out / "small_crossings.json").read_text())
    assert cross["config_hash"] == h
    assert cross["thresholds"]["rbar"] == pytest.approx(0.4585471805599453)
    svg = (out / "small_rbar.svg").read_text()
    assert h in svg and svg.count("stroke-dasharray") >= 3
    man = read_manifest(out / MANIFEST)
    assert man["config_hash"] == h and man["master_seed"] == "4"
    assert {"package_version", "numpy_version", "scipy_version", "wall_time_s"} <= set(man)
    assert verify_outputs(out) == []
    assert main(["verify", str(out)]) == 0


def test_rerun_is_byte_identical(tmp_path):
    s = parse_run_spec(SMALL)
    execute(s, tmp_path / "a", workers=1)
    execute(s, tmp_path / "b", workers=2)
    for f in ("small_sweep.csv", "small_hist_00.csv", "small_crossings.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_tampering_detected(tmp_path, capsys):
    s = parse_run_spec(SMALL)
    execute(s, tmp_path, workers=1)
    p = tmp_path / "small_sweep.csv"
    p.write_text(p.read_text().replace("12\n", "13\n", 1))
    problems = verify_outputs(tmp_path)
    assert any("small_sweep.csv: checksum" in x for x in problems)
    assert main(["verify", str(tmp_path)]) == 1
    assert "FAIL" in capsys.readouterr().out

    spec_file = tmp_path / "run_spec.json"
    d = json.loads(spec_file.read_text())
    d["spec"]["master_seed"] = 99
    spec_file.write_text(json.dumps(d))
    assert any("config hash mismatch" in x for x in verify_outputs(tmp_path))
    assert verify_outputs(tmp_path / "nowhere")


def test_cli_spec_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("grid: {values: [0.1]}\nrealisations: 3\n")
    assert main(["run", str(bad)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["status"] == "error" and err["kind"] == "spec" and "realisations" in err["message"]
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2


def test_cli_runtime_error_exit_code(tmp_path, capsys):
    spec = tmp_path / "s.yaml"
    # J far above the pair-creation gap: level selection must fail
    spec.write_text(
        "experiment: cr-comparison\nmodel: bose-hubbard-cr\ngraph: {kind: chain, m: 4}\nn_exc: 2\n"
        "grid: {values: [3.0]}\nrealizations: 2\nbose_hubbard: {omega_mean: 0.3}\nmethods: {fit: false}\n"
    )
    assert main(["run", str(spec), "--out", str(tmp_path / "o"), "--workers", "1"]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["kind"] == "runtime" and err["type"] == "SelectionError"


def test_three_site_preset_table(tmp_path):
    assert main(["preset", "appendixD-table", "--out", str(tmp_path), "--workers", "1"]) == 0
    files = list(tmp_path.glob("*three_site.csv"))
    assert len(files) == 1
    lines = files[0].read_text().splitlines()
    assert lines[1] == "eta,de_analytic,de_numeric"
    for row in lines[2:]:
        eta, a, n = map(float, row.split(","))
        assert n == pytest.approx(a, rel=0.1)
    assert verify_outputs(tmp_path) == []


def test_histogram_overlay_svg(tmp_path):
    text = SMALL.replace("name: small", "name: hists") + "histograms: all\n"
    execute(parse_run_spec(text), tmp_path, workers=1)
    assert len(list(tmp_path.glob("hists_hist_*.csv"))) == 3
    svg = (tmp_path / "hists_histograms.svg").read_text()
    assert "P0" in svg and "P1" in svg
