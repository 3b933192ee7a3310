import csv
import io
import json
import subprocess
import sys
from xml.etree import ElementTree

import pytest

from ballmax.cli import run
from ballmax.serialization import dumps_instance

from conftest import single


def call(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def numeric(report):
    rep = json.loads(report) if isinstance(report, str) else report
    rep.pop("timings")
    return rep


@pytest.fixture
def files(tmp_path, four_disk, lens):
    paths = {}
    for name, inst in [("unit", single([0, 0], 1, [0, 0])), ("four", four_disk), ("lens", lens),
                       ("offset", single([0, 0], 1, [0.5, 0])), ("ball3", single([0, 0, 0], 1, [0.5, 0, 0])),
                       ("far", single([0, 0], 1, [5, 0]))]:
        p = tmp_path / f"{name}.json"
        p.write_text(dumps_instance(inst))
        paths[name] = p
    return paths


def test_solve_unit_ball(files):
    code, out, _ = call(["solve", files["unit"]])
    assert code == 0
    rep = json.loads(out)
    sol = rep["results"]["dc_solution"]
    assert sol["value"] == pytest.approx(-1.0, abs=1e-9)
    assert sol["r_lower"] == pytest.approx(1.0, abs=1e-9)
    assert list(rep)[:7] == ["tool", "version", "command", "config", "seed", "workers", "results"]
    assert list(rep)[-1] == "timings"
    assert set(rep["version"]) == {"package", "git"}


def test_classify_reports_interval(files):
    code, out, _ = call(["classify", files["four"]])
    assert code == 0
    c = json.loads(out)["results"]["classification"]
    lo, hi = c["interval"]
    # an upper end is certified only in the boundary case
    assert c["case"] == "InteriorCase" and hi is None
    assert lo <= 0.6408277960664718 <= c["r_cap"]


def test_malformed_json_no_artifacts(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"dim\": 2, ")
    out_dir = tmp_path / "out"
    code, out, err = call(["solve", bad, "--out", out_dir])
    assert code == 2
    assert out == ""
    assert "malformed" in err
    assert not out_dir.exists()


def test_missing_file(tmp_path):
    assert call(["solve", tmp_path / "nope.json"])[0] == 2


def test_unknown_flag(files):
    assert call(["solve", files["unit"], "--bogus"])[0] == 2


@pytest.mark.parametrize("cmd", ["estimate", "volume"])
def test_randomized_commands_require_seed(files, cmd):
    code, out, err = call([cmd, files["four"]])
    assert code == 2 and out == ""
    assert "--seed" in err


def test_seed_auto_is_recorded(files):
    code, out, _ = call(["estimate", files["offset"], "--seed", "auto", "--samples", "256"])
    assert code == 0
    seed = json.loads(out)["seed"]
    assert isinstance(seed, int) and seed >= 0


def test_estimate_offset_disk(files):
    code, out, _ = call(["estimate", files["offset"], "--seed", "1"])
    assert code == 0
    assert json.loads(out)["results"]["estimate"]["r_hat"] == pytest.approx(1.5, abs=0.03)


def test_estimate_failure_exit_3_with_partial_report(files, tmp_path):
    out_dir = tmp_path / "run"
    code, _, err = call(["estimate", files["offset"], "--seed", "0", "--r-init", "10", "--out", out_dir])
    assert code == 3
    assert "NoInitialHit" in err
    rep = json.loads((out_dir / "report.json").read_text())
    assert rep["error"]["type"] == "NoInitialHit"
    assert "classification" in rep["results"]
    assert "estimate" not in rep["results"]


def test_positive_index_is_invalid(files):
    assert call(["estimate", files["four"], "--seed", "0", "--i", "2"])[0] == 2


def test_volume_runs(files):
    code, out, _ = call(["volume", files["unit"], "--seed", "0", "--samples", "2000", "--rounds", "3",
                         "--bracket", "0.5", "1.5"])
    assert code == 0
    rep = json.loads(out)["results"]["estimate"]
    assert rep["method"] == "VolumeBisection"


@pytest.mark.parametrize("argv", [
    ["estimate", "{four}", "--seed", "7", "--samples", "512", "--workers", "3"],
    ["volume", "{four}", "--seed", "7", "--samples", "1000", "--workers", "2", "--rounds", "3"],
    ["oracle", "{ball3}", "--seed", "7", "--samples", "5000"],
])
def test_reruns_are_byte_identical(files, argv):
    argv = [a.format(**files) for a in argv]
    a, b = call(argv), call(argv)
    assert a[0] == b[0] == 0
    strip = lambda s: json.dumps(numeric(s), sort_keys=True)
    assert strip(a[1]) == strip(b[1])


def test_csv_trace(files, tmp_path):
    out_dir = tmp_path / "c"
    code, _, _ = call(["estimate", files["four"], "--seed", "2", "--samples", "512", "--format", "csv",
                       "--out", out_dir])
    assert code == 0
    rows = list(csv.reader(open(out_dir / "stats_trace.csv")))
    assert rows[0] == ["phase", "r", "samples", "hits", "ratio", "wilson_low", "wilson_high"]
    assert {r[0] for r in rows[1:]} == {"grow", "bisect"}


def test_solve_csv_trace(files, tmp_path):
    out_dir = tmp_path / "s"
    assert call(["solve", files["four"], "--format", "csv", "--out", out_dir])[0] == 0
    rows = list(csv.reader(open(out_dir / "trace.csv")))
    assert rows[0] == ["iteration", "value", "residual"] and len(rows) > 1


def test_sequence_indices(files, tmp_path):
    out_dir = tmp_path / "q"
    code, _, _ = call(["sequence", files["four"], "--i=-3,0,2", "--r0-oracle", "--format", "csv",
                       "--out", out_dir])
    assert code == 0
    rep = json.loads((out_dir / "report.json").read_text())
    assert [e["index"] for e in rep["results"]["elements"]] == [-3, 0, 2]
    rows = list(csv.reader(open(out_dir / "sequence.csv")))
    assert len(rows) == 1 + 3 * 4


def test_sequence_procedure_a(files):
    code, out, _ = call(["sequence", files["four"], "--procedure-a", "--max-iter", "5"])
    assert code == 0
    assert json.loads(out)["results"]["procedure_a"]["iterations"] <= 5


def test_sequence_overflow_is_invalid(files):
    assert call(["sequence", files["four"], "--i", "60"])[0] == 2


def test_oracle_2d_and_3d(files):
    code, out, _ = call(["oracle", files["lens"]])
    assert code == 0
    assert json.loads(out)["results"]["oracle"]["r0"] == pytest.approx(0.75**0.5, abs=1e-12)
    assert call(["oracle", files["ball3"]])[0] == 2


def test_oracle_empty_intersection_exit_3(tmp_path):
    from ballmax.geometry import BallSet, Instance
    p = tmp_path / "e.json"
    p.write_text(dumps_instance(Instance(BallSet([[0, 0], [5, 0]], [1, 1]), [0, 0], 0.5)))
    code, out, _ = call(["oracle", p])
    assert code == 3
    assert json.loads(out)["error"]["type"] == "EmptyIntersection"


def test_figures_layers(files, tmp_path):
    out_dir = tmp_path / "fig"
    code, _, _ = call(["figures", files["four"], "--out", out_dir])
    assert code == 0
    names = sorted(p.name for p in out_dir.glob("*.svg"))
    assert names == ["fig_backward.svg", "fig_family.svg", "fig_forward.svg", "fig_q.svg"]
    ns = "{http://www.w3.org/2000/svg}"
    ids = lambda f: {g.get("id") for g in ElementTree.parse(out_dir / f).getroot().iter(f"{ns}g")}
    assert {"Q", "farthest"} <= ids("fig_q.svg")
    assert {"Q", "family", "member_R0"} <= ids("fig_family.svg")
    assert any(i.startswith("element_-") for i in ids("fig_backward.svg"))
    assert "0.640828" in (out_dir / "fig_q.svg").read_text()


def test_figures_needs_out_and_2d(files, tmp_path):
    assert call(["figures", files["four"]])[0] == 2
    assert call(["figures", files["ball3"], "--out", tmp_path / "x"])[0] == 2


def test_ssp_encode(tmp_path):
    p = tmp_path / "ssp.json"
    p.write_text(json.dumps({"s": [3, 5, 7, 11], "t": 15}))
    out_dir = tmp_path / "enc"
    code, _, _ = call(["ssp-encode", p, "--out", out_dir])
    assert code == 0
    rep = json.loads((out_dir / "report.json").read_text())
    assert rep["results"]["decision"] == "Solvable"
    inst = json.loads((out_dir / "instance.json").read_text())
    assert inst["dim"] == 4 and len(inst["balls"]) == 9
    # the written instance is usable by the other commands
    assert call(["solve", out_dir / "instance.json"])[0] == 0


def test_ssp_encode_invalid(tmp_path):
    p = tmp_path / "ssp.json"
    p.write_text(json.dumps({"s": [3, -5], "t": 15}))
    assert call(["ssp-encode", p])[0] == 2


def test_help_documents_flags():
    out = subprocess.run([sys.executable, "-m", "ballmax.cli", "estimate", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    for flag in ("--seed", "--samples", "--workers", "--i", "--step", "--out", "--format", "--lambda"):
        assert flag in out.stdout
