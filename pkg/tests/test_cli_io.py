import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scldpc import io
from scldpc.cli import main
from scldpc.io import RunManifest, csv_text, fmt, json_text, read_csv


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    return json.loads(out)


# --- io

@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(v):
    assert float(fmt(v)) == v


def test_fmt_special_values():
    assert fmt(True) == "1" and fmt(np.int64(7)) == "7"
    assert fmt(float("inf")) == "inf" and fmt(float("nan")) == "nan"
    assert fmt(0.1) == "0.10000000000000001"


def test_csv_round_trip(tmp_path):
    m = RunManifest("demo", {"l": 3}, {"tol": 1e-12})
    rows = [[0.1, 1 / 3, True], [0.2, 2 / 3, False]]
    path = tmp_path / "a.csv"
    io.write_text(path, csv_text(["chi", "eps", "ok"], rows, m))
    manifest, header, data = read_csv(path)
    assert manifest["command"] == "demo" and manifest["parameters"] == {"l": 3}
    assert header == ["chi", "eps", "ok"]
    assert data[0, 1] == 1 / 3 and data[1, 2] == 0.0


def test_csv_rejects_ragged_rows():
    with pytest.raises(ValueError):
        csv_text(["a", "b"], [[1, 2], [3]], RunManifest("x", {}))


def test_json_is_sorted_and_plain():
    text = json_text({"b": np.float64(0.5), "a": np.arange(2), "c": float("inf")},
                     RunManifest("x", {}))
    body = json.loads(text)
    assert list(body) == sorted(body)
    assert body["a"] == [0, 1] and body["c"] == "inf"


def test_manifest_omits_time_by_default():
    assert RunManifest("x", {}).to_dict()["wall_clock"] is None


def test_default_threads(monkeypatch):
    monkeypatch.setenv(io.THREADS_ENV, "3")
    assert io.default_threads() == 3
    monkeypatch.setenv(io.THREADS_ENV, "many")
    assert io.default_threads() == 1


def test_timer():
    with io.Timer() as t:
        sum(range(1000))
    assert t.elapsed >= 0


# --- CLI

def test_thresholds(capsys, tmp_path):
    body = run_json(capsys, "thresholds", 3, 6, "--csv", tmp_path / "t.csv")
    assert body["eps_bp"] == pytest.approx(0.42944, abs=1e-5)
    assert body["eps_map"] == pytest.approx(0.488151, abs=1e-6)
    assert body["eps_map_area"] == pytest.approx(0.488151, abs=1e-6)
    assert body["design_rate"] == 0.5
    assert body["manifest"]["command"] == "thresholds"
    text = (tmp_path / "t.csv").read_text()
    assert "0.42943981" in text and "0.48815088" in text


def test_thresholds_coupled(capsys, tmp_path):
    body = run_json(capsys, "thresholds", 3, 6, "--L", 4, "--w", 2, "--L", 2, "--threads", 2,
                    "--csv", tmp_path / "c.csv")
    vals = {c["L"]: c["eps_bp"] for c in body["coupled"]}
    assert 0.42944 < vals[4] < 0.51
    assert vals[4] == pytest.approx(0.48834830, abs=2e-7)
    _, header, data = read_csv(tmp_path / "c.csv")
    assert header[0] == "L" and list(data[:, 0]) == [2, 4]


def test_thresholds_chain(capsys):
    body = run_json(capsys, "thresholds", 3, 6, "--L", 1, "--variant", "chain",
                    "--bisect-tol", 1e-6)
    assert body["coupled"][0]["eps_bp"] == pytest.approx(0.714309, abs=1e-3)
    assert body["variant"] == "ChainParams"


@pytest.mark.slow
def test_thresholds_chain_long(capsys):
    body = run_json(capsys, "thresholds", 3, 6, "--L", 16, "--variant", "chain",
                    "--bisect-tol", 1e-6)
    assert body["coupled"][0]["eps_bp"] == pytest.approx(0.488151, abs=1e-3)


def test_hprops(capsys):
    body = run_json(capsys, "hprops", 0.44, 3, 6)
    assert body["x_u"] == pytest.approx(0.2054, abs=1e-3)
    assert body["x_s"] == pytest.approx(0.3265, abs=1e-3)
    assert body["kappa_star"] == pytest.approx(0.4191, abs=1e-3)
    assert body["lambda_upstar"] == pytest.approx(0.1098, abs=1e-3)


def test_ss(capsys, tmp_path):
    body = run_json(capsys, "ss", 3, 6, "--svg", tmp_path / "ss.svg", "--points", 50)
    assert body["x_hat"] == pytest.approx(0.058, abs=2e-3)
    assert (tmp_path / "ss.svg").read_text().startswith("<?xml")


def test_area(capsys):
    body = run_json(capsys, "area", 4, 8, "--points", 5)
    assert body["difference"] < 1e-9


def test_fp(capsys, tmp_path):
    body = run_json(capsys, "fp", 3, 6, "--w", 2, "--Lp", 12, "--chi", 0.2, "--L", 6,
                    "--csv", tmp_path / "x.csv")
    assert body["eps_star"] == pytest.approx(0.488223, abs=5e-4)
    assert body["diagnostics"]["ok"] and body["family"]["area_within_bound"]
    assert body["family"]["phase_bounds_ok"] == [True, True, True]
    _, header, data = read_csv(tmp_path / "x.csv")
    assert header == ["i", "x"] and data.shape == (13, 2) and data[-1, 0] == 0


def test_ebp_chain_curve(capsys, tmp_path):
    csv, svg = tmp_path / "e.csv", tmp_path / "e.svg"
    body = run_json(capsys, "ebp", 3, 6, "--L", 32, "--variant", "chain", "--chi-grid", 400,
                    "--csv", csv, "--svg", svg)
    assert body["all_converged"]
    manifest, header, data = read_csv(csv)
    assert manifest["parameters"]["L"] == 32
    assert data.shape == (400, len(header))
    chi, eps = data[:, 0], data[:, 1]
    assert np.all(np.diff(chi) > 0)
    # C shape: eps large at both ends, a vertical steep branch at the MAP threshold
    assert eps[0] > 1 and eps[-1] > 0.98
    steep = np.abs(eps - 0.488151) < 1e-5
    assert steep.sum() > 50
    assert svg.exists()


def test_wiggle(capsys):
    body = run_json(capsys, "wiggle", 3, 6, "--L", 8, "--w", 3, "--chi-grid", 100,
                    "--band", 0.2, 0.3)
    assert body["chi_band"] == [0.2, 0.3] and body["amplitude"] < 1e-2


def test_outputs_are_byte_identical(capsys, tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / str(k)
        code, stdout, _ = run(capsys, "ebp", 3, 6, "--L", 6, "--w", 2, "--chi-grid", 30,
                              "--csv", d / "a.csv", "--json", d / "a.json", "--svg", d / "a.svg")
        assert code == 0
        outs.append([stdout] + [(d / f).read_bytes() for f in ("a.csv", "a.json", "a.svg")])
    assert outs[0] == outs[1]


def test_record_time(capsys):
    body = run_json(capsys, "hprops", 0.45, 3, 6, "--record-time")
    assert body["manifest"]["wall_clock"] >= 0


def test_report(capsys, tmp_path):
    code, out, _ = run(capsys, "report", tmp_path, 3, 6, "--L", 6, "--w", 2, "--chi-grid", 40)
    assert code == 0
    files = json.loads(out)["files"]
    assert sum(f.endswith(".svg") for f in files) >= 5
    for f in files:
        if f.endswith(".csv"):
            assert (tmp_path / f).read_text().startswith("# manifest: ")


@pytest.mark.parametrize("argv", [[], ["nosuch"], ["thresholds", "3"], ["thresholds", "x", "6"],
                                  ["thresholds", "2", "4"], ["hprops", "0.3", "3", "6"],
                                  ["ebp", "3", "6", "--chi-grid", "1"], ["wiggle", "3", "6"],
                                  ["thresholds", "3", "6", "--L", "2", "--bisect-tol", "1e-9"]])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_numeric_failure(capsys):
    code, out, _ = run(capsys, "thresholds", 3, 6, "--L", 4, "--w", 2, "--max-iter", 10)
    assert code == 1
    diag = json.loads(out)
    assert diag["error"] == "ConvergenceError" and diag["iterations"] == 10


def test_bracket_failure_is_numeric(capsys, monkeypatch):
    from scldpc import cli
    from scldpc._numeric import BracketError

    def fail(e):
        raise BracketError("no sign change")

    monkeypatch.setattr(cli, "ss_exponent", fail)
    code, out, _ = run(capsys, "ss", 3, 6)
    assert code == 1 and json.loads(out)["error"] == "BracketError"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "scldpc", "hprops", "0.44", "3", "6"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["x_star"] == pytest.approx(0.0697, abs=1e-3)
