import json

import numpy as np
import pytest

from hamtrace import __version__
from hamtrace.cli import main

PROBLEM = {
    "n": 1, "T": 1.0, "S": "identity", "nu": [0.0, 0.3],
    "B": {"kind": "constant", "matrix": [[0.0, 0.0], [0.0, 0.0]]},
    "D": {"kind": "constant", "matrix": [[1.0, 0.0], [0.0, 1.0]]},
}
SL = {"n": 1, "T": 1.0, "nu": [0.0, 0.4], "Sbar": "identity",
      "P": {"kind": "constant", "matrix": [[1.0]]},
      "R1": {"kind": "constant", "matrix": [[-2.0]]}}


@pytest.fixture
def problem(tmp_path):
    p = tmp_path / "problem.json"
    p.write_text(json.dumps(PROBLEM))
    return p


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_monodromy_report(capsys, problem):
    code, out, _ = run(capsys, "monodromy", "--config", problem, "--lam", 0.5)
    assert code == 0
    rep = json.loads(out)
    assert rep["classification"] == "elliptic"


def test_trace_and_manifest(tmp_path, capsys, problem):
    out = tmp_path / "trace.json"
    assert run(capsys, "trace", "--config", problem, "--m-max", 3, "--out", out)[0] == 0
    first = out.read_bytes()
    assert run(capsys, "trace", "--config", problem, "--m-max", 3, "--out", out)[0] == 0
    assert out.read_bytes() == first
    man = json.loads((tmp_path / "trace.json.manifest.json").read_text())
    assert man["subcommand"] == "trace" and man["tool_version"] == __version__
    assert man["outputs"][0]["digest"].startswith("sha256:")
    assert man["config_digest"].startswith("sha256:")


def test_oracle_eigs_negative_window(capsys, problem):
    code, out, _ = run(capsys, "oracle", "eigs", "--config", problem, "--window", "-20,20",
                       "--grid", 400)
    assert code == 0
    eigs = np.array([e["lambda"] for e in json.loads(out)["eigenvalues"]])
    k = 2 * np.pi * np.arange(-3, 4)
    expect = np.sort(np.concatenate([k + 0.3, k - 0.3]))
    np.testing.assert_allclose(eigs, expect[np.abs(expect) < 20], atol=1e-8)


def test_identities(capsys):
    code, out, _ = run(capsys, "identities", "--m", 2, "--alpha", 0, "--nu", 1, "--K", 2000)
    assert code == 0
    rep = json.loads(out)
    np.testing.assert_allclose(rep["corrected"], rep["closed_form"], atol=1e-6)
    assert abs(rep["closed_form"][0]) > 0.1


def test_sl_commands(tmp_path, capsys):
    sl = tmp_path / "sl.json"
    sl.write_text(json.dumps(SL))
    assert run(capsys, "sl", "trace", "--config", sl)[0] == 0
    kr = tmp_path / "krein.json"
    kr.write_text(json.dumps({"T": 1.0, "R": {"kind": "constant", "matrix": [[2.0]]}}))
    code, out, _ = run(capsys, "sl", "krein", "--config", kr)
    assert code == 0
    np.testing.assert_allclose(json.loads(out)["sum1"], 0.5, rtol=1e-12)


def test_threebody_commands(tmp_path, capsys):
    code, out, _ = run(capsys, "threebody", "f", "--beta", 4.0, "--omega", -1, "--both-routes")
    assert code == 0
    rep = json.loads(out)
    np.testing.assert_allclose(rep["f"], rep["f_quadrature"], rtol=1e-10)
    code, out, _ = run(capsys, "threebody", "classify", "--beta", 8.5, "--e", 0.05)
    assert code == 0 and json.loads(out)["verdict"] == "hyperbolic"


def test_curves_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["threebody", "curves", "--resolution", 60, "--tags", "Gamma1,Gamma6", "--jobs", 1]
    assert run(capsys, *argv, "--out", a)[0] == 0
    assert run(capsys, *argv, "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0].count(",") >= 2


def test_exit_codes(tmp_path, capsys, problem):
    assert run(capsys, "monodromy")[0] == 2
    assert run(capsys, "monodromy", "--config", tmp_path / "missing.json")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "trace", "--config", bad)[0] == 2
    assert run(capsys, "sl", "krein", "--config", bad)[0] == 2
    assert run(capsys, "oracle", "eigs", "--config", problem, "--window", "abc")[0] == 2
    assert run(capsys, "threebody", "classify", "--beta", 4.0, "--e", 1.0)[0] == 1
    degenerate = tmp_path / "deg.json"
    degenerate.write_text(json.dumps(dict(PROBLEM, nu=[0.0, 0.0])))
    code, _, err = run(capsys, "trace", "--config", degenerate)
    assert code == 1 and err.startswith("error:")


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out
