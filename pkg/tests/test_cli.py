import json

import numpy as np
import pytest

from lejapce.cli import main
from lejapce.serialization import load_surrogate

from conftest import child_command


@pytest.fixture(scope="module")
def fitted(tmp_path_factory):
    out = tmp_path_factory.mktemp("fit")
    rc = main(["fit", "--model", "ishigami", "--method", "td_fixed", "--p-max", "8", "-Q", "200", "--out", str(out)])
    assert rc == 0
    return out


def test_fit_writes_outputs(fitted):
    assert sorted(p.name for p in fitted.iterdir()) == [
        "ishigami_td_fixed8.csv",
        "ishigami_td_fixed8_report.json",
        "ishigami_td_fixed8_surrogate.json",
    ]
    assert load_surrogate(fitted / "ishigami_td_fixed8_surrogate.json").n_evaluations == 165


def test_eval_matches_library(fitted, tmp_path, capsys):
    s = load_surrogate(fitted / "ishigami_td_fixed8_surrogate.json")
    pts = np.array([[0.1, -0.2, 0.3], [1.0, 2.0, -3.0]])
    np.savetxt(tmp_path / "p.csv", pts, delimiter=",")
    assert main(["eval", "--surrogate", str(fitted / "ishigami_td_fixed8_surrogate.json"),
                 "--points", str(tmp_path / "p.csv")]) == 0
    printed = [float(x) for x in capsys.readouterr().out.split()]
    assert printed == s(pts).tolist()


def test_eval_wrong_width_is_config_error(fitted, tmp_path):
    np.savetxt(tmp_path / "p.csv", np.zeros((2, 2)), delimiter=",")
    assert main(["eval", "--surrogate", str(fitted / "ishigami_td_fixed8_surrogate.json"),
                 "--points", str(tmp_path / "p.csv")]) == 2


def test_analyze(fitted, tmp_path, capsys):
    assert main(["analyze", "--surrogate", str(fitted / "ishigami_td_fixed8_surrogate.json"),
                 "--names", "a,b,c", "--interactions", "--csv", str(tmp_path / "s.csv")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert [d["name"] for d in report["dimensions"]] == ["a", "b", "c"]
    assert report["mean"] == pytest.approx(3.5, abs=0.05)
    assert (tmp_path / "s.csv").read_text().startswith("dimension,S_f,S_t")


def test_cv(fitted, capsys):
    assert main(["cv", "--surrogate", str(fitted / "ishigami_td_fixed8_surrogate.json"),
                 "--model", "ishigami", "-Q", "300"]) == 0
    assert 0 < float(capsys.readouterr().out) < 1


def test_leja_prints_uniform_sequence(capsys):
    assert main(["leja", "--dist", '{"kind": "uniform", "a": -1, "b": 1}', "-n", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [line.split(",")[0] for line in lines] == ["0", "1", "2"]
    np.testing.assert_allclose([float(line.split(",")[1]) for line in lines], [0, -1, 1], atol=1e-9)


@pytest.mark.parametrize(
    "argv",
    [
        ["leja", "--dist", '{"kind": "cauchy"}'],
        ["leja", "--dist", "[1, 2]"],
        ["leja", "--dist", "{oops"],
        ["fit", "--model", "ishigami", "--budget", "1"],
        ["fit", "--config", "/nonexistent/config.json"],
        ["eval", "--surrogate", "/nonexistent.json", "--points", "-"],
    ],
)
def test_configuration_errors_exit_2(argv):
    assert main(argv) == 2


def test_model_error_exits_3(tmp_path, capsys):
    dists = tmp_path / "d.json"
    dists.write_text(json.dumps([{"kind": "uniform", "a": -1, "b": 1}] * 2))
    rc = main(["fit", "--command", " ".join(child_command("nan")), "--dists", str(dists),
               "--budget", "10", "--out", str(tmp_path)])
    assert rc == 3
    assert "model error" in capsys.readouterr().err


def test_numerical_error_exits_4(tmp_path):
    dists = tmp_path / "d.json"
    dists.write_text(json.dumps([{"kind": "uniform", "a": -1, "b": 1}]))
    # A one-dimensional budget of 70 runs past the recurrence degree cap.
    rc = main(["fit", "--command", " ".join(child_command("exp")), "--dists", str(dists),
               "--method", "pce_direct", "--budget", "70", "-Q", "10", "--out", str(tmp_path)])
    assert rc == 4


def test_benchmark_smoke(capsys):
    assert main(["benchmark", "--model", "cantilever", "--budget", "30"]) == 0
    out = capsys.readouterr().out
    assert "method,evals,cv_rms" in out and "pce_direct" in out
