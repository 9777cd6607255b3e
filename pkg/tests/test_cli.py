import io
import json
import subprocess
import sys

import pytest

from nsaps import cli
from nsaps.errors import NumericalFailure


def run(argv, env=None, monkeypatch=None):
    out, err = io.StringIO(), io.StringIO()
    if env and monkeypatch:
        for k, v in env.items():
            monkeypatch.setenv(k, v)
    code = cli.main(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_classify_interior():
    code, out, _ = run(["classify", "--eg", "2", "--word", "0", "--lambda", "0"])
    assert code == 0 and out.strip() == "Interior"


def test_classify_boundary_two_point_word():
    code, out, _ = run(["classify", "--eg", "2", "--word", "-1.5,1.5", "--lambda", "0"])
    assert code == 0 and out.strip() == "Boundary"


def test_predicates_interval():
    code, out, _ = run(["predicates", "--eg", "2", "--mu", "1.5"])
    lines = dict(line.split("=", 1) for line in out.strip().splitlines())
    assert code == 0
    assert lines["zero_in_spectrum"] == "true"
    assert lines["resolvent_at_zero"] == "undefined"
    assert json.loads(lines["outer_region"])["interval"] == [-1.5, 1.5]


def test_predicates_resolvent_and_q2():
    code, out, _ = run(["predicates", "--eg", "2", "--mu", "1.0", "--a", "1", "--b", "2"])
    lines = dict(line.split("=", 1) for line in out.strip().splitlines())
    assert code == 0
    assert float(lines["resolvent_at_zero"]) == pytest.approx(0.5)
    assert lines["q2_gap"] == "true"


def test_predicates_json():
    code, out, _ = run(["predicates", "--eg", "2", "--mu", "3", "--model", "twopoint",
                        "--format", "json"])
    doc = json.loads(out)
    assert code == 0 and doc["predicates"]["zero_in_spectrum"] == "false"
    assert doc["config"]["mu"] == 3.0


def test_table_small():
    code, out, _ = run(["table", "--seed", "42", "--samples", "2", "--window", "1:20"])
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0] == "x,sigma_a,sigma_astar,s_bar"
    assert len(lines) == 14
    assert [float(r.split(",")[0]) for r in lines[1:]] == [0.5 * k for k in range(13)]


def test_curve_csv():
    code, out, _ = run(["curve", "--eg", "2", "--word", "-1,1", "--thetas", "5"])
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "theta,root_index,re_lambda,im_lambda"
    assert len(lines) == 1 + 5 * 2


def test_sweep_json_format():
    code, out, _ = run(["sweep", "--eg", "2", "--model", "iid", "--mu", "3", "--window", "1:10",
                        "--grid", "0,1,0,0,1", "--samples", "2", "--format", "json"])
    doc = json.loads(out)
    assert code == 0 and len(doc["rows"]) == 2
    assert set(doc["rows"][0]) == {"re", "im", "sigma_a", "sigma_astar", "s_bar"}


def test_usage_error_line():
    code, _, err = run(["sweep", "--eg", "2", "--mu", "3"])
    doc = json.loads(err.strip())
    assert code == 2 and doc["status"] == 2 and doc["error"] == "UsageError"


def test_unknown_flag_and_bad_value():
    assert run(["classify", "--nope", "1"])[0] == 2
    code, _, err = run(["classify", "--eg", "0.5", "--word", "0", "--lambda", "0"])
    assert code == 2 and "eg" in json.loads(err)["message"]
    assert run(["predicates", "--eg", "2", "--mu", "-1"])[0] == 2


def test_numerical_failure_exit(monkeypatch):
    def boom(*a, **k):
        raise NumericalFailure("residual too large", lam=0.5)

    monkeypatch.setattr(cli.transfer, "classify_point", boom)
    code, _, err = run(["classify", "--eg", "2", "--word", "0", "--lambda", "0.5"])
    doc = json.loads(err)
    assert code == 3 and doc["context"] == {"lam": 0.5}
    assert doc["argv"][0] == "classify"


def test_environment_defaults(monkeypatch):
    monkeypatch.setenv("NSA_PS_EG", "2")
    monkeypatch.setenv("NSA_PS_WORD", "0")
    code, out, _ = run(["classify", "--lambda", "3"])
    assert code == 0 and out.strip() == "Exterior"
    # flags win over the environment
    code, out, _ = run(["classify", "--lambda", "0", "--eg", "1"])
    assert out.strip() == "Boundary"


def test_bad_environment_value(monkeypatch):
    monkeypatch.setenv("NSA_PS_SEED", "seven")
    assert run(["table", "--samples", "1"])[0] == 2


def test_config_reproduces_run(tmp_path):
    first = tmp_path / "a.csv"
    argv = ["sweep", "--eg", "2", "--model", "twopoint", "--mu", "2", "--window", "1:12",
            "--grid", "-1,1,0,0.5,0.5", "--samples", "3", "--seed", "5"]
    assert run(argv + ["--out", str(first)])[0] == 0
    side = json.loads((tmp_path / "a.csv.json").read_text())
    assert side["config"]["seed"] == 5 and "wall_time" in side and "version" in side
    second = tmp_path / "b.csv"
    assert run(["--config", str(first) + ".json", "--out", str(second)])[0] == 0
    assert first.read_bytes() == second.read_bytes()


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "nsaps", "classify", "--eg", "2", "--word", "0",
                        "--lambda", "0"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "Interior"


@pytest.mark.slow
def test_verify_passes():
    code, out, _ = run(["verify", "--seed", "0"])
    assert code == 0 and "FAIL" not in out
