import io
import json
import subprocess
import sys

import numpy as np
import pytest

from bellcost.cli import main
from bellcost.statistics import loads, statistics_from_dict

SCENARIOS = ["singlet-chsh-optimal", "prbox", "werner:0.5", "werner:0.9"]


def run(argv, capsys, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def gen(tmp_path, capsys):
    def make(name, settings=None):
        path = tmp_path / f"{name.replace(':', '_')}.json"
        argv = ["gen", name, "-o", str(path)]
        if settings:
            argv += ["--settings", settings]
        assert main(argv) == 0
        capsys.readouterr()
        return path

    return make


class TestGenValidate:
    @pytest.mark.parametrize("name", SCENARIOS)
    def test_round_trip(self, gen, capsys, name):
        code, out, _ = run(["validate", str(gen(name))], capsys)
        assert code == 0 and json.loads(out)["valid"] is True

    def test_gen_stdout_with_settings(self, capsys):
        code, out, _ = run(["gen", "prbox", "--settings", "0.2,0.8;0.5,0.5"], capsys)
        stats = statistics_from_dict(loads(out))
        assert code == 0
        np.testing.assert_allclose(stats.settings.p, [[0.1, 0.1], [0.4, 0.4]])

    def test_unknown_scenario(self, capsys):
        code, _, err = run(["gen", "ghz"], capsys)
        assert code == 1 and json.loads(err)["code"] == "usage"

    def test_bad_settings(self, capsys):
        code, _, err = run(["gen", "prbox", "--settings", "0.5,0.5"], capsys)
        assert code == 1 and json.loads(err)["code"] == "usage"

    def test_malformed_json(self, tmp_path, capsys):
        f = tmp_path / "bad.json"
        f.write_text("{not json")
        code, _, err = run(["validate", str(f)], capsys)
        assert code == 1 and json.loads(err)["code"] == "parse"

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(["validate", str(tmp_path / "none.json")], capsys)
        assert code == 1 and json.loads(err)["code"] == "io"

    def test_invalid_statistics_exit_2(self, tmp_path, capsys):
        # [x][y][a][b]: Alice's outcome copies y
        doc = {"nA": 2, "nB": 2, "nX": 1, "nY": 2, "behaviour": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]]}
        f = tmp_path / "sig.json"
        f.write_text(json.dumps(doc))
        code, out, _ = run(["validate", str(f)], capsys)
        assert code == 2
        assert json.loads(out)["independence"]["a_indep_y_given_x"]["max_deviation"] == pytest.approx(1.0)

    def test_usage_error(self, capsys):
        code, _, err = run(["simulate"], capsys)
        assert code == 1 and json.loads(err)["code"] == "usage"


class TestConstructEval:
    @pytest.mark.parametrize("name", SCENARIOS)
    @pytest.mark.parametrize("structure", ["nl", "r", "nf"])
    def test_construct_then_eval(self, gen, tmp_path, capsys, name, structure):
        src = gen(name, "0.3,0.7;0.6,0.4")
        model = tmp_path / "model.json"
        back = tmp_path / "back.json"
        assert main(["construct", structure, str(src), "-o", str(model)]) == 0
        assert main(["eval", str(model), "-o", str(back)]) == 0
        capsys.readouterr()
        a = statistics_from_dict(loads(src.read_text()))
        b = statistics_from_dict(loads(back.read_text()))
        assert np.abs(a.behaviour.p - b.behaviour.p).max() <= 1e-9
        assert np.abs(a.settings.p - b.settings.p).max() <= 1e-9

    def test_nf_degenerate_exit_2(self, gen, capsys):
        code, _, err = run(["construct", "nf", str(gen("prbox", "1,0;0.5,0.5"))], capsys)
        assert code == 2 and json.loads(err)["code"] == "degenerate-setting"


class TestFraction:
    def test_pr_box_pipe(self, capsys, monkeypatch):
        _, text, _ = run(["gen", "prbox"], capsys)
        code, out, _ = run(["fraction", "-"], capsys, stdin=text, monkeypatch=monkeypatch)
        assert code == 0 and out.splitlines()[0] == "q = 1.00000000"

    def test_certify(self, gen, capsys, tmp_path):
        out_json = tmp_path / "frac.json"
        code, out, _ = run(["fraction", str(gen("singlet-chsh-optimal")), "--certify", "-o", str(out_json)], capsys)
        assert code == 0
        assert out.splitlines()[0] == "q = 0.414213562"
        assert "dual certificate = 0.414213562" in out
        doc = json.loads(out_json.read_text())
        assert doc["q"] == pytest.approx(np.sqrt(2) - 1, abs=1e-9)

    def test_capacity_exit_3(self, tmp_path, capsys):
        doc = {"nA": 2, "nB": 2, "nX": 11, "nY": 10, "behaviour": np.full((11, 10, 2, 2), 0.25).tolist()}
        f = tmp_path / "big.json"
        f.write_text(json.dumps(doc))
        code, _, err = run(["fraction", str(f)], capsys)
        assert code == 3 and json.loads(err)["code"] == "capacity"

    def test_solver_failure_exit_4(self, gen, capsys, monkeypatch):
        from bellcost import fraction
        from bellcost.exceptions import NonConvergence

        def boom(*args, **kwargs):
            raise NonConvergence("no progress")

        monkeypatch.setattr(fraction, "lp_solve", boom)
        code, _, err = run(["fraction", str(gen("prbox"))], capsys)
        assert code == 4 and json.loads(err)["code"] == "nonconvergence"


class TestSimulateChsh:
    def test_chsh_pipe(self, capsys, monkeypatch):
        _, text, _ = run(["gen", "singlet-chsh-optimal"], capsys)
        code, out, _ = run(["chsh", "-"], capsys, stdin=text, monkeypatch=monkeypatch)
        assert code == 0 and out.strip() == "2.82842712"

    def test_simulate(self, gen, tmp_path, capsys):
        rep = tmp_path / "rep.json"
        code = main(["simulate", str(gen("prbox")), "--target", "nl", "-n", "1000", "--seed", "3", "-o", str(rep)])
        assert code == 0
        doc = json.loads(rep.read_text())
        assert doc["empirical_q"] == 1.0 and doc["n"] == 1000 and doc["seed"] == 3

    def test_simulate_bad_n(self, gen, capsys):
        code, _, err = run(["simulate", str(gen("prbox")), "--target", "nl", "-n", "0", "--seed", "1"], capsys)
        assert code == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "bellcost", "gen", "werner:0.9"], capture_output=True, text=True, check=True
    )
    proc2 = subprocess.run(
        [sys.executable, "-m", "bellcost", "chsh", "-"], input=proc.stdout, capture_output=True, text=True
    )
    assert proc2.returncode == 0
    assert float(proc2.stdout) == pytest.approx(0.9 * 2 * np.sqrt(2), abs=1e-8)
