import json
import os
import subprocess
import sys

import pytest

from htwtl.cli import main
from htwtl.formula import parse_hyper, parse_twtl

from helpers import DATA

TESS = str(DATA / "tess.tks")


def phi(k):
    return str(DATA / "specs" / f"phi{k}.htwtl")


def grid(name):
    return str(DATA / "grids" / f"{name}.grid")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestCheck:
    def test_sat_exit_zero(self, capsys):
        code, out, _ = run(capsys, "check", TESS, phi(1))
        rep = json.loads(out)
        assert code == 0
        assert rep["schema"] == 1
        assert rep["verdict"]["status"] == "SAT"
        assert set(rep) == {"schema", "command", "formula", "fragment", "synchronous", "stages", "verdict"}

    def test_unsat_exit_one_with_counterexample(self, capsys):
        code, out, _ = run(capsys, "check", TESS, phi(2))
        rep = json.loads(out)
        assert code == 1
        assert rep["verdict"]["status"] == "UNSAT"
        cex = rep["verdict"]["counterexample"]
        assert [c["var"] for c in cex] == ["p1", "p2"]
        assert all(c["path"][0] in ("I1", "I2") for c in cex)

    def test_formula_field_reparses(self, capsys):
        _, out, _ = run(capsys, "check", TESS, phi(1))
        with open(phi(1), encoding="utf-8") as fh:
            assert parse_hyper(json.loads(out)["formula"]) == parse_hyper(fh.read())

    def test_stable_output(self, capsys):
        first = run(capsys, "check", TESS, phi(3))
        second = run(capsys, "check", TESS, phi(3))
        assert first == second

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "check", "no-such.tks", phi(1))
        assert code == 2 and "cannot read" in err

    def test_parse_error_reports_position(self, capsys):
        code, _, err = run(capsys, "check", TESS, "--formula", "exists p. H^1 I1@p &")
        assert code == 2 and "line 1" in err and "column" in err

    def test_unsupported_prefix(self, capsys):
        code, _, _ = run(capsys, "check", TESS, "--formula", "forall p. exists q. H^0 I1@p & H^0 I1@q")
        assert code == 2

    def test_state_cap(self, capsys):
        code, _, err = run(capsys, "check", TESS, phi(1), "--state-cap", "10")
        assert code == 3 and "resource" in err

    def test_timings_flag(self, capsys):
        _, out, _ = run(capsys, "check", TESS, phi(1), "--timings")
        assert set(json.loads(out)["timings_ms"]) == {"load", "check"}

    def test_no_arguments(self, capsys):
        assert main([]) == 2


class TestTranslate:
    def test_twtl_section_reparses(self, capsys):
        code, out, _ = run(capsys, "translate", phi(1), "--json")
        rep = json.loads(out)
        assert code == 0
        assert parse_twtl(rep["twtl"])
        assert rep["n_copies"] == 2

    def test_async_stage(self, capsys):
        code, out, _ = run(capsys, "translate", phi(5))
        assert code == 0
        assert "async->sync" in out

    def test_copies_report(self, capsys):
        _, out, _ = run(capsys, "translate", phi(2), "--model", TESS, "--copies-report")
        assert "copy 1: p1" in out and "flattened:" in out

    def test_forall_exists_rejected(self, capsys):
        code, _, err = run(capsys, "translate", "--formula", "forall p. exists q. H^0 a@p & H^0 a@q")
        assert code == 2 and "not supported" in err


class TestSynthesize:
    def test_grid_plan(self, capsys, tmp_path):
        out_path = tmp_path / "plan.json"
        code, out, _ = run(capsys, "synthesize", grid("10x10"), phi(9), "--out", str(out_path))
        assert code == 0
        assert "p1:" in out and "p2:" in out and "*" in out
        doc = json.loads(out_path.read_text())
        assert doc["schema"] == 1
        assert set(doc["plan"]["assignments"]) == {"p1", "p2"}

    def test_infeasible(self, capsys):
        code, out, _ = run(capsys, "synthesize", grid("6x6"), phi(9))
        assert code == 1 and "infeasible" in out


def test_inspect(capsys):
    code, out, _ = run(capsys, "inspect", TESS)
    assert code == 0
    assert json.loads(out)["model"]["states"] == 20


def test_console_script_without_colour():
    env = dict(os.environ, HTWTL_NO_COLOR="1")
    proc = subprocess.run([sys.executable, "-m", "htwtl.cli", "check", TESS, phi(2)],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 1
    assert "\033[" not in proc.stdout
    assert json.loads(proc.stdout)["verdict"]["status"] == "UNSAT"


@pytest.mark.parametrize("k", range(1, 8))
def test_every_bundled_spec_runs(capsys, k):
    code, out, _ = run(capsys, "check", TESS, phi(k))
    assert code in (0, 1)
    assert json.loads(out)["verdict"]["status"] == ("SAT" if code == 0 else "UNSAT")
