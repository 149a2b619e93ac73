import io
import json

import pytest

from coverkit import fixture_path
from coverkit.cli import main

FIG = {n: str(fixture_path(f"{n}.json")) for n in ("fig1", "fig2", "fig3", "fig4", "fig4_weights", "buchi_fig2")}


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


@pytest.mark.parametrize("argv, code", [
    (("cover", "solve", FIG["fig1"], "--branching", "2"), 0),
    (("cover", "solve", FIG["fig3"], "--branching", "2"), 1),
    (("cover", "solve", FIG["fig3"], "--branching", "3"), 0),
    (("cover", "check", FIG["fig4"], "--cert", FIG["fig4_weights"], "--branching", "2"), 0),
    (("buchi", "solve", FIG["fig2"], FIG["buchi_fig2"], "--branching", "2", "--max-memory", "1"), 1),
    (("buchi", "solve", FIG["fig2"], FIG["buchi_fig2"], "--branching", "2", "--max-memory", "4"), 0),
    (("realizable", FIG["buchi_fig2"], "--branching", "2"), 0),
    (("oracle", "acyclic", FIG["fig1"], "--branching", "2"), 0),
    (("oracle", "levels", FIG["fig3"], "--branching", "2", "--depth", "3"), 1),
    (("oracle", "levels", FIG["fig2"], "--branching", "2", "--depth", "6"), 0),
])
def test_exit_codes(argv, code):
    assert run(*argv)[0] == code


def test_cover_solve_reports():
    code, out = run("cover", "solve", FIG["fig1"], "--branching", "2")
    doc = json.loads(out)
    assert doc["coverable"] and doc["certificate"]["stateWeight"]["q0"] == 1
    code, out = run("cover", "solve", FIG["fig3"], "--branching", "2")
    doc = json.loads(out)
    assert not doc["coverable"] and doc["obstruction"]


def test_no_certificate_is_not_a_refutation():
    code, out = run("buchi", "solve", FIG["fig2"], FIG["buchi_fig2"], "--branching", "2", "--max-memory", "1")
    assert code == 1 and "not a proof" in out
    code, out = run("buchi", "solve", FIG["fig2"], FIG["buchi_fig2"], "--max-memory", "1", "--format", "text")
    assert "not a refutation" in out


def test_simple_certificate_round_trip(tmp_path):
    for name in ("fig1", "fig2", "fig4"):
        _, out = run("cover", "solve", FIG[name], "--branching", "2")
        cert = tmp_path / f"{name}.json"
        cert.write_text(out)
        assert run("cover", "check", FIG[name], "--cert", str(cert), "--branching", "2")[0] == 0


def test_buchi_certificate_round_trip(tmp_path):
    _, out = run("buchi", "solve", FIG["fig2"], FIG["buchi_fig2"], "--max-memory", "4")
    cert = tmp_path / "cert.json"
    cert.write_text(out)
    code, rep = run("buchi", "verify", FIG["fig2"], FIG["buchi_fig2"], "--cert", str(cert))
    assert code == 0, rep


def test_tampered_certificate_fails_check(tmp_path):
    doc = json.loads(open(FIG["fig4_weights"], encoding="utf-8").read())
    doc["stateWeight"]["alpha"] = 2
    cert = tmp_path / "bad.json"
    cert.write_text(json.dumps(doc))
    code, out = run("cover", "check", FIG["fig4"], "--cert", str(cert), "--branching", "2")
    assert code == 1 and "INIT_ONE" in out


def test_tree_dot_export():
    code, out = run("cover", "tree", FIG["fig1"], "--branching", "2", "--format", "dot", "--depth", "2")
    assert code == 0 and out.startswith("digraph") and "dashed" in out


def test_det_output_parses():
    code, out = run("det", FIG["fig1"])
    assert code == 0 and json.loads(out)["initial"]


@pytest.mark.parametrize("argv", [
    ("cover", "solve", "/nonexistent.json", "--branching", "2"),
    ("cover", "solve", FIG["fig1"], "--branching", "0"),
    ("buchi", "solve", FIG["fig2"], FIG["buchi_fig2"], "--branching", "3"),
    ("cover", "check", FIG["fig4"], "--cert", FIG["fig1"], "--branching", "2"),
])
def test_usage_errors(argv, capsys):
    assert run(*argv)[0] == 2
    assert "coverkit: error:" in capsys.readouterr().err


def test_bad_json_location(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"directions": [}')
    assert run("cover", "solve", str(bad), "--branching", "2")[0] == 2
    assert "bad.json:1:17" in capsys.readouterr().err


def test_argparse_error_exits_two(capsys):
    assert run("cover", "frobnicate")[0] == 2
    assert "invalid choice" in capsys.readouterr().err
