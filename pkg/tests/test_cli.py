import json

import pytest

from polarblend.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_uniform(capsys):
    code, out, _ = run(capsys, "analyze", "--stack", "[0]x8", "--format", "json")
    assert code == 0
    data = json.loads(out)
    panel = data[0]["panel"] if isinstance(data, list) else next(iter(data.values()))["panel"]
    assert panel["rho0K"] == pytest.approx(1) and panel["rho1"] == pytest.approx(1)


def test_analyze_with_target(capsys):
    code, out, _ = run(capsys, "analyze", "--stack", "[0/90/45/-45]_S", "--target", "0,0")
    assert code == 0 and "residual" in out


def test_analyze_vw_skin_residual(capsys, tmp_path):
    from polarblend.datasets import recovered_stacks
    e = next(x for x in recovered_stacks()["standalone"] if x["id"] == "vw_skin")
    f = tmp_path / "vw.txt"
    f.write_text("vw: " + e["stack"] + "\n")
    code, out, _ = run(capsys, "analyze", str(f), "--target", "0.139,0.0903,0", "--format", "json")
    assert code == 0
    assert 3e-6 / 5 <= json.loads(out)["vw"]["residual"]["total"] <= 3e-6 * 5


def test_analyze_parse_error(capsys):
    code, _, err = run(capsys, "analyze", "--stack", "0/45/x")
    assert code == 2 and "column 6" in err


def test_usage_error(capsys):
    assert run(capsys, "no-such-command")[0] == 2
    assert run(capsys, "feasibility")[0] == 2


def test_polar_material(capsys):
    code, out, _ = run(capsys, "polar", "--format", "json")
    assert code == 0 and json.loads(out)["T0"] == pytest.approx(26898.96, rel=1e-3)


def test_feasibility_exit_codes(capsys, tmp_path):
    ok = tmp_path / "ok.json"
    ok.write_text(json.dumps({"panels": [{"id": 1, "n0": 0.5, "rho0K": 0.2, "rho1": 0.3}]}))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"panels": [{"id": 1, "n0": 0.5, "rho0K": -0.9, "rho1": 0.9}]}))
    assert run(capsys, "feasibility", "--input", str(ok))[0] == 0
    assert run(capsys, "feasibility", "--input", str(bad))[0] == 1


def test_blend_check(capsys, tmp_path):
    e = tmp_path / "e.csv"
    e.write_text("p,q\n1,2\n")
    s = tmp_path / "s.txt"
    s.write_text("1: 0/45/90/30\n2: 0/45/30\n")
    assert run(capsys, "blend-check", "--adjacency", str(e), "--stacks", str(s))[0] == 0
    assert run(capsys, "blend-check", "--adjacency", str(e), "--stacks", str(s), "--mode", "scheme")[0] == 0
    s.write_text("1: 0/45/90/30\n2: 30/45\n")
    assert run(capsys, "blend-check", "--adjacency", str(e), "--stacks", str(s))[0] == 1


def test_discretize_and_recover(capsys, tmp_path):
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"N_ref": 10, "panels": [{"id": 1, "n0": 0.55, "rho0K": 0.3, "rho1": 0.1},
                                                     {"id": 2, "n0": 0.42, "rho0K": 0.3, "rho1": 0.1}]}))
    e = tmp_path / "e.json"
    e.write_text(json.dumps({"edges": [[1, 2]]}))
    out = tmp_path / "d.json"
    code, _, _ = run(capsys, "discretize", "--input", str(p), "--adjacency", str(e), "--output", str(out))
    assert code == 0 and out.exists()
    t = tmp_path / "t.csv"
    t.write_text("id,N,rho0K,rho1,phi1\n1,8,0.3,0.1,0\n2,4,0.3,0.1,0\n")
    code, o, _ = run(capsys, "recover", "--targets", str(t), "--adjacency", str(e), "--step", "15",
                     "--budget", "2000", "--format", "json", "--save-scheme", str(tmp_path / "sc.json"))
    assert code == 0
    assert json.loads(o)["evaluations"] <= 2000
    code, _, _ = run(capsys, "recover", "--targets", str(t), "--step", "15", "--budget", "10", "--tolerance", "0")
    assert code == 1


def test_missing_file(capsys, tmp_path):
    assert run(capsys, "feasibility", "--input", str(tmp_path / "nope.json"))[0] == 2


def test_verify_paper(capsys):
    code, out, _ = run(capsys, "verify-paper")
    assert code == 0 and "overall: PASS" in out
