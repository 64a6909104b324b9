import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarblend import PanelVars, StackingSequence, t300_5208
from polarblend.datasets import load_material, material_from_dict, material_to_dict
from polarblend.errors import InputFormatError, StackParseError
from polarblend.io import (
    read_edges,
    read_panels,
    read_response,
    read_stacks,
    read_targets,
    write_edges,
    write_panels,
    write_stacks,
    write_targets,
)
from polarblend.recovery import TargetPolar


@pytest.mark.parametrize("suffix", [".json", ".csv"])
def test_panels_round_trip(tmp_path, suffix):
    panels = {1: PanelVars(0.5, -0.25, 0.125, 0.0), "web": PanelVars(0.375, 0.5, 0.25, 0.5)}
    areas = {1: 1.5e6, "web": 2e5}
    f = tmp_path / f"p{suffix}"
    write_panels(f, panels, 40 if suffix == ".json" else None, areas)
    back, a2, N_ref = read_panels(f)
    assert back == panels and a2 == areas
    assert N_ref == (40 if suffix == ".json" else None)


@pytest.mark.parametrize("suffix", [".json", ".csv"])
def test_targets_round_trip(tmp_path, suffix):
    t = {3: TargetPolar.from_signed(-0.4252, 0.25, 0.0, 52), 4: TargetPolar.from_signed(0.5, 0.0, 0.5, 12)}
    f = tmp_path / f"t{suffix}"
    write_targets(f, t)
    assert read_targets(f) == t


@pytest.mark.parametrize("suffix", [".json", ".csv"])
def test_edges_round_trip(tmp_path, suffix):
    f = tmp_path / f"e{suffix}"
    write_edges(f, [(1, 2), ("a", 3)])
    assert read_edges(f) == [(1, 2), ("a", 3)]


def test_units_mismatch(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("# units: n0=-, area=m^2\nid,n0,rho0K,rho1,phi1,area\n1,0.5,0.1,0.1,0,1\n")
    with pytest.raises(InputFormatError, match="area"):
        read_panels(f)
    g = tmp_path / "t.json"
    g.write_text(json.dumps({"units": {"N": "mm"}, "targets": [{"id": 1, "N": 4, "rho0K": 0, "rho1": 0}]}))
    with pytest.raises(InputFormatError):
        read_targets(g)


def test_malformed_inputs(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("id,n0,rho0K\n1,0.5,0.1\n")
    with pytest.raises(InputFormatError, match="rho1"):
        read_panels(f)
    f.write_text("id,n0,rho0K,rho1\n1,abc,0.1,0.1\n")
    with pytest.raises(InputFormatError):
        read_panels(f)
    with pytest.raises(InputFormatError):
        read_panels(tmp_path / "p.xlsx")
    t = tmp_path / "t.csv"
    t.write_text("id,N,rho0K,rho1\n1,4.5,0.1,0.1\n")
    with pytest.raises(InputFormatError):
        read_targets(t)


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.integers(0, 99), st.lists(st.integers(-89, 90), min_size=1, max_size=40),
                       min_size=1, max_size=6))
def test_stacks_round_trip(tmp_path_factory, stacks):
    f = tmp_path_factory.mktemp("s") / "stacks.csv"
    stacks = {k: StackingSequence(v) for k, v in stacks.items()}
    write_stacks(f, stacks)
    assert read_stacks(f) == stacks


def test_stacks_with_residuals_and_plain_lines(tmp_path):
    from polarblend.recovery import residuals
    m = t300_5208()
    s = {"a": StackingSequence([0, 45, -45, 90])}
    b = {"a": residuals(s["a"], m, TargetPolar(0, 0, 0, 0, 4))}
    write_stacks(tmp_path / "s.csv", s, b)
    assert read_stacks(tmp_path / "s.csv") == s
    (tmp_path / "s.txt").write_text("# comment\n1: 0/90\n2: [45]x2\n")
    assert read_stacks(tmp_path / "s.txt") == {1: StackingSequence([0, 90]), 2: StackingSequence([45, 45])}
    (tmp_path / "bad.txt").write_text("1: 0/90\n2: 0/x\n")
    with pytest.raises(StackParseError) as err:
        read_stacks(tmp_path / "bad.txt")
    assert err.value.line == 2


def test_response(tmp_path):
    f = tmp_path / "r.json"
    f.write_text(json.dumps({"lam": 1.2, "u": 100.0, "eps_gen": [[0] * 8]}))
    r = read_response(f)
    assert r.lam == 1.2 and r.eps_gen.shape == (1, 8)
    f.write_text(json.dumps({"eps_gen": [[0] * 7]}))
    with pytest.raises(InputFormatError):
        read_response(f)


def test_material_file_round_trip(tmp_path):
    m = t300_5208()
    f = tmp_path / "mat.json"
    f.write_text(json.dumps(material_to_dict(m)))
    assert load_material(f) == m
    assert material_from_dict(material_to_dict(m)) == m
