import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarblend import parse_stack
from polarblend.datasets import recovered_stacks
from polarblend.errors import SchemeError
from polarblend.recovery import (
    BlendingScheme,
    SchemeEntry,
    adjacency_scheme,
    assemble_stacks,
    default_scheme,
    is_blended,
    read_scheme,
    scheme_from_stacks,
    write_scheme,
)

REPORTED_COUNTS = {"dorsal_fw": 246, "ventral_fw": 211, "dorsal_rw": 230, "ventral_rw": 242}


def _skins():
    return {s["id"]: {p["id"]: parse_stack(p["stack"], lenient=True) for p in s["panels"]}
            for s in recovered_stacks()["skins"]}


def test_single_panel_scheme():
    sc = BlendingScheme(0, [SchemeEntry("a", 5)])
    assert assemble_stacks([1, 2, 3, 4, 5], sc)["a"].angles == (1, 2, 3, 4, 5)


def test_two_panel_scheme():
    sc = BlendingScheme(2, [SchemeEntry("p", 6), SchemeEntry("c", 4, "p", 2)])
    x = [10, 20, 31, 32, 33, 34]
    st_ = assemble_stacks(x, sc)
    assert st_["p"].angles == (10, 20, 31, 32, 33, 34)
    assert st_["c"].angles == (10, 20, 33, 34)
    assert sc.independent_count == 6
    assert is_blended(st_["p"], st_["c"], mode="scheme").blended


def test_length_mismatch():
    sc = BlendingScheme(0, [SchemeEntry("a", 3)])
    with pytest.raises(SchemeError):
        assemble_stacks([1, 2], sc)


def test_invalid_schemes():
    with pytest.raises(SchemeError):
        BlendingScheme(2, [SchemeEntry("c", 4, "p", 2)])
    with pytest.raises(SchemeError):
        BlendingScheme(2, [SchemeEntry("p", 6), SchemeEntry("c", 4, "p", 5)])
    with pytest.raises(SchemeError):
        BlendingScheme(2, [SchemeEntry("p", 1)])


def test_is_blended_examples():
    assert is_blended([0, 45, 90], [0, 45, 90]).blended
    assert is_blended([0, 45, 90], [0, 45, 90], mode="scheme").positions == (0, 1, 2)
    for mode in ("general", "scheme"):
        assert not is_blended([0, 45, 90], [90, 45], mode=mode).blended
    assert is_blended([0, 45, 30, 90], [0, 90]).positions == (0, 3)


def test_dorsal_fw_pair_1_8():
    s = _skins()["dorsal_fw"]
    assert s[1].angles[:2] == (-81, -5)
    assert is_blended(s[1], s[8], mode="scheme").blended


def test_reported_independent_counts():
    for skin, stacks in _skins().items():
        scheme, x = scheme_from_stacks(stacks)
        assert scheme.independent_count == REPORTED_COUNTS[skin]
        rebuilt = assemble_stacks(x, scheme)
        assert all(rebuilt[p] == stacks[p] for p in stacks)


def test_scheme_file_round_trip(tmp_path):
    sc = BlendingScheme(2, [SchemeEntry(1, 6), SchemeEntry(2, 4, 1, 2), SchemeEntry("x", 5, 1, 3)])
    write_scheme(sc, tmp_path / "s.json")
    back = read_scheme(tmp_path / "s.json")
    assert back.to_dict() == sc.to_dict()


@st.composite
def schemes(draw):
    cov = draw(st.integers(0, 3))
    entries = []
    tails = {}
    for i in range(draw(st.integers(1, 6))):
        if entries and draw(st.booleans()):
            base = draw(st.sampled_from([e.panel for e in entries]))
            shared = draw(st.integers(0, tails[base]))
        else:
            base, shared = None, 0
        own = draw(st.integers(0 if shared else 1, 5))
        entries.append(SchemeEntry(i, cov + own + shared, base, shared))
        tails[i] = own + shared
    return BlendingScheme(cov, entries)


@settings(max_examples=200, deadline=None)
@given(schemes(), st.randoms())
def test_assemble_then_blended(sc, rnd):
    x = [rnd.randint(-89, 90) for _ in range(sc.n_vars)]
    stacks = assemble_stacks(x, sc)
    for e in sc.entries:
        assert stacks[e.panel].N == e.N
        if e.base is not None and e.shared == sc.entry(e.base).N - sc.covering:
            assert is_blended(stacks[e.panel], stacks[e.base], mode="scheme", covering=sc.covering).blended
    for pair in sc.guaranteed_pairs():
        a, b = sorted(pair, key=lambda p: -stacks[p].N)
        assert is_blended(stacks[a], stacks[b], mode="scheme", covering=sc.covering).blended


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(4, 30), min_size=2, max_size=9))
def test_single_chain_scheme_blends_every_edge(counts):
    plies = dict(enumerate(counts))
    edges = [(i, i + 1) for i in range(len(counts) - 1)] + [(0, len(counts) - 1)]
    sc = default_scheme(plies, edges, single_chain=True)
    assert sc.unblended_edges(edges) == []
    assert sc.independent_count == max(counts)


def test_branching_scheme_can_miss_an_edge():
    plies, edges = {0: 5, 1: 6, 2: 5, 3: 4}, [(0, 1), (1, 2), (2, 3)]
    assert default_scheme(plies, edges).unblended_edges(edges) == [(0, 1)] or \
        default_scheme(plies, edges).unblended_edges(edges) == [(1, 2)]
    assert default_scheme(plies, edges, single_chain=True).unblended_edges(edges) == []
    assert adjacency_scheme(plies, edges).unblended_edges(edges) == []


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 9), st.data())
def test_default_scheme_guaranteed_pairs_on_trees(n, data):
    plies = {i: data.draw(st.integers(4, 30)) for i in range(n)}
    edges = [(i, data.draw(st.integers(0, i - 1))) for i in range(1, n)]
    sc = default_scheme(plies, edges)
    x = np.arange(sc.n_vars) % 179 - 89
    stacks = assemble_stacks(x, sc)
    for p, q in edges:
        if frozenset((p, q)) in sc.guaranteed_pairs():
            a, b = (p, q) if plies[p] >= plies[q] else (q, p)
            assert is_blended(stacks[a], stacks[b], mode="scheme").blended


def test_default_scheme_chain():
    sc = default_scheme({"a": 10, "b": 8, "c": 6}, [("a", "b"), ("b", "c")])
    assert sc.unblended_edges([("a", "b"), ("b", "c")]) == []
    assert sc.independent_count == 10


def test_default_scheme_unknown_panel():
    with pytest.raises(SchemeError):
        default_scheme({"a": 10}, [("a", "z")])
