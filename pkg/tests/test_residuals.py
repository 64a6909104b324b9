import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import abd_residual, ply_data
from polarblend import laminate_homogenized, panel_from_laminate, parse_stack, t300_5208
from polarblend.datasets import fixed_properties, recovered_stacks
from polarblend.recovery import BatchEvaluator, TargetPolar, orientation_grid, residuals, split_target

M = t300_5208()
PLY = ply_data(M.polar_Q.T0, M.polar_Q.T1, M.polar_Q.R0, M.polar_Q.R1)
stacks = st.lists(st.integers(-89, 90), min_size=1, max_size=24)
targets = st.builds(lambda r0, r1, f: (r0, r1, f), st.floats(-1, 1), st.floats(0, 1), st.floats(-0.999, 1))


def _target(tt, N):
    return TargetPolar.from_signed(tt[0], tt[1], tt[2], N)


def test_split_target():
    assert split_target(-0.4252) == (1, 0.4252)
    assert split_target(0.5) == (0, 0.5)
    assert split_target(0.0) == (0, 0.0)
    with pytest.raises(ValueError):
        split_target(1.5)


def test_norm_constant(mat):
    r = residuals([0], mat, TargetPolar(0, 1, 1, 0, 1))
    assert r.M == pytest.approx(64578.15, rel=1e-6)


def test_own_target_gives_zero(mat):
    s = [30] * 6
    p = panel_from_laminate(laminate_homogenized(s, mat), mat, N_ref=6)
    assert residuals(s, mat, TargetPolar.from_panel(p, 6)).total < 1e-20


@settings(max_examples=100, deadline=None)
@given(stacks)
def test_own_target_zeroes_membrane_terms(s):
    p = panel_from_laminate(laminate_homogenized(s, M), M, N_ref=len(s), check=False)
    lam = laminate_homogenized(s, M)
    K, _ = lam.polar_A.orthotropy_offset()
    t = TargetPolar(K, abs(p.rho0K), p.rho1, p.phi1, len(s))
    r = residuals(s, M, t)
    assert r.R4 < 1e-12 and r.R5 < 1e-12 and r.R6 < 1e-12


def test_vw_skin_residual(mat):
    e = next(x for x in recovered_stacks()["standalone"] if x["id"] == "vw_skin")
    f = fixed_properties()["vw_skin"]
    s = parse_stack(e["stack"])
    r = residuals(s, mat, TargetPolar.from_signed(f["rho0K"], f["rho1"], f["phi1"], s.N))
    assert 3e-6 / 5 <= r.total <= 3e-6 * 5 or r.total < 1e-4


@settings(max_examples=150, deadline=None)
@given(stacks, targets)
def test_matches_abd_oracle(s, tt):
    t = _target(tt, len(s))
    ours = residuals(s, M, t).total
    ref = abd_residual(s, PLY, (t.K, t.rho0, t.rho1, t.phi1))
    assert ours == pytest.approx(ref, rel=1e-9, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(stacks, targets)
def test_reversal_invariance_exact(s, tt):
    t = _target(tt, len(s))
    assert residuals(s, M, t).total == residuals(s[::-1], M, t).total


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(-89, 90), min_size=1, max_size=12), targets)
def test_symmetric_r1_zero(half, tt):
    s = half + half[::-1]
    assert residuals(s, M, _target(tt, len(s))).R1 == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(-89, 90))
def test_uniform_stack(N, th):
    r = residuals([th] * N, M, TargetPolar(0, 1, 1, 0, N))
    assert r.R2 < 1e-12 and r.R4 < 1e-12 and r.R5 < 1e-12


@settings(max_examples=150, deadline=None)
@given(stacks, targets)
def test_ninety_degree_shift(s, tt):
    t = _target(tt, len(s))
    shifted = [a + 90 if a <= 0 else a - 90 for a in s]
    phi = tt[2] + 1
    phi = phi - 2 if phi > 1 else phi
    t2 = TargetPolar(t.K, t.rho0, t.rho1, phi, t.N)
    assert residuals(shifted, M, t2).total == pytest.approx(residuals(s, M, t).total, rel=1e-9, abs=1e-12)


def test_degenerate_phi1(mat):
    # +-45 pairs: R1 of A* vanishes, phi1 is undefined and not penalized
    s = [45, -45, -45, 45]
    r = residuals(s, mat, TargetPolar(1, 1.0, 0.0, 0.7, 4))
    assert r.degenerate_phi1 and r.R6 == 0.0 and r.R3 < 1e-12


def test_batch_evaluator_matches_canonical(mat):
    rng = np.random.default_rng(0)
    grid = orientation_grid(5)
    for _ in range(20):
        N = int(rng.integers(1, 20))
        t = TargetPolar.from_signed(rng.uniform(-1, 1), rng.uniform(0, 1), rng.uniform(-1, 1), N)
        for norm in ("frobenius", "polar"):
            ev = BatchEvaluator(mat, [t], [np.arange(N)], grid, norm)
            X = rng.integers(0, len(grid), (10, N))
            got = ev.totals(X)
            ref = [residuals(grid[x].tolist(), mat, t, norm).total for x in X]
            assert np.allclose(got, ref, rtol=1e-9, atol=1e-14)


def test_batch_evaluator_exhaustive_small(mat):
    grid = orientation_grid(45)
    t = TargetPolar.from_signed(0.3, 0.4, 0.0, 3)
    ev = BatchEvaluator(mat, [t], [np.arange(3)], grid)
    X = np.array(list(itertools.product(range(4), repeat=3)))
    ref = [abd_residual(grid[x].tolist(), PLY, (t.K, t.rho0, t.rho1, t.phi1)) for x in X]
    assert np.allclose(ev.totals(X), ref, rtol=1e-9, atol=1e-14)


def test_grid():
    assert orientation_grid(45).tolist() == [-45, 0, 45, 90]
    with pytest.raises(ValueError):
        orientation_grid(7)


def test_target_validation():
    with pytest.raises(ValueError):
        TargetPolar(2, 0.1, 0.1, 0, 4)
    with pytest.raises(ValueError):
        TargetPolar(0, 0.1, 1.5, 0, 4)
