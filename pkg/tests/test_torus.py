import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import load, triple
from hadamard_spectra.errors import InvariantSubspaceError, ReduceFirstError
from hadamard_spectra.exact_linalg import ExactMatrix
from hadamard_spectra.measure import MeasureEvaluator, mask_is_one
from hadamard_spectra.torus import (
    InvariantComponentReport,
    TransitionSystem,
    block_normalize,
    candidate_subspaces,
    extreme_cycles,
    is_invariant,
    minimal_period,
    orbit,
    periodic_points,
    zero_set_probe,
)


def cycle_sets(cycles):
    return {frozenset(tuple(int(x) for x in p) for p in c.points) for c in cycles}


def brute_extreme_cycles(T, box=12, max_period=6):
    """Cycles of x -> (R^T)^{-1}(x + l) through integer points with mask one."""
    Rt_inv = T.R.T.inverse()
    pts = list(itertools.product(range(-box, box + 1), repeat=T.d))
    succ = {}
    for x in pts:
        out = []
        for l in T.L:
            y = Rt_inv @ [a + b for a, b in zip(x, l)]
            if all(v.denominator == 1 for v in y) and mask_is_one(T.B, y):
                out.append(tuple(int(v) for v in y))
        succ[x] = out
    found = set()
    for x in pts:
        frontier = [(x, (x,))]
        for _ in range(max_period):
            nxt = []
            for y, path in frontier:
                for z in succ.get(y, []):
                    if z == x:
                        found.add(frozenset(path))
                    elif z not in path:
                        nxt.append((z, path + (z,)))
            frontier = nxt
    return found


def test_periodic_points():
    R2 = triple(2, [0, 1])
    assert periodic_points(R2, 1) == [(Fraction(0),)]
    assert periodic_points(R2, 2) == [(Fraction(k, 3),) for k in range(3)]
    pts = periodic_points(triple([[2, 0], [0, 2]], [[0, 0], [1, 0]]), 2)
    assert len(pts) == 9
    assert {x for p in pts for x in p} == {Fraction(0), Fraction(1, 3), Fraction(2, 3)}


@given(st.integers(2, 5), st.integers(1, 4))
def test_periodic_points_count_1d(r, m):
    # x with (r^m - 1) x in Z, counted mod 1
    T = triple(r, list(range(r)))
    pts = periodic_points(T, m)
    assert len(pts) == r ** m - 1
    for p in pts:
        assert minimal_period(T, p) <= m and m % minimal_period(T, p) == 0
        assert orbit(T, p, m)[0] == p


def test_extreme_cycles_examples():
    reduced = triple(4, [0, 1], [0, 2])
    assert cycle_sets(extreme_cycles(reduced)) == {frozenset({(0,)})}
    assert cycle_sets(extreme_cycles(triple(2, [0, 1], [0, -1]))) == {
        frozenset({(0,)}), frozenset({(-1,)})}
    # the {0, 1} companion also carries the fixed point 1
    assert cycle_sets(extreme_cycles(triple(2, [0, 1], [0, 1]))) == {
        frozenset({(0,)}), frozenset({(1,)})}


def test_extreme_cycles_needs_reduction():
    with pytest.raises(ReduceFirstError):
        extreme_cycles(triple(4, [0, 2], [0, 1]))


@pytest.mark.parametrize("T", [
    triple(4, [0, 1], [0, 2]),
    triple(2, [0, 1], [0, -1]),
    triple(2, [0, 1], [0, 1]),
    triple(3, [0, 1, 2], [0, 1, -1]),
    triple(4, [0, 1], [0, -2]),
    triple(4, [0, 1, 2, 3], [0, 1, 2, 3]),
    triple([[2, 0], [1, 2]], [[0, 0], [1, 0], [0, 1], [1, 1]], [[0, 0], [1, 0], [0, 1], [1, 1]]),
], ids=lambda T: str(T.to_json(with_history=False)))
def test_extreme_cycles_match_box_oracle(T):
    box = 12 if T.d == 1 else 5
    assert cycle_sets(extreme_cycles(T)) == brute_extreme_cycles(T, box=box)


def test_extreme_cycle_masks_are_one():
    for T in [load("leb2neg"), load("cube3")]:
        for c in extreme_cycles(T):
            assert all(mask_is_one(T.B, p) for p in c.points)


def test_transition_mass_is_one(jp4):
    ts = TransitionSystem(jp4)
    x = np.random.default_rng(0).uniform(-1, 1, (200, 1))
    # summing over all of Z / 4Z counts two Hadamard companions
    assert np.allclose(ts.total_mass(x), 2.0)
    lebesgue = TransitionSystem(load("leb2"))
    assert np.allclose(lebesgue.total_mass(x), 1.0)


def test_probe_empty_for_quarter_cantor(jp4):
    assert zero_set_probe(jp4, m_max=4, K=8).status == "empty-evidence"
    assert zero_set_probe(load("leb2")).status == "empty-evidence"


def test_probe_finds_product_witness(product2d):
    p = zero_set_probe(product2d)
    assert p.nonempty
    w = p.witness
    assert w.m == 2 and w.y0 == (Fraction(1, 3),)
    assert w.W_basis == [(1, 0)] or [list(v) for v in w.W_basis] == [[1, 0]]
    assert max(a for _, a in w.evidence) <= 1e-8
    assert len(w.evidence) == 17 * 17


def test_probe_witness_vanishes_independently(product2d):
    # second factor is Lebesgue on [0, 3]: its transform vanishes at 1/3 + k
    ev = MeasureEvaluator.of(product2d)
    ks = np.array(list(itertools.product(range(-8, 9), repeat=2)), dtype=float)
    for t in np.linspace(0, 1, 7):
        v, _ = ev.fourier(ks + np.array([t, 1 / 3]), tol=1e-12)
        assert np.abs(v).max() <= 1e-8


def test_candidate_subspaces_invariant():
    for A in ([[2, 0], [1, 2]], [[2, 0], [0, 2]], [[2, 1], [0, 3]], [[3, 1, 0], [0, 3, 0], [0, 0, 2]]):
        A = ExactMatrix(A)
        subs = candidate_subspaces(A)
        assert subs
        for basis in subs:
            assert is_invariant(A, basis)
        dims = [len(b) for b in subs]
        assert dims == sorted(dims, reverse=True)


def test_block_normalize_identity(product2d):
    bn = block_normalize(product2d, zero_set_probe(product2d).witness)
    assert bn.M == ExactMatrix.identity(2) and bn.r == 1 and bn.y0 == (Fraction(1, 3),)


def test_block_normalize_swapped_axes():
    T = triple([[2, 0], [0, 2]], [[0, 0], [3, 0], [0, 1], [3, 1]],
               [[0, 0], [1, 0], [0, 1], [1, 1]])
    p = zero_set_probe(T)
    assert p.nonempty
    bn = block_normalize(T, p.witness)
    assert sorted(abs(x) for row in bn.M.tolist() for x in row) == [0, 0, 1, 1]
    assert bn.M != ExactMatrix.identity(2)
    R = bn.triple.R
    assert R[0, 1] == 0
    # either point of the period-2 orbit {1/3, 2/3} is a valid witness
    assert bn.y0 in {(Fraction(1, 3),), (Fraction(2, 3),)}


def test_block_normalize_shear():
    T = load("shear2d")
    p = zero_set_probe(T)
    assert p.nonempty
    bn = block_normalize(T, p.witness)
    assert bn.triple.R[0, 1] == 0


def test_block_normalize_rejects_non_invariant(product2d):
    bad = InvariantComponentReport((Fraction(0), Fraction(1, 3)), 2, [(1, 1)], [], [], 1e-6, 8)
    T = triple([[2, 1], [0, 2]], [[0, 0], [0, 3], [1, 0], [1, 3]])
    with pytest.raises(InvariantSubspaceError):
        block_normalize(T, bad)
