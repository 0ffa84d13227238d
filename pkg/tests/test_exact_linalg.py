import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from hadamard_spectra.errors import SingularModulusError
from hadamard_spectra.exact_linalg import (
    ExactMatrix,
    Lattice,
    congruent,
    dual_lattice,
    hermite_normal_form,
    invariant_lattice,
    is_expansive,
    residue_system,
    smith_normal_form,
)

small = st.integers(-6, 6)


def square(n):
    return st.lists(st.lists(small, min_size=n, max_size=n), min_size=n, max_size=n)


nonsingular = st.integers(1, 3).flatmap(square).filter(lambda A: ExactMatrix(A).det() != 0)


def gcd_of_minors(A, k):
    n = len(A)
    g = 0
    for rows in itertools.combinations(range(n), k):
        for cols in itertools.combinations(range(n), k):
            sub = ExactMatrix([[A[i][j] for j in cols] for i in rows])
            g = math.gcd(g, int(sub.det()))
    return g


def test_hnf_identity():
    I = ExactMatrix.identity(2)
    h = hermite_normal_form(I)
    assert h.H == I and h.U == I


def test_hnf_already_canonical():
    A = ExactMatrix([[2, 0], [0, 2]])
    h = hermite_normal_form(A)
    assert h.H == A and h.U == ExactMatrix.identity(2)


def test_hnf_small_example():
    A = ExactMatrix([[4, 2], [2, 2]])
    h = hermite_normal_form(A)
    assert A @ h.U == h.H
    assert abs(h.H.det()) == 4


@given(st.integers(1, 3).flatmap(square))
def test_hnf_properties(rows):
    A = ExactMatrix(rows)
    h = hermite_normal_form(A)
    assert A @ h.U == h.H
    assert abs(h.U.det()) == 1
    H = h.H
    pivots = []
    for j in range(h.rank):
        col = H.col(j)
        p = next(i for i, x in enumerate(col) if x != 0)
        assert col[p] > 0
        pivots.append(p)
        for k in range(j):
            assert 0 <= H[p, k] < col[p]
    assert pivots == sorted(set(pivots))
    assert all(x == 0 for j in range(h.rank, H.ncols) for x in H.col(j))
    assert abs(H.det()) == abs(A.det())


def test_snf_examples():
    assert smith_normal_form(ExactMatrix.diag([2, 3])).diagonal == [1, 6]
    assert smith_normal_form(ExactMatrix.identity(3)).diagonal == [1, 1, 1]
    assert smith_normal_form(ExactMatrix([[2, 1], [0, 2]])).diagonal == [1, 4]


def test_snf_singular_raises():
    with pytest.raises(SingularModulusError):
        smith_normal_form(ExactMatrix([[1, 2], [2, 4]]))


@given(nonsingular)
def test_snf_matches_minor_gcds(rows):
    A = ExactMatrix(rows)
    s = smith_normal_form(A)
    assert s.U @ A @ s.V == s.S
    diag = s.diagonal
    assert all(b % a == 0 for a, b in zip(diag, diag[1:]))
    # determinantal divisors: d_1 ... d_k = gcd of k-minors
    prod = 1
    for k, dk in enumerate(diag, 1):
        prod *= dk
        assert prod == gcd_of_minors(rows, k)


def test_is_expansive_examples():
    assert is_expansive(ExactMatrix([[4]]))
    assert not is_expansive(ExactMatrix([[1]]))
    assert is_expansive(ExactMatrix([[2, 1], [0, 3]]))
    assert not is_expansive(ExactMatrix([[2, 0], [0, -1]]))


@given(st.integers(1, 3).flatmap(square))
def test_is_expansive_agrees_with_eigenvalues(rows):
    ev = np.abs(np.linalg.eigvals(np.array(rows, dtype=float)))
    assume(np.all(np.abs(ev - 1) > 1e-6))
    assert is_expansive(ExactMatrix(rows)) == bool(np.all(ev > 1))


def test_residue_system_examples():
    assert [r[0] for r in residue_system(ExactMatrix([[2]]))] == [0, 1]
    assert [r[0] for r in residue_system(ExactMatrix([[4]]))] == [0, 1, 2, 3]
    reps = set(residue_system(ExactMatrix.diag([2, 2])))
    assert reps == {(0, 0), (1, 0), (0, 1), (1, 1)}


@given(nonsingular)
def test_residue_system_complete(rows):
    A = ExactMatrix(rows)
    assume(abs(A.det()) <= 60)
    rs = residue_system(A)
    assert len(rs) == abs(A.det())
    for a, b in itertools.combinations(rs.representatives, 2):
        assert not congruent(a, b, A)
    # every small integer vector is congruent to one representative
    d = A.nrows
    for x in itertools.product(range(-2, 3), repeat=d):
        assert rs.canonical(x) in rs.representatives


def test_invariant_lattice_examples():
    assert invariant_lattice(ExactMatrix([[4]]), [[0], [2]]) == Lattice([[2]])
    assert invariant_lattice(ExactMatrix([[2]]), [[0], [1]]) == Lattice.standard(1)
    lat = invariant_lattice(ExactMatrix([[2, 1], [0, 3]]), [[0, 0], [1, 0]])
    assert lat.rank == 1 and lat == Lattice([[1, 0]])


@given(st.lists(st.integers(-12, 12), min_size=1, max_size=4), st.integers(2, 5))
def test_invariant_lattice_1d_is_gcd(digits, r):
    # oracle: the lattice generated in 1-D is gcd(b - b') Z
    B = [[0]] + [[b] for b in digits]
    g = 0
    for b in digits:
        g = math.gcd(g, b)
    lat = invariant_lattice(ExactMatrix([[r]]), B)
    if g == 0:
        assert lat.rank == 0
    else:
        assert lat == Lattice([[g]])


def test_dual_lattice_examples():
    assert dual_lattice(Lattice.standard(2)) == Lattice.standard(2)
    assert dual_lattice(Lattice([[3]])) == Lattice([[Fraction(1, 3)]])


@given(nonsingular)
def test_dual_pairing_integral(rows):
    lat = Lattice(ExactMatrix(rows))
    dual = dual_lattice(lat)
    for a in lat.basis_columns():
        for b in dual.basis_columns():
            assert sum(x * y for x, y in zip(a, b)).denominator == 1
    assert dual_lattice(dual) == lat
