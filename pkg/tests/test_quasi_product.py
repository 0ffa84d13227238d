import dataclasses
from fractions import Fraction

import numpy as np
import pytest

from conftest import load, triple
from hadamard_spectra.errors import BlockFormError, NoFiberLatticeError, QuasiProductError
from hadamard_spectra.exact_linalg import ExactMatrix, Lattice
from hadamard_spectra.quasi_product import (
    DaggerSystem,
    candidate_gamma2,
    detect_quasi_product,
    disintegration_check,
    fiber_fourier,
    hnf_sublattices,
    normalize_L,
    project_triples,
    split_blocks,
    sum_identity_defects,
    transition_shadow,
    witness_lattice,
)
from hadamard_spectra.torus import InvariantComponentReport, block_normalize, zero_set_probe
from hadamard_spectra.triple import check_hadamard, residue_system


def decompose(T):
    p = zero_set_probe(T)
    bn = block_normalize(T, p.witness)
    Tn = normalize_L(bn.triple, bn.r)
    return Tn, detect_quasi_product(Tn, bn.witness)


@pytest.fixture(scope="module")
def product():
    return decompose(load("product2d"))


def test_split_blocks():
    R1, R2, C = split_blocks(ExactMatrix([[2, 0], [1, 3]]), 1)
    assert R1 == ExactMatrix([[2]]) and R2 == ExactMatrix([[3]]) and C == ExactMatrix([[1]])
    with pytest.raises(BlockFormError):
        split_blocks(ExactMatrix([[2, 1], [0, 3]]), 1)


def test_normalize_L_unchanged_on_product(product2d):
    assert normalize_L(product2d, 1).L == product2d.L


def test_normalize_L_merges_classes():
    T = triple([[2, 0], [0, 4]], [[0, 0], [1, 0]], [[0, 0], [1, 4]])
    n = normalize_L(T, 1)
    assert {l[1] for l in n.L} == {0}
    assert check_hadamard(n).passed


def test_witness_lattice_scalar():
    assert witness_lattice(ExactMatrix([[2]]), (Fraction(1, 3),), 2) == Lattice([[3]])


def test_detect_product(product):
    _, q = product
    assert q.Q == ExactMatrix([[3]]) and q.gamma == Lattice([[3]])
    assert sorted(u[0] for u in q.u) == [0, 1]
    assert all(v == (0,) for v in q.v)
    assert all(sorted(c[0] for c in cs) == [0, 1] for cs in q.c)
    assert q.R2_tilde == ExactMatrix([[2]])


def test_detect_rejects_fake_witness(product2d):
    fake = InvariantComponentReport((Fraction(0), Fraction(0)), 1, [(1, 0)], [], [], 1e-6, 8)
    with pytest.raises(QuasiProductError):
        detect_quasi_product(product2d, fake)


def test_detect_rejects_dropped_digit(product2d):
    w = zero_set_probe(product2d).witness
    T3 = triple([[2, 0], [0, 2]], [[0, 0], [0, 3], [1, 0]], [[0, 0], [0, 1], [1, 0]])
    with pytest.raises(QuasiProductError):
        detect_quasi_product(T3, w)


def test_project_product(product):
    Tn, q = product
    proj = project_triples(q, Tn.L)
    for base in proj.base.values():
        assert base.B == ((0,), (1,)) and base.L == ((0,), (1,))
    for fiber in proj.fibers.values():
        assert fiber.B == ((0,), (3,)) and fiber.L == ((0,), (1,))
        assert check_hadamard(fiber).passed


@pytest.mark.parametrize("name", ["product2d", "shear2d"])
def test_sum_identities(name):
    Tn, q = decompose(load(name))
    a, b = sum_identity_defects(q, Tn.L)
    assert a < 1e-10 and b < 1e-10


def test_sum_identities_swapped_axes():
    T = triple([[2, 0], [0, 2]], [[0, 0], [3, 0], [0, 1], [3, 1]], [[0, 0], [1, 0], [0, 1], [1, 1]])
    Tn, q = decompose(T)
    assert max(sum_identity_defects(q, Tn.L)) < 1e-10


def test_transition_shadow_empty(product):
    Tn, q = product
    digits = residue_system(Tn.R.T).representatives
    xs = np.random.default_rng(0).uniform(0, 1, (200, 1))
    assert transition_shadow(Tn, q, digits, xs) == []


def test_fiber_fourier_at_zero(product):
    _, q = product
    P, b = fiber_fourier(q, [0], np.zeros((1, 1)))
    assert abs(P[0] - 1) <= b[0] + 1e-15


@pytest.mark.parametrize("extension", ["periodic", "constant"])
def test_fiber_fourier_lebesgue_on_0_3(product, extension):
    _, q = product
    eta = np.linspace(-2.3, 2.3, 19)[:, None]
    P, b = fiber_fourier(q, [1, 0, 1], eta, tol=1e-10, extension=extension)
    exact = np.exp(-3j * np.pi * eta[:, 0]) * np.sinc(3 * eta[:, 0])
    assert np.all(np.abs(P - exact) <= b + 1e-12)


def test_disintegration_monte_carlo(product2d, product):
    _, q = product
    for xi in ([0.3, 0.2], [1.1, -0.7]):
        mc, exact, se = disintegration_check(product2d, q, xi, samples=600, depth=30)
        assert abs(mc - exact) <= 5 * se + 1e-9


def test_dagger_system(product):
    _, q = product
    dag = DaggerSystem.of(q)
    assert dag.R == ExactMatrix.diag([2, 2]) and len(dag.B) == 4
    assert dag.is_complete_residue_system()


def test_hnf_sublattices_count():
    # number of index-n sublattices of Z^2 is sigma(n)
    sigma = {1: 1, 2: 3, 3: 4, 4: 7, 6: 12}
    for n, s in sigma.items():
        subs = list(hnf_sublattices(2, n))
        assert len(subs) == s
        assert all(abs(ExactMatrix(h).det() if not isinstance(h, ExactMatrix) else h.det()) == n
                   for h in subs)


def test_gamma2_product(product):
    _, q = product
    g = candidate_gamma2(q)[0]
    assert g.lattice == Lattice([[Fraction(1, 3)]])
    assert g.report.passed


def test_gamma2_integer_lattice_when_Q_trivial(product):
    _, q = product
    unit = dataclasses.replace(q, Q=ExactMatrix([[1]]), gamma=Lattice.standard(1))
    g = candidate_gamma2(unit)[0]
    assert g.lattice == Lattice.standard(1)


def test_gamma2_found_only_with_large_enough_index(product):
    # fiber digits {0, 3} written with Q = 1: the dual of Q Z^n is too coarse,
    # the right lattice is the dual of an index-3 sublattice
    _, q = product
    wrong = dataclasses.replace(q, Q=ExactMatrix([[1]]), c=[[(0,), (3,)] for _ in q.c])
    with pytest.raises(NoFiberLatticeError):
        candidate_gamma2(wrong, index_bound=2)
    g = candidate_gamma2(wrong, index_bound=3)[0]
    assert g.lattice == Lattice([[Fraction(1, 3)]]) and "index-3" in g.provenance
