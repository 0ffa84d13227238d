import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import hadamard_corpus, load, triple
from hadamard_spectra.exact_linalg import ExactMatrix
from hadamard_spectra.measure import MeasureEvaluator
from hadamard_spectra.spectrum import (
    ExplicitSpectrum,
    LeveledSpectrum,
    ProductSpectrum,
    TransformedSpectrum,
    certify_orthogonality,
    finite_level_identity,
    jp_certify,
    spectrum_zd,
    uniform_grid,
)
from hadamard_spectra.exact_linalg import Lattice
from hadamard_spectra.triple import check_hadamard, reduce_triple


@st.composite
def fourier_triples(draw):
    """(N q, {q j + N q m_j}, {0..N-1}): Hadamard by construction."""
    N = draw(st.integers(2, 4))
    q = draw(st.integers(1, 3))
    shifts = draw(st.lists(st.integers(-1, 1), min_size=N, max_size=N))
    B = [q * j + N * q * m for j, m in zip(range(N), shifts)]
    return triple(N * q, B, list(range(N)))


def test_leveled_quarter_cantor_level_three():
    lam = LeveledSpectrum(ExactMatrix([[4]]), [[0], [1]])
    assert [p[0] for p in lam.points(3)] == [0, 1, 4, 5, 16, 17, 20, 21]


def test_reduced_candidate_maps_back(jp4):
    red = reduce_triple(jp4)
    inner = spectrum_zd(red.final)
    back = TransformedSpectrum(inner, red.M.T)
    assert [p[0] for p in back.points(3)] == [0, 1, 4, 5, 16, 17, 20, 21]


def test_leveled_lebesgue_with_negative_seed():
    T = triple(2, [0, 1], [0, -1])
    lam = spectrum_zd(T)
    assert lam.seeds == [(-1,), (0,)]
    # seed 0 gives {-(2^N - 1), ..., 0}, seed -1 adds 2^N + that set
    assert [p[0] for p in lam.points(3)] == list(range(-7, 9))


def test_extra_seed_adds_shifted_branch():
    R, L = ExactMatrix([[4]]), [[0], [1]]
    plain = set(LeveledSpectrum(R, L, [(0,)]).points(2))
    both = set(LeveledSpectrum(R, L, [(0,), (-1,)]).points(2))
    shifted = {(p[0] + 16,) for p in plain}
    assert both == plain | shifted


@given(st.integers(1, 5))
def test_leveled_is_nested(N):
    lam = spectrum_zd(load("leb2neg"))
    assert set(lam.points(N)) <= set(lam.points(N + 1))
    assert lam.count(N) == len(lam.points(N))


def test_finite_level_identity_examples(jp4):
    xi = [[0.0], [0.3], [1 / 7]]
    assert finite_level_identity(jp4, 4, xi) < 1e-11
    assert finite_level_identity(load("leb2"), 6, xi) < 1e-11
    assert finite_level_identity(triple(3, [0, 2], [0, 1]), 4, xi) > 0.1


@pytest.mark.parametrize("name", hadamard_corpus())
def test_finite_level_identity_corpus(name):
    T = load(name)
    N = max(1, min(6, int(math.log(4096) / math.log(T.N))))
    xi = np.random.default_rng(3).uniform(-2, 2, (100, T.d))
    assert finite_level_identity(T, N, xi) <= 1e-10


@given(fourier_triples(), st.floats(-5, 5, allow_nan=False))
def test_finite_level_identity_property(T, x):
    assert check_hadamard(T).passed
    assert finite_level_identity(T, 3, [[x]]) <= 1e-10


def test_jp_quarter_cantor(jp4):
    ev = MeasureEvaluator.of(jp4)
    lam = spectrum_zd(reduce_triple(jp4).final)
    lam = TransformedSpectrum(lam, reduce_triple(jp4).M.T)
    rep = jp_certify(ev, lam, 64, [4, 6, 8], tol=5e-3)
    assert rep.passed and rep.strictly_decreasing()
    assert rep.final_defect <= 5e-3
    assert rep.max_partial <= 1 + 1e-9 and rep.monotone


def test_jp_lebesgue_against_closed_form():
    ev = MeasureEvaluator.of(load("leb2"))
    grid = uniform_grid(1, 16)
    defects = []
    for N in (4, 8, 16, 32):
        lam = ExplicitSpectrum([(k,) for k in range(-N, N + 1)])
        rep = jp_certify(ev, lam, grid, [0], tol=1.0)
        exact = [sum(np.sinc(x + k) ** 2 for k in range(-N, N + 1)) for x in grid[:, 0]]
        assert np.allclose(rep.partial_sums[0], exact, atol=1e-10)
        defects.append(rep.final_defect)
    # sinc^2 tail: defect ~ c / N
    ratios = [a / b for a, b in zip(defects, defects[1:])]
    assert all(1.6 < r < 2.4 for r in ratios)


def test_jp_repeated_point_flagged():
    ev = MeasureEvaluator.of(load("leb2"))
    lam = ExplicitSpectrum([(0,), (0,), (1,), (-1,)])
    rep = jp_certify(ev, lam, 16, [0])
    assert rep.status == "orthogonality-violated" and rep.witnesses


def test_orthogonality_examples(jp4):
    ev = MeasureEvaluator.of(jp4)
    pts = LeveledSpectrum(ExactMatrix([[4]]), [[0], [1]]).points(3)
    assert certify_orthogonality(ev, pts).status == "pass"
    assert certify_orthogonality(ev, pts[:1]).pairs == 0
    bad = list(pts)
    bad[3] = (bad[3][0] + 2,)
    rep = certify_orthogonality(ev, bad)
    assert rep.status == "fail" and rep.witness is not None


@pytest.mark.parametrize("name", ["jp4", "leb2neg", "quarter4", "rankdrop"])
def test_partial_sums_monotone_and_bessel(name):
    from hadamard_spectra.pipeline import Budget, build_spectrum
    T = load(name)
    spec, _ = build_spectrum(T, Budget(), [])
    rep = jp_certify(MeasureEvaluator.of(T), spec, uniform_grid(T.d, 6 if T.d > 1 else 32), [1, 2, 3, 4, 5])
    assert rep.monotone
    assert rep.max_partial <= 1 + 1e-9 + max(rep.error_bounds)


def test_product_spectrum_shape():
    first = LeveledSpectrum(ExactMatrix([[2]]), [[0], [1]])
    prod = ProductSpectrum(first, Lattice([[Fraction(1, 3)]]))
    pts = prod.points(2)
    assert len(pts) == prod.count(2) == len(prod.array(2))
    assert {p[0] for p in pts} == {0, 1, 2, 3}
    assert all((3 * p[1]).denominator == 1 for p in pts)
