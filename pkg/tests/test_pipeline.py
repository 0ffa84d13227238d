import pytest

from conftest import load, triple
from hadamard_spectra.errors import PipelineError
from hadamard_spectra.pipeline import Budget, _auto_levels, build_spectrum, synthesize_spectrum


def stages(trace):
    return [t["stage"] for t in trace]


def test_quarter_cantor_leveled(jp4):
    res = synthesize_spectrum(jp4, Budget(levels=[4, 6, 8]))
    assert res.status == "pass"
    assert res.report.strictly_decreasing() and res.report.final_defect <= 5e-3
    assert "rescale" in stages(res.trace) and "extreme-cycles" in stages(res.trace)
    assert [p[0] for p in res.spectrum.points(3)] == [0, 1, 4, 5, 16, 17, 20, 21]
    assert res.extra["finite_level_identity"]["max_defect"] < 1e-10
    assert res.extra["orthogonality"]["status"] == "pass"


def test_rank_drop_recursion():
    res = synthesize_spectrum(load("rankdrop"), Budget(levels=[4, 6, 8]))
    assert res.status == "pass"
    drop = next(t for t in res.trace if t["stage"] == "rank-drop")
    assert drop["r"] == 1
    assert res.reduced.d == 1
    # spectrum lives in a line of R^2
    pts = res.spectrum.points(4)
    assert all(len(p) == 2 for p in pts)


def test_product_route_spectrum_not_integral(product2d):
    res = synthesize_spectrum(product2d, Budget(levels=[2, 4]))
    assert "quasi-product" in stages(res.trace) and "fiber-lattice" in stages(res.trace)
    pts = res.spectrum.points(2)
    assert any(p[1].denominator == 3 for p in pts)
    assert all(p[0].denominator == 1 for p in pts)
    assert res.report.monotone and res.report.max_partial <= 1 + 1e-9
    assert res.report.strictly_decreasing()


def test_missing_L_is_searched():
    res = synthesize_spectrum(triple(4, [0, 2]), Budget(levels=[3, 5]))
    assert stages(res.trace)[0] == "hadamard-search"
    assert res.report.monotone


def test_no_companion_stage_error():
    with pytest.raises(PipelineError) as info:
        synthesize_spectrum(triple(3, [0, 2]))
    assert info.value.stage == "hadamard-search"


def test_translated_input():
    T = triple(4, [2, 4], [1, 2])
    res = synthesize_spectrum(T, Budget(levels=[4, 6]))
    assert stages(res.trace)[0] == "translate" and res.status == "pass"


def test_auto_levels(jp4):
    spec, _ = build_spectrum(jp4, Budget(), [])
    assert _auto_levels(spec, 300) == [4, 6, 8]
    assert _auto_levels(spec, 20) == [1, 2, 4]


def test_deterministic(jp4):
    a = synthesize_spectrum(jp4, Budget(levels=[4, 5]))
    b = synthesize_spectrum(jp4, Budget(levels=[4, 5]))
    assert a.report.to_json(full=True) == b.report.to_json(full=True)
    assert a.trace == b.trace
