from fractions import Fraction

import numpy as np
from hypothesis import given, strategies as st

from hadamard_spectra.plotting import plot_attractor, plot_spectrum
from hadamard_spectra.report import density_raster, dumps, read_points_csv, write_points_csv


def test_dumps_sorted_and_exact():
    text = dumps({"b": Fraction(1, 3), "a": np.float64(0.5), "c": np.arange(2)})
    assert text == '{\n  "a": 0.5,\n  "b": "1/3",\n  "c": [\n    0,\n    1\n  ]\n}\n'


@given(st.lists(st.tuples(st.fractions(max_denominator=50), st.integers(-9, 9)), min_size=1, max_size=20))
def test_csv_round_trip(pts):
    import tempfile
    from pathlib import Path
    path = Path(tempfile.mkdtemp()) / "p.csv"
    assert write_points_csv(pts, path) == len(pts)
    assert read_points_csv(path) == [tuple(Fraction(x) for x in p) for p in pts]


def test_density_raster_orientation():
    img = density_raster(np.array([[0.0, 0.0], [1.0, 1.0]]), 10, bounds=((0, 0), (1, 1)))
    # y grows upwards: (0, 0) is bottom-left, (1, 1) top-right
    assert img[-1, 0] == 0 and img[0, -1] == 0 and img[0, 0] == 255


def test_figures_are_reproducible(tmp_path):
    pts = np.random.default_rng(0).uniform(size=(100, 2))
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    plot_attractor(pts, a)
    plot_attractor(pts, b)
    assert a.read_bytes() == b.read_bytes()
    plot_spectrum(pts[:, :1], tmp_path / "s.png")
    assert (tmp_path / "s.png").stat().st_size > 0
