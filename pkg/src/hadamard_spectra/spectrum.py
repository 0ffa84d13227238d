"""Candidate spectra and their certification.

Two checks are offered.  The finite-level identity

    sum_{lambda in Lambda_N} |mu_N^(xi + lambda)|^2 = 1

holds exactly for every Hadamard triple and catches arithmetic bugs.  The
truncated Jorgensen-Pedersen sum addresses the actual infinite measure; its
defect 1 - S(xi) only shrinks as more of Lambda is included.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exact_linalg import ExactMatrix, Lattice, frac_str, jsonable, vec
from .measure import MeasureEvaluator
from .triple import Triple

BESSEL_SLACK = 1e-9


# ---------------------------------------------------------------------------
# candidates

class SpectrumCandidate:
    """A nested family Lambda_1 subset Lambda_2 subset ... of frequency sets."""

    dim: int

    def points(self, level: int) -> list:
        raise NotImplementedError

    def array(self, level: int) -> np.ndarray:
        """Float copy of points(level); subclasses may build it without exact arithmetic."""
        cache = self.__dict__.setdefault("_arrays", {})
        if level not in cache:
            pts = self.points(level)
            cache[level] = np.array([[float(v) for v in p] for p in pts]).reshape(len(pts), self.dim)
        return cache[level]

    def count(self, level: int) -> int:
        return len(self.array(level))

    def describe(self) -> dict:
        raise NotImplementedError


class LeveledSpectrum(SpectrumCandidate):
    """Lambda_N = union over seeds c of (R^T)^N(-c) + L + R^T L + ... + (R^T)^{N-1} L.

    With the seeds being all points of cycles of x -> (R^T)^{-1}(x + l),
    l in L, the family is nested in N.
    """

    def __init__(self, R: ExactMatrix, L: Sequence, seeds: Sequence = None):
        self.Rt = ExactMatrix(R).T
        self.L = [vec(l) for l in L]
        self.dim = self.Rt.nrows
        zero = vec([0] * self.dim)
        self.seeds = sorted({vec(c) for c in seeds}) if seeds else [zero]
        self._cache = {0: [zero]}

    def _sums(self, level: int) -> list:
        if level not in self._cache:
            prev = self._sums(level - 1)
            P = self.Rt ** (level - 1)
            shifts = [P @ l for l in self.L]
            self._cache[level] = sorted({tuple(a + b for a, b in zip(p, s))
                                         for p in prev for s in shifts})
        return self._cache[level]

    def points(self, level: int) -> list:
        base = self._sums(level)
        P = self.Rt ** level
        out = set()
        for c in self.seeds:
            shift = P @ [-x for x in c]
            out.update(tuple(a + b for a, b in zip(p, shift)) for p in base)
        return sorted(out)

    def describe(self) -> dict:
        return {"structure": "leveled",
                "L": [[jsonable(x) for x in l] for l in self.L],
                "seeds": [[jsonable(x) for x in c] for c in self.seeds]}


class ProductSpectrum(SpectrumCandidate):
    """Lambda_1 x (Gamma_2 cut to a sup-norm box).

    By default the box radius follows the extent of Lambda_1 at the same level.
    """

    def __init__(self, first: SpectrumCandidate, lattice: Lattice, radius=None):
        self.first = first
        self.lattice = lattice
        self.dim = first.dim + lattice.dim
        self.radius = radius

    def lattice_radius(self, level: int) -> Fraction:
        if self.radius is not None:
            return Fraction(self.radius)
        a = self.first.array(level)
        ext = float(np.abs(a).max()) if a.size else 1.0
        return max(Fraction(1), Fraction(ext).limit_denominator(1 << 20))

    def points(self, level: int) -> list:
        a = self.first.points(level)
        b = self.lattice.points(self.lattice_radius(level))
        return sorted(tuple(p) + tuple(q) for p in a for q in b)

    def _second(self, level: int) -> np.ndarray:
        b = self.lattice.points(self.lattice_radius(level))
        return np.array([[float(x) for x in q] for q in b]).reshape(len(b), self.lattice.dim)

    def array(self, level: int) -> np.ndarray:
        a = self.first.array(level)
        b = self._second(level)
        return np.hstack([np.repeat(a, len(b), axis=0), np.tile(b, (len(a), 1))])

    def count(self, level: int) -> int:
        return self.first.count(level) * len(self._second(level))

    def describe(self) -> dict:
        return {"structure": "product", "first": self.first.describe(),
                "lattice": self.lattice.tolist(),
                "radius": None if self.radius is None else jsonable(Fraction(self.radius))}


class EmbeddedSpectrum(SpectrumCandidate):
    """Lambda_1 x {0}: spectrum of a measure carried by R^r x {0}."""

    def __init__(self, inner: SpectrumCandidate, dim: int):
        self.inner = inner
        self.dim = dim

    def points(self, level: int) -> list:
        pad = (Fraction(0),) * (self.dim - self.inner.dim)
        return [tuple(p) + pad for p in self.inner.points(level)]

    def array(self, level: int) -> np.ndarray:
        a = self.inner.array(level)
        return np.hstack([a, np.zeros((len(a), self.dim - self.inner.dim))])

    def count(self, level: int) -> int:
        return self.inner.count(level)

    def describe(self) -> dict:
        return {"structure": "embedded", "dim": self.dim, "inner": self.inner.describe()}


class TransformedSpectrum(SpectrumCandidate):
    """A(Lambda) for a fixed invertible matrix A."""

    def __init__(self, inner: SpectrumCandidate, A: ExactMatrix):
        self.inner = inner
        self.A = A
        self.dim = A.nrows

    def points(self, level: int) -> list:
        if self.A == ExactMatrix.identity(self.dim):
            return self.inner.points(level)
        return sorted(self.A @ p for p in self.inner.points(level))

    def array(self, level: int) -> np.ndarray:
        return self.inner.array(level) @ self.A.to_numpy().T

    def count(self, level: int) -> int:
        return self.inner.count(level)

    def describe(self) -> dict:
        return {"structure": "transformed", "A": self.A.tolist(), "inner": self.inner.describe()}


class ExplicitSpectrum(SpectrumCandidate):
    """A fixed finite list, the same at every level."""

    def __init__(self, pts: Sequence):
        self.pts = [vec(p) for p in pts]
        self.dim = len(self.pts[0])

    def points(self, level: int) -> list:
        return list(self.pts)

    def describe(self) -> dict:
        return {"structure": "explicit", "count": len(self.pts)}


def spectrum_zd(T: Triple, seeds=None) -> LeveledSpectrum:
    """Leveled candidate from L and extreme-cycle seeds (all cycle points)."""
    if seeds is None:
        from .torus import extreme_cycles
        seeds = [p for c in extreme_cycles(T) for p in c.points]
    return LeveledSpectrum(T.R, T.L, seeds)


def spectrum_csv_rows(pts: Sequence) -> list:
    return [[frac_str(Fraction(x)) for x in p] for p in pts]


# ---------------------------------------------------------------------------
# finite-level identity

def finite_level_identity(T: Triple, N: int, xi_sample) -> float:
    """max over xi of |sum_{lambda in Lambda_N} |mu_N^(xi + lambda)|^2 - 1|."""
    ev = MeasureEvaluator.of(T)
    lam = LeveledSpectrum(T.R, T.L).array(N)
    xi = np.atleast_2d(np.asarray(xi_sample, dtype=float)).reshape(-1, T.d)
    worst = 0.0
    for x in xi:
        v = ev.fourier_level(x[None, :] + lam, N)
        s = math.fsum((np.abs(v) ** 2).tolist())
        worst = max(worst, abs(s - 1.0))
    return worst


# ---------------------------------------------------------------------------
# truncated Jorgensen-Pedersen certification

def uniform_grid(d: int, n: int) -> np.ndarray:
    """n^d points of the grid (k + 1/2)/n in [0,1)^d, lexicographic."""
    ax = (np.arange(n) + 0.5) / n
    return np.array(list(itertools.product(ax, repeat=d)), dtype=float).reshape(-1, d)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("HS_THREADS", "0")) or min(4, os.cpu_count() or 1))
    except ValueError:
        return 1


@dataclass
class CertificationReport:
    mode: str
    status: str  # pass | fail | orthogonality-violated
    grid: list
    levels: list
    sizes: list
    partial_sums: list  # [level][grid point]
    error_bounds: list  # certified evaluation error on each partial sum, per level
    max_defect: list
    tol: float
    witnesses: list = field(default_factory=list)
    monotone: bool = True

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @property
    def final_defect(self) -> float:
        return self.max_defect[-1]

    @property
    def min_partial(self) -> float:
        return float(min(self.partial_sums[-1]))

    @property
    def max_partial(self) -> float:
        return float(max(max(s) for s in self.partial_sums))

    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.max_defect, self.max_defect[1:]))

    def to_json(self, full: bool = False) -> dict:
        out = {
            "mode": self.mode,
            "status": self.status,
            "grid": {"points": len(self.grid)},
            "N_lambda": self.levels,
            "sizes": self.sizes,
            "max_defect": self.max_defect,
            "min_partial": self.min_partial,
            "max_partial": self.max_partial,
            "max_eval_error": max(self.error_bounds),
            "monotone": self.monotone,
            "tol": self.tol,
            "witnesses": self.witnesses,
        }
        if full:
            out["grid"]["xi"] = self.grid
            out["partial_sums"] = self.partial_sums
        return out


def _partial_sums(ev: MeasureEvaluator, grid: np.ndarray, pts: np.ndarray, eval_tol: float):
    def one(xi):
        v, b = ev.fourier(xi[None, :] + pts, eval_tol, strict=False)
        a = np.abs(v)
        return math.fsum((a * a).tolist()), float(np.sum(2 * a * b + b * b))

    workers = _threads()
    if workers > 1 and len(grid) > 1:
        with ThreadPoolExecutor(workers) as pool:
            res = list(pool.map(one, grid))
    else:
        res = [one(x) for x in grid]
    return [r[0] for r in res], [r[1] for r in res]


def jp_certify(ev: MeasureEvaluator, spectrum: SpectrumCandidate, grid=None,
               levels: Sequence[int] = (8,), tol: float = 5e-3,
               eval_tol: float = 1e-12) -> CertificationReport:
    """Truncated sums S_N(xi) = sum_{lambda in Lambda_N} |mu_hat(xi + lambda)|^2."""
    if grid is None:
        grid = uniform_grid(ev.d, 64 if ev.d == 1 else 8)
    elif isinstance(grid, int):
        grid = uniform_grid(ev.d, grid)
    grid = np.atleast_2d(np.asarray(grid, dtype=float)).reshape(-1, ev.d)
    levels = list(levels)
    sums, errs, defects, sizes = [], [], [], []
    witnesses = []
    status = "pass"
    for N in levels:
        pts = spectrum.array(N)
        s, e = _partial_sums(ev, grid, pts, eval_tol)
        sums.append(s)
        errs.append(max(e))
        sizes.append(len(pts))
        defects.append(max(1.0 - x for x in s))
        for xi, x, err in zip(grid, s, e):
            if x > 1.0 + BESSEL_SLACK + err:
                status = "orthogonality-violated"
                witnesses.append({"xi": xi.tolist(), "N_lambda": N, "partial": x})
                break
    monotone = all(b >= a - ea - eb
                   for la, lb, ea, eb in zip(sums, sums[1:], errs, errs[1:])
                   for a, b in zip(la, lb))
    if status == "pass":
        k = int(np.argmax([1.0 - x for x in sums[-1]]))
        witnesses.append({"xi": grid[k].tolist(), "N_lambda": levels[-1],
                          "partial": sums[-1][k], "kind": "largest-defect"})
        if defects[-1] > tol:
            status = "fail"
    return CertificationReport("truncated-JP", status, grid.tolist(), levels, sizes,
                               sums, errs, defects, tol, witnesses, monotone)


def jp_certify_stable(ev, spectrum, n: int, level: int, tol: float, max_doublings: int = 2,
                      eval_tol: float = 1e-12):
    """Double the grid density until the verdict repeats; returns the last report."""
    prev = None
    for _ in range(max_doublings + 1):
        rep = jp_certify(ev, spectrum, uniform_grid(ev.d, n), [level], tol, eval_tol)
        if prev is not None and rep.status == prev.status:
            return rep
        prev, n = rep, 2 * n
    return prev


@dataclass
class OrthogonalityReport:
    status: str
    pairs: int
    max_abs: float
    witness: list | None

    def to_json(self) -> dict:
        return {"status": self.status, "pairs": self.pairs, "max_abs": self.max_abs,
                "witness": self.witness}


def certify_orthogonality(ev: MeasureEvaluator, pts: Sequence, tol: float = 1e-9) -> OrthogonalityReport:
    """max over distinct pairs of |mu_hat(lambda - lambda')| plus its error bound."""
    pts = [vec(p) for p in pts]
    if len(pts) < 2:
        return OrthogonalityReport("pass", 0, 0.0, None)
    arr = np.array([[float(v) for v in p] for p in pts])
    i, j = np.triu_indices(len(pts), k=1)
    diff = arr[i] - arr[j]
    v, b = ev.fourier(diff, min(tol, 1e-12) if tol > 0 else 1e-12, strict=False)
    upper = np.abs(v) + b
    k = int(np.argmax(upper))
    worst = float(upper[k])
    status = "pass" if worst <= tol else "fail"
    witness = [[frac_str(x) for x in pts[i[k]]], [frac_str(x) for x in pts[j[k]]]]
    return OrthogonalityReport(status, len(diff), worst, witness if status == "fail" else None)
