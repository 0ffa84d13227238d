"""Mask, Fourier transform and attractor of the self-affine measure mu(R, B).

Conventions: mu_hat(xi) = int exp(-2 pi i <xi, x>) dmu(x), and

    mu_hat(xi) = prod_{n >= 1} m_B((R^T)^{-n} xi),
    m_B(y) = N^{-1} sum_b exp(-2 pi i <b, y>),   u_B = |m_B|^2.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cyclotomic import root_sum_vanishes
from .errors import DepthCapExceeded
from .exact_linalg import ExactMatrix, dot, vec
from .triple import Triple

TWO_PI = 2.0 * math.pi
_CHUNK = 1 << 16


def mask(B: np.ndarray, x: np.ndarray) -> np.ndarray:
    """m_B at the rows of x (complex)."""
    phases = TWO_PI * (np.asarray(x, dtype=float) @ np.asarray(B, dtype=float).T)
    return np.cos(phases).mean(axis=-1) - 1j * np.sin(phases).mean(axis=-1)


def mask_value(B: Sequence, x) -> float:
    """u_B(x) = |N^{-1} sum_b exp(2 pi i <b, x>)|^2."""
    B = np.asarray(B, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(abs(mask(B, x)) ** 2)


def mask_vanishes(B: Sequence, x: Sequence) -> bool:
    """Exact test of u_B(x) == 0 at a rational point x."""
    x = vec(x)
    return root_sum_vanishes(dot(b, x) for b in B)


def mask_is_one(B: Sequence, x: Sequence) -> bool:
    """Exact test of u_B(x) == 1 at a rational point, assuming 0 in B."""
    x = vec(x)
    return all(dot(b, x).denominator == 1 for b in B)


@dataclass(frozen=True)
class Contraction:
    """Exact data bounding the series sum_{k>=1} ||R^{-k}||_inf.

    ``rho`` = ||R^{-n0}||_inf < 1 and ``series`` is a rigorous upper bound
    for the sum, obtained from the first n0 powers and a geometric tail.
    """

    n0: int
    rho: Fraction
    series: Fraction


def contraction_data(R: ExactMatrix, cap: int = 256) -> Contraction:
    Rinv = R.inverse()
    P = ExactMatrix.identity(R.nrows)
    partial = Fraction(0)
    for k in range(1, cap + 1):
        P = P @ Rinv
        nrm = P.inf_norm()
        partial += nrm
        if nrm < 1:
            return Contraction(k, nrm, partial / (1 - nrm))
    raise ValueError("no contracting power of R^{-1} found; is R expansive?")


class MeasureEvaluator:
    """Certified evaluation of mu_hat for the equal-weight measure mu(R, B).

    The infinite product is truncated at depth n and the tail mu_hat(eta_n),
    eta_n = (R^T)^{-n} xi, is replaced by exp(-2 pi i <eta_n, c>) with c the
    barycenter of mu.  The error is at most

        |prod_{k<=n} m_B(eta_k)| * 2 pi^2 (||eta_n||_1 r_c)^2,

    r_c being a bound on ||x - c||_inf over the attractor.
    """

    def __init__(self, R, B, depth_cap: int = 64):
        self.R = ExactMatrix(R)
        self.digits = [vec(b) for b in B]
        self.B = np.array([[float(x) for x in b] for b in self.digits])
        self.N = len(self.digits)
        self.d = self.R.nrows
        self.depth_cap = depth_cap
        self.Rt_inv = self.R.T.inverse().to_numpy()
        self.contraction = contraction_data(self.R)
        d = self.d
        mean = tuple(sum(b[i] for b in self.digits) / self.N for i in range(d))
        center = (self.R - ExactMatrix.identity(d)).inverse() @ mean
        self.center = np.array([float(x) for x in center])
        spread = max(max(abs(b[i] - mean[i]) for i in range(d)) for b in self.digits)
        self.beta = max(max(abs(x) for x in b) for b in self.digits)
        # slight upward rounding keeps the float bound rigorous
        self.radius_c = float(spread * self.contraction.series) * (1 + 1e-12)
        self.radius = float(self.beta * self.contraction.series) * (1 + 1e-12)

    @classmethod
    def of(cls, T: Triple, **kw) -> "MeasureEvaluator":
        return cls(T.R, T.B, **kw)

    def mask(self, y: np.ndarray) -> np.ndarray:
        return mask(self.B, y)

    def _tail_bound(self, P, eta):
        s = np.abs(eta).sum(axis=-1) * self.radius_c
        return np.abs(P) * 2.0 * math.pi ** 2 * s * s

    def _fourier_chunk(self, xi, tol, depth_cap):
        eta = xi.copy()
        P = np.ones(len(xi), dtype=complex)
        bound = self._tail_bound(P, eta)
        active = np.flatnonzero(bound > tol)
        depth = 0
        while depth < depth_cap and active.size:
            e = eta[active] @ self.Rt_inv.T
            p = P[active] * self.mask(e)
            b = self._tail_bound(p, e)
            eta[active], P[active], bound[active] = e, p, b
            active = active[b > tol]
            depth += 1
        value = P * np.exp(-1j * TWO_PI * (eta @ self.center))
        return value, bound, depth

    def fourier(self, xi, tol: float = 1e-12, depth_cap: int | None = None,
                strict: bool = True):
        """Vectorised mu_hat at the rows of ``xi``; returns (values, bounds)."""
        cap = self.depth_cap if depth_cap is None else depth_cap
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        if xi.shape[-1] != self.d:
            xi = xi.reshape(-1, self.d)
        vals = np.empty(len(xi), dtype=complex)
        bnds = np.empty(len(xi))
        for s in range(0, len(xi), _CHUNK):
            v, b, depth = self._fourier_chunk(xi[s:s + _CHUNK], tol, cap)
            vals[s:s + _CHUNK] = v
            bnds[s:s + _CHUNK] = b
            if strict and np.any(b > tol):
                raise DepthCapExceeded(float(b.max()), depth)
        return vals, bnds

    def fourier_level(self, xi, level: int) -> np.ndarray:
        """Transform of the level-n discrete measure: prod_{k=1}^{n} m_B(eta_k)."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        eta = xi.copy()
        P = np.ones(len(xi), dtype=complex)
        for _ in range(level):
            eta = eta @ self.Rt_inv.T
            P *= self.mask(eta)
        return P


def fourier_mu(T: Triple, xi, tol: float = 1e-12, depth_cap: int = 64):
    """(mu_hat(xi), error bound) with bound <= tol, or DepthCapExceeded."""
    ev = MeasureEvaluator.of(T, depth_cap=depth_cap)
    v, b = ev.fourier(np.atleast_1d(np.asarray(xi, dtype=float))[None, :], tol)
    return complex(v[0]), float(b[0])


def qmf_check(T: Triple, sample) -> float:
    """max_x |sum_{l in L} u_B((R^T)^{-1}(x + l)) - 1| over the sample."""
    x = np.atleast_2d(np.asarray(sample, dtype=float))
    if x.shape[-1] != T.d:
        x = x.reshape(-1, T.d)
    B = T.B.to_numpy()
    Rt_inv = T.R.T.inverse().to_numpy()
    total = np.zeros(len(x))
    for l in T.L.to_numpy():
        total += np.abs(mask(B, (x + l) @ Rt_inv.T)) ** 2
    return float(np.max(np.abs(total - 1.0)))


# ---------------------------------------------------------------------------
# attractor

def _integer_sums(R: ExactMatrix, B, words: np.ndarray):
    """z = sum_k R^{n-k} b_{w_k} for every row w of digit indices."""
    n = words.shape[1]
    Ri = np.array(R.to_int_rows(), dtype=object)
    Bi = np.array(B, dtype=object)
    safe = (max(1, int(R.inf_norm())) ** n) * (max(1, max(abs(x) for b in B for x in b))) * (n + 1)
    dtype = np.int64 if safe < 2 ** 62 else object
    Ri, Bi = Ri.astype(dtype), Bi.astype(dtype)
    z = np.zeros((len(words), R.nrows), dtype=dtype)
    for k in range(n):
        z = z @ Ri.T + Bi[words[:, k]]
    return z


@dataclass
class AttractorSample:
    level: int
    numerators: np.ndarray  # z with point = R^{-level} z
    words: np.ndarray
    scale: ExactMatrix  # R^{-level}
    subsampled: bool = False
    _float: np.ndarray | None = field(default=None, repr=False)

    @property
    def points(self) -> np.ndarray:
        if self._float is None:
            S = self.scale.to_numpy()
            self._float = np.asarray(self.numerators, dtype=float) @ S.T
        return self._float

    def exact_points(self) -> list:
        return [self.scale @ [int(v) for v in z] for z in self.numerators]

    def __len__(self):
        return len(self.numerators)


def attractor_points(T: Triple, level: int, cap: int = 1 << 16, seed: int = 0) -> AttractorSample:
    """Level-n points sum_{k=1}^{n} R^{-k} b_k of the attractor.

    All N^n digit strings in digit-lexicographic order when N^n <= cap,
    otherwise ``cap`` uniformly drawn strings (fixed seed), deduplicated.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    N = T.N
    if N ** level <= cap:
        words = np.array(list(itertools.product(range(N), repeat=level)), dtype=np.int64)
        sub = False
    else:
        rng = np.random.default_rng(seed)
        words = rng.integers(0, N, size=(cap, level))
        _, first = np.unique(words, axis=0, return_index=True)
        words = words[np.sort(first)]
        sub = True
    z = _integer_sums(T.R, T.B, words)
    return AttractorSample(level, z, words, T.R ** (-level), sub)


@dataclass
class OverlapReport:
    level: int
    checked: int
    collisions: list

    @property
    def ok(self) -> bool:
        return not self.collisions

    def to_json(self) -> dict:
        return {"level": self.level, "checked": self.checked,
                "collisions": [[list(a), list(b)] for a, b in self.collisions]}


def no_overlap_probe(T: Triple, level: int, max_report: int = 20) -> OverlapReport:
    """Exact pairwise distinctness of the level-n cylinder points."""
    words = np.array(list(itertools.product(range(T.N), repeat=level)), dtype=np.int64)
    z = _integer_sums(T.R, T.B, words)
    seen = {}
    collisions = []
    for w, p in zip(words, z):
        key = tuple(int(v) for v in p)
        digits = tuple(T.B[i] for i in w)
        if key in seen:
            if len(collisions) < max_report:
                collisions.append((seen[key], digits))
        else:
            seen[key] = digits
    return OverlapReport(level, len(words), collisions)
