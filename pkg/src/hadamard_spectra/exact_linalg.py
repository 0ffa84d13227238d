"""Exact integer/rational matrices, normal forms and lattices.

Everything here works over :class:`fractions.Fraction` (Python ints being
a special case), so verdicts never depend on floating point rounding.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import DualUndefinedError, SingularModulusError

Vector = tuple  # tuple of Fraction


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        if not x.is_integer():
            raise TypeError(f"refusing inexact float entry {x!r}")
        return Fraction(int(x))
    return Fraction(x)


def vec(v: Iterable) -> Vector:
    return tuple(_frac(x) for x in v)


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def jsonable(x):
    """Integers stay integers, other rationals become "p/q" strings."""
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else frac_str(x)


def is_integral(v: Iterable) -> bool:
    return all(Fraction(x).denominator == 1 for x in v)


def dot(a: Sequence, b: Sequence) -> Fraction:
    return sum((Fraction(x) * y for x, y in zip(a, b)), Fraction(0))


def lcm_denominator(values: Iterable) -> int:
    return reduce(math.lcm, (Fraction(x).denominator for x in values), 1)


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with x*a + y*b = g = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


class ExactMatrix:
    """Immutable rectangular matrix with rational entries."""

    __slots__ = ("_rows", "_shape")

    def __init__(self, rows):
        if isinstance(rows, ExactMatrix):
            self._rows = rows._rows
            self._shape = rows._shape
            return
        rows = tuple(tuple(_frac(x) for x in r) for r in rows)
        if not rows or not rows[0]:
            raise ValueError("matrix must have at least one row and one column")
        ncols = len(rows[0])
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged matrix rows")
        self._rows = rows
        self._shape = (len(rows), ncols)

    # construction helpers
    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, r: int, c: int) -> "ExactMatrix":
        return cls([[0] * c for _ in range(r)])

    @classmethod
    def diag(cls, entries: Sequence) -> "ExactMatrix":
        n = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence]) -> "ExactMatrix":
        cols = [vec(c) for c in cols]
        return cls([[c[i] for c in cols] for i in range(len(cols[0]))])

    @classmethod
    def block(cls, blocks: Sequence[Sequence["ExactMatrix"]]) -> "ExactMatrix":
        rows = []
        for brow in blocks:
            for i in range(brow[0].nrows):
                rows.append(sum((b._rows[i] for b in brow), ()))
        return cls(rows)

    # basic protocol
    @property
    def shape(self) -> tuple[int, int]:
        return self._shape

    @property
    def nrows(self) -> int:
        return self._shape[0]

    @property
    def ncols(self) -> int:
        return self._shape[1]

    @property
    def is_square(self) -> bool:
        return self._shape[0] == self._shape[1]

    @property
    def rows(self) -> tuple:
        return self._rows

    def row(self, i: int) -> Vector:
        return self._rows[i]

    def col(self, j: int) -> Vector:
        return tuple(r[j] for r in self._rows)

    @property
    def columns(self) -> list:
        return [self.col(j) for j in range(self.ncols)]

    def __getitem__(self, idx):
        i, j = idx
        return self._rows[i][j]

    def __eq__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return self._rows == other._rows

    def __hash__(self):
        return hash(self._rows)

    def __repr__(self):
        body = ", ".join("[" + ", ".join(frac_str(x) for x in r) + "]" for r in self._rows)
        return f"ExactMatrix([{body}])"

    # arithmetic
    @property
    def T(self) -> "ExactMatrix":
        return ExactMatrix(list(zip(*self._rows)))

    def __add__(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return ExactMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)])

    def __sub__(self, other: "ExactMatrix") -> "ExactMatrix":
        return self + (-other)

    def __neg__(self) -> "ExactMatrix":
        return ExactMatrix([[-a for a in r] for r in self._rows])

    def __mul__(self, scalar) -> "ExactMatrix":
        s = _frac(scalar)
        return ExactMatrix([[s * a for a in r] for r in self._rows])

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, ExactMatrix):
            if self.ncols != other.nrows:
                raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
            cols = list(zip(*other._rows))
            return ExactMatrix([[sum((a * b for a, b in zip(r, c)), Fraction(0)) for c in cols]
                                for r in self._rows])
        v = vec(other)
        if len(v) != self.ncols:
            raise ValueError("vector length mismatch")
        return tuple(sum((a * b for a, b in zip(r, v)), Fraction(0)) for r in self._rows)

    def apply(self, v) -> Vector:
        return self @ v

    def __pow__(self, k: int) -> "ExactMatrix":
        if not self.is_square:
            raise ValueError("power of non-square matrix")
        base = self if k >= 0 else self.inverse()
        k = abs(k)
        result = ExactMatrix.identity(self.nrows)
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    # properties
    def is_integer(self) -> bool:
        return all(x.denominator == 1 for r in self._rows for x in r)

    def is_unimodular(self) -> bool:
        return self.is_square and self.is_integer() and abs(self.det()) == 1

    def det(self) -> Fraction:
        if not self.is_square:
            raise ValueError("determinant of non-square matrix")
        a = [list(r) for r in self._rows]
        n = len(a)
        det = Fraction(1)
        for c in range(n):
            p = next((i for i in range(c, n) if a[i][c] != 0), None)
            if p is None:
                return Fraction(0)
            if p != c:
                a[c], a[p] = a[p], a[c]
                det = -det
            det *= a[c][c]
            for i in range(c + 1, n):
                f = a[i][c] / a[c][c]
                if f:
                    a[i] = [x - f * y for x, y in zip(a[i], a[c])]
        return det

    def inverse(self) -> "ExactMatrix":
        if not self.is_square:
            raise ValueError("inverse of non-square matrix")
        n = self.nrows
        a = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(self._rows)]
        for c in range(n):
            p = next((i for i in range(c, n) if a[i][c] != 0), None)
            if p is None:
                raise SingularModulusError("singular matrix")
            a[c], a[p] = a[p], a[c]
            piv = a[c][c]
            a[c] = [x / piv for x in a[c]]
            for i in range(n):
                if i != c and a[i][c] != 0:
                    f = a[i][c]
                    a[i] = [x - f * y for x, y in zip(a[i], a[c])]
        return ExactMatrix([r[n:] for r in a])

    def trace(self) -> Fraction:
        return sum((self._rows[i][i] for i in range(self.nrows)), Fraction(0))

    def inf_norm(self) -> Fraction:
        """Maximum absolute row sum (the induced l-infinity operator norm)."""
        return max(sum((abs(x) for x in r), Fraction(0)) for r in self._rows)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "ExactMatrix":
        return ExactMatrix([[self._rows[i][j] for j in cols] for i in rows])

    # conversions
    def to_numpy(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self._rows], dtype=float)

    def tolist(self) -> list:
        return [[jsonable(x) for x in r] for r in self._rows]

    def to_int_rows(self) -> list:
        if not self.is_integer():
            raise ValueError("matrix is not integral")
        return [[int(x) for x in r] for r in self._rows]


# ---------------------------------------------------------------------------
# Gaussian elimination over Q

def rref(A: ExactMatrix) -> tuple[list, list]:
    a = [list(r) for r in A.rows]
    nr, nc = A.shape
    pivots = []
    row = 0
    for c in range(nc):
        p = next((i for i in range(row, nr) if a[i][c] != 0), None)
        if p is None:
            continue
        a[row], a[p] = a[p], a[row]
        piv = a[row][c]
        a[row] = [x / piv for x in a[row]]
        for i in range(nr):
            if i != row and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[row])]
        pivots.append(c)
        row += 1
        if row == nr:
            break
    return a, pivots


def rank(A: ExactMatrix) -> int:
    return len(rref(A)[1])


def nullspace(A: ExactMatrix) -> list:
    """Basis of {x : A x = 0} as a list of rational vectors."""
    a, pivots = rref(A)
    nc = A.ncols
    free = [c for c in range(nc) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * nc
        x[f] = Fraction(1)
        for r, p in enumerate(pivots):
            x[p] = -a[r][f]
        basis.append(tuple(x))
    return basis


def primitive_integer_vector(v: Sequence) -> Vector:
    """Scale a rational vector to a coprime integer vector (first nonzero > 0)."""
    den = lcm_denominator(v)
    ints = [int(Fraction(x) * den) for x in v]
    g = reduce(math.gcd, ints, 0) or 1
    ints = [x // g for x in ints]
    lead = next((x for x in ints if x), 1)
    if lead < 0:
        ints = [-x for x in ints]
    return vec(ints)


def span_contains(basis: Sequence[Sequence], v: Sequence) -> bool:
    if not basis:
        return all(Fraction(x) == 0 for x in v)
    M = ExactMatrix.from_columns(basis)
    return rank(M) == rank(ExactMatrix.from_columns(list(basis) + [v]))


# ---------------------------------------------------------------------------
# Characteristic polynomial and exact expansiveness

def charpoly(A: ExactMatrix) -> list:
    """Coefficients [1, c_{n-1}, ..., c_0] of det(xI - A), highest degree first.

    Faddeev-LeVerrier recursion, exact over Q.
    """
    n = A.nrows
    coeffs = [Fraction(1)]
    M = ExactMatrix.zeros(n, n)
    I = ExactMatrix.identity(n)
    c = Fraction(1)
    for k in range(1, n + 1):
        M = A @ M + I * c
        c = -(A @ M).trace() / k
        coeffs.append(c)
    return coeffs


def schur_cohn_inside(poly: Sequence) -> bool:
    """True iff every root of ``poly`` (highest degree first) lies in |z| < 1.

    Uses the Schur-Cohn reduction p -> (a_n p - a_0 p*)/z on real rational
    coefficients; no floating point is involved.
    """
    p = [Fraction(x) for x in poly]
    while p and p[0] == 0:
        p = p[1:]
    if not p:
        return False
    while len(p) > 1:
        lead, const = p[0], p[-1]
        if abs(lead) <= abs(const):
            return False
        rev = p[::-1]
        q = [lead * a - const * b for a, b in zip(p, rev)]
        # constant term cancels; drop it (division by z)
        p = q[:-1]
        while len(p) > 1 and p[0] == 0:
            p = p[1:]
    return True


def is_expansive(R: ExactMatrix) -> bool:
    """All eigenvalues of the integer matrix R have modulus > 1 (exact)."""
    if not R.is_square:
        raise ValueError("is_expansive needs a square matrix")
    cp = charpoly(R)
    if cp[-1] == 0:
        return False
    # roots of the reversed polynomial are the reciprocals of the eigenvalues
    return schur_cohn_inside(cp[::-1])


# ---------------------------------------------------------------------------
# Normal forms

@dataclass(frozen=True)
class HNF:
    """Column-style Hermite normal form: A @ U == H, H lower echelon."""

    H: ExactMatrix
    U: ExactMatrix
    rank: int


def _int_rows(A: ExactMatrix) -> list:
    if not A.is_integer():
        raise ValueError("integer matrix required")
    return [[int(x) for x in r] for r in A.rows]


def hermite_normal_form(A: ExactMatrix) -> HNF:
    """Column-style HNF of an integer matrix.

    The first ``rank`` columns of H are nonzero, each has a positive pivot in
    a strictly increasing row, entries left of a pivot lie in [0, pivot).
    Rank deficiency is reported through ``rank`` rather than raised.
    """
    H = _int_rows(A)
    n, k = A.shape
    U = [[int(i == j) for j in range(k)] for i in range(k)]

    def colop(j1, j2, a, b, c, d):
        # (col j1, col j2) <- (a*c1 + b*c2, c*c1 + d*c2)
        for M in (H, U):
            for r in M:
                x, y = r[j1], r[j2]
                r[j1], r[j2] = a * x + b * y, c * x + d * y

    p = 0
    for i in range(n):
        if p == k:
            break
        for j in range(p + 1, k):
            if H[i][j] != 0:
                a, b = H[i][p], H[i][j]
                g, x, y = xgcd(a, b)
                colop(p, j, x, y, -b // g, a // g)
        if H[i][p] == 0:
            continue
        if H[i][p] < 0:
            for M in (H, U):
                for r in M:
                    r[p] = -r[p]
        piv = H[i][p]
        for j in range(p):
            q = H[i][j] // piv
            if q:
                for M in (H, U):
                    for r in M:
                        r[j] -= q * r[p]
        p += 1
    return HNF(ExactMatrix(H), ExactMatrix(U), p)


@dataclass(frozen=True)
class SNF:
    """Smith normal form: U @ A @ V == S, diagonal with s1 | s2 | ..."""

    U: ExactMatrix
    S: ExactMatrix
    V: ExactMatrix

    @property
    def diagonal(self) -> list:
        return [int(self.S[i, i]) for i in range(min(self.S.shape))]


def smith_normal_form(A: ExactMatrix) -> SNF:
    if not A.is_square or A.det() == 0:
        raise SingularModulusError()
    S = _int_rows(A)
    n = A.nrows
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        for M in (S, U):
            M[i], M[j] = M[j], M[i]

    def swap_cols(i, j):
        for M in (S, V):
            for r in M:
                r[i], r[j] = r[j], r[i]

    def add_row(dst, src, q):
        for M in (S, U):
            M[dst] = [x + q * y for x, y in zip(M[dst], M[src])]

    def add_col(dst, src, q):
        for M in (S, V):
            for r in M:
                r[dst] += q * r[src]

    for t in range(n):
        while True:
            cand = [(abs(S[i][j]), i, j) for i in range(t, n) for j in range(t, n) if S[i][j]]
            _, pi, pj = min(cand)
            swap_rows(t, pi)
            swap_cols(t, pj)
            piv = S[t][t]
            dirty = False
            for i in range(t + 1, n):
                if S[i][t]:
                    add_row(i, t, -(S[i][t] // piv))
                    dirty |= S[i][t] != 0
            for j in range(t + 1, n):
                if S[t][j]:
                    add_col(j, t, -(S[t][j] // piv))
                    dirty |= S[t][j] != 0
            if dirty:
                continue
            bad = next(((i, j) for i in range(t + 1, n) for j in range(t + 1, n)
                        if S[i][j] % piv), None)
            if bad is None:
                break
            add_row(t, bad[0], 1)
        if S[t][t] < 0:
            for M in (S, U):
                M[t] = [-x for x in M[t]]
    return SNF(ExactMatrix(U), ExactMatrix(S), ExactMatrix(V))


# ---------------------------------------------------------------------------
# Lattices

class Lattice:
    """Subgroup of Q^d generated by the columns of a rational matrix.

    Stored in canonical column HNF, so equality is basis equality.
    """

    __slots__ = ("dim", "basis")

    def __init__(self, generators, dim: int | None = None):
        if isinstance(generators, ExactMatrix):
            gens = generators.columns
            dim = generators.nrows
        else:
            gens = [vec(g) for g in generators]
            if dim is None:
                if not gens:
                    raise ValueError("dimension needed for an empty generator list")
                dim = len(gens[0])
        self.dim = dim
        gens = [g for g in gens if any(g)]
        if not gens:
            self.basis = None
            return
        den = lcm_denominator(x for g in gens for x in g)
        M = ExactMatrix.from_columns([[x * den for x in g] for g in gens])
        h = hermite_normal_form(M)
        cols = h.H.columns[: h.rank]
        self.basis = ExactMatrix.from_columns([[x / den for x in c] for c in cols])

    @classmethod
    def standard(cls, d: int) -> "Lattice":
        return cls(ExactMatrix.identity(d))

    @property
    def rank(self) -> int:
        return 0 if self.basis is None else self.basis.ncols

    @property
    def is_full_rank(self) -> bool:
        return self.rank == self.dim

    def basis_columns(self) -> list:
        return [] if self.basis is None else self.basis.columns

    def index(self) -> Fraction:
        """Covolume |det basis| (index in Z^d for integer sublattices)."""
        if not self.is_full_rank:
            raise DualUndefinedError("covolume undefined for non-full-rank lattice")
        return abs(self.basis.det())

    def contains(self, v) -> bool:
        v = vec(v)
        if self.basis is None:
            return not any(v)
        return Lattice(self.basis_columns() + [v], self.dim) == self

    def is_subset_of(self, other: "Lattice") -> bool:
        return all(other.contains(c) for c in self.basis_columns())

    def __eq__(self, other):
        if not isinstance(other, Lattice):
            return NotImplemented
        return self.dim == other.dim and self.basis == other.basis

    def __hash__(self):
        return hash((self.dim, self.basis))

    def __repr__(self):
        return f"Lattice(dim={self.dim}, basis={self.basis!r})"

    def transformed(self, A: ExactMatrix) -> "Lattice":
        return Lattice([A @ c for c in self.basis_columns()], A.nrows)

    def points(self, radius) -> list:
        """All lattice points with sup-norm <= radius, lexicographically sorted."""
        if not self.is_full_rank:
            raise DualUndefinedError("point enumeration needs a full-rank lattice")
        radius = Fraction(radius)
        inv = self.basis.inverse()
        cbound = math.floor(inv.inf_norm() * radius)
        rng = range(-cbound, cbound + 1)
        out = set()
        for c in itertools.product(rng, repeat=self.dim):
            p = self.basis @ c
            if all(abs(x) <= radius for x in p):
                out.add(p)
        return sorted(out)

    def tolist(self) -> list:
        return [] if self.basis is None else self.basis.tolist()


def dual_lattice(L: Lattice) -> Lattice:
    if not L.is_full_rank:
        raise DualUndefinedError()
    return Lattice(L.basis.T.inverse())


def invariant_lattice(R: ExactMatrix, B: Sequence[Sequence]) -> Lattice:
    """Smallest R-invariant lattice containing B - b0 and all differences B - B."""
    B = [vec(b) for b in B]
    d = R.nrows
    b0 = B[0]
    gens = {tuple(x - y for x, y in zip(b, b0)) for b in B}
    gens |= {tuple(x - y for x, y in zip(b, c)) for b in B for c in B}
    lat = Lattice(sorted(gens), d)
    while True:
        cols = lat.basis_columns()
        nxt = Lattice(cols + [R @ c for c in cols], d)
        if nxt == lat:
            return lat
        lat = nxt


# ---------------------------------------------------------------------------
# Residue systems

def reduce_mod(x: Sequence, H: ExactMatrix) -> Vector:
    """Canonical representative of x modulo the lattice spanned by the lower
    triangular HNF basis H: coordinate i ends up in [0, H[i, i])."""
    x = list(vec(x))
    for i in range(H.nrows):
        q = math.floor(x[i] / H[i, i])
        if q:
            col = H.col(i)
            x = [a - q * c for a, c in zip(x, col)]
    return tuple(x)


def congruent(x: Sequence, y: Sequence, A: ExactMatrix) -> bool:
    """x == y modulo A(Z^d)."""
    diff = [Fraction(a) - Fraction(b) for a, b in zip(x, y)]
    return is_integral(A.inverse() @ diff)


@dataclass(frozen=True)
class ResidueSystem:
    modulus: ExactMatrix
    representatives: tuple

    def __len__(self):
        return len(self.representatives)

    def __iter__(self):
        return iter(self.representatives)

    def canonical(self, x) -> Vector:
        return reduce_mod(x, hermite_normal_form(self.modulus).H)

    def index_of(self, x) -> int:
        return self.representatives.index(self.canonical(x))


def residue_system(A: ExactMatrix) -> ResidueSystem:
    """Complete set of representatives of Z^d / A(Z^d), canonical and sorted.

    Representatives are preimages of the Smith fundamental box, reduced to the
    canonical HNF box of A(Z^d).
    """
    snf = smith_normal_form(A)
    Uinv = snf.U.inverse()
    H = hermite_normal_form(A).H
    box = [range(s) for s in snf.diagonal]
    reps = sorted({reduce_mod(Uinv @ k, H) for k in itertools.product(*box)})
    return ResidueSystem(A, tuple(reps))
