"""Transition dynamics x -> (R^T)^{-1}(x + l) on the torus and the zero set.

The zero set is Z = {xi : mu_hat(xi + k) = 0 for all integer k}.  Only
semi-decisions are possible here: :func:`zero_set_probe` reports the search
bounds it used, and a negative answer is evidence, not proof.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import networkx as nx
import numpy as np
import sympy

from .errors import InvariantSubspaceError, ReduceFirstError
from .exact_linalg import (
    ExactMatrix,
    Lattice,
    frac_str,
    hermite_normal_form,
    invariant_lattice,
    jsonable,
    nullspace,
    primitive_integer_vector,
    residue_system,
    rref,
    span_contains,
    vec,
)
from .measure import MeasureEvaluator, contraction_data, mask_is_one, mask_vanishes
from .triple import Triple, complete_representatives_containing, conjugate


def frac_part(x: Sequence) -> tuple:
    return tuple(Fraction(v) - math.floor(Fraction(v)) for v in x)


class TransitionSystem:
    """The system (u_B, R^T, Lbar) with Lbar a complete residue system mod R^T."""

    def __init__(self, T: Triple, digits=None, eps_pos: float = 1e-12):
        self.T = T
        if digits is None:
            if T.L is not None:
                digits = complete_representatives_containing(T.R, T.L).representatives
            else:
                digits = residue_system(T.R.T).representatives
        self.digits = [vec(l) for l in digits]
        self.Rt_inv = T.R.T.inverse()
        self.eps_pos = eps_pos
        self._Rt_inv_f = self.Rt_inv.to_numpy()
        self._B = T.B.to_numpy()

    def step(self, x, l) -> tuple:
        return self.Rt_inv @ [a + b for a, b in zip(vec(x), l)]

    def transitions(self, x) -> list:
        """Possible transitions (l, y) from x.

        Exact at rational x (cyclotomic test of u_B(y) == 0), threshold
        ``eps_pos`` on u_B for float input.
        """
        if all(isinstance(v, (int, Fraction)) for v in x):
            out = []
            for l in self.digits:
                y = self.step(x, l)
                if not mask_vanishes(self.T.B, y):
                    out.append((l, y))
            return out
        x = np.asarray(x, dtype=float)
        out = []
        for l in self.digits:
            y = (x + np.array([float(v) for v in l])) @ self._Rt_inv_f.T
            if abs(np.exp(-2j * np.pi * self._B @ y).mean()) ** 2 > self.eps_pos:
                out.append((l, y))
        return out

    def total_mass(self, x: np.ndarray) -> np.ndarray:
        """sum over Lbar of u_B((R^T)^{-1}(x + l)) at the rows of x."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        tot = np.zeros(len(x))
        for l in self.digits:
            y = (x + np.array([float(v) for v in l])) @ self._Rt_inv_f.T
            tot += np.abs(np.exp(-2j * np.pi * y @ self._B.T).mean(axis=-1)) ** 2
        return tot


# ---------------------------------------------------------------------------
# periodic points and cycles

def periodic_points(T: Triple, m: int) -> list:
    """All x in [0,1)^d with (R^T)^m x == x mod Z^d, exact and sorted."""
    if m < 1:
        raise ValueError("period must be >= 1")
    d = T.d
    A = (T.R.T ** m) - ExactMatrix.identity(d)
    Ainv = A.inverse()
    pts = {frac_part(Ainv @ k) for k in residue_system(A)}
    return sorted(pts)


def minimal_period(T: Triple, x, cap: int = 10_000) -> int:
    Rt = T.R.T
    x0 = frac_part(x)
    y = x0
    for k in range(1, cap + 1):
        y = frac_part(Rt @ y)
        if y == x0:
            return k
    raise ValueError("point is not periodic within cap")


def orbit(T: Triple, x, m: int) -> list:
    Rt = T.R.T
    pts = [frac_part(x)]
    for _ in range(m - 1):
        pts.append(frac_part(Rt @ pts[-1]))
    return pts


@dataclass(frozen=True)
class Cycle:
    """x_{k+1} = (R^T)^{-1}(x_k + l_k), indices mod the period."""

    points: tuple
    digits: tuple

    @property
    def period(self) -> int:
        return len(self.points)

    def to_json(self) -> dict:
        return {"points": [[jsonable(v) for v in p] for p in self.points],
                "digits": [[jsonable(v) for v in l] for l in self.digits],
                "period": self.period}


def _cycle_from_nodes(Rt: ExactMatrix, nodes: list) -> Cycle:
    start = nodes.index(min(nodes))
    nodes = nodes[start:] + nodes[:start]
    digits = []
    for k, x in enumerate(nodes):
        nxt = nodes[(k + 1) % len(nodes)]
        digits.append(tuple(a - b for a, b in zip(Rt @ nxt, x)))
    return Cycle(tuple(nodes), tuple(digits))


def extreme_cycles(T: Triple) -> list:
    """All cycles of the maps x -> (R^T)^{-1}(x + l), l in L, on which u_B == 1.

    Requires Z[R, B] = Z^d and 0 in B, L; cycle points are then integer
    vectors, so candidates are the integer points of a box containing the
    attractor of (R^T, L).
    """
    if T.L is None:
        raise ReduceFirstError("extreme cycles need L")
    d = T.d
    zero = tuple([0] * d)
    if zero not in T.B or zero not in T.L:
        raise ReduceFirstError("reduce triple first: 0 must lie in B and in L")
    if invariant_lattice(T.R, T.B) != Lattice.standard(d):
        raise ReduceFirstError()
    Rt = T.R.T
    Rt_inv = Rt.inverse()
    series = contraction_data(Rt).series
    lmax = max(max(abs(v) for v in l) for l in T.L)
    rad = math.floor(lmax * series)
    nodes = [vec(p) for p in itertools.product(range(-rad, rad + 1), repeat=d)]
    node_set = set(nodes)
    G = nx.DiGraph()
    G.add_nodes_from(nodes)
    for x in nodes:
        for l in T.L:
            y = Rt_inv @ [a + b for a, b in zip(x, l)]
            if y in node_set and mask_is_one(T.B, y):
                G.add_edge(x, y)
    cycles = {_cycle_from_nodes(Rt, c) for c in nx.simple_cycles(G)}
    return sorted(cycles, key=lambda c: (c.period, c.points))


# ---------------------------------------------------------------------------
# rational invariant subspaces

def _canonical_basis(vectors) -> tuple:
    if not vectors:
        return ()
    a, piv = rref(ExactMatrix(list(vectors)))
    return tuple(primitive_integer_vector(r) for r in a[: len(piv)])


def _poly_at(coeffs_high_first, A: ExactMatrix) -> ExactMatrix:
    n = A.nrows
    out = ExactMatrix.zeros(n, n)
    for c in coeffs_high_first:
        out = out @ A + ExactMatrix.identity(n) * c
    return out


def is_invariant(A: ExactMatrix, basis) -> bool:
    return all(span_contains(basis, A @ w) for w in basis)


def candidate_subspaces(A: ExactMatrix, max_line_coeff: int = 1) -> list:
    """Proper nonzero A-invariant rational subspaces, largest first.

    Kernels of products of powers of the rational irreducible factors of the
    characteristic polynomial, coordinate subspaces, and lines spanned by
    small combinations inside eigenspaces on which A acts as a scalar.
    When the characteristic polynomial is squarefree the kernels already
    exhaust all invariant subspaces.
    """
    d = A.nrows
    x = sympy.Symbol("x")
    M = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in r] for r in A.rows])
    _, factors = sympy.factor_list(M.charpoly(x).as_expr(), x)
    polys = [([Fraction(int(c.p), int(c.q)) for c in sympy.Poly(f, x).all_coeffs()], e)
             for f, e in factors]
    found = {}

    def add(vectors):
        basis = _canonical_basis(vectors)
        if 0 < len(basis) < d and basis not in found and is_invariant(A, basis):
            found[basis] = True

    exps = [range(0, e + 1) for _, e in polys]
    for choice in itertools.product(*exps):
        if not any(choice):
            continue
        P = ExactMatrix.identity(d)
        for (coeffs, _), k in zip(polys, choice):
            for _ in range(k):
                P = P @ _poly_at(coeffs, A)
        add(nullspace(P))
    for size in range(d - 1, 0, -1):
        for S in itertools.combinations(range(d), size):
            add([tuple(int(i == j) for j in range(d)) for i in S])
    # scalar eigenspaces: every subspace is invariant, add small lines
    for coeffs, _ in polys:
        if len(coeffs) != 2:
            continue
        lam = -coeffs[1] / coeffs[0]
        K = nullspace(A - ExactMatrix.identity(d) * lam)
        if len(K) < 2:
            continue
        rng = range(-max_line_coeff, max_line_coeff + 1)
        for c in itertools.product(rng, repeat=len(K)):
            if any(c):
                v = tuple(sum(ci * k[j] for ci, k in zip(c, K)) for j in range(d))
                add([v])
    return sorted(found, key=lambda b: (-len(b), b))


# ---------------------------------------------------------------------------
# zero set probe

@dataclass
class InvariantComponentReport:
    x0: tuple
    m: int
    W_basis: list
    orbit: list
    evidence: list = field(default_factory=list)
    tol: float = 0.0
    K: int = 0

    @property
    def r(self) -> int:
        return len(self.W_basis)

    @property
    def y0(self) -> tuple:
        """Second block of x0 (meaningful once W = R^r x {0})."""
        return tuple(self.x0[self.r:])

    def to_json(self) -> dict:
        return {
            "x0": [frac_str(v) for v in self.x0],
            "m": self.m,
            "W_basis": [[jsonable(v) for v in w] for w in self.W_basis],
            "orbit": [[frac_str(v) for v in p] for p in self.orbit],
            "tol": self.tol,
            "K": self.K,
            "evidence": [{"k": list(k), "abs_mu": a} for k, a in self.evidence],
        }


@dataclass
class ZeroSetProbe:
    status: str  # "empty-evidence" | "nonempty-witness"
    witness: InvariantComponentReport | None
    m_max: int
    K: int
    tol: float
    candidates_tested: int

    @property
    def nonempty(self) -> bool:
        return self.status == "nonempty-witness"

    def to_json(self) -> dict:
        return {"status": self.status, "m_max": self.m_max, "K": self.K, "tol": self.tol,
                "candidates_tested": self.candidates_tested,
                "witness": None if self.witness is None else self.witness.to_json()}


def _kbox(d: int, K: int) -> np.ndarray:
    return np.array(list(itertools.product(range(-K, K + 1), repeat=d)), dtype=float)


def _vanish_on(ev: MeasureEvaluator, pts: np.ndarray, tol: float) -> tuple:
    v, b = ev.fourier(pts, tol * 1e-2, strict=False)
    upper = np.abs(v) + b
    return bool(np.all(upper <= tol)), upper


def zero_set_probe(T: Triple, m_max: int = 6, K: int = 8, tol: float = 1e-6,
                   subspaces=None, seed: int = 0, line_samples: int = 3,
                   max_candidates: int = 50_000) -> ZeroSetProbe:
    """Search periodic points x0 with |mu_hat(x0 + k)| <= tol for all |k|_inf <= K.

    The whole orbit of x0 under R^T must pass.  For a witness, the largest
    R^T-invariant subspace W (from ``subspaces`` or
    :func:`candidate_subspaces`) such that sampled points of
    orbit + W + k also pass is attached.
    """
    ev = MeasureEvaluator.of(T)
    d = T.d
    cands, seen = [], set()
    for m in range(1, m_max + 1):
        for x in periodic_points(T, m):
            if x not in seen:
                seen.add(x)
                cands.append(x)
        if len(cands) > max_candidates:
            break
    cands = cands[:max_candidates]
    arr = np.array([[float(v) for v in x] for x in cands])
    _, upper0 = _vanish_on(ev, arr, tol)
    box = _kbox(d, K)
    rng = np.random.default_rng(seed)
    for x, u in zip(cands, upper0):
        if u > tol:
            continue
        per = minimal_period(T, x)
        orb = orbit(T, x, per)
        orb_f = np.array([[float(v) for v in p] for p in orb])
        pts = (orb_f[:, None, :] + box[None, :, :]).reshape(-1, d)
        ok, upper = _vanish_on(ev, pts, tol)
        if not ok:
            continue
        evidence = [(tuple(int(v) for v in k), float(a))
                    for k, a in zip(box, upper[: len(box)])]
        W = []
        basis_list = subspaces if subspaces is not None else candidate_subspaces(T.R.T)
        for basis in basis_list:
            basis = [vec(w) for w in basis]
            if not is_invariant(T.R.T, basis):
                continue
            Wf = np.array([[float(v) for v in w] for w in basis])
            t = rng.uniform(-2.0, 2.0, size=(line_samples, len(basis)))
            shifts = t @ Wf
            pts = (orb_f[:, None, None, :] + shifts[None, :, None, :]
                   + box[None, None, :, :]).reshape(-1, d)
            if _vanish_on(ev, pts, tol)[0]:
                W = basis
                break
        rep = InvariantComponentReport(x, per, W, orb, evidence, tol, K)
        return ZeroSetProbe("nonempty-witness", rep, m_max, K, tol, len(cands))
    return ZeroSetProbe("empty-evidence", None, m_max, K, tol, len(cands))


# ---------------------------------------------------------------------------
# block normalisation

@dataclass
class BlockNormalization:
    triple: Triple
    M: ExactMatrix
    witness: InvariantComponentReport
    r: int

    @property
    def y0(self) -> tuple:
        return self.witness.y0


def block_normalize(T: Triple, witness: InvariantComponentReport) -> BlockNormalization:
    """Conjugate T so that R becomes [[R1, 0], [C, R2]] and W becomes R^r x {0}.

    Frequencies move by P = (M^T)^{-1}, chosen unimodular with P(W) = Q^r x {0}.
    """
    W = [vec(w) for w in witness.W_basis]
    if not W:
        raise InvariantSubspaceError("witness carries W = {0}; nothing to normalise")
    Rt = T.R.T
    for w in W:
        img = Rt @ w
        if not span_contains(W, img):
            raise InvariantSubspaceError("W is not invariant under R^T", defect=img)
    d, r = T.d, len(W)
    Wint = ExactMatrix.from_columns([primitive_integer_vector(w) for w in W])
    U = hermite_normal_form(Wint.T).U
    P = U.T
    M = U.inverse()
    Tn = conjugate(T, M, "unimodular-conjugation")
    Rn = Tn.R
    if any(Rn[i, j] != 0 for i in range(r) for j in range(r, d)):
        raise InvariantSubspaceError("conjugated R is not block lower-triangular")
    x0 = frac_part(P @ witness.x0)
    orb = [frac_part(P @ p) for p in witness.orbit]
    newW = [tuple(Fraction(int(i == j)) for j in range(d)) for i in range(r)]
    # second blocks must follow y_k = (R2^T)^k y0 mod Z
    R2t = Rn.submatrix(range(r, d), range(r, d)).T
    y = x0[r:]
    for p in orb:
        assert frac_part(p[r:]) == frac_part(y), "witness orbit lost block structure"
        y = frac_part(R2t @ y)
    rep = InvariantComponentReport(x0, witness.m, newW, orb, witness.evidence,
                                   witness.tol, witness.K)
    return BlockNormalization(Tn, M, rep, r)
