"""Quasi-product structure of a block lower-triangular triple.

For R = [[R1, 0], [C, R2]] with a zero-set witness (x, y0) of period m, the
digits group as B = {(u_i, v_i + Q c_ij)}, where Q generates the lattice

    Gamma = {x in Z^{d-r} : <x, (R2^T)^k y0> in Z, 0 <= k < m}.

The measure then disintegrates over the base measure mu(R1, pi1 B) into
fiber measures mu_x^2, all sharing a spectrum lattice Gamma_2.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BlockFormError, DepthCapExceeded, NoFiberLatticeError, QuasiProductError
from .exact_linalg import (
    ExactMatrix,
    Lattice,
    dual_lattice,
    frac_str,
    is_integral,
    jsonable,
    residue_system,
    vec,
)
from .measure import MeasureEvaluator, contraction_data
from .spectrum import ExplicitSpectrum, jp_certify, uniform_grid
from .torus import InvariantComponentReport
from .triple import Triple, check_hadamard


def split_blocks(R: ExactMatrix, r: int):
    """(R1, R2, C) of a block lower-triangular R; raises BlockFormError otherwise."""
    d = R.nrows
    if not 0 < r < d:
        raise BlockFormError(f"split r={r} must satisfy 0 < r < {d}")
    if any(R[i, j] != 0 for i in range(r) for j in range(r, d)):
        raise BlockFormError("R is not block lower-triangular for this split")
    R1 = R.submatrix(range(r), range(r))
    R2 = R.submatrix(range(r, d), range(r, d))
    C = R.submatrix(range(r, d), range(r))
    return R1, R2, C


def normalize_digits(R: ExactMatrix, r: int, digits: Sequence) -> list:
    """Shift digits by elements of R^T Z^d so that congruent second blocks become equal.

    A digit l' whose second block is congruent mod R2^T to that of an earlier
    digit l is replaced by l' + R^T (0, (R2^T)^{-1}(l2 - l2')).
    """
    _, R2, _ = split_blocks(R, r)
    R2t = R2.T
    R2t_inv = R2t.inverse()
    classes = residue_system(R2t)
    Rt = R.T
    chosen = {}
    out = []
    for l in digits:
        l = vec(l)
        l2 = l[r:]
        key = classes.canonical(l2)
        if key not in chosen:
            chosen[key] = l2
            out.append(l)
            continue
        target = chosen[key]
        shift = R2t_inv @ [a - b for a, b in zip(target, l2)]
        new = tuple(a + b for a, b in zip(l, Rt @ ((Fraction(0),) * r + tuple(shift))))
        assert is_integral(new) and new[r:] == target
        out.append(new)
    return out


def normalize_L(T: Triple, r: int) -> Triple:
    """Triple with L replaced by its normalized form; Hadamard re-verified."""
    newL = normalize_digits(T.R, r, T.L)
    Tn = Triple(T.R, T.B, newL, T.history)
    if check_hadamard(T).passed and not check_hadamard(Tn).passed:
        raise QuasiProductError("normalisation broke the Hadamard property")
    return Tn


@dataclass
class QuasiProductForm:
    r: int
    R1: ExactMatrix
    R2: ExactMatrix
    C: ExactMatrix
    u: list
    v: list
    Q: ExactMatrix
    c: list  # c[i] = list of integer vectors c_ij
    R2_tilde: ExactMatrix
    y0: tuple
    m: int
    gamma: Lattice

    @property
    def N1(self) -> int:
        return len(self.u)

    @property
    def N2(self) -> int:
        return abs(int(self.R2.det()))

    @property
    def d(self) -> int:
        return self.R1.nrows + self.R2.nrows

    def fiber_digits(self, i: int) -> list:
        """d_ij = v_i + Q c_ij."""
        return [tuple(a + b for a, b in zip(self.v[i], self.Q @ cij)) for cij in self.c[i]]

    def digits(self) -> list:
        return sorted(tuple(self.u[i]) + d for i in range(self.N1) for d in self.fiber_digits(i))

    @property
    def R(self) -> ExactMatrix:
        r, d = self.r, self.d
        Z = ExactMatrix.zeros(r, d - r)
        return ExactMatrix.block([[self.R1, Z], [self.C, self.R2]])

    def shear_block(self, k: int) -> ExactMatrix:
        """D_k, the lower-left block of R^{-k}."""
        P = self.R ** (-k)
        return P.submatrix(range(self.r, self.d), range(self.r))

    def to_json(self) -> dict:
        ints = lambda vs: [[jsonable(x) for x in v] for v in vs]
        return {
            "r": self.r, "R1": self.R1.tolist(), "R2": self.R2.tolist(), "C": self.C.tolist(),
            "u": ints(self.u), "v": ints(self.v), "Q": self.Q.tolist(),
            "c": [ints(ci) for ci in self.c], "R2_tilde": self.R2_tilde.tolist(),
            "y0": [frac_str(x) for x in self.y0], "m": self.m, "Gamma": self.gamma.tolist(),
        }


def witness_lattice(R2: ExactMatrix, y0: Sequence, m: int) -> Lattice:
    """Integer x with <x, (R2^T)^k y0> integral for k = 0..m-1."""
    n = R2.nrows
    R2t = R2.T
    gens = [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)]
    z = vec(y0)
    for _ in range(m):
        gens.append(z)
        z = R2t @ z
    return dual_lattice(Lattice(gens, n))


def detect_quasi_product(T: Triple, witness: InvariantComponentReport) -> QuasiProductForm:
    r = witness.r
    R1, R2, C = split_blocks(T.R, r)
    y0 = tuple(witness.x0[r:])
    gamma = witness_lattice(R2, y0, witness.m)
    Q = gamma.basis
    if abs(Q.det()) < 2:
        raise QuasiProductError("witness gives Gamma = Z^{d-r}; it is not a zero-set witness")
    R2_tilde = Q.inverse() @ R2 @ Q
    if not R2_tilde.is_integer():
        raise QuasiProductError("R2 does not preserve Gamma", offending=R2_tilde.tolist())
    N2 = abs(int(R2.det()))
    groups = {}
    for b in T.B:
        groups.setdefault(tuple(b[:r]), []).append(tuple(Fraction(x) for x in b[r:]))
    u = sorted(groups)
    v, c = [], []
    classes = residue_system(R2)
    Qinv = Q.inverse()
    for ui in u:
        fiber = sorted(groups[ui])
        vi = fiber[0]
        ci = []
        for dij in fiber:
            cij = Qinv @ [a - b for a, b in zip(dij, vi)]
            if not is_integral(cij):
                raise QuasiProductError("B not quasi-product against this witness",
                                        offending=tuple(ui) + dij)
            ci.append(tuple(int(x) for x in cij))
        if len(fiber) != N2 or len({classes.canonical(x) for x in fiber}) != N2:
            raise QuasiProductError(
                "fiber digits are not a complete residue system mod R2",
                offending=[jsonable(x) for x in ui])
        v.append(vi)
        c.append(ci)
    qpf = QuasiProductForm(r, R1, R2, C, [vec(x) for x in u], v, Q, c, R2_tilde, y0,
                           witness.m, gamma)
    assert qpf.digits() == sorted(tuple(Fraction(x) for x in b) for b in T.B)
    return qpf


@dataclass
class ProjectedTriples:
    base: dict  # l2 -> Triple (R1, pi1 B, L1(l2))
    fibers: dict  # u_i -> Triple (R2, B2(u_i), pi2 L)

    def first_base(self) -> Triple:
        return self.base[min(self.base)]


def project_triples(qpf: QuasiProductForm, L: Sequence) -> ProjectedTriples:
    """Base and fiber triples; cardinalities and Hadamard property checked."""
    r = qpf.r
    L = [vec(l) for l in L]
    pi2 = sorted({l[r:] for l in L})
    if len(pi2) != qpf.N2:
        raise QuasiProductError(
            f"#pi2(L) = {len(pi2)} differs from |det R2| = {qpf.N2} (complete-residue count)")
    base = {}
    for l2 in pi2:
        L1 = [l[:r] for l in L if l[r:] == l2]
        if len(L1) != qpf.N1:
            raise QuasiProductError(f"#L1(l2) = {len(L1)} differs from N1 = {qpf.N1}")
        Tb = Triple(qpf.R1, qpf.u, L1)
        if not check_hadamard(Tb).passed:
            raise QuasiProductError("base triple is not Hadamard", offending=list(l2))
        base[l2] = Tb
    fibers = {}
    for i, ui in enumerate(qpf.u):
        B2 = qpf.fiber_digits(i)
        if len(set(B2)) != qpf.N2:
            raise QuasiProductError(
                f"#B2(b1) = {len(set(B2))} differs from |det R2| = {qpf.N2} "
                "(fiber digits must be a complete residue system)")
        Tf = Triple(qpf.R2, B2, pi2)
        if not check_hadamard(Tf).passed:
            raise QuasiProductError("fiber triple is not Hadamard", offending=list(ui))
        fibers[ui] = Tf
    return ProjectedTriples(base, fibers)


def sum_identity_defects(qpf: QuasiProductForm, L: Sequence) -> tuple:
    """Largest moduli of the two orthogonality sums between base and fiber data.

    (a) sum_{l2} #L1(l2) exp(2 pi i <R2^{-1}(b2 - b2'), l2>) over b2 != b2' in a fiber;
    (b) sum_{b1} #B2(b1) exp(2 pi i <R1^{-1} b1, l1 - l1'>) over l1 != l1' in L1(l2).
    """
    r = qpf.r
    L = [vec(l) for l in L]
    pi2 = sorted({l[r:] for l in L})
    count1 = {l2: sum(1 for l in L if l[r:] == l2) for l2 in pi2}
    R2inv = qpf.R2.inverse().to_numpy()
    R1inv = qpf.R1.inverse().to_numpy()
    worst_a = 0.0
    for i in range(qpf.N1):
        B2 = np.array([[float(x) for x in b] for b in qpf.fiber_digits(i)])
        for a, b in itertools.permutations(range(len(B2)), 2):
            z = R2inv @ (B2[a] - B2[b])
            s = sum(count1[l2] * np.exp(2j * np.pi * z @ np.array([float(x) for x in l2]))
                    for l2 in pi2)
            worst_a = max(worst_a, abs(s))
    worst_b = 0.0
    U = np.array([[float(x) for x in u] for u in qpf.u])
    for l2 in pi2:
        L1 = np.array([[float(x) for x in l[:r]] for l in L if l[r:] == l2])
        for a, b in itertools.permutations(range(len(L1)), 2):
            s = sum(qpf.N2 * np.exp(2j * np.pi * (R1inv @ ub) @ (L1[a] - L1[b])) for ub in U)
            worst_b = max(worst_b, abs(s))
    return worst_a, worst_b


def transition_shadow(T: Triple, qpf: QuasiProductForm, digits: Sequence, xs: np.ndarray,
                      eps: float = 1e-9) -> list:
    """Digits l with pi2(l) != 0 allowing a transition from some (x, y_k).

    The y_k = (R2^T)^k y0, k = 1..m, are taken exactly (not reduced mod 1);
    an empty list is the expected outcome for a normalized digit system.
    """
    r = qpf.r
    Rt_inv = T.R.T.inverse().to_numpy()
    B = T.B.to_numpy()
    ys, y = [], vec(qpf.y0)
    for _ in range(qpf.m):
        y = qpf.R2.T @ y
        ys.append(np.array([float(v) for v in y]))
    bad = []
    for l in digits:
        l = vec(l)
        if all(x == 0 for x in l[r:]):
            continue
        lf = np.array([float(x) for x in l])
        for yk in ys:
            pts = np.hstack([xs, np.tile(yk, (len(xs), 1))]) + lf
            z = pts @ Rt_inv.T
            u = np.abs(np.exp(-2j * np.pi * z @ B.T).mean(axis=1)) ** 2
            if np.any(u > eps):
                bad.append(l)
                break
    return bad


# ---------------------------------------------------------------------------
# fiber measures

def _fiber_sequence(qpf: QuasiProductForm, omega: Sequence[int], k: int, extension: str) -> int:
    n = len(omega)
    if k < n:
        return omega[k]
    if extension == "periodic":
        return omega[k % n]
    if extension == "constant":
        return omega[0]
    raise ValueError("extension must be 'periodic' or 'constant'")


def fiber_fourier(qpf: QuasiProductForm, omega: Sequence[int], eta, tol: float = 1e-12,
                  extension: str = "periodic", depth_cap: int = 200):
    """(mu_x^2 hat(eta), error bound) along the base digit string omega.

    mu_x^2 is the infinite convolution of the uniform measures on
    R2^{-k} B2(i_k).  Digits beyond the prefix repeat it periodically or
    repeat its first digit.  The tail factor is replaced by 1; its error is
    at most 2 pi ||eta_n||_1 * rad with rad bounding the fiber attractor.
    """
    if not omega:
        raise ValueError("empty base digit string")
    eta = np.atleast_2d(np.asarray(eta, dtype=float))
    digits = [np.array([[float(x) for x in d] for d in qpf.fiber_digits(i)]) for i in range(qpf.N1)]
    beta = max(max(abs(float(x)) for d in qpf.fiber_digits(i) for x in d) for i in range(qpf.N1))
    rad = beta * float(contraction_data(qpf.R2).series) * (1 + 1e-12)
    Rinv = qpf.R2.T.inverse().to_numpy()
    P = np.ones(len(eta), dtype=complex)
    e = eta.copy()
    bound = 2 * math.pi * np.abs(e).sum(axis=1) * rad
    k = 0
    while np.any(bound > tol):
        if k >= depth_cap:
            raise DepthCapExceeded(float(bound.max()), k)
        e = e @ Rinv.T
        D = digits[_fiber_sequence(qpf, omega, k, extension)]
        P *= np.exp(-2j * np.pi * e @ D.T).mean(axis=1)
        k += 1
        bound = np.abs(P) * 2 * math.pi * np.abs(e).sum(axis=1) * rad
    return P, bound


def disintegration_check(T: Triple, qpf: QuasiProductForm, xi, samples: int = 4000,
                         depth: int = 40, seed: int = 0):
    """Monte Carlo over base digit strings versus mu_hat(xi).

    Returns (monte_carlo_mean, mu_hat(xi), standard_error).  Each sample
    draws omega, forms x(omega) and the shear g(omega) from the first
    ``depth`` digits, and multiplies in the fiber transform along omega.
    """
    rng = np.random.default_rng(seed)
    xi = np.asarray(xi, dtype=float)
    r = qpf.r
    xi1, xi2 = xi[:r], xi[r:]
    R1inv = qpf.R1.inverse().to_numpy()
    Rinv = qpf.R.inverse().to_numpy()
    U = np.array([[float(x) for x in u] for u in qpf.u])
    vals = np.empty(samples, dtype=complex)
    for s in range(samples):
        omega = rng.integers(0, qpf.N1, size=depth).tolist()
        x = np.zeros(r)
        g = np.zeros(qpf.d - r)
        Pk = np.eye(qpf.d)
        A1 = np.eye(r)
        for i in omega:
            Pk = Pk @ Rinv
            A1 = A1 @ R1inv
            x += A1 @ U[i]
            g += Pk[r:, :r] @ U[i]
        f, _ = fiber_fourier(qpf, omega, xi2[None, :], tol=1e-10)
        vals[s] = np.exp(-2j * np.pi * (xi1 @ x + xi2 @ g)) * f[0]
    ev = MeasureEvaluator.of(T)
    exact, _ = ev.fourier(xi[None, :], 1e-10)
    return complex(vals.mean()), complex(exact[0]), float(vals.std() / math.sqrt(samples))


# ---------------------------------------------------------------------------
# fiber spectrum lattice

@dataclass
class DaggerSystem:
    """R+ = diag(N1, R2), B+ = {(i, d_ij)}: a complete residue system mod R+."""

    R: ExactMatrix
    B: list

    @classmethod
    def of(cls, qpf: QuasiProductForm) -> "DaggerSystem":
        n = qpf.R2.nrows
        R = ExactMatrix.block([[ExactMatrix([[qpf.N1]]), ExactMatrix.zeros(1, n)],
                               [ExactMatrix.zeros(n, 1), qpf.R2]])
        B = [(Fraction(i),) + d for i in range(qpf.N1) for d in qpf.fiber_digits(i)]
        return cls(R, B)

    def is_complete_residue_system(self) -> bool:
        rs = residue_system(self.R)
        return len(self.B) == len(rs) and len({rs.canonical(b) for b in self.B}) == len(rs)

    def evaluator(self) -> MeasureEvaluator:
        return MeasureEvaluator(self.R, self.B)


def hnf_sublattices(n: int, index: int):
    """All integer sublattices of Z^n of the given index, as lower-triangular HNF bases."""
    def rec(k, remaining):
        if k == n:
            if remaining == 1:
                yield []
            return
        for dk in range(1, remaining + 1):
            if remaining % dk == 0:
                for rest in rec(k + 1, remaining // dk):
                    yield [dk] + rest
    for diag in rec(0, index):
        # column j has diagonal diag[j]; entries below are reduced mod the row's diagonal
        slots = [(i, j) for j in range(n) for i in range(j + 1, n)]
        ranges = [range(diag[i]) for i, _ in slots]
        for vals in itertools.product(*ranges):
            H = [[0] * n for _ in range(n)]
            for j in range(n):
                H[j][j] = diag[j]
            for (i, j), v in zip(slots, vals):
                H[i][j] = v
            yield ExactMatrix(H)


@dataclass
class Gamma2Candidate:
    lattice: Lattice
    provenance: str
    report: object = None

    def to_json(self) -> dict:
        return {"lattice": self.lattice.tolist(), "provenance": self.provenance,
                "certification": None if self.report is None else self.report.to_json()}


def _dagger_spectrum(lattice: Lattice, radius1: int, budget: int) -> ExplicitSpectrum:
    n = lattice.dim
    # lattice radius chosen so that the fiber part stays inside the budget
    vol = float(abs(lattice.basis.det()))
    rad2 = max(1.0, 0.5 * (budget / (2 * radius1 + 1) * vol) ** (1.0 / n))
    pts2 = lattice.points(Fraction(rad2).limit_denominator(1000))
    pts = [(Fraction(k),) + tuple(q) for k in range(-radius1, radius1 + 1) for q in pts2]
    return ExplicitSpectrum(pts)


def screen_gamma2(dagger: DaggerSystem, lattice: Lattice, tol: float = 0.08,
                  radius1: int = 16, budget: int = 4000, grid: int = 4):
    """JP screening of Z x Gamma_2 for the dagger measure."""
    ev = dagger.evaluator()
    spec = _dagger_spectrum(lattice, radius1, budget)
    return jp_certify(ev, spec, uniform_grid(ev.d, grid), [0], tol, eval_tol=1e-9)


def candidate_gamma2(qpf: QuasiProductForm, index_bound: int = 16, stop_at_first: bool = True,
                     tol: float = 0.08) -> list:
    """Certified candidates for the fiber spectrum lattice, in search order.

    Order: dual of Q Z^{d-r}, then Z^{d-r}, then duals of integer sublattices
    of index 2..index_bound.
    """
    dagger = DaggerSystem.of(qpf)
    if not dagger.is_complete_residue_system():
        raise QuasiProductError("dagger digits are not a complete residue system")
    n = qpf.R2.nrows
    seen = set()
    ordered = [(dual_lattice(Lattice(qpf.Q)), "dual of Q Z^n"),
               (Lattice.standard(n), "integer lattice")]
    def more():
        for idx in range(2, index_bound + 1):
            for H in hnf_sublattices(n, idx):
                yield dual_lattice(Lattice(H)), f"dual of index-{idx} sublattice"
    out = []
    for lat, why in itertools.chain(ordered, more()):
        if lat in seen:
            continue
        seen.add(lat)
        rep = screen_gamma2(dagger, lat, tol)
        if rep.passed:
            out.append(Gamma2Candidate(lat, why, rep))
            if stop_at_first:
                break
    if not out:
        raise NoFiberLatticeError()
    return out
