"""Recursive construction of a spectrum for mu(R, B).

Order of stages for a triple T (after translating 0 into B and L):

1. if Z[R, B] has rank r < d, conjugate onto R^r x {0} and recurse in
   dimension r; the spectrum is embedded as Lambda_1 x {0};
2. probe the zero set; a witness with an invariant subspace W != {0} sends T
   through the quasi-product route: block form, normalised L, detection,
   recursion on the base triple, fiber lattice Gamma_2, product Lambda_1 x Gamma_2;
3. otherwise, if Z[R, B] is a proper full-rank lattice, rescale it to Z^d
   and start over;
4. otherwise build the leveled set seeded by the extreme cycles.

Every conjugation by M is undone on the spectrum side by M^T.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import PipelineError, SpectralError
from .exact_linalg import Lattice, frac_str, invariant_lattice, jsonable
from .measure import MeasureEvaluator
from .quasi_product import (
    candidate_gamma2,
    detect_quasi_product,
    normalize_L,
    project_triples,
    sum_identity_defects,
)
from .spectrum import (
    CertificationReport,
    EmbeddedSpectrum,
    LeveledSpectrum,
    ProductSpectrum,
    SpectrumCandidate,
    TransformedSpectrum,
    certify_orthogonality,
    finite_level_identity,
    jp_certify,
    uniform_grid,
)
from .torus import block_normalize, extreme_cycles, zero_set_probe
from .triple import Triple, check_hadamard, conjugate, rank_drop_matrix, search_hadamard_L, translate_to_origin


@dataclass
class Budget:
    m_max: int = 6
    K: int = 8
    probe_tol: float = 1e-6
    index_bound: int = 16
    seed: int = 0
    levels: Sequence[int] | None = None  # N_lambda values; chosen from max_points when None
    max_points: int = 50_000
    grid: int | None = None  # points per axis of the certification grid
    jp_tol: float | None = None
    eval_tol: float = 1e-12
    max_depth: int = 8

    def grid_n(self, d: int) -> int:
        if self.grid is not None:
            return self.grid
        return {1: 64, 2: 8}.get(d, 4)

    def tol(self, d: int) -> float:
        if self.jp_tol is not None:
            return self.jp_tol
        return 5e-3 if d == 1 else 1e-2


@dataclass
class SynthesisResult:
    spectrum: SpectrumCandidate
    report: CertificationReport
    trace: list
    reduced: Triple
    levels: list
    extra: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.spectrum, self.report, self.trace))

    @property
    def status(self) -> str:
        return self.report.status


def _vec_json(v) -> list:
    return [jsonable(x) for x in v]


def _stage(name: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except SpectralError as exc:
        raise PipelineError(name, str(exc)) from exc


def build_spectrum(T: Triple, budget: Budget, trace: list, depth: int = 0) -> tuple:
    """(spectrum candidate for mu(T.R, T.B), fully reduced leaf triple)."""
    if depth > budget.max_depth:
        raise PipelineError("recursion", "depth budget exhausted")
    if T.L is None:
        L = _stage("hadamard-search", search_hadamard_L, T.R, T.B)
        if L is None:
            raise PipelineError("hadamard-search", "no Hadamard companion L exists")
        T = Triple(T.R, T.B, L, T.history)
        trace.append({"stage": "hadamard-search", "depth": depth, "L": [_vec_json(l) for l in L]})
    T0 = translate_to_origin(T)
    if T0 is not T:
        trace.append({"stage": "translate", "depth": depth, "record": T0.history[-1].to_json()})
    d = T0.d
    lat = invariant_lattice(T0.R, T0.B)
    trace.append({"stage": "invariant-lattice", "depth": depth, "dim": d,
                  "rank": lat.rank, "basis": lat.tolist()})

    if lat.rank < d:
        r = lat.rank
        M = rank_drop_matrix(lat.basis_columns(), d)
        Tc = _stage("rank-drop", conjugate, T0, M, "unimodular-conjugation")
        sub = Triple(Tc.R.submatrix(range(r), range(r)), [b[:r] for b in Tc.B],
                     [l[:r] for l in Tc.L], Tc.history)
        trace.append({"stage": "rank-drop", "depth": depth, "r": r, "M": M.tolist(),
                      "sub_triple": sub.to_json(with_history=False)})
        inner, leaf = build_spectrum(sub, budget, trace, depth + 1)
        return TransformedSpectrum(EmbeddedSpectrum(inner, d), M.T), leaf

    if d > 1:
        probe = zero_set_probe(T0, budget.m_max, budget.K, budget.probe_tol, seed=budget.seed)
        trace.append({"stage": "zero-set-probe", "depth": depth, **probe.to_json()})
        if probe.nonempty and probe.witness.W_basis:
            return _quasi_product_route(T0, probe.witness, budget, trace, depth)
        if probe.nonempty:
            trace.append({"stage": "zero-set-probe", "depth": depth,
                          "note": "witness without invariant subspace; falling back"})

    if lat != Lattice.standard(d):
        M = lat.basis.inverse()
        Tc = _stage("rescale", conjugate, T0, M, "lattice-rescale")
        trace.append({"stage": "rescale", "depth": depth, "M": M.tolist(),
                      "triple": Tc.to_json(with_history=False)})
        inner, leaf = build_spectrum(Tc, budget, trace, depth + 1)
        return TransformedSpectrum(inner, M.T), leaf

    cycles = _stage("extreme-cycles", extreme_cycles, T0)
    seeds = [p for c in cycles for p in c.points]
    trace.append({"stage": "extreme-cycles", "depth": depth,
                  "cycles": [c.to_json() for c in cycles]})
    spec = LeveledSpectrum(T0.R, T0.L, seeds)
    trace.append({"stage": "leveled", "depth": depth, **spec.describe()})
    return spec, T0


def _quasi_product_route(T0: Triple, witness, budget: Budget, trace: list, depth: int):
    bn = _stage("block-normalize", block_normalize, T0, witness)
    trace.append({"stage": "block-normalize", "depth": depth, "r": bn.r, "M": bn.M.tolist(),
                  "R": bn.triple.R.tolist(), "y0": [frac_str(x) for x in bn.y0]})
    Tn = _stage("normalize-L", normalize_L, bn.triple, bn.r)
    trace.append({"stage": "normalize-L", "depth": depth, "L": Tn.L.tolist()})
    qpf = _stage("quasi-product", detect_quasi_product, Tn, bn.witness)
    trace.append({"stage": "quasi-product", "depth": depth, **qpf.to_json()})
    proj = _stage("project", project_triples, qpf, Tn.L)
    sa, sb = sum_identity_defects(qpf, Tn.L)
    trace.append({"stage": "project", "depth": depth,
                  "base": proj.first_base().to_json(with_history=False),
                  "fibers": [t.to_json(with_history=False) for t in proj.fibers.values()],
                  "sum_identity_defects": [sa, sb]})
    inner, leaf = build_spectrum(proj.first_base(), budget, trace, depth + 1)
    gammas = _stage("fiber-lattice", candidate_gamma2, qpf, budget.index_bound)
    g = gammas[0]
    trace.append({"stage": "fiber-lattice", "depth": depth, **g.to_json()})
    return TransformedSpectrum(ProductSpectrum(inner, g.lattice), bn.M.T), leaf


def _auto_levels(spec: SpectrumCandidate, max_points: int, cap: int = 8) -> list:
    best = 1
    for N in range(1, cap + 1):
        if spec.count(N) > max_points:
            break
        best = N
    return sorted({max(1, best - 4), max(1, best - 2), best})


def synthesize_spectrum(T: Triple, budget: Budget | None = None) -> SynthesisResult:
    """Build and certify a spectrum; returns spectrum, JP report and stage trace."""
    budget = budget or Budget()
    trace: list = []
    spec, leaf = build_spectrum(T, budget, trace)
    levels = list(budget.levels) if budget.levels else _auto_levels(spec, budget.max_points)
    extra = {}
    if leaf.L is not None and check_hadamard(leaf).passed:
        n_fl = max(1, min(6, int(np.log(4096) / np.log(max(2, leaf.N)))))
        rng = np.random.default_rng(budget.seed)
        extra["finite_level_identity"] = {
            "triple": leaf.to_json(with_history=False), "N": n_fl,
            "max_defect": finite_level_identity(leaf, n_fl, rng.uniform(-1, 1, (20, leaf.d))),
        }
    ev = MeasureEvaluator.of(T)
    small = next((N for N in range(levels[-1], 0, -1) if spec.count(N) <= 256), 1)
    orth = certify_orthogonality(ev, spec.points(small), tol=1e-8)
    extra["orthogonality"] = {"N_lambda": small, **orth.to_json()}
    report = jp_certify(ev, spec, uniform_grid(T.d, budget.grid_n(T.d)), levels,
                        budget.tol(T.d), budget.eval_tol)
    if orth.status == "fail" and report.status == "pass":
        report.status = "orthogonality-violated"
        report.witnesses.append({"kind": "pair", "pair": orth.witness, "abs_mu": orth.max_abs})
    trace.append({"stage": "certify", "status": report.status, "levels": levels})
    return SynthesisResult(spec, report, trace, leaf, levels, extra)
