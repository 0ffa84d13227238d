"""Command-line driver.

Exit codes: 0 pass, 1 certified failure, 2 usage or malformed input,
3 invalid triple (R not expansive, #B != #L), 4 inconclusive within budget.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NoFiberLatticeError, PipelineError, SpectralError
from .exact_linalg import ExactMatrix, invariant_lattice, is_expansive, Lattice
from .measure import MeasureEvaluator, attractor_points, no_overlap_probe, qmf_check
from .pipeline import Budget, build_spectrum, synthesize_spectrum
from .quasi_product import (
    candidate_gamma2,
    detect_quasi_product,
    normalize_L,
    project_triples,
    sum_identity_defects,
)
from .report import density_raster, read_points_csv, write_json, write_pgm, write_points_csv
from .spectrum import ExplicitSpectrum, finite_level_identity, jp_certify, uniform_grid
from .torus import block_normalize, extreme_cycles, zero_set_probe
from .triple import (
    DigitSet,
    Triple,
    check_hadamard,
    check_simple_digit_set,
    hadamard_defect_float,
    reduce_triple,
    search_hadamard_L,
)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INVALID, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4
COMMANDS = ("verify", "reduce", "analyze", "decompose", "spectrum", "jp-check", "render")


class UsageError(Exception):
    def __init__(self, msg, code=EXIT_USAGE):
        super().__init__(msg)
        self.code = code


@dataclass
class JobSpec:
    command: str
    path: str
    triple: Triple
    levels: list
    grid: int | None
    tol: float
    jp_tol: float | None
    m_max: int
    K: int
    index_bound: int
    seed: int
    out: str | None = None
    csv: str | None = None
    pgm: str | None = None
    figures: str | None = None
    png_size: int = 512
    search_L: int | None = None
    spectrum_csv: str | None = None
    flags: dict = field(default_factory=dict)

    def budget(self) -> Budget:
        return Budget(m_max=self.m_max, K=self.K, probe_tol=self.tol,
                      index_bound=self.index_bound, seed=self.seed,
                      levels=self.levels or None, grid=self.grid, jp_tol=self.jp_tol)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hadamard-spectra",
        description="Hadamard triples, self-affine measures and their spectra.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("triple", help="triple JSON file with keys R, B and optionally L")
    p.add_argument("--levels", "--level", dest="levels", default=None,
                   help="comma-separated truncation levels N (render: attractor level)")
    p.add_argument("--grid", type=int, default=None,
                   help="certification grid points per axis (default 64 in 1-D, 8 in 2-D, 4 above)")
    p.add_argument("--tol", type=float, default=1e-6, help="zero-set vanishing tolerance")
    p.add_argument("--jp-tol", type=float, default=None,
                   help="largest accepted JP defect (default 5e-3 in 1-D, 1e-2 above)")
    p.add_argument("--m-max", type=int, default=6, help="largest period of probed points")
    p.add_argument("--K", type=int, default=8, help="integer shifts |k|_inf <= K in the probe")
    p.add_argument("--index-bound", type=int, default=16, help="largest sublattice index for Gamma_2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="JSON report path (stdout when omitted)")
    p.add_argument("--csv", default=None,
                   help="CSV of spectrum points; render always writes one (default <input>.attractor.csv)")
    p.add_argument("--pgm", default=None, help="PGM raster of a 2-D attractor")
    p.add_argument("--figures", default=None, help="directory for PNG figures")
    p.add_argument("--png-size", type=int, default=512, help="raster size; 0 disables images")
    p.add_argument("--search-L", type=int, default=None, metavar="BOX",
                   help="search a companion L with entries in [-BOX, BOX]")
    p.add_argument("--spectrum", dest="spectrum_csv", default=None,
                   help="jp-check: certify the points in this CSV instead of the built spectrum")
    return p


def _parse_levels(text):
    if text is None:
        return []
    try:
        levels = [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--levels expects comma-separated integers, got {text!r}")
    if not levels or min(levels) < 1:
        raise UsageError("--levels must be positive")
    return sorted(set(levels))


def _int_matrix(obj, name):
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise UsageError(f"{name} must be a non-empty list of lists")
    for r in obj:
        for x in r:
            if isinstance(x, bool) or not isinstance(x, int):
                raise UsageError(f"{name} must contain integers only, found {x!r}")
    return obj


def load_triple(path) -> Triple:
    """Read and validate a triple file; UsageError carries the exit code."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(data, dict) or "R" not in data or "B" not in data:
        raise UsageError("triple JSON needs keys 'R' and 'B'")
    R = _int_matrix(data["R"], "R")
    d = len(R)
    if any(len(r) != d for r in R):
        raise UsageError("R must be square")
    B = _int_matrix(data["B"], "B")
    L = data.get("L")
    if L is not None:
        L = _int_matrix(L, "L")
    for name, S in (("B", B), ("L", L or [])):
        if any(len(v) != d for v in S):
            raise UsageError(f"every element of {name} must have length {d}")
        if len({tuple(v) for v in S}) != len(S):
            raise UsageError(f"{name} has repeated elements")
    Rm = ExactMatrix(R)
    if not is_expansive(Rm):
        mods = sorted(abs(z) for z in np.linalg.eigvals(Rm.to_numpy()))
        raise UsageError("R is not expansive; eigenvalue moduli "
                         + ", ".join(f"{m:.6g}" for m in mods), EXIT_INVALID)
    if L is not None and len(L) != len(B):
        raise UsageError(f"#B = {len(B)} but #L = {len(L)}", EXIT_INVALID)
    return Triple(Rm, DigitSet(B), None if L is None else DigitSet(L))


def parse_and_validate(argv) -> JobSpec:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        raise UsageError("invalid arguments", int(exc.code or 0) or EXIT_USAGE)
    for name in ("m_max", "K", "index_bound"):
        if getattr(ns, name) < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be >= 1")
    if ns.grid is not None and ns.grid < 1:
        raise UsageError("--grid must be >= 1")
    if ns.tol <= 0 or (ns.jp_tol is not None and ns.jp_tol <= 0):
        raise UsageError("tolerances must be positive")
    if ns.png_size < 0:
        raise UsageError("--png-size must be >= 0")
    levels = _parse_levels(ns.levels)
    T = load_triple(ns.triple)
    return JobSpec(ns.command, ns.triple, T, levels, ns.grid, ns.tol, ns.jp_tol, ns.m_max, ns.K,
                   ns.index_bound, ns.seed, ns.out, ns.csv, ns.pgm, ns.figures, ns.png_size,
                   ns.search_L, ns.spectrum_csv, flags=vars(ns))


# ---------------------------------------------------------------------------
# commands

def _figure_path(job: JobSpec, name: str):
    if not job.figures or job.png_size == 0:
        return None
    d = Path(job.figures)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _header(job: JobSpec) -> dict:
    flags = {k: v for k, v in job.flags.items() if k not in ("command", "triple")}
    return {"command": job.command, "input": job.triple.to_json(with_history=False),
            "flags": flags}


def cmd_verify(job: JobSpec):
    T = job.triple
    rep = _header(job)
    rep["simple_digit_set"] = check_simple_digit_set(T.R, T.B)
    if T.L is None:
        box = job.search_L or 0
        L = search_hadamard_L(T.R, T.B, box)
        rep["search"] = {"box": box if box else "residue-system", "L": None if L is None else L.tolist()}
        if L is None:
            msg = "no Hadamard companion within box" if box else "no Hadamard companion exists"
            rep["verdict"] = msg
            return rep, EXIT_FAIL, msg
        T = Triple(T.R, T.B, L)
    v = check_hadamard(T)
    rep["hadamard"] = v.to_json()
    rep["float_defect"] = hadamard_defect_float(T)
    rep["verdict"] = "exact-pass" if v.passed else "exact-fail"
    return rep, EXIT_PASS if v.passed else EXIT_FAIL, rep["verdict"]


def cmd_reduce(job: JobSpec):
    red = reduce_triple(job.triple)
    final = red.final
    rep = _header(job)
    rep["reduction"] = red.to_json()
    rep["reduced"] = final.to_json()
    lat = invariant_lattice(final.R, final.B)
    rep["recheck"] = {"lattice": lat.tolist(), "is_standard": lat == Lattice.standard(final.d)}
    ok = rep["recheck"]["is_standard"]
    return rep, EXIT_PASS if ok else EXIT_FAIL, f"reduced to dimension {final.d}"


def cmd_analyze(job: JobSpec):
    T = job.triple
    rep = _header(job)
    red = reduce_triple(T)
    Tf = red.final
    rep["reduced"] = Tf.to_json()
    rng = np.random.default_rng(job.seed)
    if T.L is not None:
        rep["qmf_deviation"] = qmf_check(T, rng.uniform(-2, 2, (1000, T.d)))
        rep["hadamard"] = check_hadamard(T).to_json()
    level = job.levels[-1] if job.levels else max(1, min(6, int(np.log(4096) / np.log(max(2, T.N)))))
    rep["overlap"] = no_overlap_probe(T, level).to_json()
    probe = zero_set_probe(Tf, job.m_max, job.K, job.tol, seed=job.seed)
    rep["zero_set"] = probe.to_json()
    if Tf.L is not None:
        try:
            rep["extreme_cycles"] = [c.to_json() for c in extreme_cycles(Tf)]
        except SpectralError as exc:
            rep["extreme_cycles"] = {"error": str(exc)}
    return rep, EXIT_PASS, f"zero set: {probe.status}"


def cmd_decompose(job: JobSpec):
    T = job.triple
    if T.L is None:
        L = search_hadamard_L(T.R, T.B)
        if L is None:
            return _header(job), EXIT_FAIL, "no Hadamard companion exists"
        T = Triple(T.R, T.B, L)
    rep = _header(job)
    red = reduce_triple(T, rescale=False)
    Tf = red.final
    rep["reduced"] = Tf.to_json()
    if Tf.d < 2:
        rep["verdict"] = "one-dimensional after reduction; nothing to decompose"
        return rep, EXIT_INCONCLUSIVE, rep["verdict"]
    probe = zero_set_probe(Tf, job.m_max, job.K, job.tol, seed=job.seed)
    rep["zero_set"] = probe.to_json()
    if not (probe.nonempty and probe.witness.W_basis):
        rep["verdict"] = "no zero-set witness within bounds (evidence, not proof)"
        return rep, EXIT_INCONCLUSIVE, rep["verdict"]
    bn = block_normalize(Tf, probe.witness)
    Tn = normalize_L(bn.triple, bn.r)
    qpf = detect_quasi_product(Tn, bn.witness)
    proj = project_triples(qpf, Tn.L)
    rep["block_normalized"] = {"M": bn.M.tolist(), "triple": Tn.to_json()}
    rep["quasi_product"] = qpf.to_json()
    rep["base_triples"] = [t.to_json(with_history=False) for t in proj.base.values()]
    rep["fiber_triples"] = [t.to_json(with_history=False) for t in proj.fibers.values()]
    rep["sum_identity_defects"] = list(sum_identity_defects(qpf, Tn.L))
    gam = candidate_gamma2(qpf, job.index_bound)
    rep["gamma2"] = [g.to_json() for g in gam]
    rep["verdict"] = "quasi-product"
    return rep, EXIT_PASS, "quasi-product form found"


def _status_code(status: str) -> int:
    return {"pass": EXIT_PASS, "orthogonality-violated": EXIT_FAIL}.get(status, EXIT_INCONCLUSIVE)


def cmd_spectrum(job: JobSpec):
    res = synthesize_spectrum(job.triple, job.budget())
    rep = _header(job)
    rep["reduced"] = res.reduced.to_json()
    rep["spectrum"] = res.spectrum.describe()
    rep["certification"] = res.report.to_json()
    rep["trace"] = res.trace
    rep.update(res.extra)
    level = res.levels[-1]
    if job.csv:
        rep["csv"] = {"path": job.csv, "N_lambda": level,
                      "rows": write_points_csv(res.spectrum.points(level), job.csv)}
    fig = _figure_path(job, "spectrum.png")
    if fig:
        from .plotting import plot_partial_sums, plot_spectrum
        plot_spectrum(res.spectrum.array(min(res.levels)), fig)
        plot_partial_sums(res.report, _figure_path(job, "partial_sums.png"))
    return rep, _status_code(res.status), f"spectrum certification: {res.status}"


def cmd_jp_check(job: JobSpec):
    T = job.triple
    b = job.budget()
    rep = _header(job)
    if job.spectrum_csv:
        spec = ExplicitSpectrum(read_points_csv(job.spectrum_csv))
        levels = [0]
        rep["spectrum"] = {"source": job.spectrum_csv, **spec.describe()}
    else:
        trace = []
        spec, leaf = build_spectrum(T, b, trace)
        levels = job.levels or [4, 6, 8]
        rep["spectrum"] = spec.describe()
        rep["trace"] = trace
        if leaf.L is not None and check_hadamard(leaf).passed:
            rng = np.random.default_rng(job.seed)
            n_fl = max(1, min(6, int(np.log(4096) / np.log(max(2, leaf.N)))))
            rep["finite_level_identity"] = {
                "N": n_fl, "max_defect": finite_level_identity(leaf, n_fl, rng.uniform(-1, 1, (100, leaf.d)))}
    ev = MeasureEvaluator.of(T)
    report = jp_certify(ev, spec, uniform_grid(T.d, b.grid_n(T.d)), levels, b.tol(T.d))
    rep["certification"] = report.to_json()
    fig = _figure_path(job, "partial_sums.png")
    if fig:
        from .plotting import plot_partial_sums
        plot_partial_sums(report, fig)
    return rep, _status_code(report.status), f"JP certification: {report.status}"


def cmd_render(job: JobSpec):
    T = job.triple
    level = job.levels[-1] if job.levels else 8
    sample = attractor_points(T, level, seed=job.seed)
    rep = _header(job)
    rep["attractor"] = {"level": level, "points": len(sample), "subsampled": sample.subsampled}
    csv_path = job.csv or f"{Path(job.path).stem}.attractor.csv"
    write_points_csv(sample.exact_points(), csv_path)
    rep["attractor"]["csv"] = csv_path
    if job.png_size > 0:
        if job.pgm and T.d == 2:
            write_pgm(density_raster(sample.points, job.png_size), job.pgm)
            rep["attractor"]["pgm"] = job.pgm
        fig = _figure_path(job, "attractor.png")
        if fig:
            from .plotting import plot_attractor
            plot_attractor(sample.points, fig)
    return rep, EXIT_PASS, f"rendered {len(sample)} points"


HANDLERS = {
    "verify": cmd_verify,
    "reduce": cmd_reduce,
    "analyze": cmd_analyze,
    "decompose": cmd_decompose,
    "spectrum": cmd_spectrum,
    "jp-check": cmd_jp_check,
    "render": cmd_render,
}


def run(job: JobSpec) -> int:
    try:
        rep, code, message = HANDLERS[job.command](job)
    except NoFiberLatticeError as exc:
        rep, code, message = _header(job), EXIT_INCONCLUSIVE, str(exc)
    except PipelineError as exc:
        certified = exc.stage == "hadamard-search"
        rep, code, message = _header(job), EXIT_FAIL if certified else EXIT_INCONCLUSIVE, str(exc)
        rep["error"] = {"stage": exc.stage, "message": str(exc)}
    except SpectralError as exc:
        rep, code, message = _header(job), EXIT_FAIL, str(exc)
        rep["error"] = {"type": type(exc).__name__, "message": str(exc)}
    if "reduced" not in rep:
        try:
            rep["reduced"] = reduce_triple(job.triple).final.to_json()
        except SpectralError as exc:
            rep["reduced"] = {"error": str(exc)}
    rep["exit_code"] = code
    write_json(rep, job.out)
    print(message, file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        job = parse_and_validate(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        if str(exc) != "invalid arguments":
            print(f"error: {exc}", file=sys.stderr)
        return exc.code
    return run(job)


if __name__ == "__main__":
    sys.exit(main())
