"""Hadamard triples, self-affine spectral measures and spectrum synthesis."""
from .errors import (
    BlockFormError,
    ConjugationError,
    DepthCapExceeded,
    DualUndefinedError,
    InvariantSubspaceError,
    NoFiberLatticeError,
    NotSimpleError,
    PipelineError,
    QuasiProductError,
    ReduceFirstError,
    SingularModulusError,
    SpectralError,
    TripleError,
)
from .exact_linalg import (
    ExactMatrix,
    Lattice,
    ResidueSystem,
    dual_lattice,
    hermite_normal_form,
    invariant_lattice,
    is_expansive,
    residue_system,
    smith_normal_form,
)
from .measure import MeasureEvaluator, attractor_points, fourier_mu, mask, no_overlap_probe, qmf_check
from .pipeline import Budget, SynthesisResult, synthesize_spectrum
from .quasi_product import (
    QuasiProductForm,
    candidate_gamma2,
    detect_quasi_product,
    normalize_L,
    project_triples,
    sum_identity_defects,
)
from .spectrum import (
    CertificationReport,
    LeveledSpectrum,
    ProductSpectrum,
    finite_level_identity,
    jp_certify,
    spectrum_zd,
)
from .torus import block_normalize, extreme_cycles, zero_set_probe
from .triple import (
    DigitSet,
    Triple,
    check_hadamard,
    check_simple_digit_set,
    conjugate,
    reduce_triple,
    search_hadamard_L,
    translate_to_origin,
)

__version__ = "0.1.0"
