"""Exception types raised across the package."""


class SpectralError(Exception):
    """Base class for all package errors."""


class SingularModulusError(SpectralError):
    def __init__(self, msg="singular modulus"):
        super().__init__(msg)


class DualUndefinedError(SpectralError):
    def __init__(self, msg="dual undefined for non-full-rank lattice"):
        super().__init__(msg)


class TripleError(SpectralError):
    """Malformed triple data (dimension mismatch, cardinality mismatch, ...)."""


class ConjugationError(SpectralError):
    def __init__(self, msg="conjugation leaves integer class"):
        super().__init__(msg)


class NotSimpleError(SpectralError):
    """A digit set has two elements congruent modulo the relevant lattice."""

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class DepthCapExceeded(SpectralError):
    """The truncated product could not reach the requested tolerance."""

    def __init__(self, achieved, depth):
        super().__init__(
            f"depth cap exceeded: achieved bound {achieved:.3e} at depth {depth}"
        )
        self.achieved = achieved
        self.depth = depth


class ReduceFirstError(SpectralError):
    def __init__(self, msg="reduce triple first"):
        super().__init__(msg)


class InvariantSubspaceError(SpectralError):
    def __init__(self, msg, defect=None):
        super().__init__(msg)
        self.defect = defect


class BlockFormError(SpectralError):
    pass


class QuasiProductError(SpectralError):
    """Raised when B does not decompose against the supplied witness."""

    def __init__(self, msg, offending=None):
        super().__init__(msg)
        self.offending = offending


class NoFiberLatticeError(SpectralError):
    def __init__(self, msg="no fiber lattice found within bound"):
        super().__init__(msg)


class PipelineError(SpectralError):
    """Failure of one stage of the spectrum synthesis pipeline."""

    def __init__(self, stage, msg):
        super().__init__(f"[{stage}] {msg}")
        self.stage = stage
