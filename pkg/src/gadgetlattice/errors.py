"""Exception hierarchy.

Every error raised on purpose by the toolkit derives from
:class:`GadgetLatticeError`. The CLI maps :class:`InputError` subclasses to
exit code 3 and every other toolkit error to exit code 1.
"""


class GadgetLatticeError(Exception):
    """Base class for toolkit errors."""


class InputError(GadgetLatticeError):
    """Problems with input files or their contents."""


class ParseError(InputError):
    """Malformed text input, with 1-based line and column."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        loc = f"line {line}, column {column}: " if line else ""
        super().__init__(loc + message)


class IndexOutOfRange(ParseError):
    """A qubit index is not below the declared register size."""


class CapExceeded(GadgetLatticeError):
    """The register is too large for the selected matrix backend."""


class ConvergenceFailure(GadgetLatticeError):
    """The iterative eigensolver did not converge."""


class NonCommutingGenerators(GadgetLatticeError):
    """CSS generators with odd overlap; ``pairs`` lists the (r, s) offenders."""

    def __init__(self, pairs):
        self.pairs = list(pairs)
        super().__init__(f"non-commuting generator pairs (r, s): {self.pairs}")


class UnknownCode(GadgetLatticeError):
    pass


class GammaTooSmall(GadgetLatticeError):
    pass


class DegenerateSplit(GadgetLatticeError):
    pass


class InvalidGamma(GadgetLatticeError):
    pass


class SingularRestriction(GadgetLatticeError):
    pass


class DegenerateGroundSpace(GadgetLatticeError):
    pass


class OverlappingSupports(GadgetLatticeError):
    pass


class AncillaCollision(GadgetLatticeError):
    pass


class PreconditionViolated(GadgetLatticeError):
    pass


class SpectrumMismatch(GadgetLatticeError):
    pass


class NotLowEnergy(GadgetLatticeError):
    pass


class InvalidMeasurement(GadgetLatticeError):
    pass


class UnsupportedEncoding(GadgetLatticeError):
    pass


class BoundViolated(GadgetLatticeError):
    """A numerically checked inequality failed."""


class CompilationError(GadgetLatticeError):
    """A compiler pass failed; ``stage`` names the pass."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
