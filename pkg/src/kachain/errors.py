"""Exception types raised by the library."""


class KachainError(Exception):
    pass


class ScalarParseError(KachainError):
    """Malformed scalar literal."""


class NotSemisimple(KachainError):
    """Trace form of the regular representation is degenerate."""


class NotUnitalSubalgebra(KachainError):
    """Subspace is not a unital subalgebra of its ambient algebra."""


class IntegralNotFound(KachainError):
    """Integral equation does not have a one-dimensional solution space."""


class InvalidGroupTable(KachainError):
    """Cayley table is not a valid finite group."""


class AxiomViolation(KachainError):
    """Loaded structure constants fail a required axiom."""


class ActionAxiomViolation(KachainError):
    """Module-algebra axioms fail for an action tensor."""


class ParityMismatch(KachainError):
    """Slot parities incompatible with the requested operation."""


class DegenerateTrace(KachainError):
    """Trace inner product is degenerate on the given subspace."""


class DegenerateTraceForm(KachainError):
    """Regular trace bilinear form is degenerate."""


class SpanMismatch(KachainError):
    """Two subspaces expected to coincide differ."""


class DimensionBudgetExceeded(KachainError):
    """Requested ambient dimension exceeds the configured budget."""


class NonConvergentClosure(KachainError):
    """Span closure did not stabilise within the dimension bound."""


class CounitNotUnique(KachainError):
    """Counit equations admit more than one solution."""


class CounitInconsistent(KachainError):
    """Counit equations admit no solution."""


class ConfigError(KachainError):
    """Invalid campaign configuration."""
