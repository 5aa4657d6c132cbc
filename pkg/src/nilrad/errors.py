"""Exception classes shared across the package."""


class NilradError(Exception):
    """Base class for all errors raised by nilrad."""


class Unsupported(NilradError):
    """Exact factorization hit an irrational root; retry in numeric mode."""


class Degenerate(NilradError):
    """The defining matrices are linearly dependent."""


class SpecInvalid(NilradError):
    pass


class MetricInvalid(NilradError):
    pass


class FullType(NilradError):
    """The algebra is free two-step (p = q(q-1)/2) and has no dual."""


class WrongCase(NilradError):
    pass


class NotNice(NilradError):
    pass


class NotConverged(NilradError):
    pass


class NotCertified(NilradError):
    pass


class NonDiagonalTorus(NilradError):
    """The diagonal ansatz for the pre-Einstein derivation is inconsistent."""


class ConditionHolds(NilradError):
    """No degeneration witness exists because the multiplicity bound holds."""


class BadDimensions(NilradError):
    pass


class InternalInvariantViolation(NilradError):
    """A mathematical invariant that must always hold was violated."""
