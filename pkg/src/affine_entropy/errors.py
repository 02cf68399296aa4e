"""Exception hierarchy shared by every module of the package."""


class AffineEntropyError(Exception):
    """Base class for all package errors."""


class IndexOutOfRange(AffineEntropyError, IndexError):
    pass


class DimensionMismatch(AffineEntropyError, ValueError):
    pass


class LogDomainError(AffineEntropyError, ArithmeticError):
    """The matrix logarithm did not converge, or the input is outside the group."""


class SeriesDivergence(AffineEntropyError, ArithmeticError):
    pass


class RepresentationDeficient(AffineEntropyError, ValueError):
    """``Ad(g)`` could not be expressed in the representation basis."""


class ConvergenceFailure(AffineEntropyError, ArithmeticError):
    pass


class ConventionAmbiguity(AffineEntropyError):
    """Both (or neither) sign candidates for ``D*`` passed the flow oracle."""


class StepTooLarge(AffineEntropyError):
    """Two integration backends disagree beyond the step-size tolerance."""


class BackendMismatch(StepTooLarge):
    pass


class NonAlignedShift(AffineEntropyError, ValueError):
    pass


class EscapeError(AffineEntropyError):
    """A trajectory left the ``blowup_norm`` ball."""


class ClusterSplitFailure(AffineEntropyError, ArithmeticError):
    pass


class ChartDomainError(AffineEntropyError, ValueError):
    pass


class FDConditioning(AffineEntropyError, ArithmeticError):
    pass


class Uncoverable(AffineEntropyError):
    """Some samples of ``K`` are not covered by any candidate control."""

    def __init__(self, samples, message=None):
        self.samples = list(samples)
        if message is None:
            shown = ", ".join("(" + ", ".join(f"{float(c):.6g}" for c in s) + ")"
                              for s in self.samples[:10])
            more = "" if len(self.samples) <= 10 else f" (+{len(self.samples) - 10} more)"
            message = f"{len(self.samples)} uncovered K samples: {shown}{more}"
        super().__init__(message)


class ParseError(AffineEntropyError, ValueError):
    pass


class ValidationError(AffineEntropyError, ValueError):
    """Aggregates every problem found while validating a configuration."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
