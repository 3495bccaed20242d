"""Exception and warning classes.

Two families map onto the CLI exit codes: :class:`ValidationError` (bad input,
exit 2) and :class:`NumericalError` (a computation could not be completed,
exit 3).
"""


class CorrLayersError(Exception):
    """Base class for all package errors."""


class ValidationError(CorrLayersError, ValueError):
    pass


class NumericalError(CorrLayersError, ArithmeticError):
    pass


# --- network construction -------------------------------------------------

class OutOfRangeNode(ValidationError):
    pass


class SelfEdgeForbidden(ValidationError):
    pass


class BipartiteViolation(ValidationError):
    pass


class EmptyLayer(ValidationError):
    pass


class LayerIndexOutOfRange(ValidationError, IndexError):
    pass


class PartitionMismatch(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class FewerThanTwoLayers(ValidationError):
    pass


class MissingPartition(ValidationError):
    pass


# --- estimation -----------------------------------------------------------

class EmptyInput(ValidationError):
    pass


class DegenerateMarginal(NumericalError):
    """A marginal edge probability is 0 or 1, so a correlation is undefined."""


class UndefinedRho(NumericalError):
    pass


class DegeneratePairVariance(NumericalError):
    pass


class SingularInformation(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass


class InfeasibleBundle(NumericalError):
    pass


class InfeasibleStart(NumericalError):
    pass


class MissingBundleFit(NumericalError):
    pass


# --- generation -----------------------------------------------------------

class InfeasibleParams(ValidationError):
    pass


class InfeasibleRho(ValidationError):
    pass


class NegativeRhoDCSBM(ValidationError):
    pass


class PairProbabilityOverflow(NumericalError):
    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


# --- prediction -----------------------------------------------------------

class TooFewPairs(ValidationError):
    pass


class OneClassOnly(ValidationError):
    pass


# --- warnings -------------------------------------------------------------

class NonConvergenceWarning(RuntimeWarning):
    pass


class MissingBundleFitWarning(RuntimeWarning):
    pass


class ProbabilityClampWarning(RuntimeWarning):
    pass


class DegenerateFoldWarning(RuntimeWarning):
    pass
