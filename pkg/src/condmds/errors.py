"""Exception hierarchy.

Input problems derive from :class:`ValidationError` (CLI exit code 2), numerical
breakdowns from :class:`NumericalError` (CLI exit code 3).
"""


class CondMDSError(Exception):
    """Base class for all package errors."""


class ValidationError(CondMDSError, ValueError):
    pass


class NumericalError(CondMDSError, ArithmeticError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NegativeWeight(ValidationError):
    pass


class NegativeDissimilarity(ValidationError):
    pass


class DisconnectedWeights(ValidationError):
    pass


class RankDeficientConditioning(ValidationError):
    pass


class ZeroDissimilarity(ValidationError):
    pass


class DegenerateDissimilarities(ValidationError):
    pass


class DegenerateWhitening(ValidationError):
    pass


class RankDeficientInput(ValidationError):
    pass


class DegenerateConfiguration(ValidationError):
    pass


class NotSquare(ValidationError):
    pass


class EmptyFile(ValidationError):
    pass


class AllRowsIncomplete(ValidationError):
    pass


class UnparsableCell(ValidationError):
    def __init__(self, row, col, token=None):
        self.row = row
        self.col = col
        self.token = token
        msg = f"cannot parse cell at row {row}, column {col}"
        if token is not None:
            msg += f": {token!r}"
        super().__init__(msg)


class SingularShiftedH(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class DegenerateG(NumericalError):
    pass


class NonMonotoneStress(NumericalError):
    pass


class SingularB(NumericalError):
    pass


class AllCoefficientsClamped(UserWarning):
    """Every regression coefficient of the closed-form initializer was clamped to 0."""
