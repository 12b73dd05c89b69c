"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures onto its
stable contract: 1 for validation/data problems, 2 for environment/IO.
"""


class HitPredictError(Exception):
    exit_code = 1


class SchemaError(HitPredictError):
    """Column set or order does not match what the operation expects."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class RowError(HitPredictError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class ValidationError(HitPredictError):
    def __init__(self, field, value, reason="out of range"):
        super().__init__(f"invalid value for {field!r}: {value!r} ({reason})")
        self.field = field
        self.value = value


class EmptyDatasetError(HitPredictError):
    pass


class InsufficientDataError(HitPredictError):
    pass


class ParameterError(HitPredictError, ValueError):
    pass


class ImbalanceError(HitPredictError):
    """Raised when a class needed for balancing or training is absent."""


class TrainingError(HitPredictError):
    pass


class NumericError(HitPredictError, ArithmeticError):
    pass


class UnresolvedTrackError(HitPredictError):
    pass


class FormatError(HitPredictError):
    """A fixture or API payload did not have the expected shape."""


class TransportError(HitPredictError):
    exit_code = 2
    retryable = True


class FixtureMissError(TransportError):
    retryable = False

    def __init__(self, request, path):
        super().__init__(f"no recorded fixture for {request.describe()} (expected {path})")
        self.request = request
        self.path = path


class CredentialsError(HitPredictError):
    exit_code = 2
