"""Exception hierarchy. Each family maps to a distinct CLI exit code."""


class AsbimError(Exception):
    exit_code = 1


class ConfigurationError(AsbimError, ValueError):
    exit_code = 2


class IngestionError(AsbimError, ValueError):
    exit_code = 3


class NumericalError(AsbimError, ArithmeticError):
    exit_code = 4


class DegenerateInputError(AsbimError, ValueError):
    exit_code = 4


class EmptySequenceError(DegenerateInputError):
    pass


class ImputationError(AsbimError, ValueError):
    exit_code = 4


class TrainingError(NumericalError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class TapeError(AsbimError, RuntimeError):
    """A tensor was used with a tape that did not record it."""


class AcceptanceFailure(AsbimError):
    exit_code = 5
