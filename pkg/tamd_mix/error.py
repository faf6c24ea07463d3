from enum import IntEnum

import numpy as np
from rich import print as rprint


class ExitCode(IntEnum):
    OK = 0
    USAGE = 1
    NUMERICAL = 2


class TamdError(Exception):
    exit_code = ExitCode.USAGE


class ContractViolation(TamdError, ValueError):
    """A precondition or dimension contract was broken by the caller."""


class SpecError(TamdError, ValueError):
    """Infeasible data-generating process or malformed experiment spec."""


class NumericalFailure(TamdError):
    exit_code = ExitCode.NUMERICAL


class DegenerateCovariance(NumericalFailure):

    def __init__(self, message: str, matrix: np.ndarray):
        super().__init__(message)
        self.matrix = np.array(matrix, copy=True)


class BarrierDomain(NumericalFailure):
    """A barrier term was evaluated where it diverges (A = 1 or a zero weight)."""


class InvalidInit(NumericalFailure):
    """Initial parameters violate the fitter's separation or weight precondition."""


class InitError(TamdError):
    exit_code = ExitCode.NUMERICAL


def require(condition: bool, message: str):
    if not condition:
        raise ContractViolation(message)


def fail(message, code: ExitCode = ExitCode.USAGE):
    rprint(f"[red]{message}")
    exit(int(code))
