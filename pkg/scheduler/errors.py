"""
errors.py - Error types shared by the solvers and the CLI

Every error carries a machine-parsable `code` and the process `exit_code`
the CLI returns for it.
"""


class SchedulerError(Exception):
    """Base class for all scheduler errors"""

    code = "E_SCHEDULER"
    exit_code = 1


class ValidationError(SchedulerError):
    """Bad configuration or out-of-domain parameter"""

    code = "E_VALIDATION"
    exit_code = 2


class UnreachableLevel(SchedulerError):
    """F(h_l) = 0: the chain can never leave distortion regime l"""

    code = "E_UNREACHABLE_LEVEL"
    exit_code = 3

    def __init__(self, level: int, required: int):
        self.level = level
        self.required = required
        super().__init__(
            f"distortion level {level} needs at least {required} samples, "
            f"which never arrive (F(h_{level}) = 0)"
        )


class NoBracket(SchedulerError):
    """No multiplier found that meets the energy budget"""

    code = "E_NO_BRACKET"
    exit_code = 4


class NonConvergence(SchedulerError):
    """An iterative oracle hit its iteration cap"""

    code = "E_NON_CONVERGENCE"
    exit_code = 5

    def __init__(self, iterations: int, span: float):
        self.iterations = iterations
        self.span = span
        super().__init__(
            f"no convergence after {iterations} iterations (last span {span:.3e}); "
            f"try a larger age cap or a looser tolerance"
        )
