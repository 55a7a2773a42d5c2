"""Exception hierarchy shared by every splitmc module."""


class SplitMCError(Exception):
    """Base class for all errors raised by splitmc."""


class ConfigError(SplitMCError, ValueError):
    """Invalid run, problem or histogram configuration."""


class ProblemError(SplitMCError):
    """A realization failed inside a task; the run is aborted."""

    def __init__(self, message, task_index=None, realization_index=None):
        super().__init__(message)
        self.task_index = task_index
        self.realization_index = realization_index

    def __str__(self):
        base = super().__str__()
        if self.task_index is None:
            return base
        return f"{base} (task {self.task_index}, realization {self.realization_index})"


class UnknownTask(SplitMCError, KeyError):
    pass


class MissingTask(SplitMCError, ValueError):
    pass


class DuplicateTask(SplitMCError, ValueError):
    pass


class NonFiniteSample(SplitMCError, ValueError):
    pass


class InsufficientSamples(SplitMCError, ValueError):
    pass


class DegenerateSample(SplitMCError, ValueError):
    pass


class SpecMismatch(SplitMCError, ValueError):
    pass


class LengthMismatch(SplitMCError, ValueError):
    pass


class InvalidParams(SplitMCError, ValueError):
    pass


class InvalidModulus(SplitMCError, ValueError):
    pass


class NonConvergentStep(SplitMCError, ArithmeticError):
    def __init__(self, step, iterations):
        super().__init__(f"fixed-point iteration did not converge at step {step} "
                         f"after {iterations} iterations")
        self.step = step


class SingularSystem(SplitMCError, ArithmeticError):
    pass


class InvarianceViolation(SplitMCError):
    """Merged statistics differ between runs that must agree bit-for-bit."""
