class InputError(ValueError):
    """Malformed or inconsistent input (CLI exit code 2)."""


class CapabilityLimitError(RuntimeError):
    """Problem size exceeds an exactness or budget guard (CLI exit code 3)."""


class NumericalError(RuntimeError):
    """Internal numerical failure, e.g. LP non-convergence."""
