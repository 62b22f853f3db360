"""Exception hierarchy shared by all modules."""


class GpBnbError(Exception):
    """Base class for package errors."""


class InvalidInputError(GpBnbError, ValueError):
    """An argument violates a documented precondition."""


class UnsupportedKernelError(InvalidInputError):
    """The requested kernel family or order is not supported."""


class SingularGramError(GpBnbError):
    """The Gram matrix could not be factorized even after jitter escalation."""


class ResolutionExhausted(GpBnbError):
    """A cover was requested at a depth finer than the lattice provides."""

    def __init__(self, required_depth, max_depth):
        super().__init__(
            f"cover needs depth {required_depth} but lattice max_depth is {max_depth}"
        )
        self.required_depth = required_depth
        self.max_depth = max_depth


class ConfigError(GpBnbError):
    """Experiment configuration failed validation.

    ``problems`` is a list of ``(field_path, message)`` pairs.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"{path}: {msg}" for path, msg in self.problems]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))
