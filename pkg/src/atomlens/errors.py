"""Exception types raised by the solvers and the command line front end."""


class AtomLensError(Exception):
    """Base class for every error raised by atomlens."""


class ZeroDetuning(AtomLensError, ValueError):
    """The detuning sign is undefined (detuning ratio is exactly zero)."""


class ToleranceNotMet(AtomLensError, RuntimeError):
    """An adaptive integrator could not reach the requested accuracy."""


class TruncationOverflow(AtomLensError, RuntimeError):
    """The momentum ladder outgrew the largest allowed mode range."""


class EmptyExcited(AtomLensError, RuntimeError):
    """A collapse was requested while the excited ladder is empty."""


class WindowTooNarrow(AtomLensError, RuntimeError):
    """The global minimum of a trace sits on the edge of the search window."""

    def __init__(self, message, edge=None):
        super().__init__(message)
        self.edge = edge


class ConfigError(AtomLensError, ValueError):
    """Configuration failed validation.

    ``problems`` maps a field name to a human readable diagnostic.
    """

    def __init__(self, problems):
        self.problems = dict(problems)
        lines = [f"{k}: {v}" for k, v in self.problems.items()]
        super().__init__("invalid configuration\n  " + "\n  ".join(lines))


class ComparisonFailed(AtomLensError):
    """A reproduced figure missed one or more of its targets."""

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))
