"""Exception types raised by the simulator and the pipeline."""


class CliqueError(Exception):
    """Base class for every error raised by this package."""


class QuotaExceeded(CliqueError):
    """A node would receive (or send) more words than the declared routing quota."""


class SizeViolation(CliqueError):
    """A spanner is too large to broadcast within the configured budget."""


class DensityViolation(CliqueError):
    """A sparse product turned out denser than the bound its caller declared."""


class PreconditionViolated(CliqueError):
    """An operation was called outside the parameter regime it supports."""


class IndexOutOfFamily(CliqueError):
    """The scale-selection rule asked for a graph the scaled family does not contain."""
