"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""


class WtlabError(Exception):
    exit_code = 1


class ParameterError(WtlabError, ValueError):
    """Invalid user-supplied parameter (bad range, unparseable token)."""

    exit_code = 1


class CapacityError(WtlabError):
    """A construction would exceed the piece budget or the exact grid."""

    exit_code = 2


class TailRefusal(WtlabError):
    """Truncation tail mass above the configured threshold."""

    exit_code = 2


class SingularityError(WtlabError, ValueError):
    """Hilbert transform requested at a breakpoint of the source."""

    exit_code = 1


class DomainError(WtlabError, ValueError):
    """A supremum over t is unbounded for the given Young function."""

    exit_code = 1


class InvariantViolation(WtlabError):
    exit_code = 3
