"""Exception hierarchy shared across the pipeline.

Each class carries the CLI exit code it maps to, so the driver can translate
failures without inspecting messages.
"""


class QIIAError(Exception):
    exit_code = 1


class InputError(QIIAError, ValueError):
    """Malformed or inconsistent input data (files, shapes, indices)."""

    exit_code = 2


class DegenerateDenominatorError(QIIAError, ArithmeticError):
    exit_code = 3


class DomainError(QIIAError, ValueError):
    """A request that is well-formed but has no valid answer (empty sector, empty block)."""

    exit_code = 4


class InvalidOptionError(QIIAError, ValueError):
    exit_code = 6
