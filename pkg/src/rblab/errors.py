"""Exception types shared across the package."""


class RBLabError(Exception):
    """Base class for all package errors."""


class DomainError(RBLabError, ValueError):
    """A parameter or argument lies outside its valid domain."""


class BudgetExceeded(RBLabError):
    """A search hit its node budget before reaching a definite answer."""

    def __init__(self, message, nodes_expanded=0, partial_count=None):
        super().__init__(message)
        self.nodes_expanded = nodes_expanded
        self.partial_count = partial_count


class FlipPreconditionViolated(RBLabError):
    """A tuple swap was requested whose membership preconditions do not hold."""


class NoFlipPairFound(RBLabError):
    """No constraint/tuple pair admits a satisfiability-changing swap."""


class UnsupportedArity(RBLabError):
    """The operation is only defined for a specific constraint arity."""


class SizeError(RBLabError):
    """An encoding would exceed its configured size budget."""


class InvalidModel(RBLabError):
    """A boolean model decodes to an out-of-range domain value."""


class ParseError(RBLabError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InstanceFormatError(ParseError):
    """An instance JSON document violates the schema or an invariant."""
