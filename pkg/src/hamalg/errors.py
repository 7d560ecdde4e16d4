"""Exception hierarchy shared across the package."""


class HamalgError(Exception):
    """Base class for all errors raised by hamalg."""


class DeclarationError(HamalgError):
    """Use of a coefficient-function name that was never declared."""


class MaxDerivativeError(HamalgError):
    """A rewrite tried to exceed the session's derivative-order bound."""


class CoincidentDeltaError(HamalgError):
    """A delta factor with coincident arguments appeared in a classical term.

    Classical functionals never produce these; hitting one means the input
    was not a valid functional (or a pipeline bug upstream).
    """


class UnsupportedDivergenceError(HamalgError):
    """A divergent pattern with no formal bookkeeping rule was produced."""


class DivergentLeadingTermError(HamalgError):
    """classical_limit called on an expression whose lowest h-order diverges."""


class NotASymbolError(HamalgError):
    """An operand failed the closure test for classical symbols."""


class ParseError(HamalgError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class LatticeError(HamalgError):
    """Expression cannot be discretized (free variables, formal factors, ...)."""


class CausticError(HamalgError):
    """det of the characteristic-flow Jacobian fell below the caustic floor."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class PreconditionError(HamalgError):
    """A documented precondition of a numeric routine does not hold."""
