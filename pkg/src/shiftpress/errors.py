"""Exception types shared by all shiftpress modules."""

from __future__ import annotations


class ShiftpressError(Exception):
    """Base class for all errors raised by this package."""


class EmptyRowOrColumn(ShiftpressError):
    """A transition matrix has a symbol with no successor or no predecessor."""

    def __init__(self, symbol: int, axis: str):
        self.symbol = symbol
        self.axis = axis  # "row" (no successor) or "column" (no predecessor)
        super().__init__(f"symbol {symbol} has an empty {axis} in the transition matrix")


class CombinatorialOverflow(ShiftpressError):
    """A word enumeration would exceed the configured cap."""

    def __init__(self, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(f"enumeration of {count} words exceeds the cap of {cap}")


class DegenerateBeta(ShiftpressError):
    """beta <= 1 does not define an expanding beta-shift."""


class WordTooShort(ShiftpressError):
    """A word is too short to evaluate the requested ergodic sum."""


class SystemMismatch(ShiftpressError):
    """Two objects refer to different underlying symbolic systems."""


class DepthMismatch(ShiftpressError):
    """Two cylinder marginals have different depths."""


class NotIrreducible(ShiftpressError):
    """The transition structure is not strongly connected."""


class ConvergenceFailure(ShiftpressError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, iterations: int, message: str = ""):
        self.iterations = iterations
        super().__init__(message or f"no convergence after {iterations} iterations")


class NonFullBranch(ShiftpressError):
    """An interval-map branch does not map onto the full interval."""


class NonMonotoneDerivative(ShiftpressError):
    """A branch derivative is not monotone, so endpoint brackets are invalid."""


class SupportMismatch(ShiftpressError):
    """A measure gives zero weight to words the duality optimizer needs."""


class NonIrreducibleMeasure(ShiftpressError):
    """A Markov measure whose stochastic matrix is not irreducible."""


class SingularProduct(ShiftpressError):
    """A matrix product became numerically singular beyond repair."""


class OverflowGuard(ShiftpressError):
    """A parameter combination would overflow the double exponent range."""


class DepthOverflow(ShiftpressError):
    """A cylinder-tree depth beyond the supported maximum."""


class ParseError(ShiftpressError):
    """A config line that cannot be parsed."""

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class ValidationError(ShiftpressError):
    """A config field with an out-of-range or inconsistent value."""

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")


class ConfigError(ShiftpressError):
    """Collection of all parse/validation errors found in a config."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "; ".join(str(e) for e in self.errors)
        super().__init__(f"{len(self.errors)} config error(s): {lines}")
