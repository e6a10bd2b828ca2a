"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class MultisympError(Exception):
    """Base class for every error raised by the package."""


class ExprSyntaxError(MultisympError, ValueError):
    def __init__(self, message: str, text: str, position: int, expected: str | None = None):
        self.text = text
        self.position = position
        self.expected = expected
        detail = f"{message} at position {position}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class UnknownSymbol(MultisympError, KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(name)

    def __str__(self) -> str:
        return f"unknown symbol {self.name!r}"


class EvaluationError(MultisympError, ArithmeticError):
    pass


class ChartMismatch(MultisympError, ValueError):
    pass


class DegreeError(MultisympError, ValueError):
    pass


class DomainError(MultisympError, ValueError):
    pass


class Undecided(MultisympError):
    """A zero test needed for the result could not be decided either way."""


class NotClosed(MultisympError, ValueError):
    pass


class Unsolvable(MultisympError):
    """The linear system i(X)Omega = d zeta has no solution.

    ``certificate`` holds the residual equation and a sample point where the
    augmented system has larger rank than the coefficient matrix.
    """

    def __init__(self, message: str, certificate: dict):
        self.certificate = certificate
        super().__init__(message)


class NotHamiltonian(MultisympError):
    pass


class NotStronglyHamiltonian(MultisympError):
    pass


class MissingSamples(MultisympError, ValueError):
    pass


class NotBasic(MultisympError):
    def __init__(self, generator: int, contraction):
        self.generator = generator
        self.contraction = contraction
        super().__init__(f"form is not basic along generator {generator}: {contraction}")


class SectionMismatch(MultisympError):
    pass


class NotMomentumType(MultisympError):
    pass


class InvariantViolation(MultisympError, ValueError):
    """A declared object fails one of its own invariants."""


class SceneError(MultisympError, ValueError):
    """A scene file failed to parse or resolve; ``line`` is 1-based."""

    def __init__(self, message: str, path: str = "<scene>", line: int | None = None):
        self.path = path
        self.line = line
        self.message = message
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")
