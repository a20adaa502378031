"""
Exception hierarchy for blplab.
Every error raised by the library derives from BlpLabError; the CLI maps them to exit code 2.
"""

from typing import Optional


class BlpLabError(Exception):
    """Base class for all library errors."""


class MalformedInputError(BlpLabError):
    """A value violates the invariants of its type."""


class ArityMismatchError(MalformedInputError):
    """Operations or scopes with inconsistent arities were combined."""


class InfinityArithmeticError(BlpLabError, ArithmeticError):
    """An operation on the extended rationals has no defined result."""


class CapExceededError(BlpLabError):
    """An enumeration or search exceeded its configured cap."""

    def __init__(self, what: str, cap: int, required: Optional[int] = None):
        self.what = what
        self.cap = cap
        self.required = required
        detail = f" (needs {required})" if required is not None else ""
        super().__init__(f"{what} exceeds cap {cap}{detail}")


class CloneCapExceededError(CapExceededError):
    """The clone search stopped at its cap before reaching a fixpoint."""

    def __init__(self, cap: int, members: int):
        self.members = members
        super().__init__("clone generation", cap, None)
        self.args = (f"clone generation stopped at {members} members before fixpoint (cap {cap})",)


class ScaleGuardError(CapExceededError):
    """The expansion was asked to run outside the supported domain/arity range."""

    def __init__(self, k: int, m: int):
        self.k = k
        self.m = m
        super().__init__("expansion scale", 0, None)
        self.args = (f"expansion refused for domain size {k} and arity {m}",)


class SolverCertificateError(BlpLabError):
    """The LP solver produced an outcome that fails its own certificate."""


class NotSymmetricError(BlpLabError):
    """A symmetric operation or fractional operation was required."""


class DenominatorMismatchError(BlpLabError):
    """A BLP solution has a denominator that does not divide the rounding arity."""

    def __init__(self, denominator: int, arity: int):
        self.denominator = denominator
        self.arity = arity
        super().__init__(f"denominator {denominator} does not divide arity {arity}")


class RoundingBoundError(BlpLabError):
    """A rounded assignment is worse than the relaxation it was rounded from."""


class PolymorphismNotFoundError(BlpLabError):
    """No symmetric fractional polymorphism of the requested arity exists."""


class LatticeAxiomError(MalformedInputError):
    """A meet/join pair violates a lattice axiom."""

    def __init__(self, axiom: str, witness: tuple = ()):
        self.axiom = axiom
        self.witness = witness
        super().__init__(f"lattice axiom violated: {axiom} at {witness}")


class DefectImageError(MalformedInputError):
    """No admissible images exist for the incomparable pair of a 1-defect poset."""


class PreconditionError(BlpLabError):
    """An operation was called outside its documented precondition."""


class SamplingExhaustedError(BlpLabError):
    """The function sampler ran out of attempts."""

    def __init__(self, attempts: int):
        self.attempts = attempts
        super().__init__(f"no admitting function found in {attempts} attempts")


class GenerationWitnessNotFoundError(BlpLabError):
    """The support of a fractional operation generates no symmetric operation of the target arity."""


class ExpansionError(BlpLabError):
    """The expansion tree reached an inconsistent state."""


class EdgeNotPresentError(MalformedInputError):
    """The requested edge is not oriented that way in the tournament."""


class ProblemParseError(MalformedInputError):
    """Positional syntax error in a problem or fractional-operation file."""

    def __init__(self, line: int, column: int, message: str):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"line {line}, column {column}: {message}")


class ProblemSemanticError(MalformedInputError):
    """A well-formed file describes an inconsistent model."""

    def __init__(self, line: int, message: str):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")
