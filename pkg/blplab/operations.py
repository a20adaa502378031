"""
Operation Tables for blplab
m-ary operations over a finite domain, their symmetric (multiset-indexed) form,
superposition and the table-checkable algebraic predicates.
"""

import itertools
import logging
from functools import total_ordering
from typing import Callable, Dict, List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .exceptions import ArityMismatchError, MalformedInputError, NotSymmetricError, PreconditionError
from .vcsp import all_tuples, tuple_index

logger = logging.getLogger(__name__)

Table = Tuple[int, ...]
MultisetIndex = Tuple[int, ...]


def multisets(k: int, m: int) -> List[MultisetIndex]:
    """All nondecreasing m-tuples over {0..k-1}: one representative per multiset."""
    return list(itertools.combinations_with_replacement(range(k), m))


@total_ordering
class Operation(BaseModel):
    """An m-ary operation on {0..k-1}, tabled in row-major order of its inputs."""

    model_config = ConfigDict(frozen=True)

    domain_size: int
    arity: int
    table: Table

    @field_validator("table", mode="before")
    @classmethod
    def _coerce_table(cls, value):
        return tuple(int(v) for v in value)

    @model_validator(mode="after")
    def _check_table(self):
        if self.arity < 1 or self.domain_size < 1:
            raise MalformedInputError("operations need arity and domain size at least 1")
        if len(self.table) != self.domain_size ** self.arity:
            raise MalformedInputError(
                f"operation table has {len(self.table)} entries, expected {self.domain_size ** self.arity}"
            )
        if any(v < 0 or v >= self.domain_size for v in self.table):
            raise MalformedInputError("operation table entry outside the domain")
        return self

    @classmethod
    def from_function(cls, k: int, m: int, fn: Callable[..., int]) -> "Operation":
        return cls(domain_size=k, arity=m, table=[fn(*t) for t in all_tuples(k, m)])

    @classmethod
    def from_raw(cls, k: int, m: int, table: Sequence[int]) -> "Operation":
        return cls.model_construct(domain_size=k, arity=m, table=tuple(table))

    def __call__(self, *args: int) -> int:
        return self.table[tuple_index(args, self.domain_size)]

    def apply_rows(self, rows: Sequence[Sequence[int]]) -> Tuple[int, ...]:
        """Apply coordinatewise to m tuples of equal length."""
        return tuple(self(*column) for column in zip(*rows))

    @property
    def sort_key(self) -> Tuple[int, int, Table]:
        return (self.domain_size, self.arity, self.table)

    def __lt__(self, other: "Operation") -> bool:
        if not isinstance(other, Operation):
            return NotImplemented
        return self.sort_key < other.sort_key

    def __eq__(self, other) -> bool:
        if not isinstance(other, Operation):
            return NotImplemented
        return self.sort_key == other.sort_key

    def __hash__(self) -> int:
        return hash(self.sort_key)

    def render(self) -> str:
        return " ".join(str(v) for v in self.table)


class SymmetricOperation(BaseModel):
    """A symmetric operation as a total map from m-multisets to labels."""

    model_config = ConfigDict(frozen=True)

    domain_size: int
    arity: int
    table: Dict[MultisetIndex, int]

    @model_validator(mode="after")
    def _check_total(self):
        expected = multisets(self.domain_size, self.arity)
        if sorted(self.table) != expected:
            raise MalformedInputError("symmetric operation must be defined on every multiset exactly once")
        if any(v < 0 or v >= self.domain_size for v in self.table.values()):
            raise MalformedInputError("symmetric operation value outside the domain")
        return self

    def to_operation(self) -> Operation:
        return Operation.from_raw(
            self.domain_size,
            self.arity,
            [self.table[tuple(sorted(t))] for t in all_tuples(self.domain_size, self.arity)],
        )

    @classmethod
    def from_operation(cls, g: Operation) -> "SymmetricOperation":
        if not is_symmetric(g):
            raise NotSymmetricError("operation is not symmetric")
        return cls(
            domain_size=g.domain_size,
            arity=g.arity,
            table={ms: g(*ms) for ms in multisets(g.domain_size, g.arity)},
        )


def is_symmetric_table(table: Sequence[int], k: int, m: int) -> bool:
    """Invariance under each adjacent transposition, which generate all permutations."""
    if m == 1:
        return True
    weights = [k ** (m - 1 - i) for i in range(m)]
    for index, t in enumerate(all_tuples(k, m)):
        for i in range(m - 1):
            a, b = t[i], t[i + 1]
            if a < b:
                swapped = index + (b - a) * weights[i] - (b - a) * weights[i + 1]
                if table[swapped] != table[index]:
                    return False
    return True


def is_symmetric(g: Operation) -> bool:
    return is_symmetric_table(g.table, g.domain_size, g.arity)


def compose_tables(h: Sequence[int], gs: Sequence[Sequence[int]], k: int) -> Tuple[int, ...]:
    """Raw superposition h[g1..gn]; all gs share one arity."""
    n = len(gs)
    size = len(gs[0])
    out = []
    for index in range(size):
        position = 0
        for j in range(n):
            position = position * k + gs[j][index]
        out.append(h[position])
    return tuple(out)


def superpose(h: Operation, gs: Sequence[Operation]) -> Operation:
    """h[g1..gn](x) = h(g1(x), ..., gn(x))."""
    if len(gs) != h.arity:
        raise ArityMismatchError(f"{h.arity}-ary operation superposed with {len(gs)} operations")
    if not gs:
        raise ArityMismatchError("superposition needs at least one inner operation")
    m = gs[0].arity
    for g in gs:
        if g.arity != m or g.domain_size != h.domain_size:
            raise ArityMismatchError("inner operations must share arity and domain")
    table = compose_tables(h.table, [g.table for g in gs], h.domain_size)
    return Operation.from_raw(h.domain_size, m, table)


def projection(k: int, m: int, i: int) -> Operation:
    """e_{i+1}^(m): returns argument i (0-based)."""
    if not 0 <= i < m:
        raise MalformedInputError(f"projection index {i} outside arity {m}")
    return Operation.from_raw(k, m, [t[i] for t in all_tuples(k, m)])


def projections(k: int, m: int) -> List[Operation]:
    return [projection(k, m, i) for i in range(m)]


def constant_operation(k: int, m: int, c: int) -> Operation:
    return Operation.from_raw(k, m, [c] * k ** m)


def min_operation(k: int, m: int = 2) -> Operation:
    return Operation.from_raw(k, m, [min(t) for t in all_tuples(k, m)])


def max_operation(k: int, m: int = 2) -> Operation:
    return Operation.from_raw(k, m, [max(t) for t in all_tuples(k, m)])


def permute_arguments(g: Operation, permutation: Sequence[int]) -> Operation:
    """g_pi(x1..xm) = g(x_pi(1), ..., x_pi(m))."""
    if sorted(permutation) != list(range(g.arity)):
        raise MalformedInputError(f"{permutation} is not a permutation of {g.arity} arguments")
    return Operation.from_raw(
        g.domain_size, g.arity, [g(*(t[p] for p in permutation)) for t in all_tuples(g.domain_size, g.arity)]
    )


def is_idempotent(g: Operation) -> bool:
    return all(g(*([a] * g.arity)) == a for a in range(g.domain_size))


def is_commutative(g: Operation) -> bool:
    if g.arity != 2:
        raise PreconditionError("commutativity is checked for binary operations")
    return is_symmetric(g)


def is_associative(g: Operation) -> bool:
    if g.arity != 2:
        raise PreconditionError("associativity is checked for binary operations")
    k = g.domain_size
    return all(g(g(a, b), c) == g(a, g(b, c)) for a, b, c in all_tuples(k, 3))


def is_semilattice(g: Operation) -> bool:
    return g.arity == 2 and is_idempotent(g) and is_commutative(g) and is_associative(g)


def is_conservative(g: Operation) -> bool:
    return all(v in t for t, v in zip(all_tuples(g.domain_size, g.arity), g.table))


def semilattice_power(g: Operation, m: int) -> Operation:
    """g^(m)(x1..xm) = g(x1, g(x2, ..., g(x_{m-1}, x_m)))."""
    if g.arity != 2:
        raise PreconditionError("semilattice_power folds a binary operation")
    if m < 1:
        raise MalformedInputError("arity must be positive")
    k = g.domain_size

    def fold(*xs: int) -> int:
        acc = xs[-1]
        for x in reversed(xs[:-1]):
            acc = g(x, acc)
        return acc

    return Operation.from_function(k, m, fold)
