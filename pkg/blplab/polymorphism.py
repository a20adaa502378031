"""
Polymorphism Service for blplab
Fractional operations, fractional-polymorphism checking, LP detection of symmetric
fractional polymorphisms and clone generation by breadth-first superposition.
"""

import itertools
import logging
from fractions import Fraction
from math import comb
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .config import settings
from .exceptions import (
    ArityMismatchError,
    CapExceededError,
    CloneCapExceededError,
    MalformedInputError,
    PreconditionError,
    SolverCertificateError,
)
from .operations import (
    Operation,
    is_symmetric,
    is_symmetric_table,
    multisets,
    projection,
    projections,
    superpose,
)
from .rational import INF, ExtRational, render_fraction
from .simplex import Constraint, LinearProgram, LpStatus, Relation, solve_checked
from .vcsp import Language, all_tuples, tuple_index

logger = logging.getLogger(__name__)


class FractionalOperation(BaseModel):
    """A probability distribution with rational weights over m-ary operations."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    domain_size: int
    arity: int
    weights: Dict[Operation, Fraction]

    @field_validator("weights", mode="before")
    @classmethod
    def _coerce_weights(cls, value):
        merged: Dict[Operation, Fraction] = {}
        pairs = value.items() if isinstance(value, dict) else value
        for g, w in pairs:
            merged[g] = merged.get(g, Fraction(0)) + Fraction(w)
        return merged

    @model_validator(mode="after")
    def _check_distribution(self):
        if not self.weights:
            raise MalformedInputError("a fractional operation needs a nonempty support")
        for g, w in self.weights.items():
            if g.arity != self.arity or g.domain_size != self.domain_size:
                raise ArityMismatchError("support operations must share arity and domain")
            if w <= 0:
                raise MalformedInputError("support weights must be positive")
        if sum(self.weights.values()) != 1:
            raise MalformedInputError("weights must sum to exactly 1")
        return self

    @classmethod
    def indicator(cls, g: Operation) -> "FractionalOperation":
        return cls(domain_size=g.domain_size, arity=g.arity, weights={g: 1})

    @classmethod
    def multimorphism(cls, g1: Operation, g2: Operation) -> "FractionalOperation":
        half = Fraction(1, 2)
        return cls(domain_size=g1.domain_size, arity=2, weights=[(g1, half), (g2, half)])

    @classmethod
    def projection_average(cls, k: int, m: int) -> "FractionalOperation":
        return cls(domain_size=k, arity=m, weights={p: Fraction(1, m) for p in projections(k, m)})

    @property
    def support(self) -> List[Operation]:
        return sorted(self.weights)

    def weight(self, g: Operation) -> Fraction:
        return self.weights.get(g, Fraction(0))

    @property
    def is_symmetric(self) -> bool:
        return all(is_symmetric(g) for g in self.weights)

    def items(self) -> List[Tuple[Operation, Fraction]]:
        return [(g, self.weights[g]) for g in self.support]

    def render(self) -> str:
        return "\n".join(f"{render_fraction(w)} {g.render()}" for g, w in self.items())


def superpose_fractional(omega: FractionalOperation, gs: Sequence[Operation]) -> FractionalOperation:
    """omega[g1..gn]: pushes weights forward, summing weights of colliding superpositions."""
    if len(gs) != omega.arity:
        raise ArityMismatchError(f"{omega.arity}-ary fractional operation superposed with {len(gs)} operations")
    weights: Dict[Operation, Fraction] = {}
    for h, w in omega.items():
        composed = superpose(h, gs)
        weights[composed] = weights.get(composed, Fraction(0)) + w
    return FractionalOperation(domain_size=omega.domain_size, arity=gs[0].arity, weights=weights)


def reduce_to_binary(omega: FractionalOperation) -> FractionalOperation:
    """omega[e1, e2, e1, e2, ...] for symmetric omega of even arity: a binary symmetric fractional operation."""
    if omega.arity % 2:
        raise PreconditionError("binary reduction needs an even arity")
    if not omega.is_symmetric:
        raise PreconditionError("binary reduction needs a symmetric fractional operation")
    k = omega.domain_size
    first, second = projection(k, 2, 0), projection(k, 2, 1)
    return superpose_fractional(omega, [first, second] * (omega.arity // 2))


class PolymorphismCheck(BaseModel):
    """Verdict of a (generalised) fractional-polymorphism check with the first violation."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    holds: bool
    families_checked: int = 0
    function: Optional[str] = None
    tuples: Optional[Tuple[Tuple[int, ...], ...]] = None
    lhs: Optional[ExtRational] = None
    rhs: Optional[ExtRational] = None

    def render(self) -> str:
        if self.holds:
            return "holds"
        rows = " ".join("(" + ",".join(str(a) for a in t) + ")" for t in self.tuples)
        return f"violated {self.function} {rows} lhs {self.lhs} rhs {self.rhs}"


def tuple_families(dom: Sequence[Tuple[int, ...]], m: int, unordered: bool) -> Iterator[Tuple[Tuple[int, ...], ...]]:
    """Ordered m-families of dom tuples, or one representative per multiset when unordered."""
    if unordered:
        for chosen in itertools.combinations_with_replacement(range(len(dom)), m):
            yield tuple(dom[i] for i in chosen)
    else:
        yield from itertools.product(dom, repeat=m)


def family_count(dom_size: int, m: int, unordered: bool) -> int:
    return comb(dom_size + m - 1, m) if unordered else dom_size ** m


def image_index(table: Sequence[int], family: Sequence[Tuple[int, ...]], k: int) -> int:
    """Row-major index (over the cost function's tuples) of g applied coordinatewise to family."""
    index = 0
    for column in zip(*family):
        index = index * k + table[tuple_index(column, k)]
    return index


def check_fractional_polymorphism(
    language: Language,
    omega: FractionalOperation,
    cap: Optional[int] = None,
    unordered: Optional[bool] = None,
) -> PolymorphismCheck:
    """Check sum_g omega(g) f(g(x1..xm)) <= f^m(x1..xm) for every f and dom tuples x1..xm.

    Symmetric omega is checked over multisets of tuples unless `unordered` is forced.
    """
    cap = settings.fpol_check_cap if cap is None else cap
    if omega.domain_size != language.k:
        raise ArityMismatchError("fractional operation and language use different domains")
    unordered = omega.is_symmetric if unordered is None else unordered
    k, m = language.k, omega.arity
    support = [(g.table, w) for g, w in omega.items()]
    checked = 0
    for name, f in language.functions.items():
        dom = f.dom
        count = family_count(len(dom), m, unordered)
        if checked + count > cap:
            raise CapExceededError(f"polymorphism check of {name}", cap, checked + count)
        raw = f.raw_table
        for family in tuple_families(dom, m, unordered):
            checked += 1
            rhs = sum((raw[tuple_index(t, k)] for t in family), Fraction(0)) / m
            lhs: Optional[Fraction] = Fraction(0)
            for table, w in support:
                value = raw[image_index(table, family, k)]
                if value is None:
                    lhs = None
                    break
                lhs += w * value
            if lhs is None or lhs > rhs:
                logger.debug(f"Fractional polymorphism violated on {name} at {family}")
                return PolymorphismCheck(
                    holds=False,
                    families_checked=checked,
                    function=name,
                    tuples=family,
                    lhs=INF if lhs is None else ExtRational(lhs),
                    rhs=ExtRational(rhs),
                )
    return PolymorphismCheck(holds=True, families_checked=checked)


def _dom_requirements(language: Language, m: int) -> List[Tuple[Tuple[int, ...], frozenset]]:
    """Per pattern of column multisets, the image tuples allowed by every function."""
    k = language.k
    index_of = {ms: i for i, ms in enumerate(multisets(k, m))}
    requirements: Dict[Tuple[int, ...], set] = {}
    for f in language.functions.values():
        dom_set = frozenset(f.dom)
        for family in tuple_families(f.dom, m, True):
            pattern = tuple(index_of[tuple(sorted(column))] for column in zip(*family))
            if pattern in requirements:
                requirements[pattern] &= dom_set
            else:
                requirements[pattern] = set(dom_set)
    return [(pattern, frozenset(allowed)) for pattern, allowed in requirements.items()]


def symmetric_candidates(language: Language, m: int, cap: Optional[int] = None) -> List[Tuple[int, ...]]:
    """Symmetric m-ary operations (as multiset-indexed tables) mapping dom tuples into dom.

    Backtracks over multisets in order, testing each requirement once all its multisets are set.
    """
    cap = settings.symmetric_operation_cap if cap is None else cap
    k = language.k
    count = len(multisets(k, m))
    requirements = _dom_requirements(language, m)
    triggered: List[List[Tuple[Tuple[int, ...], frozenset]]] = [[] for _ in range(count)]
    for pattern, allowed in requirements:
        triggered[max(pattern)].append((pattern, allowed))

    survivors: List[Tuple[int, ...]] = []
    labels = [0] * count

    def extend(position: int):
        if position == count:
            survivors.append(tuple(labels))
            if len(survivors) > cap:
                raise CapExceededError("symmetric operation candidates", cap, len(survivors))
            return
        for a in range(k):
            labels[position] = a
            if all(tuple(labels[p] for p in pattern) in allowed for pattern, allowed in triggered[position]):
                extend(position + 1)

    extend(0)
    logger.debug(f"{len(survivors)} of {k ** count} symmetric {m}-ary operations preserve every dom")
    return survivors


def _symmetric_to_operation(labels: Sequence[int], k: int, m: int) -> Operation:
    index_of = {ms: i for i, ms in enumerate(multisets(k, m))}
    return Operation.from_raw(k, m, [labels[index_of[tuple(sorted(t))]] for t in all_tuples(k, m)])


def find_symmetric_fpol(
    language: Language, m: int, cap: Optional[int] = None
) -> Optional[FractionalOperation]:
    """A symmetric m-ary fractional polymorphism of the language, or None if none exists."""
    if m < 1:
        raise MalformedInputError("arity must be positive")
    k = language.k
    candidates = symmetric_candidates(language, m, cap)
    if not candidates:
        logger.info(f"No symmetric {m}-ary operation preserves the language domains")
        return None
    index_of = {ms: i for i, ms in enumerate(multisets(k, m))}

    rows: List[Constraint] = []
    for f in language.functions.values():
        raw = f.raw_table
        for family in tuple_families(f.dom, m, True):
            rhs = sum((raw[tuple_index(t, k)] for t in family), Fraction(0)) / m
            columns = [index_of[tuple(sorted(column))] for column in zip(*family)]
            coefficients = []
            for labels in candidates:
                image = 0
                for c in columns:
                    image = image * k + labels[c]
                coefficients.append(raw[image])
            if max(coefficients) <= rhs:
                continue  # satisfied by every convex combination
            rows.append(Constraint(coefficients=coefficients, relation=Relation.LE, rhs=rhs))
    rows.append(Constraint(coefficients=[1] * len(candidates), relation=Relation.EQ, rhs=1))
    lp = LinearProgram(var_count=len(candidates), objective=[0] * len(candidates), constraints=rows)
    logger.debug(f"Detection LP for arity {m}: {len(candidates)} variables, {len(rows)} rows")

    outcome = solve_checked(lp)
    if outcome.status != LpStatus.OPTIMAL:
        logger.info(f"No symmetric {m}-ary fractional polymorphism exists")
        return None
    weights = {
        _symmetric_to_operation(labels, k, m): w for labels, w in zip(candidates, outcome.point) if w > 0
    }
    omega = FractionalOperation(domain_size=k, arity=m, weights=weights)
    verdict = check_fractional_polymorphism(language, omega)
    if not verdict.holds:
        raise SolverCertificateError(f"detected fractional operation fails its check: {verdict.render()}")
    return omega


def _clone_rounds(ops: Sequence[Operation], n: int, k: int, node_cap: int) -> Iterator[np.ndarray]:
    """Yield each round's new arity-n members (lexicographically sorted), starting with projections.

    Semi-naive: every argument tuple containing a member from the previous round is tried
    exactly once, keyed on the position of its first such member.
    """
    size = k ** n
    members = np.array([p.table for p in projections(k, n)], dtype=np.int64).reshape(-1, size)
    seen = {row.tobytes() for row in members}
    old = 0
    yield members
    generators = [(np.array(g.table, dtype=np.int64), g.arity) for g in ops]
    round_number = 0
    while True:
        round_number += 1
        total = len(members)
        fresh: List[np.ndarray] = []
        for table, p in generators:
            for first_new in range(p):
                ranges = [range(0, old)] * first_new + [range(old, total)] + [range(0, total)] * (p - 1 - first_new)
                head, last = ranges[:-1], ranges[-1]
                if len(last) == 0:
                    continue
                tail = members[last.start:last.stop]
                for prefix in itertools.product(*head):
                    index = np.zeros(size, dtype=np.int64)
                    for j in prefix:
                        index = index * k + members[j]
                    results = table[index[None, :] * k + tail]
                    for row in results:
                        key = row.tobytes()
                        if key not in seen:
                            seen.add(key)
                            fresh.append(row)
                            if total + len(fresh) > node_cap:
                                raise CloneCapExceededError(node_cap, total + len(fresh))
        if not fresh:
            logger.debug(f"Clone fixpoint after {round_number} rounds with {total} members")
            return
        delta = np.array(sorted(fresh, key=lambda r: tuple(r.tolist())), dtype=np.int64)
        logger.debug(f"Clone round {round_number}: {len(delta)} new members")
        old = total
        members = np.vstack([members, delta])
        yield delta


def _check_generators(ops: Sequence[Operation]) -> int:
    ks = {g.domain_size for g in ops}
    if len(ks) > 1:
        raise ArityMismatchError("generators must share one domain")
    return ks.pop() if ks else 0


def generate_clone(
    ops: Sequence[Operation], target_arity: int, node_cap: Optional[int] = None, k: Optional[int] = None
) -> List[Operation]:
    """All target_arity-ary operations in the clone generated by ops, sorted by table."""
    node_cap = settings.clone_node_cap if node_cap is None else node_cap
    k = _check_generators(ops) or k
    if not k:
        raise MalformedInputError("the domain size is needed when no generators are given")
    ops = sorted(set(ops))
    found: List[Tuple[int, ...]] = []
    for delta in _clone_rounds(ops, target_arity, k, node_cap):
        found.extend(tuple(row.tolist()) for row in delta)
    return [Operation.from_raw(k, target_arity, t) for t in sorted(found)]


def find_generated_symmetric(
    ops: Sequence[Operation], n: int, node_cap: Optional[int] = None, k: Optional[int] = None
) -> Optional[Operation]:
    """The first symmetric n-ary clone member met by the search, or None at fixpoint."""
    node_cap = settings.clone_node_cap if node_cap is None else node_cap
    k = _check_generators(ops) or k
    if not k:
        raise MalformedInputError("the domain size is needed when no generators are given")
    for delta in _clone_rounds(sorted(set(ops)), n, k, node_cap):
        for row in delta:
            table = tuple(row.tolist())
            if is_symmetric_table(table, k, n):
                return Operation.from_raw(k, n, table)
    return None
