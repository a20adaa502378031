"""
BLP Service for blplab
Builds the basic LP relaxation of an instance, decides whether it is tight, rounds
fractional optima through symmetric fractional polymorphisms and extracts optimal
assignments by self-reduction.
"""

import logging
from fractions import Fraction
from math import lcm
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from .exceptions import (
    DenominatorMismatchError,
    NotSymmetricError,
    PolymorphismNotFoundError,
    RoundingBoundError,
)
from .polymorphism import FractionalOperation, find_symmetric_fpol
from .rational import INF, ExtRational
from .simplex import Constraint, LinearProgram, LpStatus, Relation, solve_checked
from .vcsp import Assignment, CostFunction, Term, VcspInstance, brute_force_optimum, evaluate_instance

logger = logging.getLogger(__name__)


class BlpProgram(BaseModel):
    """The relaxation LP and the meaning of its columns."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    lp: Optional[LinearProgram]
    term_columns: Tuple[Tuple[Tuple[Tuple[int, ...], int], ...], ...]
    var_columns: Tuple[Tuple[int, ...], ...]


class BlpSolution(BaseModel):
    """Per-term distributions mu_t over dom f_t and per-variable distributions alpha_v."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: ExtRational
    term_distributions: Tuple[Dict[Tuple[int, ...], Fraction], ...]
    var_distributions: Tuple[Dict[int, Fraction], ...]

    def common_denominator(self) -> int:
        denominators = [1]
        for mu in self.term_distributions:
            denominators.extend(p.denominator for p in mu.values())
        for alpha in self.var_distributions:
            denominators.extend(p.denominator for p in alpha.values())
        return lcm(*denominators)

    @property
    def is_integral(self) -> bool:
        return self.common_denominator() == 1

    def check_invariants(self, instance: VcspInstance) -> bool:
        """Distributions sum to 1, mu_t lives on dom f_t, and marginals of mu_t match alpha."""
        for alpha in self.var_distributions:
            if any(p < 0 for p in alpha.values()) or sum(alpha.values()) != 1:
                return False
        for term, mu in zip(instance.terms, self.term_distributions):
            if any(p < 0 for p in mu.values()) or sum(mu.values()) != 1:
                return False
            f = instance.function(term)
            if any(p > 0 and f.raw(x) is None for x, p in mu.items()):
                return False
            for i, v in enumerate(term.scope):
                for a in range(instance.k):
                    marginal = sum((p for x, p in mu.items() if x[i] == a), Fraction(0))
                    if marginal != self.var_distributions[v].get(a, Fraction(0)):
                        return False
        return True


class BlpGap(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    blp_value: ExtRational
    oracle_value: ExtRational
    solves: bool


class RoundedAssignment(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    assignment: Assignment
    value: ExtRational


def build_blp(instance: VcspInstance) -> BlpProgram:
    """Columns: mu_t(x) for x in dom f_t (terms in order, tuples lexicographic), then alpha_v(a)."""
    k = instance.k
    term_columns = []
    objective: List[Fraction] = []
    for term in instance.terms:
        f = instance.function(term)
        columns = []
        for x in f.dom:
            columns.append((x, len(objective)))
            objective.append(f.raw(x))
        term_columns.append(tuple(columns))
    var_columns = []
    for _ in range(instance.var_count):
        var_columns.append(tuple(range(len(objective), len(objective) + k)))
        objective.extend([Fraction(0)] * k)

    width = len(objective)
    if width == 0:
        return BlpProgram(lp=None, term_columns=(), var_columns=())

    def row(entries: Dict[int, int], rhs: int) -> Constraint:
        coefficients = [0] * width
        for column, a in entries.items():
            coefficients[column] += a
        return Constraint(coefficients=coefficients, relation=Relation.EQ, rhs=rhs)

    constraints = []
    for term, columns in zip(instance.terms, term_columns):
        constraints.append(row({column: 1 for _, column in columns}, 1))
        for i, v in enumerate(term.scope):
            for a in range(k):
                entries = {column: 1 for x, column in columns if x[i] == a}
                entries[var_columns[v][a]] = entries.get(var_columns[v][a], 0) - 1
                constraints.append(row(entries, 0))
    for columns in var_columns:
        constraints.append(row({column: 1 for column in columns}, 1))

    lp = LinearProgram(var_count=width, objective=objective, constraints=constraints)
    return BlpProgram(lp=lp, term_columns=tuple(term_columns), var_columns=tuple(var_columns))


def blp_value(instance: VcspInstance) -> Tuple[ExtRational, Optional[BlpSolution]]:
    """Exact BLP optimum and an optimal solution; (inf, None) when infeasible."""
    program = build_blp(instance)
    if program.lp is None:
        return ExtRational(0), BlpSolution(value=ExtRational(0), term_distributions=(), var_distributions=())
    outcome = solve_checked(program.lp)
    if outcome.status != LpStatus.OPTIMAL:
        logger.debug("BLP infeasible")
        return INF, None
    point = outcome.point
    value = ExtRational(outcome.value)
    solution = BlpSolution(
        value=value,
        term_distributions=tuple({x: point[c] for x, c in columns} for columns in program.term_columns),
        var_distributions=tuple({a: point[c] for a, c in enumerate(columns)} for columns in program.var_columns),
    )
    return value, solution


def blp_solves(instance: VcspInstance, cap: Optional[int] = None) -> bool:
    """BLP(I) equals min f_I exactly (inf = inf included)."""
    return blp_gap(instance, cap).solves


def blp_gap(instance: VcspInstance, cap: Optional[int] = None) -> BlpGap:
    relaxed, _ = blp_value(instance)
    oracle = brute_force_optimum(instance, cap)
    return BlpGap(blp_value=relaxed, oracle_value=oracle.value, solves=relaxed == oracle.value)


def round_with_polymorphism(
    instance: VcspInstance, solution: BlpSolution, omega: Optional[FractionalOperation] = None
) -> RoundedAssignment:
    """Best assignment g(alpha) over the symmetric support operations g of omega.

    Each alpha_v with denominators dividing m is read as an m-multiset of labels. Without
    omega, one is detected at the common denominator of the solution.
    """
    if omega is None:
        m = solution.common_denominator()
        logger.warning(f"No polymorphism supplied; detecting a symmetric one of arity {m}")
        omega = find_symmetric_fpol(instance.language, m)
        if omega is None:
            raise PolymorphismNotFoundError(f"the language admits no symmetric {m}-ary fractional polymorphism")
    if not omega.is_symmetric:
        raise NotSymmetricError("rounding needs a symmetric fractional operation")
    m = omega.arity
    denominator = solution.common_denominator()
    if m % denominator:
        raise DenominatorMismatchError(denominator, m)

    columns = []
    for alpha in solution.var_distributions:
        column: List[int] = []
        for a in sorted(alpha):
            column.extend([a] * int(alpha[a] * m))
        columns.append(tuple(column))

    best: Optional[RoundedAssignment] = None
    for g in omega.support:
        x = tuple(g(*column) for column in columns)
        value = evaluate_instance(instance, x)
        if best is None or value < best.value:
            best = RoundedAssignment(assignment=x, value=value)
    if best.value > solution.value:
        raise RoundingBoundError(f"rounded value {best.value} exceeds BLP value {solution.value}")
    return best


def constant_name(d: int) -> str:
    return f"const[{d}]"


def self_reduce(instance: VcspInstance) -> Optional[RoundedAssignment]:
    """Fix variables in ascending order with the first label keeping the BLP value unchanged.

    Returns None when the relaxation is infeasible or some variable admits no such label.
    """
    target, _ = blp_value(instance)
    if target.is_infinite:
        logger.info("Self-reduction skipped: BLP is infeasible")
        return None
    k = instance.k
    constants = {constant_name(d): CostFunction.constant_indicator(k, d) for d in range(k)}
    current = instance.with_terms([], constants)
    labels: List[int] = []
    for v in range(instance.var_count):
        for d in range(k):
            trial = current.with_terms([Term(function=constant_name(d), scope=(v,))])
            value, _ = blp_value(trial)
            if value == target:
                current = trial
                labels.append(d)
                break
        else:
            logger.info(f"Self-reduction failed at variable {v}")
            return None
    x = tuple(labels)
    value = evaluate_instance(instance, x)
    logger.debug(f"Self-reduction found {x} with value {value}")
    return RoundedAssignment(assignment=x, value=value)
