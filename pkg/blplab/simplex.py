"""
Exact Simplex Service for blplab
Two-phase primal simplex over rationals with Bland's rule, and certificate checking
for every outcome it reports.
"""

import logging
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .config import settings
from .exceptions import MalformedInputError, SolverCertificateError
from .rational import render_fraction

logger = logging.getLogger(__name__)


class Relation(str, Enum):
    EQ = "="
    LE = "<="
    GE = ">="


class LpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


def _fractions(values) -> Tuple[Fraction, ...]:
    out = []
    for value in values:
        if isinstance(value, bool) or not isinstance(value, (int, Fraction)):
            raise MalformedInputError(f"LP entries must be finite rationals, got {value!r}")
        out.append(Fraction(value))
    return tuple(out)


class Constraint(BaseModel):
    """One row `coefficients · x  relation  rhs`."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coefficients: Tuple[Fraction, ...]
    relation: Relation
    rhs: Fraction

    @field_validator("coefficients", mode="before")
    @classmethod
    def _coerce_coefficients(cls, value):
        return _fractions(value)

    @field_validator("rhs", mode="before")
    @classmethod
    def _coerce_rhs(cls, value):
        return _fractions([value])[0]


class LinearProgram(BaseModel):
    """Minimize objective · x subject to the constraints; flagged variables are nonnegative."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    var_count: int
    objective: Tuple[Fraction, ...]
    constraints: Tuple[Constraint, ...] = ()
    nonnegative: Tuple[bool, ...] = ()

    @field_validator("objective", mode="before")
    @classmethod
    def _coerce_objective(cls, value):
        return _fractions(value)

    @model_validator(mode="before")
    @classmethod
    def _default_flags(cls, data):
        if isinstance(data, dict) and not data.get("nonnegative"):
            data = dict(data)
            data["nonnegative"] = (True,) * int(data.get("var_count", 0))
        return data

    @model_validator(mode="after")
    def _check_shapes(self):
        if self.var_count < 1:
            raise MalformedInputError("an LP needs at least one variable")
        if len(self.objective) != self.var_count:
            raise MalformedInputError("objective length differs from var_count")
        if len(self.nonnegative) != self.var_count:
            raise MalformedInputError("nonnegative flags length differs from var_count")
        for index, row in enumerate(self.constraints):
            if len(row.coefficients) != self.var_count:
                raise MalformedInputError(f"constraint {index} has {len(row.coefficients)} coefficients")
        return self

    def with_objective(self, objective: Sequence) -> "LinearProgram":
        return LinearProgram(
            var_count=self.var_count,
            objective=objective,
            constraints=self.constraints,
            nonnegative=self.nonnegative,
        )


class LpOutcome(BaseModel):
    """Result of solve_lp; `ray` is an improving direction when Unbounded."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    status: LpStatus
    value: Optional[Fraction] = None
    point: Optional[Tuple[Fraction, ...]] = None
    ray: Optional[Tuple[Fraction, ...]] = None

    @model_validator(mode="after")
    def _check_payload(self):
        if self.status == LpStatus.OPTIMAL and (self.value is None or self.point is None):
            raise MalformedInputError("an optimal outcome carries a value and a point")
        return self

    def render(self) -> str:
        if self.status != LpStatus.OPTIMAL:
            return self.status.value
        point = " ".join(render_fraction(v) for v in self.point)
        return f"{self.status.value} {render_fraction(self.value)} [{point}]"


class _Tableau:
    """Dense tableau of Fractions; the last row holds reduced costs and -z in the last column."""

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        # column layout: structural (x+ and x- for free variables), slack/surplus, artificial
        self.split: List[Tuple[int, Optional[int]]] = []
        col = 0
        for j in range(lp.var_count):
            if lp.nonnegative[j]:
                self.split.append((col, None))
                col += 1
            else:
                self.split.append((col, col + 1))
                col += 2
        structural = col

        rows = []
        for constraint in lp.constraints:
            coefficients = [Fraction(0)] * structural
            for j, a in enumerate(constraint.coefficients):
                plus, minus = self.split[j]
                coefficients[plus] = a
                if minus is not None:
                    coefficients[minus] = -a
            relation, rhs = constraint.relation, constraint.rhs
            if rhs < 0:
                coefficients = [-a for a in coefficients]
                rhs = -rhs
                relation = {Relation.LE: Relation.GE, Relation.GE: Relation.LE}.get(relation, relation)
            rows.append((coefficients, relation, rhs))

        slack_count = sum(1 for _, rel, _ in rows if rel != Relation.EQ)
        artificial_count = sum(1 for _, rel, _ in rows if rel != Relation.LE)
        self.structural = structural
        self.artificial_start = structural + slack_count
        width = self.artificial_start + artificial_count + 1

        table = np.full((len(rows) + 1, width), Fraction(0), dtype=object)
        self.basis: List[int] = []
        slack = structural
        artificial = self.artificial_start
        for i, (coefficients, relation, rhs) in enumerate(rows):
            table[i, :structural] = coefficients
            table[i, -1] = rhs
            if relation == Relation.LE:
                table[i, slack] = Fraction(1)
                self.basis.append(slack)
                slack += 1
                continue
            if relation == Relation.GE:
                table[i, slack] = Fraction(-1)
                slack += 1
            table[i, artificial] = Fraction(1)
            self.basis.append(artificial)
            artificial += 1
        self.table = table
        self.pivots = 0

    @property
    def row_count(self) -> int:
        return self.table.shape[0] - 1

    def pivot(self, r: int, c: int):
        table = self.table
        pivot = table[r, c]
        if pivot != 1:
            table[r, :] = table[r, :] / pivot
        nonzero = np.array([j for j, v in enumerate(table[r, :]) if v != 0], dtype=np.intp)
        source = table[r, nonzero]
        for i in range(table.shape[0]):
            if i == r:
                continue
            factor = table[i, c]
            if factor != 0:
                table[i, nonzero] = table[i, nonzero] - factor * source
        self.basis[r] = c
        self.pivots += 1

    def run(self, columns: int) -> Optional[int]:
        """Bland's rule over the first `columns` columns; returns the unbounded column or None."""
        table = self.table
        while True:
            costs = table[-1]
            entering = next((j for j in range(columns) if costs[j] < 0), None)
            if entering is None:
                return None
            best = None
            for i in range(self.row_count):
                a = table[i, entering]
                if a > 0:
                    ratio = table[i, -1] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return entering
            self.pivot(best[1], entering)

    def set_objective(self, costs: Sequence[Fraction]):
        """Install a cost vector over the current columns and price out the basis."""
        table = self.table
        table[-1, :] = Fraction(0)
        table[-1, : len(costs)] = list(costs)
        for i, b in enumerate(self.basis):
            c_b = table[-1, b]
            if c_b != 0:
                table[-1, :] = table[-1, :] - c_b * table[i, :]

    def phase_one(self) -> bool:
        width = self.table.shape[1] - 1
        if self.artificial_start == width:
            return True
        costs = [Fraction(0)] * self.artificial_start + [Fraction(1)] * (width - self.artificial_start)
        self.set_objective(costs)
        self.run(width)
        if -self.table[-1, -1] > 0:
            return False
        self._drive_out_artificials()
        return True

    def _drive_out_artificials(self):
        keep = []
        for i in range(self.row_count):
            if self.basis[i] < self.artificial_start:
                keep.append(i)
                continue
            column = next(
                (j for j in range(self.artificial_start) if self.table[i, j] != 0), None
            )
            if column is None:
                continue  # redundant row
            self.pivot(i, column)
            keep.append(i)
        rows = keep + [self.row_count]
        columns = list(range(self.artificial_start)) + [self.table.shape[1] - 1]
        self.table = self.table[np.ix_(rows, columns)]
        self.basis = [self.basis[i] for i in keep]

    def structural_costs(self) -> List[Fraction]:
        costs = [Fraction(0)] * self.artificial_start
        for j, (plus, minus) in enumerate(self.split):
            costs[plus] = self.lp.objective[j]
            if minus is not None:
                costs[minus] = -self.lp.objective[j]
        return costs

    def column_values(self) -> List[Fraction]:
        values = [Fraction(0)] * (self.table.shape[1] - 1)
        for i, b in enumerate(self.basis):
            values[b] = self.table[i, -1]
        return values

    def to_original(self, values: Sequence[Fraction]) -> Tuple[Fraction, ...]:
        out = []
        for plus, minus in self.split:
            out.append(values[plus] - (values[minus] if minus is not None else 0))
        return tuple(out)


def solve_lp(lp: LinearProgram) -> LpOutcome:
    """Solve lp exactly; identical inputs give identical outcomes."""
    tableau = _Tableau(lp)
    if not tableau.phase_one():
        logger.debug(f"LP infeasible after {tableau.pivots} pivots")
        return LpOutcome(status=LpStatus.INFEASIBLE)

    tableau.set_objective(tableau.structural_costs())
    unbounded = tableau.run(tableau.artificial_start)
    if unbounded is not None:
        direction = [Fraction(0)] * tableau.artificial_start
        direction[unbounded] = Fraction(1)
        for i, b in enumerate(tableau.basis):
            direction[b] = -tableau.table[i, unbounded]
        logger.debug(f"LP unbounded after {tableau.pivots} pivots")
        return LpOutcome(status=LpStatus.UNBOUNDED, ray=tableau.to_original(direction))

    point = tableau.to_original(tableau.column_values())
    value = sum((c * x for c, x in zip(lp.objective, point)), Fraction(0))
    logger.debug(f"LP optimal value {render_fraction(value)} after {tableau.pivots} pivots")
    return LpOutcome(status=LpStatus.OPTIMAL, value=value, point=point)


def _row_value(coefficients: Sequence[Fraction], x: Sequence[Fraction]) -> Fraction:
    return sum((a * v for a, v in zip(coefficients, x) if a), Fraction(0))


def _satisfies(relation: Relation, lhs: Fraction, rhs: Fraction) -> bool:
    if relation == Relation.EQ:
        return lhs == rhs
    if relation == Relation.LE:
        return lhs <= rhs
    return lhs >= rhs


def is_feasible_point(lp: LinearProgram, point: Sequence[Fraction]) -> bool:
    if len(point) != lp.var_count:
        return False
    if any(flag and x < 0 for flag, x in zip(lp.nonnegative, point)):
        return False
    return all(
        _satisfies(row.relation, _row_value(row.coefficients, point), row.rhs) for row in lp.constraints
    )


def verify_certificate(lp: LinearProgram, outcome: LpOutcome) -> bool:
    """Check an outcome against lp: exact feasibility, a phase-1 re-solve, or an improving ray."""
    if outcome.status == LpStatus.OPTIMAL:
        if not is_feasible_point(lp, outcome.point):
            return False
        return _row_value(lp.objective, outcome.point) == outcome.value

    feasibility = solve_lp(lp.with_objective([0] * lp.var_count))
    if outcome.status == LpStatus.INFEASIBLE:
        return feasibility.status == LpStatus.INFEASIBLE
    if feasibility.status != LpStatus.OPTIMAL or outcome.ray is None:
        return False
    ray = outcome.ray
    if len(ray) != lp.var_count:
        return False
    if any(flag and d < 0 for flag, d in zip(lp.nonnegative, ray)):
        return False
    for row in lp.constraints:
        if not _satisfies(row.relation, _row_value(row.coefficients, ray), Fraction(0)):
            return False
    return _row_value(lp.objective, ray) < 0


def solve_checked(lp: LinearProgram) -> LpOutcome:
    """solve_lp, verified against its certificate when settings ask for it."""
    outcome = solve_lp(lp)
    if settings.verify_lp_certificates and not verify_certificate(lp, outcome):
        logger.error(f"LP certificate check failed for status {outcome.status.value}")
        raise SolverCertificateError(f"solver outcome {outcome.status.value} failed verification")
    return outcome
