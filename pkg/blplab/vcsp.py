"""
VCSP Model Service for blplab
Domains, cost functions, languages and instances, instance evaluation, m-fold averages
and the exhaustive oracle.
"""

import itertools
import logging
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator, model_validator

from .config import settings
from .exceptions import ArityMismatchError, CapExceededError, MalformedInputError
from .rational import INF, ZERO, ExtRational, ext

logger = logging.getLogger(__name__)

Assignment = Tuple[int, ...]


def tuple_index(t: Sequence[int], k: int) -> int:
    """Row-major index of t among all tuples over {0..k-1} of its length."""
    index = 0
    for a in t:
        index = index * k + a
    return index


def all_tuples(k: int, n: int) -> Iterable[Tuple[int, ...]]:
    """Every tuple of length n over {0..k-1} in lexicographic order."""
    return itertools.product(range(k), repeat=n)


class Domain(BaseModel):
    """A finite domain {0..k-1} with optional display names."""

    model_config = ConfigDict(frozen=True)

    size: int
    label_names: Tuple[str, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _default_names(cls, data):
        if isinstance(data, dict) and not data.get("label_names"):
            data = dict(data)
            data["label_names"] = tuple(str(i) for i in range(int(data.get("size", 0))))
        return data

    @model_validator(mode="after")
    def _check_labels(self):
        if self.size < 1:
            raise MalformedInputError("a domain needs at least one label")
        if len(self.label_names) != self.size or len(set(self.label_names)) != self.size:
            raise MalformedInputError("label names must be k distinct strings")
        return self

    @property
    def labels(self) -> range:
        return range(self.size)

    def name(self, label: int) -> str:
        return self.label_names[label]

    def index_of(self, token: str) -> int:
        if token in self.label_names:
            return self.label_names.index(token)
        if token.isdigit() and int(token) < self.size:
            return int(token)
        raise MalformedInputError(f"unknown label {token!r}")


class CostFunction(BaseModel):
    """An n-ary cost function over a k-element domain, stored as a dense row-major table."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    domain_size: int
    arity: int
    table: Tuple[ExtRational, ...]

    _raw: Tuple[Optional[Fraction], ...] = PrivateAttr(default=())
    _dom: Tuple[Tuple[int, ...], ...] = PrivateAttr(default=())

    @field_validator("table", mode="before")
    @classmethod
    def _coerce_table(cls, value):
        return tuple(ext(v) for v in value)

    @model_validator(mode="after")
    def _check_table(self):
        if self.arity < 1:
            raise MalformedInputError("cost functions have arity at least 1")
        if self.domain_size < 1:
            raise MalformedInputError("cost functions need a nonempty domain")
        expected = self.domain_size ** self.arity
        if len(self.table) != expected:
            raise MalformedInputError(f"table has {len(self.table)} entries, expected {expected}")
        return self

    def model_post_init(self, __context) -> None:
        self._raw = tuple(v.fraction if v.is_finite else None for v in self.table)
        if self.domain_size >= 1 and self.arity >= 1:
            self._dom = tuple(
                t for t, v in zip(all_tuples(self.domain_size, self.arity), self._raw) if v is not None
            )

    @classmethod
    def from_function(cls, k: int, n: int, fn: Callable[..., object]) -> "CostFunction":
        return cls(domain_size=k, arity=n, table=[ext(fn(*t)) for t in all_tuples(k, n)])

    @classmethod
    def constant_indicator(cls, k: int, d: int) -> "CostFunction":
        """The unary c_d: 0 at d, inf elsewhere."""
        return cls(domain_size=k, arity=1, table=[ZERO if a == d else INF for a in range(k)])

    def value(self, t: Sequence[int]) -> ExtRational:
        return self.table[tuple_index(t, self.domain_size)]

    def raw(self, t: Sequence[int]) -> Optional[Fraction]:
        """Fraction value, or None for inf."""
        return self._raw[tuple_index(t, self.domain_size)]

    @property
    def raw_table(self) -> Tuple[Optional[Fraction], ...]:
        return self._raw

    @property
    def dom(self) -> Tuple[Tuple[int, ...], ...]:
        """The tuples with finite value, lexicographically ordered."""
        return self._dom

    @property
    def is_finite_valued(self) -> bool:
        return len(self._dom) == len(self.table)


class Language(BaseModel):
    """An ordered, named set of cost functions over one domain."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    domain: Domain
    functions: Dict[str, CostFunction]

    @model_validator(mode="after")
    def _check_functions(self):
        for name, f in self.functions.items():
            if f.domain_size != self.domain.size:
                raise MalformedInputError(f"function {name} is over a domain of size {f.domain_size}")
        return self

    @classmethod
    def of(cls, k: int, functions: Mapping[str, CostFunction]) -> "Language":
        return cls(domain=Domain(size=k), functions=dict(functions))

    @property
    def k(self) -> int:
        return self.domain.size

    @property
    def is_finite_valued(self) -> bool:
        return all(f.is_finite_valued for f in self.functions.values())

    def with_functions(self, extra: Mapping[str, CostFunction]) -> "Language":
        functions = dict(self.functions)
        functions.update(extra)
        return Language(domain=self.domain, functions=functions)


class Term(BaseModel):
    model_config = ConfigDict(frozen=True)

    function: str
    scope: Tuple[int, ...]


class VcspInstance(BaseModel):
    """Minimize the sum of f_t(x restricted to scope t) over all assignments x."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    language: Language
    var_count: int
    terms: Tuple[Term, ...] = ()

    @field_validator("terms", mode="before")
    @classmethod
    def _coerce_terms(cls, value):
        return tuple(
            t if isinstance(t, Term) else Term(function=t[0], scope=tuple(t[1])) for t in value
        )

    @model_validator(mode="after")
    def _check_terms(self):
        if self.var_count < 0:
            raise MalformedInputError("var_count must be nonnegative")
        for term in self.terms:
            f = self.language.functions.get(term.function)
            if f is None:
                raise MalformedInputError(f"unknown function {term.function!r}")
            if len(term.scope) != f.arity:
                raise ArityMismatchError(
                    f"term {term.function} has scope of length {len(term.scope)}, arity is {f.arity}"
                )
            if any(v < 0 or v >= self.var_count for v in term.scope):
                raise MalformedInputError(f"term {term.function} refers to a missing variable")
        return self

    @property
    def k(self) -> int:
        return self.language.k

    def function(self, term: Term) -> CostFunction:
        return self.language.functions[term.function]

    def with_terms(self, extra: Sequence[Term], functions: Mapping[str, CostFunction] = None) -> "VcspInstance":
        language = self.language.with_functions(functions) if functions else self.language
        return VcspInstance(language=language, var_count=self.var_count, terms=self.terms + tuple(extra))

    def check_assignment(self, x: Sequence[int]) -> Assignment:
        x = tuple(x)
        if len(x) != self.var_count or any(a < 0 or a >= self.k for a in x):
            raise MalformedInputError(f"invalid assignment {x}")
        return x


class OracleResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: ExtRational
    argmin: Optional[Assignment] = None


def evaluate_instance(instance: VcspInstance, x: Sequence[int]) -> ExtRational:
    """f_I(x): the exact sum of term values, inf as soon as one term is inf."""
    x = instance.check_assignment(x)
    total = Fraction(0)
    for term in instance.terms:
        value = instance.function(term).raw([x[v] for v in term.scope])
        if value is None:
            return INF
        total += value
    return ExtRational(total)


def average_value(f: CostFunction, tuples: Sequence[Sequence[int]]) -> ExtRational:
    """f^m(x1..xm) = (1/m) * sum f(xi)."""
    if not tuples:
        raise MalformedInputError("average_value needs at least one tuple")
    total = Fraction(0)
    for t in tuples:
        if len(t) != f.arity:
            raise ArityMismatchError(f"tuple {tuple(t)} does not match arity {f.arity}")
        value = f.raw(t)
        if value is None:
            return INF
        total += value
    return ExtRational(total / len(tuples))


def brute_force_optimum(instance: VcspInstance, cap: Optional[int] = None) -> OracleResult:
    """Exhaustive minimum; argmin is the lexicographically smallest minimizer."""
    cap = settings.enumeration_cap if cap is None else cap
    k, n = instance.k, instance.var_count
    required = k ** n
    if required > cap:
        raise CapExceededError("brute-force enumeration", cap, required)

    compiled: List[Tuple[Tuple[Optional[Fraction], ...], Tuple[int, ...]]] = [
        (instance.function(term).raw_table, term.scope) for term in instance.terms
    ]
    best: Optional[Fraction] = None
    argmin: Optional[Assignment] = None
    for x in all_tuples(k, n):
        total = Fraction(0)
        for raw, scope in compiled:
            index = 0
            for v in scope:
                index = index * k + x[v]
            value = raw[index]
            if value is None:
                total = None
                break
            total += value
        if total is not None and (best is None or total < best):
            best, argmin = total, x
    logger.debug(f"Oracle enumerated {required} assignments")
    if best is None:
        return OracleResult(value=INF, argmin=None)
    return OracleResult(value=ExtRational(best), argmin=argmin)
