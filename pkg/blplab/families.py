"""
Language Families Service for blplab
Operations and fractional operations of the tractable families: lattices, k-submodular,
skew bisubmodular, strong and weak tree-submodular, 1-defect chains, plus a seeded sampler
of cost functions admitting a given fractional operation.
"""

import itertools
import logging
from fractions import Fraction
from math import ceil, floor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .config import settings
from .exceptions import (
    DefectImageError,
    LatticeAxiomError,
    MalformedInputError,
    PreconditionError,
    SamplingExhaustedError,
)
from .operations import (
    Operation,
    is_associative,
    is_commutative,
    is_idempotent,
    is_symmetric,
    max_operation,
    min_operation,
)
from .polymorphism import FractionalOperation, check_fractional_polymorphism, image_index, tuple_families
from .vcsp import CostFunction, Language, all_tuples, tuple_index

logger = logging.getLogger(__name__)


class Lattice(BaseModel):
    """A meet/join pair satisfying the lattice axioms."""

    model_config = ConfigDict(frozen=True)

    meet: Operation
    join: Operation

    @model_validator(mode="after")
    def _check_axioms(self):
        k = self.meet.domain_size
        for name, g in (("meet", self.meet), ("join", self.join)):
            if g.arity != 2 or g.domain_size != k:
                raise LatticeAxiomError(f"{name} must be a binary operation on the shared domain")
            if not is_idempotent(g):
                raise LatticeAxiomError(f"idempotency of {name}")
            if not is_commutative(g):
                raise LatticeAxiomError(f"commutativity of {name}")
            if not is_associative(g):
                bad = next(t for t in all_tuples(k, 3) if g(g(t[0], t[1]), t[2]) != g(t[0], g(t[1], t[2])))
                raise LatticeAxiomError(f"associativity of {name}", bad)
        for a, b in all_tuples(k, 2):
            if self.meet(a, self.join(a, b)) != a or self.join(a, self.meet(a, b)) != a:
                raise LatticeAxiomError("absorption", (a, b))
        return self

    @property
    def domain_size(self) -> int:
        return self.meet.domain_size


def lattice_from_order(leq: Sequence[Sequence[bool]]) -> Lattice:
    """Meet and join of a finite lattice given by its partial order matrix leq[x][y] = (x <= y)."""
    k = len(leq)

    def bound(a: int, b: int, lower: bool) -> int:
        if lower:
            common = [z for z in range(k) if leq[z][a] and leq[z][b]]
            best = [z for z in common if all(leq[w][z] for w in common)]
        else:
            common = [z for z in range(k) if leq[a][z] and leq[b][z]]
            best = [z for z in common if all(leq[z][w] for w in common)]
        if len(best) != 1:
            raise LatticeAxiomError("existence of meets and joins", (a, b))
        return best[0]

    meet = Operation.from_function(k, 2, lambda a, b: bound(a, b, True))
    join = Operation.from_function(k, 2, lambda a, b: bound(a, b, False))
    return Lattice(meet=meet, join=join)


def chain_lattice(k: int) -> Lattice:
    return Lattice(meet=min_operation(k), join=max_operation(k))


def diamond_lattice() -> Lattice:
    """M2 on {0, a, b, 1} encoded as 0, 1, 2, 3 with a and b incomparable."""
    leq = [[x == y or x == 0 or y == 3 for y in range(4)] for x in range(4)]
    return lattice_from_order(leq)


def lattice_multimorphism(meet: Operation, join: Operation) -> FractionalOperation:
    """1/2 meet + 1/2 join, after checking the lattice axioms."""
    lattice = Lattice(meet=meet, join=join)
    return FractionalOperation.multimorphism(lattice.meet, lattice.join)


def k_submodular_ops(k: int) -> Tuple[Operation, Operation]:
    """(min_0, max_0) over D = {0..k}."""
    if k < 1:
        raise MalformedInputError("k-submodularity needs k >= 1")

    def clash(x: int, y: int) -> bool:
        return x != 0 and y != 0 and x != y

    min0 = Operation.from_function(k + 1, 2, lambda x, y: x if x == y else 0)
    max0 = Operation.from_function(k + 1, 2, lambda x, y: 0 if clash(x, y) else max(x, y))
    return min0, max0


def skew_bisubmodular_fpol(alpha: Fraction) -> FractionalOperation:
    """min_0 -> 1/2, max_0 -> alpha/2, max_1 -> (1 - alpha)/2 over {0, 1, 2}."""
    alpha = Fraction(alpha)
    if not 0 < alpha <= 1:
        raise MalformedInputError(f"alpha must lie in (0, 1], got {alpha}")
    min0, max0 = k_submodular_ops(2)
    max1 = Operation.from_function(3, 2, lambda x, y: 1 if x != 0 and y != 0 and x != y else max(x, y))
    weights = [(min0, Fraction(1, 2)), (max0, alpha / 2)]
    if alpha < 1:
        weights.append((max1, (1 - alpha) / 2))
    return FractionalOperation(domain_size=3, arity=2, weights=weights)


class RootedTree(BaseModel):
    """Labels arranged in a rooted tree; parent[root] == root."""

    model_config = ConfigDict(frozen=True)

    parent: Tuple[int, ...]

    @model_validator(mode="after")
    def _check_tree(self):
        k = len(self.parent)
        if k < 1 or any(p < 0 or p >= k for p in self.parent):
            raise MalformedInputError("parent entries must be labels")
        roots = [v for v in range(k) if self.parent[v] == v]
        if len(roots) != 1:
            raise MalformedInputError(f"a rooted tree has exactly one root, found {len(roots)}")
        for v in range(k):
            seen = set()
            while self.parent[v] != v:
                if v in seen:
                    raise MalformedInputError("parent links contain a cycle")
                seen.add(v)
                v = self.parent[v]
        return self

    @property
    def size(self) -> int:
        return len(self.parent)

    @property
    def root(self) -> int:
        return next(v for v in range(self.size) if self.parent[v] == v)

    def ancestors(self, v: int) -> List[int]:
        """v, its parent, ..., the root."""
        chain = [v]
        while self.parent[v] != v:
            v = self.parent[v]
            chain.append(v)
        return chain

    def depth(self, v: int) -> int:
        return len(self.ancestors(v)) - 1

    def precedes(self, a: int, b: int) -> bool:
        """a is an ancestor of b (reflexive)."""
        return a in self.ancestors(b)

    def common_ancestor(self, a: int, b: int) -> int:
        above_b = set(self.ancestors(b))
        return next(v for v in self.ancestors(a) if v in above_b)

    def path(self, a: int, b: int) -> List[int]:
        """P_ab: the vertices from a to b."""
        top = self.common_ancestor(a, b)
        up = self.ancestors(a)
        down = self.ancestors(b)
        return up[: up.index(top) + 1] + list(reversed(down[: down.index(top)]))

    def distance(self, a: int, b: int) -> int:
        return len(self.path(a, b)) - 1


def strong_tree_ops(tree: RootedTree) -> Tuple[Operation, Operation]:
    """Midpoints of P_ab, ordered so that g1(a, b) precedes g2(a, b)."""
    k = tree.size
    g1: Dict[Tuple[int, int], int] = {}
    g2: Dict[Tuple[int, int], int] = {}
    for a in range(k):
        for b in range(a, k):
            path = tree.path(a, b)
            d = len(path) - 1
            a1, a2 = path[d // 2], path[(d + 1) // 2]
            if a1 != a2 and tree.precedes(a2, a1):
                a1, a2 = a2, a1
            g1[a, b] = g1[b, a] = a1
            g2[a, b] = g2[b, a] = a2
    return (
        Operation.from_function(k, 2, lambda a, b: g1[a, b]),
        Operation.from_function(k, 2, lambda a, b: g2[a, b]),
    )


def weak_tree_ops(tree: RootedTree) -> Tuple[Operation, Operation]:
    """g1 = highest common ancestor; g2 = the vertex on P_ab at distance d(b, g1) from a."""
    k = tree.size

    def second(a: int, b: int) -> int:
        top = tree.common_ancestor(a, b)
        return tree.path(a, b)[tree.distance(b, top)]

    return (
        Operation.from_function(k, 2, tree.common_ancestor),
        Operation.from_function(k, 2, second),
    )


def k_submodular_tree(k: int) -> RootedTree:
    """A root 0 with k children: weak tree-submodularity on it is k-submodularity."""
    return RootedTree(parent=(0,) * (k + 1))


class DefectPoset(BaseModel):
    """A strict order relating every pair except the incomparable pair (b, c)."""

    model_config = ConfigDict(frozen=True)

    less: Tuple[Tuple[bool, ...], ...]
    b: int
    c: int

    @model_validator(mode="after")
    def _check_order(self):
        k = len(self.less)
        if any(len(row) != k for row in self.less):
            raise MalformedInputError("order matrix must be square")
        if not (0 <= self.b < k and 0 <= self.c < k) or self.b == self.c:
            raise MalformedInputError("b and c must be distinct labels")
        lt = self.less
        for x in range(k):
            if lt[x][x]:
                raise MalformedInputError(f"order is not irreflexive at {x}")
        for x, y, z in all_tuples(k, 3):
            if lt[x][y] and lt[y][z] and not lt[x][z]:
                raise MalformedInputError(f"order is not transitive at {(x, y, z)}")
        for x in range(k):
            for y in range(x + 1, k):
                if lt[x][y] and lt[y][x]:
                    raise MalformedInputError(f"order is not antisymmetric at {(x, y)}")
                comparable = lt[x][y] or lt[y][x]
                defect = {x, y} == {self.b, self.c}
                if comparable == defect:
                    what = "b and c must be incomparable" if defect else f"{x} and {y} must be comparable"
                    raise MalformedInputError(what)
        return self

    @property
    def size(self) -> int:
        return len(self.less)

    def lt(self, x: int, y: int) -> bool:
        return self.less[x][y]

    def meet(self, x: int, y: int) -> int:
        return x if x == y or self.lt(x, y) else y

    def join(self, x: int, y: int) -> int:
        return x if x == y or self.lt(y, x) else y

    def chain_order(self) -> List[int]:
        """D without {b, c}, increasing."""
        rest = [x for x in range(self.size) if x not in (self.b, self.c)]
        return sorted(rest, key=lambda x: sum(self.lt(y, x) for y in rest))


def defect_images(poset: DefectPoset) -> Tuple[int, int]:
    """(g1(b, c), g2(b, c)): glb and lub of {b, c} off the pair, else the order-minimal admissible pair."""
    b, c = poset.b, poset.c
    chain = poset.chain_order()
    below = [z for z in chain if poset.lt(z, b) and poset.lt(z, c)]
    above = [z for z in chain if poset.lt(b, z) and poset.lt(c, z)]
    if below and above:
        return below[-1], above[0]
    for i, low in enumerate(chain):
        for high in chain[i + 1:]:
            return low, high
    raise DefectImageError(f"no admissible images for the pair ({b}, {c})")


def one_defect_ops(poset: DefectPoset) -> Tuple[Operation, Operation]:
    """Meet and join off the defect pair; the defect images on it."""
    k = poset.size
    low, high = defect_images(poset)
    pair = {poset.b, poset.c}

    def g1(x: int, y: int) -> int:
        return low if {x, y} == pair else poset.meet(x, y)

    def g2(x: int, y: int) -> int:
        return high if {x, y} == pair else poset.join(x, y)

    return Operation.from_function(k, 2, g1), Operation.from_function(k, 2, g2)


def one_defect_symmetric(g: Operation, m: int, poset: Optional[DefectPoset] = None) -> Operation:
    """h^(m) = g(h_1, g(h_2, ..., g(h_{M-1}, h_M))) over the M terms g(x_i, x_j), i < j."""
    if g.arity != 2:
        raise PreconditionError("the fold needs a binary operation")
    if m < 1:
        raise MalformedInputError("arity must be positive")
    if poset is not None:
        image = g(poset.b, poset.c)
        below = poset.lt(image, poset.b) and poset.lt(image, poset.c)
        above = poset.lt(poset.b, image) and poset.lt(poset.c, image)
        if not (below or above):
            raise PreconditionError("g(b, c) must lie below both or above both of b and c")
    pairs = list(itertools.combinations(range(m), 2))

    def fold(*xs: int) -> int:
        if not pairs:
            return xs[0]
        terms = [g(xs[i], xs[j]) for i, j in pairs]
        acc = terms[-1]
        for term in reversed(terms[:-1]):
            acc = g(term, acc)
        return acc

    h = Operation.from_function(g.domain_size, m, fold)
    if not is_symmetric(h):
        raise PreconditionError("the folded operation is not symmetric for this g")
    return h


def example_binary_operation(a: int, b: int) -> Operation:
    """g_ab on {0, 1}: idempotent with g(0, 1) = a and g(1, 0) = b."""
    return Operation(domain_size=2, arity=2, table=(0, a, b, 1))


def _linear_forms(omega: FractionalOperation, n: int) -> List[List[Dict[int, Fraction]]]:
    """The inequalities of omega on an n-ary table, as coefficient maps grouped by their last entry."""
    k, m = omega.domain_size, omega.arity
    tuples = list(all_tuples(k, n))
    support = [(g.table, w) for g, w in omega.items()]
    by_last: List[List[Dict[int, Fraction]]] = [[] for _ in tuples]
    seen = set()
    for family in tuple_families(tuples, m, omega.is_symmetric):
        form: Dict[int, Fraction] = {}
        for table, w in support:
            j = image_index(table, family, k)
            form[j] = form.get(j, Fraction(0)) + w
        for t in family:
            j = tuple_index(t, k)
            form[j] = form.get(j, Fraction(0)) - Fraction(1, m)
        form = {j: a for j, a in form.items() if a != 0}
        if not form:
            continue
        key = tuple(sorted(form.items()))
        if key in seen:
            continue
        seen.add(key)
        by_last[max(form)].append(form)
    return by_last


def sample_admitting_function(
    omega: FractionalOperation,
    n: int,
    value_bound: int,
    rng_seed: int,
    max_attempts: Optional[int] = None,
) -> CostFunction:
    """A finite-valued n-ary cost function with entries in [0, value_bound] admitting omega.

    Entries are drawn in row-major order, each uniformly from the integers that keep every
    inequality whose entries are all drawn satisfied; a dead end restarts the attempt.
    """
    max_attempts = settings.sampler_max_attempts if max_attempts is None else max_attempts
    if value_bound < 0 or n < 1 or max_attempts < 1:
        raise MalformedInputError("sampler needs n >= 1, value_bound >= 0 and a positive attempt budget")
    k = omega.domain_size
    forms = _linear_forms(omega, n)
    rng = np.random.default_rng(rng_seed)
    language_k = Language.of(k, {})
    for attempt in range(1, max_attempts + 1):
        values: List[int] = []
        for entry, constraints in enumerate(forms):
            low, high = Fraction(0), Fraction(value_bound)
            for form in constraints:
                rest = sum((a * values[j] for j, a in form.items() if j != entry), Fraction(0))
                a = form.get(entry, Fraction(0))
                if a > 0:
                    high = min(high, -rest / a)
                elif a < 0:
                    low = max(low, -rest / a)
                elif rest > 0:
                    low, high = Fraction(1), Fraction(0)
                    break
            lo, hi = ceil(low), floor(high)
            if lo > hi:
                break
            values.append(int(rng.integers(lo, hi + 1)))
        else:
            f = CostFunction(domain_size=k, arity=n, table=values)
            verdict = check_fractional_polymorphism(language_k.with_functions({"f": f}), omega)
            if verdict.holds:
                logger.debug(f"Sampler accepted a function after {attempt} attempts")
                return f
    raise SamplingExhaustedError(max_attempts)
