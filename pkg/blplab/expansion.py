"""
Expansion Service for blplab
Collections of operations, generalised fractional operations over them, the expansion
operator built from a fractional polymorphism, and the tree construction that turns a
fractional polymorphism into a symmetric one of a requested arity.
"""

import itertools
import logging
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .config import settings
from .exceptions import (
    ArityMismatchError,
    CapExceededError,
    ExpansionError,
    GenerationWitnessNotFoundError,
    MalformedInputError,
    ScaleGuardError,
)
from .operations import Operation, compose_tables, is_symmetric_table, permute_arguments, projections
from .polymorphism import (
    FractionalOperation,
    PolymorphismCheck,
    check_fractional_polymorphism,
    family_count,
    find_generated_symmetric,
    image_index,
    tuple_families,
)
from .rational import INF, ExtRational, render_fraction
from .vcsp import Language, all_tuples, tuple_index

logger = logging.getLogger(__name__)

Table = Tuple[int, ...]
CollectionKey = Tuple[Table, ...]


class CollectionKind(str, Enum):
    ORDERED = "ordered"
    UNORDERED = "unordered"


class Collection(BaseModel):
    """A sequence (ordered) or a set (unordered) of m-ary operations."""

    model_config = ConfigDict(frozen=True)

    kind: CollectionKind
    members: Tuple[Operation, ...]

    @model_validator(mode="before")
    @classmethod
    def _canonical_members(cls, data):
        if isinstance(data, dict) and CollectionKind(data.get("kind")) == CollectionKind.UNORDERED:
            data = dict(data)
            data["members"] = tuple(sorted(set(data.get("members", ()))))
        return data

    @model_validator(mode="after")
    def _check_members(self):
        if not self.members:
            raise MalformedInputError("collections are nonempty")
        first = self.members[0]
        if any(g.arity != first.arity or g.domain_size != first.domain_size for g in self.members):
            raise ArityMismatchError("collection members must share arity and domain")
        return self

    @classmethod
    def unordered(cls, members: Sequence[Operation]) -> "Collection":
        return cls(kind=CollectionKind.UNORDERED, members=tuple(members))

    @classmethod
    def ordered(cls, members: Sequence[Operation]) -> "Collection":
        return cls(kind=CollectionKind.ORDERED, members=tuple(members))

    @classmethod
    def permutation_class(cls, g: Operation) -> "Collection":
        """The set of all argument permutations of g."""
        return cls.unordered(
            [permute_arguments(g, list(p)) for p in itertools.permutations(range(g.arity))]
        )

    @classmethod
    def from_key(cls, key: CollectionKey, k: int, m: int) -> "Collection":
        return cls.unordered([Operation.from_raw(k, m, t) for t in key])

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def arity(self) -> int:
        return self.members[0].arity

    @property
    def domain_size(self) -> int:
        return self.members[0].domain_size

    @property
    def key(self) -> CollectionKey:
        return tuple(g.table for g in self.members)

    @property
    def is_good(self) -> bool:
        """A single symmetric operation."""
        g = self.members[0]
        return self.size == 1 and is_symmetric_table(g.table, g.domain_size, g.arity)

    def render(self) -> str:
        inner = "; ".join(g.render() for g in self.members)
        return "{" + inner + "}" if self.kind == CollectionKind.UNORDERED else "(" + inner + ")"


def projection_collection(k: int, m: int, kind: CollectionKind = CollectionKind.UNORDERED) -> Collection:
    return Collection(kind=kind, members=tuple(projections(k, m)))


class GeneralisedFractionalOperation(BaseModel):
    """A probability distribution over collections of one kind and arity."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    weights: Dict[Collection, Fraction]

    @field_validator("weights", mode="before")
    @classmethod
    def _coerce_weights(cls, value):
        merged: Dict[Collection, Fraction] = {}
        pairs = value.items() if isinstance(value, dict) else value
        for c, w in pairs:
            merged[c] = merged.get(c, Fraction(0)) + Fraction(w)
        return merged

    @model_validator(mode="after")
    def _check_distribution(self):
        if not self.weights:
            raise MalformedInputError("a generalised fractional operation needs a nonempty support")
        first = next(iter(self.weights))
        for c, w in self.weights.items():
            if c.kind != first.kind or c.arity != first.arity or c.domain_size != first.domain_size:
                raise ArityMismatchError("collections must share kind, arity and domain")
            if w <= 0:
                raise MalformedInputError("support weights must be positive")
        if sum(self.weights.values()) != 1:
            raise MalformedInputError("weights must sum to exactly 1")
        return self

    @classmethod
    def indicator(cls, collection: Collection) -> "GeneralisedFractionalOperation":
        return cls(weights={collection: 1})

    @property
    def arity(self) -> int:
        return next(iter(self.weights)).arity

    @property
    def domain_size(self) -> int:
        return next(iter(self.weights)).domain_size

    @property
    def support(self) -> List[Collection]:
        return sorted(self.weights, key=lambda c: c.key)

    def items(self) -> List[Tuple[Collection, Fraction]]:
        return [(c, self.weights[c]) for c in self.support]

    def flatten(self) -> FractionalOperation:
        """sum rho(c) sum_{g in c} chi_g / |c|: admitted exactly when rho is."""
        weights: Dict[Operation, Fraction] = {}
        for c, w in self.items():
            for g in c.members:
                weights[g] = weights.get(g, Fraction(0)) + w / c.size
        return FractionalOperation(domain_size=self.domain_size, arity=self.arity, weights=weights)

    def render(self) -> str:
        return "\n".join(f"{render_fraction(w)} {c.render()}" for c, w in self.items())


def _average_image(raw, tables: Sequence[Table], family, k: int) -> Optional[Fraction]:
    """f^{|g|}(g(x^1..x^m)), or None for inf."""
    total = Fraction(0)
    for table in tables:
        value = raw[image_index(table, family, k)]
        if value is None:
            return None
        total += value
    return total / len(tables)


def _check_dominated(
    language: Language,
    lhs: Sequence[Tuple[Sequence[Table], Fraction]],
    rhs: Sequence[Table],
    m: int,
    cap: Optional[int],
) -> PolymorphismCheck:
    """sum_h w(h) f^{|h|}(h(x)) <= f^{|rhs|}(rhs(x)) over all ordered m-families of dom tuples."""
    cap = settings.fpol_check_cap if cap is None else cap
    k = language.k
    checked = 0
    for name, f in language.functions.items():
        dom = f.dom
        count = family_count(len(dom), m, False)
        if checked + count > cap:
            raise CapExceededError(f"generalised polymorphism check of {name}", cap, checked + count)
        raw = f.raw_table
        for family in tuple_families(dom, m, False):
            checked += 1
            right = _average_image(raw, rhs, family, k)
            if right is None:
                continue
            left: Optional[Fraction] = Fraction(0)
            for tables, w in lhs:
                value = _average_image(raw, tables, family, k)
                if value is None:
                    left = None
                    break
                left += w * value
            if left is None or left > right:
                return PolymorphismCheck(
                    holds=False,
                    families_checked=checked,
                    function=name,
                    tuples=family,
                    lhs=INF if left is None else ExtRational(left),
                    rhs=ExtRational(right),
                )
    return PolymorphismCheck(holds=True, families_checked=checked)


def check_generalised_fpol(
    language: Language, rho: GeneralisedFractionalOperation, cap: Optional[int] = None
) -> PolymorphismCheck:
    """sum_g rho(g) f^{|g|}(g(x^1..x^m)) <= f^m(x^1..x^m) for every f and dom tuples."""
    if rho.domain_size != language.k:
        raise ArityMismatchError("generalised fractional operation and language use different domains")
    m = rho.arity
    lhs = [(c.key, w) for c, w in rho.items()]
    rhs = [p.table for p in projections(language.k, m)]
    return _check_dominated(language, lhs, rhs, m, cap)


class _PermutationClasses:
    """Argument-permutation classes of raw m-ary tables over {0..k-1}."""

    def __init__(self, k: int, m: int):
        self.k = k
        self.m = m
        inputs = list(all_tuples(k, m))
        self.maps = [
            [tuple_index([t[p] for p in perm], k) for t in inputs] for perm in itertools.permutations(range(m))
        ]
        self._cache: Dict[Table, CollectionKey] = {}

    def class_of(self, table: Table) -> CollectionKey:
        key = self._cache.get(table)
        if key is None:
            key = tuple(sorted({tuple(table[i] for i in mapping) for mapping in self.maps}))
            for member in key:
                self._cache[member] = key
        return key


def _nu_sequence(
    members: Sequence[Table], omega: FractionalOperation, k: int
) -> Iterator[Dict[Table, Fraction]]:
    """nu_0 uniform over members; nu_i = nu_{i-1} - (l/2) chi_{i-1} + (l/2) eta_{i-1}."""
    nu: Dict[Table, Fraction] = {}
    for table in members:
        nu[table] = nu.get(table, Fraction(0)) + Fraction(1, len(members))
    yield dict(nu)
    support_omega = [(g.table, w) for g, w in omega.items()]
    while True:
        support = sorted(nu)
        half = min(nu.values()) / 2
        step: Dict[Table, Fraction] = {g: w - half / len(support) for g, w in nu.items()}
        scale = half / len(support) ** omega.arity
        for combo in itertools.product(support, repeat=omega.arity):
            for h, w in support_omega:
                composed = compose_tables(h, combo, k)
                step[composed] = step.get(composed, Fraction(0)) + scale * w
        nu = step
        yield dict(nu)


def _group(nu: Dict[Table, Fraction], classes: _PermutationClasses) -> Dict[CollectionKey, Fraction]:
    grouped: Dict[CollectionKey, Fraction] = {}
    for table, w in nu.items():
        key = classes.class_of(table)
        grouped[key] = grouped.get(key, Fraction(0)) + w
    return grouped


def _to_generalised(grouped: Dict[CollectionKey, Fraction], k: int, m: int) -> GeneralisedFractionalOperation:
    return GeneralisedFractionalOperation(
        weights={Collection.from_key(key, k, m): w for key, w in sorted(grouped.items())}
    )


def exp_operator(collection: Collection, omega: FractionalOperation, d: int) -> GeneralisedFractionalOperation:
    """The distribution over argument-permutation classes induced by nu_d."""
    if d < 0:
        raise MalformedInputError("depth must be nonnegative")
    if omega.domain_size != collection.domain_size:
        raise ArityMismatchError("collection and fractional operation use different domains")
    k, m = collection.domain_size, collection.arity
    classes = _PermutationClasses(k, m)
    for i, nu in enumerate(_nu_sequence(collection.key, omega, k)):
        if i == d:
            return _to_generalised(_group(nu, classes), k, m)


class ExpansionNode:
    """A tree node holding a collection (by key) and a positive weight."""

    __slots__ = ("key", "weight", "parent", "children")

    def __init__(self, key: CollectionKey, weight: Fraction, parent: Optional["ExpansionNode"] = None):
        self.key = key
        self.weight = weight
        self.parent = parent
        self.children: List["ExpansionNode"] = []

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def ancestors(self) -> Iterator["ExpansionNode"]:
        node = self.parent
        while node is not None:
            yield node
            node = node.parent

    def is_covered(self) -> bool:
        return any(a.key == self.key for a in self.ancestors())

    def leaves(self) -> Iterator["ExpansionNode"]:
        stack = [self]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                yield node
            else:
                stack.extend(reversed(node.children))

    def leaf_distribution(self) -> Dict[CollectionKey, Fraction]:
        """nu_g: leaf weights below this node divided by its weight."""
        nu: Dict[CollectionKey, Fraction] = {}
        for leaf in self.leaves():
            nu[leaf.key] = nu.get(leaf.key, Fraction(0)) + leaf.weight / self.weight
        return nu

    def count(self) -> int:
        return 1 + sum(child.count() for child in self.children)


class ExpansionStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    nodes_created: int
    expansions: int
    pruning_rounds: int
    good_leaves: int
    covered_leaves: int
    depths: Dict[str, int]


def _scale_allowed(k: int, m: int) -> bool:
    return k == 1 or m == 1 or (k <= 2 and m <= 3) or (k == 3 and m == 2)


class ExpansionTreeBuilder:
    """Expands the projection class with the expansion operator until every leaf is good or
    covered, then prunes minimal covering nodes until only good leaves remain."""

    def __init__(
        self,
        omega: FractionalOperation,
        m: int,
        allowed: Optional[Sequence[Collection]] = None,
        language: Optional[Language] = None,
        check_invariants: bool = False,
        depth_cap: Optional[int] = None,
        tree_cap: Optional[int] = None,
        round_cap: Optional[int] = None,
    ):
        if m < 1:
            raise MalformedInputError("target arity must be positive")
        self.omega = omega
        self.k = omega.domain_size
        self.m = m
        self.language = language
        self.check_invariants = check_invariants and language is not None
        self.depth_cap = settings.expansion_depth_cap if depth_cap is None else depth_cap
        self.tree_cap = settings.expansion_tree_cap if tree_cap is None else tree_cap
        self.round_cap = settings.expansion_round_cap if round_cap is None else round_cap
        self.allowed: Optional[Set[CollectionKey]] = None
        if allowed is not None:
            for c in allowed:
                if c.kind != CollectionKind.UNORDERED or c.arity != m or c.domain_size != self.k:
                    raise ArityMismatchError("allowed collections must be unordered, of the target arity and domain")
            self.allowed = {c.key for c in allowed}
        self.classes = _PermutationClasses(self.k, m)
        self.root = ExpansionNode(self.classes.class_of(projections(self.k, m)[0].table), Fraction(1))
        self._exp_cache: Dict[CollectionKey, Dict[CollectionKey, Fraction]] = {}
        self._depths: Dict[CollectionKey, int] = {}
        self._nodes = 1
        self._expansions = 0
        self._rounds = 0
        self._good = 0
        self._covered = 0

    def is_good(self, key: CollectionKey) -> bool:
        return len(key) == 1 and is_symmetric_table(key[0], self.k, self.m)

    def expansion_of(self, key: CollectionKey) -> Dict[CollectionKey, Fraction]:
        """Exp(g) at the first depth whose support contains a symmetric singleton class."""
        cached = self._exp_cache.get(key)
        if cached is not None:
            return cached
        for d, nu in enumerate(_nu_sequence(key, self.omega, self.k)):
            if d == 0:
                continue
            if any(is_symmetric_table(t, self.k, self.m) for t in nu):
                grouped = _group(nu, self.classes)
                self._exp_cache[key] = grouped
                self._depths[key] = d
                logger.debug(f"Expansion of a class of size {len(key)} uses depth {d}")
                return grouped
            if d >= self.depth_cap:
                break
        raise GenerationWitnessNotFoundError(
            f"no symmetric singleton class within depth {self.depth_cap} for a class of size {len(key)}"
        )

    def _add_child(self, parent: ExpansionNode, key: CollectionKey, weight: Fraction) -> ExpansionNode:
        if self.allowed is not None and key not in self.allowed:
            raise ExpansionError(f"collection of size {len(key)} lies outside the allowed set")
        self._nodes += 1
        if self._nodes > self.tree_cap:
            raise CapExceededError("expansion tree", self.tree_cap, self._nodes)
        child = ExpansionNode(key, weight, parent)
        parent.children.append(child)
        return child

    def expand(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            if self.is_good(node.key):
                self._good += 1
                continue
            if node.is_covered():
                self._covered += 1
                continue
            self._expansions += 1
            for key, w in sorted(self.expansion_of(node.key).items()):
                self._add_child(node, key, node.weight * w)
            stack.extend(reversed(node.children))
        logger.debug(f"Expansion finished with {self._nodes} nodes after {self._expansions} expansions")

    def minimal_covering_node(self) -> Optional[ExpansionNode]:
        """First node in post-order having a descendant with its own collection."""

        def visit(node: ExpansionNode):
            below: Set[CollectionKey] = set()
            for child in node.children:
                found, keys = visit(child)
                if found is not None:
                    return found, keys
                below |= keys
            if node.key in below:
                return node, below
            below.add(node.key)
            return None, below

        found, _ = visit(self.root)
        return found

    def prune(self):
        while True:
            node = self.minimal_covering_node()
            if node is None:
                break
            self._rounds += 1
            if self._rounds > self.round_cap:
                raise CapExceededError("pruning rounds", self.round_cap, self._rounds)
            nu = node.leaf_distribution()
            kappa = 1 - nu.get(node.key, Fraction(0))
            if kappa <= 0:
                raise ExpansionError("a covering node has no leaf with another collection")
            self._nodes -= node.count() - 1
            node.children = []
            for key, w in sorted(nu.items()):
                if key != node.key:
                    self._add_child(node, key, node.weight * w / kappa)
            if self.check_invariants:
                target = node
                while target is not None:
                    self.check_node(target)
                    target = target.parent
        logger.debug(f"Pruning finished after {self._rounds} rounds")

    def check_node(self, node: ExpansionNode) -> PolymorphismCheck:
        """Leaf distribution of node does not exceed the node's own collection on the language."""
        verdict = check_node_invariant(node, self.language, self.m)
        if not verdict.holds:
            raise ExpansionError(f"node invariant violated: {verdict.render()}")
        return verdict

    def build(self) -> FractionalOperation:
        if self.is_good(self.root.key):
            return FractionalOperation.indicator(Operation.from_raw(self.k, self.m, self.root.key[0]))
        self.expand()
        if self.check_invariants:
            for node in self.internal_nodes():
                self.check_node(node)
        self.prune()
        weights: Dict[Operation, Fraction] = {}
        for leaf in self.root.leaves():
            if not self.is_good(leaf.key):
                raise ExpansionError("pruning left a leaf that is not a symmetric singleton")
            g = Operation.from_raw(self.k, self.m, leaf.key[0])
            weights[g] = weights.get(g, Fraction(0)) + leaf.weight
        return FractionalOperation(domain_size=self.k, arity=self.m, weights=weights)

    def internal_nodes(self) -> List[ExpansionNode]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if not node.is_leaf:
                out.append(node)
                stack.extend(node.children)
        return out

    @property
    def stats(self) -> ExpansionStats:
        return ExpansionStats(
            nodes_created=self._nodes,
            expansions=self._expansions,
            pruning_rounds=self._rounds,
            good_leaves=self._good,
            covered_leaves=self._covered,
            depths={Collection.from_key(key, self.k, self.m).render(): d for key, d in self._depths.items()},
        )


def check_node_invariant(
    node: ExpansionNode, language: Language, m: int, cap: Optional[int] = None
) -> PolymorphismCheck:
    lhs = [(key, w) for key, w in sorted(node.leaf_distribution().items())]
    return _check_dominated(language, lhs, node.key, m, cap)


def expand_to_symmetric(
    omega: FractionalOperation,
    m: int,
    language: Optional[Language] = None,
    allowed: Optional[Sequence[Collection]] = None,
    check_invariants: bool = False,
    allow_large: Optional[bool] = None,
    depth_cap: Optional[int] = None,
    tree_cap: Optional[int] = None,
    node_cap: Optional[int] = None,
) -> FractionalOperation:
    """A symmetric m-ary fractional polymorphism of every language admitting omega."""
    k = omega.domain_size
    allow_large = settings.allow_large_expansion if allow_large is None else allow_large
    if not allow_large and not _scale_allowed(k, m):
        raise ScaleGuardError(k, m)
    if find_generated_symmetric(omega.support, m, node_cap) is None:
        raise GenerationWitnessNotFoundError(f"the support generates no symmetric {m}-ary operation")
    builder = ExpansionTreeBuilder(
        omega, m, allowed=allowed, language=language, check_invariants=check_invariants,
        depth_cap=depth_cap, tree_cap=tree_cap,
    )
    result = builder.build()
    logger.info(
        f"Expansion produced {len(result.weights)} symmetric operations "
        f"({builder.stats.pruning_rounds} pruning rounds)"
    )
    if language is not None:
        verdict = check_fractional_polymorphism(language, result)
        if not verdict.holds:
            raise ExpansionError(f"expanded fractional operation is not admitted: {verdict.render()}")
    return result
