"""
Tournament Service for blplab
Tournaments on labels, their symmetric tournament pairs, valid flips, and the incremental
procedure turning any tournament acyclic through valid flips.
"""

import itertools
import logging
from typing import Iterator, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .exceptions import EdgeNotPresentError, MalformedInputError
from .operations import Operation, is_commutative, is_conservative
from .polymorphism import FractionalOperation

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


class Tournament(BaseModel):
    """wins[a][b] is True iff the edge a -> b is present."""

    model_config = ConfigDict(frozen=True)

    wins: Tuple[Tuple[bool, ...], ...]

    @model_validator(mode="after")
    def _check_orientation(self):
        k = len(self.wins)
        if k < 1 or any(len(row) != k for row in self.wins):
            raise MalformedInputError("orientation matrix must be square and nonempty")
        for a in range(k):
            if self.wins[a][a]:
                raise MalformedInputError(f"self-loop at {a}")
            for b in range(a + 1, k):
                if self.wins[a][b] == self.wins[b][a]:
                    raise MalformedInputError(f"pair ({a}, {b}) must be oriented exactly one way")
        return self

    @classmethod
    def from_edges(cls, k: int, edges: Sequence[Edge]) -> "Tournament":
        wins = [[False] * k for _ in range(k)]
        for a, b in edges:
            if not (0 <= a < k and 0 <= b < k) or a == b:
                raise MalformedInputError(f"edge ({a}, {b}) is not between distinct labels")
            if wins[a][b] or wins[b][a]:
                raise MalformedInputError(f"pair ({a}, {b}) listed twice")
            wins[a][b] = True
        return cls(wins=tuple(tuple(row) for row in wins))

    @classmethod
    def transitive(cls, order: Sequence[int]) -> "Tournament":
        """Every label beats the labels after it in `order`."""
        return cls.from_edges(len(order), list(itertools.combinations(order, 2)))

    @classmethod
    def all_tournaments(cls, k: int) -> Iterator["Tournament"]:
        """All 2^(k(k-1)/2) tournaments; bit i reverses the i-th pair (a < b) from a -> b."""
        pairs = list(itertools.combinations(range(k), 2))
        for mask in range(2 ** len(pairs)):
            yield cls.from_edges(
                k, [(b, a) if mask >> i & 1 else (a, b) for i, (a, b) in enumerate(pairs)]
            )

    @classmethod
    def random(cls, k: int, rng: np.random.Generator) -> "Tournament":
        pairs = list(itertools.combinations(range(k), 2))
        bits = rng.integers(0, 2, size=len(pairs))
        return cls.from_edges(k, [(b, a) if bit else (a, b) for bit, (a, b) in zip(bits, pairs)])

    @property
    def size(self) -> int:
        return len(self.wins)

    def has_edge(self, edge: Edge) -> bool:
        a, b = edge
        return self.wins[a][b]

    @property
    def edges(self) -> List[Edge]:
        return [(a, b) for a in range(self.size) for b in range(self.size) if self.wins[a][b]]

    def out_degree(self, v: int) -> int:
        return sum(self.wins[v])

    def flipped(self, edge: Edge) -> "Tournament":
        if not self.has_edge(edge):
            raise EdgeNotPresentError(f"edge {edge} is not in the tournament")
        a, b = edge
        wins = [list(row) for row in self.wins]
        wins[a][b], wins[b][a] = False, True
        return Tournament(wins=tuple(tuple(row) for row in wins))

    def three_cycles(self) -> List[Tuple[int, int, int]]:
        return [
            (a, b, c)
            for a, b, c in itertools.permutations(range(self.size), 3)
            if a < b and a < c and self.wins[a][b] and self.wins[b][c] and self.wins[c][a]
        ]

    def is_acyclic(self) -> bool:
        """A tournament is acyclic iff it has no directed 3-cycle."""
        return not self.three_cycles()

    def topological_order(self) -> List[int]:
        if not self.is_acyclic():
            raise MalformedInputError("a cyclic tournament has no topological order")
        return sorted(range(self.size), key=lambda v: -self.out_degree(v))


def stp_from_tournament(tournament: Tournament) -> Tuple[Operation, Operation]:
    """(meet, join) with (a meet b, a join b) = (a, b) whenever a -> b."""
    k = tournament.size

    def meet(a: int, b: int) -> int:
        return a if a == b or tournament.wins[a][b] else b

    def join(a: int, b: int) -> int:
        return b if a == b or tournament.wins[a][b] else a

    return Operation.from_function(k, 2, meet), Operation.from_function(k, 2, join)


def tournament_from_stp(meet: Operation, join: Operation) -> Tournament:
    """Inverse of stp_from_tournament for a commutative conservative pair."""
    for name, g in (("meet", meet), ("join", join)):
        if g.arity != 2 or not is_commutative(g) or not is_conservative(g):
            raise MalformedInputError(f"{name} must be binary, commutative and conservative")
    k = meet.domain_size
    edges = []
    for a, b in itertools.combinations(range(k), 2):
        if {meet(a, b), join(a, b)} != {a, b}:
            raise MalformedInputError(f"meet and join must split the pair ({a}, {b})")
        edges.append((a, b) if meet(a, b) == a else (b, a))
    return Tournament.from_edges(k, edges)


def submodularity_pair(order: Sequence[int]) -> Tuple[Operation, Operation]:
    """(min, max) with respect to the total order listing labels from smallest to largest."""
    return stp_from_tournament(Tournament.transitive(order))


def is_valid_flip(tournament: Tournament, edge: Edge) -> bool:
    """The edge a -> b lies on a directed 3-cycle a -> b -> c -> a."""
    if not tournament.has_edge(edge):
        raise EdgeNotPresentError(f"edge {edge} is not in the tournament")
    a, b = edge
    return any(tournament.wins[b][c] and tournament.wins[c][a] for c in range(tournament.size))


class FlipStep(BaseModel):
    model_config = ConfigDict(frozen=True)

    edge: Edge
    vertex: int
    out_degree_before: int
    out_degree_after: int


class AcyclicResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    flips: Tuple[Edge, ...]
    order: Tuple[int, ...]
    steps: Tuple[FlipStep, ...]
    tournament: Tournament


def make_acyclic(tournament: Tournament) -> AcyclicResult:
    """Integrate labels in ascending order; while a 3-cycle c -> a -> b -> c exists through the
    new label c, flip (c, a) for the lexicographically smallest (a, b)."""
    current = tournament
    flips: List[Edge] = []
    steps: List[FlipStep] = []
    for c in range(tournament.size):
        while True:
            cycle = next(
                (
                    (a, b)
                    for a in range(c)
                    for b in range(c)
                    if current.wins[c][a] and current.wins[a][b] and current.wins[b][c]
                ),
                None,
            )
            if cycle is None:
                break
            a, _ = cycle
            before = current.out_degree(c)
            current = current.flipped((c, a))
            flips.append((c, a))
            steps.append(
                FlipStep(edge=(c, a), vertex=c, out_degree_before=before, out_degree_after=current.out_degree(c))
            )
    logger.debug(f"Tournament on {tournament.size} labels made acyclic with {len(flips)} flips")
    return AcyclicResult(
        flips=tuple(flips), order=tuple(current.topological_order()), steps=tuple(steps), tournament=current
    )


def verify_flip_sequence(tournament: Tournament, flips: Sequence[Edge]) -> bool:
    """Replay flips, each valid at its turn, and require an acyclic result."""
    current = tournament
    for edge in flips:
        if not current.has_edge(edge) or not is_valid_flip(current, edge):
            return False
        current = current.flipped(edge)
    return current.is_acyclic()


def derived_submodularity(tournament: Tournament) -> FractionalOperation:
    """The submodularity multimorphism for the order make_acyclic reaches."""
    meet, join = submodularity_pair(make_acyclic(tournament).order)
    return FractionalOperation.multimorphism(meet, join)
