"""
Tests for tournaments, symmetric tournament pairs and the valid-flip procedure.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blplab.exceptions import EdgeNotPresentError, MalformedInputError
from blplab.operations import max_operation, min_operation
from blplab.polymorphism import FractionalOperation, check_fractional_polymorphism
from blplab.tournament import (
    Tournament,
    derived_submodularity,
    is_valid_flip,
    make_acyclic,
    stp_from_tournament,
    submodularity_pair,
    tournament_from_stp,
    verify_flip_sequence,
)
from blplab.vcsp import CostFunction, Language


@pytest.fixture
def three_cycle():
    return Tournament.from_edges(3, [(0, 1), (1, 2), (2, 0)])


def test_orientation_checked():
    with pytest.raises(MalformedInputError):
        Tournament(wins=((False, True), (True, False)))
    with pytest.raises(MalformedInputError):
        Tournament.from_edges(3, [(0, 1), (1, 0)])


def test_cycle_detection(three_cycle):
    assert three_cycle.three_cycles() == [(0, 1, 2)]
    assert not three_cycle.is_acyclic()
    assert Tournament.transitive([2, 0, 1]).topological_order() == [2, 0, 1]


def test_all_tournaments_count():
    assert len(list(Tournament.all_tournaments(3))) == 8
    assert sum(t.is_acyclic() for t in Tournament.all_tournaments(3)) == 6


def test_stp_of_cycle(three_cycle, cycle_operation):
    meet, join = stp_from_tournament(three_cycle)
    assert meet == cycle_operation
    assert join(0, 1) == 1
    assert tournament_from_stp(meet, join) == three_cycle


def test_transitive_stp_is_min_max():
    assert submodularity_pair([0, 1, 2]) == (min_operation(3), max_operation(3))


def test_stp_requires_split_pair():
    with pytest.raises(MalformedInputError):
        tournament_from_stp(min_operation(3), min_operation(3))


def test_valid_flips(three_cycle):
    assert is_valid_flip(three_cycle, (0, 1))
    assert not is_valid_flip(Tournament.transitive([0, 1, 2]), (0, 1))
    with pytest.raises(EdgeNotPresentError):
        is_valid_flip(three_cycle, (1, 0))
    with pytest.raises(EdgeNotPresentError):
        three_cycle.flipped((1, 0))


def test_make_acyclic_three_cycle(three_cycle):
    result = make_acyclic(three_cycle)
    assert result.flips == ((2, 0),)
    assert result.order == (0, 1, 2)
    assert result.steps[0].out_degree_before == 1
    assert result.steps[0].out_degree_after == 0
    assert verify_flip_sequence(three_cycle, result.flips)


def test_acyclic_needs_no_flips():
    tournament = Tournament.transitive([1, 2, 0])
    result = make_acyclic(tournament)
    assert result.flips == ()
    assert result.order == (1, 2, 0)


def test_verify_rejects_bad_sequences(three_cycle):
    assert not verify_flip_sequence(three_cycle, [])
    assert not verify_flip_sequence(three_cycle, [(1, 0)])
    # flipping (2, 0) then (0, 2) back is invalid on the acyclic intermediate
    assert not verify_flip_sequence(three_cycle, [(2, 0), (0, 2)])


def test_derived_submodularity(three_cycle):
    omega = derived_submodularity(three_cycle)
    assert omega == FractionalOperation.multimorphism(min_operation(3), max_operation(3))


@given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=60, deadline=None)
def test_random_tournaments_become_acyclic(k, seed):
    tournament = Tournament.random(k, np.random.default_rng(seed))
    result = make_acyclic(tournament)
    assert result.tournament.is_acyclic()
    assert verify_flip_sequence(tournament, result.flips)
    for step in result.steps:
        assert step.out_degree_after == step.out_degree_before - 1
    assert sorted(result.order) == list(range(k))


def test_stp_admitted_after_flips():
    # min and max for the reached order form a multimorphism of any submodular pair on that order
    tournament = Tournament.from_edges(4, [(0, 1), (1, 2), (2, 0), (3, 0), (3, 1), (3, 2)])
    result = make_acyclic(tournament)
    meet, join = submodularity_pair(result.order)
    omega = FractionalOperation.multimorphism(meet, join)
    language = distance_language(result.order)
    assert check_fractional_polymorphism(language, omega).holds


def distance_language(order):
    rank = {v: i for i, v in enumerate(order)}
    f = CostFunction.from_function(len(order), 2, lambda x, y: abs(rank[x] - rank[y]))
    return Language.of(len(order), {"f": f})
