"""
Seeded end-to-end suites: BLP integrality on the tractable families, the 3-cycle gap,
detection across arities, rounding, tournaments and expansion.
"""

from fractions import Fraction

import numpy as np
import pytest

from blplab.blp import blp_value, round_with_polymorphism, self_reduce
from blplab.expansion import Collection, expand_to_symmetric
from blplab.families import (
    RootedTree,
    chain_lattice,
    example_binary_operation,
    k_submodular_ops,
    lattice_multimorphism,
    sample_admitting_function,
    weak_tree_ops,
)
from blplab.operations import is_symmetric
from blplab.polymorphism import FractionalOperation, check_fractional_polymorphism, find_symmetric_fpol
from blplab.tournament import Tournament, derived_submodularity, make_acyclic, stp_from_tournament, verify_flip_sequence
from blplab.vcsp import CostFunction, Language, brute_force_optimum


def assert_blp_exact(instance):
    value, solution = blp_value(instance)
    assert value == brute_force_optimum(instance).value
    assert solution.check_invariants(instance)


@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("seed", range(50))
def test_submodular_chains_integral(k, seed, family_instance):
    lattice = chain_lattice(k)
    omega = lattice_multimorphism(lattice.meet, lattice.join)
    assert_blp_exact(family_instance(omega, seed, var_count=5, term_count=6))


@pytest.mark.parametrize("seed", range(30))
def test_k_submodular_integral(seed, family_instance):
    omega = FractionalOperation.multimorphism(*k_submodular_ops(3))
    assert_blp_exact(family_instance(omega, seed, var_count=4, term_count=4))


@pytest.mark.parametrize("seed", range(30))
def test_weak_tree_submodular_integral(seed, family_instance):
    # root 0 with three children; 4 hangs below 1
    tree = RootedTree(parent=(0, 0, 0, 0, 1))
    omega = FractionalOperation.multimorphism(*weak_tree_ops(tree))
    assert_blp_exact(family_instance(omega, seed, var_count=3, term_count=4, value_bound=10))


def test_cycle_gap(cycle_pair, cycle_language):
    value, _ = blp_value(cycle_pair)
    assert value == 0
    assert brute_force_optimum(cycle_pair).value.is_infinite
    assert find_symmetric_fpol(cycle_language, 2) is not None
    assert find_symmetric_fpol(cycle_language, 3) is None


@pytest.mark.parametrize("seed", range(10))
def test_detection_monotone_in_arity(seed):
    rng = np.random.default_rng(seed)
    f = CostFunction(domain_size=2, arity=2, table=[int(v) for v in rng.integers(0, 11, size=4)])
    language = Language.of(2, {"f": f})
    if find_symmetric_fpol(language, 2) is not None:
        assert find_symmetric_fpol(language, 3) is not None
        assert find_symmetric_fpol(language, 4) is not None
    else:
        assert find_symmetric_fpol(language, 3) is None


@pytest.mark.parametrize("seed", range(20))
def test_rounding_matches_relaxation(seed, family_instance):
    lattice = chain_lattice(2)
    omega = lattice_multimorphism(lattice.meet, lattice.join)
    instance = family_instance(omega, 100 + seed, var_count=4, term_count=4)
    value, solution = blp_value(instance)
    m = solution.common_denominator()
    assert m in (1, 2)
    detected = find_symmetric_fpol(instance.language, m)
    rounded = round_with_polymorphism(instance, solution, detected)
    assert rounded.value == value
    assert self_reduce(instance).value == value


def test_all_tournaments_on_five_labels():
    count = 0
    for tournament in Tournament.all_tournaments(5):
        result = make_acyclic(tournament)
        assert verify_flip_sequence(tournament, result.flips)
        count += 1
    assert count == 1024


@pytest.mark.parametrize("seed", range(20))
def test_derived_order_is_a_multimorphism(seed):
    tournament = Tournament.random(4, np.random.default_rng(seed))
    stp = FractionalOperation.multimorphism(*stp_from_tournament(tournament))
    f = sample_admitting_function(stp, 2, 6, rng_seed=seed)
    language = Language.of(4, {"f": f})
    assert check_fractional_polymorphism(language, derived_submodularity(tournament)).holds


def test_expansion_golden():
    omega = FractionalOperation(
        domain_size=2,
        arity=2,
        weights={example_binary_operation(0, 0): Fraction(1, 3), example_binary_operation(0, 1): Fraction(2, 3)},
    )
    result = expand_to_symmetric(omega, 2)
    allowed_ops = {example_binary_operation(0, 0), example_binary_operation(1, 1)}
    assert set(result.support) <= allowed_ops
    assert all(is_symmetric(g) for g in result.support)
    restricted = [
        Collection.unordered([example_binary_operation(0, 0)]),
        Collection.unordered([example_binary_operation(0, 1), example_binary_operation(1, 0)]),
    ]
    assert expand_to_symmetric(omega, 2, allowed=restricted) == FractionalOperation.indicator(
        example_binary_operation(0, 0)
    )


def test_outputs_are_reproducible(cycle_instance):
    first = [str(blp_value(cycle_instance)[0]), find_symmetric_fpol(cycle_instance.language, 2).render()]
    second = [str(blp_value(cycle_instance)[0]), find_symmetric_fpol(cycle_instance.language, 2).render()]
    assert first == second
