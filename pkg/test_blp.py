"""
Tests for the BLP relaxation, its gap to the exact optimum, rounding and self-reduction.
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blplab.blp import (
    BlpSolution,
    blp_gap,
    blp_solves,
    blp_value,
    build_blp,
    round_with_polymorphism,
    self_reduce,
)
from blplab.exceptions import DenominatorMismatchError, NotSymmetricError
from blplab.operations import max_operation, min_operation, projection, semilattice_power
from blplab.polymorphism import FractionalOperation, check_fractional_polymorphism, find_symmetric_fpol
from blplab.rational import INF, ExtRational
from blplab.vcsp import CostFunction, Language, VcspInstance, brute_force_optimum

HALF = Fraction(1, 2)


@pytest.fixture
def unary_instance():
    language = Language.of(2, {"u": CostFunction(domain_size=2, arity=1, table=[3, 5])})
    return VcspInstance(language=language, var_count=1, terms=[("u", (0,))])


@pytest.fixture
def submodular_instance(submodular_pair):
    return VcspInstance(language=Language.of(2, {"f": submodular_pair}), var_count=2, terms=[("f", (0, 1))])


def test_unary_program_layout(unary_instance):
    program = build_blp(unary_instance)
    assert program.lp.var_count == 4
    assert list(program.lp.objective) == [3, 5, 0, 0]
    assert program.term_columns == ((((0,), 0), ((1,), 1)),)
    assert program.var_columns == ((2, 3),)
    # one normalisation row per term, k marginal rows per scope slot, one per variable
    assert len(program.lp.constraints) == 4


def test_unary_value(unary_instance):
    value, solution = blp_value(unary_instance)
    assert value == 3
    assert solution.var_distributions == ({0: Fraction(1), 1: Fraction(0)},)
    assert solution.is_integral


def test_empty_instance(cycle_language):
    program = build_blp(VcspInstance(language=cycle_language, var_count=0))
    assert program.lp is None
    value, solution = blp_value(VcspInstance(language=cycle_language, var_count=0))
    assert value == 0
    assert solution.common_denominator() == 1


def test_cycle_gap(cycle_pair):
    gap = blp_gap(cycle_pair)
    assert gap.blp_value == 0
    assert gap.oracle_value == INF
    assert not gap.solves
    assert not blp_solves(cycle_pair)


def test_cycle_instance_solved(cycle_instance):
    assert blp_solves(cycle_instance)


def test_solution_invariants(cycle_pair, submodular_instance):
    for instance in (cycle_pair, submodular_instance):
        _, solution = blp_value(instance)
        assert solution.check_invariants(instance)


def test_infeasible_relaxation(cycle_language):
    # f(x, x) is never finite
    instance = VcspInstance(language=cycle_language, var_count=1, terms=[("f", (0, 0))])
    value, solution = blp_value(instance)
    assert value == INF
    assert solution is None


def half_integral_solution():
    return BlpSolution(
        value=ExtRational(2),
        term_distributions=({(0, 0): HALF, (0, 1): Fraction(0), (1, 0): Fraction(0), (1, 1): HALF},),
        var_distributions=({0: HALF, 1: HALF}, {0: HALF, 1: HALF}),
    )


def test_round_half_integral(submodular_instance):
    solution = half_integral_solution()
    assert solution.check_invariants(submodular_instance)
    omega = FractionalOperation.multimorphism(min_operation(2), max_operation(2))
    rounded = round_with_polymorphism(submodular_instance, solution, omega)
    assert rounded.assignment == (0, 0)
    assert rounded.value == 0


def test_round_denominator_mismatch(submodular_instance):
    third = Fraction(1, 3)
    solution = BlpSolution(
        value=ExtRational(Fraction(8, 3)),
        term_distributions=({(0, 0): third, (1, 1): 2 * third},),
        var_distributions=({0: third, 1: 2 * third}, {0: third, 1: 2 * third}),
    )
    omega = FractionalOperation.multimorphism(min_operation(2), max_operation(2))
    with pytest.raises(DenominatorMismatchError):
        round_with_polymorphism(submodular_instance, solution, omega)


def test_round_needs_symmetric(submodular_instance):
    with pytest.raises(NotSymmetricError):
        round_with_polymorphism(
            submodular_instance, half_integral_solution(), FractionalOperation.indicator(projection(2, 2, 0))
        )


def test_round_detects_polymorphism(submodular_instance):
    _, solution = blp_value(submodular_instance)
    rounded = round_with_polymorphism(submodular_instance, solution)
    assert rounded.value == brute_force_optimum(submodular_instance).value


def test_self_reduce_cycle_language(cycle_pair, cycle_instance):
    assert self_reduce(cycle_pair) is None
    result = self_reduce(cycle_instance)
    assert result.value == 0
    assert result.assignment == (0, 1, 2)


def test_self_reduce_zero_terms(cycle_language):
    result = self_reduce(VcspInstance(language=cycle_language, var_count=2))
    assert result.assignment == (0, 0)
    assert result.value == 0


def test_self_reduce_infeasible(cycle_language):
    instance = VcspInstance(language=cycle_language, var_count=1, terms=[("f", (0, 0))])
    assert self_reduce(instance) is None


@st.composite
def submodular_instances(draw):
    f = CostFunction(domain_size=2, arity=2, table=[0, 2, 3, 4])
    units = draw(st.lists(st.integers(0, 6), min_size=2, max_size=2))
    language = Language.of(2, {"f": f, "u": CostFunction(domain_size=2, arity=1, table=units)})
    n = 3
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda p: p[0] != p[1])
    scopes = draw(st.lists(pairs, min_size=1, max_size=3))
    unary = draw(st.lists(st.integers(0, n - 1), max_size=2))
    terms = [("f", s) for s in scopes] + [("u", (v,)) for v in unary]
    return VcspInstance(language=language, var_count=n, terms=terms)


@given(submodular_instances())
@settings(max_examples=40, deadline=None)
def test_submodular_instances_solved(instance):
    assert blp_solves(instance)


@given(st.lists(st.integers(0, 5), min_size=4, max_size=4), st.lists(st.integers(0, 2), min_size=4, max_size=4))
@settings(max_examples=40, deadline=None)
def test_relaxation_is_lower_bound(table, flat_scopes):
    language = Language.of(2, {"f": CostFunction(domain_size=2, arity=2, table=table)})
    scopes = [tuple(flat_scopes[:2]), tuple(flat_scopes[2:])]
    instance = VcspInstance(language=language, var_count=3, terms=[("f", s) for s in scopes])
    gap = blp_gap(instance)
    assert gap.blp_value <= gap.oracle_value


def mixture_solution(instance, assignments, value):
    """The uniform mixture of integral assignments, read as a relaxation point."""
    share = Fraction(1, len(assignments))
    term_distributions = []
    for term in instance.terms:
        mu = {}
        for x in assignments:
            t = tuple(x[v] for v in term.scope)
            mu[t] = mu.get(t, Fraction(0)) + share
        term_distributions.append(mu)
    var_distributions = []
    for v in range(instance.var_count):
        alpha = {}
        for x in assignments:
            alpha[x[v]] = alpha.get(x[v], Fraction(0)) + share
        var_distributions.append(alpha)
    return BlpSolution(
        value=value, term_distributions=tuple(term_distributions), var_distributions=tuple(var_distributions)
    )


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("seed", range(4))
def test_rounding_at_each_arity(m, seed, family_instance):
    base = family_instance(FractionalOperation.indicator(min_operation(2)), seed, var_count=3, term_count=3)
    # variable 3 is in no term, so flipping it keeps an assignment optimal
    instance = VcspInstance(language=base.language, var_count=4, terms=base.terms)
    power = FractionalOperation.indicator(semilattice_power(min_operation(2), m))
    assert check_fractional_polymorphism(instance.language, power).holds
    omega = find_symmetric_fpol(instance.language, m)
    assert omega is not None and omega.arity == m

    optimum = brute_force_optimum(instance)
    assert blp_value(instance)[0] == optimum.value
    x = optimum.argmin
    flipped = x[:3] + (1 - x[3],)
    solution = mixture_solution(instance, [x] + [flipped] * (m - 1), optimum.value)
    assert solution.check_invariants(instance)
    assert solution.common_denominator() == m
    assert round_with_polymorphism(instance, solution, omega).value == optimum.value
    assert round_with_polymorphism(instance, solution, power).value == optimum.value
