"""
Tests for the VCSP model, instance evaluation and the exhaustive oracle.
"""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blplab.exceptions import ArityMismatchError, CapExceededError, MalformedInputError
from blplab.rational import INF, ExtRational
from blplab.vcsp import (
    CostFunction,
    Domain,
    Language,
    Term,
    VcspInstance,
    average_value,
    brute_force_optimum,
    evaluate_instance,
)


def unary_instance():
    language = Language.of(2, {"u": CostFunction(domain_size=2, arity=1, table=[3, 5])})
    return VcspInstance(language=language, var_count=1, terms=[("u", (0,))])


def test_domain_names():
    domain = Domain(size=3, label_names=("a", "b", "c"))
    assert domain.index_of("b") == 1
    assert domain.index_of("2") == 2
    assert Domain(size=2).label_names == ("0", "1")
    with pytest.raises(MalformedInputError):
        domain.index_of("d")
    with pytest.raises(MalformedInputError):
        Domain(size=2, label_names=("a", "a"))


def test_cost_function_dom(cycle_language):
    f = cycle_language.functions["f"]
    assert f.dom == ((0, 1), (1, 2), (2, 0))
    assert f.value((0, 1)) == 0
    assert f.value((1, 0)) == INF
    assert not cycle_language.is_finite_valued


def test_table_length_checked():
    with pytest.raises(MalformedInputError):
        CostFunction(domain_size=2, arity=2, table=[0, 1, 2])


def test_instance_scope_checked(cycle_language):
    with pytest.raises(ArityMismatchError):
        VcspInstance(language=cycle_language, var_count=2, terms=[("f", (0,))])
    with pytest.raises(MalformedInputError):
        VcspInstance(language=cycle_language, var_count=2, terms=[("f", (0, 2))])
    with pytest.raises(MalformedInputError):
        VcspInstance(language=cycle_language, var_count=2, terms=[("g", (0, 1))])


def test_evaluate_cycle_instance(cycle_instance):
    assert evaluate_instance(cycle_instance, (0, 1, 2)) == 0
    assert evaluate_instance(cycle_instance, (0, 0, 0)) == INF


def test_evaluate_zero_terms(cycle_language):
    empty = VcspInstance(language=cycle_language, var_count=2)
    assert evaluate_instance(empty, (2, 1)) == 0


def test_average_value(submodular_pair, cycle_language):
    assert average_value(submodular_pair, [(0, 1)]) == 2
    assert average_value(submodular_pair, [(0, 0), (0, 1)]) == 1
    assert average_value(submodular_pair, [(0, 1), (1, 0), (1, 1)]) == 3
    f = cycle_language.functions["f"]
    assert average_value(f, [(0, 1), (0, 0)]) == INF


def test_oracle_examples(cycle_instance, cycle_pair):
    assert brute_force_optimum(cycle_instance).argmin == (0, 1, 2)
    result = brute_force_optimum(cycle_pair)
    assert result.value == INF
    assert result.argmin is None
    unary = brute_force_optimum(unary_instance())
    assert (unary.value, unary.argmin) == (ExtRational(3), (0,))


def test_oracle_cap(cycle_instance):
    with pytest.raises(CapExceededError):
        brute_force_optimum(cycle_instance, cap=26)


def test_with_terms_adds_functions(cycle_pair):
    indicator = CostFunction.constant_indicator(3, 1)
    extended = cycle_pair.with_terms([Term(function="c1", scope=(0,))], {"c1": indicator})
    assert len(extended.terms) == 3
    assert evaluate_instance(extended, (0, 1)) == INF
    assert evaluate_instance(extended, (1, 2)) == INF


def random_instance(data, k, n_vars, n_terms):
    tables = data.draw(st.lists(st.integers(0, 9), min_size=k * k, max_size=k * k))
    f = CostFunction(domain_size=k, arity=2, table=tables)
    scopes = data.draw(
        st.lists(st.tuples(st.integers(0, n_vars - 1), st.integers(0, n_vars - 1)), min_size=n_terms, max_size=n_terms)
    )
    return VcspInstance(language=Language.of(k, {"f": f}), var_count=n_vars, terms=[("f", s) for s in scopes])


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_oracle_argmin_consistent(data):
    instance = random_instance(data, 3, 3, 3)
    result = brute_force_optimum(instance)
    assert evaluate_instance(instance, result.argmin) == result.value
    for x in itertools.product(range(3), repeat=3):
        assert result.value <= evaluate_instance(instance, x)


@given(st.data())
@settings(max_examples=40, deadline=None)
def test_term_order_irrelevant(data):
    instance = random_instance(data, 2, 3, 4)
    reversed_terms = VcspInstance(language=instance.language, var_count=3, terms=tuple(reversed(instance.terms)))
    for x in itertools.product(range(2), repeat=3):
        assert evaluate_instance(instance, x) == evaluate_instance(reversed_terms, x)


def test_average_of_equal_tuples(submodular_pair):
    for t in itertools.product(range(2), repeat=2):
        assert average_value(submodular_pair, [t] * 4) == submodular_pair.value(t)
