"""
Tests for the problem file and fractional-operation file formats.
"""

from fractions import Fraction

import pytest

from blplab.exceptions import MalformedInputError, ProblemParseError, ProblemSemanticError
from blplab.operations import max_operation, min_operation, projection
from blplab.polymorphism import FractionalOperation
from blplab.problem_format import (
    parse_fractional_operation,
    parse_problem_file,
    render_fractional_operation,
    render_problem,
)
from blplab.rational import INF

UNARY_TEXT = """\
domain 2
function u 1
0 3
1 5
instance
vars 1
term u 0
"""


def test_cycle_parse(cycle_text, cycle_pair):
    problem = parse_problem_file(cycle_text)
    assert problem.var_names == ("x", "y")
    assert problem.instance.terms == cycle_pair.terms
    f = problem.language.functions["f"]
    assert f.dom == ((0, 1), (1, 2), (2, 0))
    assert f.value((1, 1)) == INF
    assert problem.tournament is None


def test_cycle_render(cycle_text):
    assert render_problem(parse_problem_file(cycle_text)) == (
        "domain 3\nlabels a b c\nfunction f 2\na b 0\nb c 0\nc a 0\n"
        "instance\nvars 2 x y\nterm f x y\nterm f y x\n"
    )


def test_render_is_stable(cycle_text):
    once = render_problem(parse_problem_file(cycle_text))
    assert render_problem(parse_problem_file(once)) == once
    unary = render_problem(parse_problem_file(UNARY_TEXT))
    assert unary == UNARY_TEXT


def test_unary_values():
    problem = parse_problem_file(UNARY_TEXT)
    u = problem.language.functions["u"]
    assert (u.value((0,)), u.value((1,))) == (3, 5)
    assert problem.instance.var_count == 1


def test_default_and_fractions():
    problem = parse_problem_file("domain 2\nfunction g 1\ndefault 2\n0 1/2   # half\n")
    g = problem.language.functions["g"]
    assert g.value((0,)) == Fraction(1, 2)
    assert g.value((1,)) == 2
    assert problem.instance is None


def test_term_arity_mismatch(cycle_text):
    text = cycle_text + "term f x\n"
    with pytest.raises(ProblemSemanticError) as info:
        parse_problem_file(text)
    assert info.value.line == 12


def test_bad_value_position():
    with pytest.raises(ProblemParseError) as info:
        parse_problem_file("domain 2\nfunction u 1\n0 3\n1 x\n")
    assert (info.value.line, info.value.column) == (4, 3)


@pytest.mark.parametrize(
    "text, error, line",
    [
        ("domain 2\nbogus\n", ProblemParseError, 2),
        ("function f 1\n", ProblemSemanticError, 1),
        ("domain 2\nfunction f 1\n0 1\n0 2\n", ProblemSemanticError, 4),
        ("domain 2\nfunction f 2\n0 5 1\n", ProblemSemanticError, 3),
        ("domain 2\nfunction f 1\n0 1\nfunction f 1\n", ProblemSemanticError, 4),
        ("domain 2\nfunction f 1\ninstance\nvars 2\nterm g 0\n", ProblemSemanticError, 5),
        ("domain 2\nfunction f 1\ninstance\nvars 1\nterm f z\n", ProblemSemanticError, 5),
        ("domain 2\nvars 2\n", ProblemParseError, 2),
        ("domain 2\nfunction f 1\ninstance\nvars 2 x x\n", ProblemSemanticError, 4),
        ("tournament 3\n0 1\n", ProblemParseError, 3),
        ("tournament 3\n0 1\n1 0\n0 2\n", ProblemSemanticError, 1),
        ("tree 3\n0 1\n", ProblemSemanticError, 2),
        ("poset 3 1 2\n0 1 1\n0 0 0\n0 0 2\n", ProblemParseError, 4),
    ],
)
def test_rejections(text, error, line):
    with pytest.raises(error) as info:
        parse_problem_file(text)
    assert info.value.line == line


def test_structure_blocks():
    text = "tournament 3\n0 1\n1 2\n2 0\ntree 3\n0 0 1\nposet 3 1 2\n0 1 1\n0 0 0\n0 0 0\n"
    problem = parse_problem_file(text)
    assert problem.tournament.three_cycles() == [(0, 1, 2)]
    assert problem.tree.parent == (0, 0, 1)
    assert problem.poset.lt(0, 2)
    assert problem.language is None
    assert render_problem(problem) == text


def test_fractional_operation_inferred_domain():
    omega = parse_fractional_operation("1/2 0 0 0 1\n1/2 0 1 1 1\n")
    assert omega == FractionalOperation.multimorphism(min_operation(2), max_operation(2))


def test_fractional_operation_headers():
    omega = parse_fractional_operation("domain 3\n1 0 1 2\n")
    assert omega == FractionalOperation.indicator(projection(3, 1, 0))
    wide = parse_fractional_operation("1 0 0 0 0 1 1 0 1 1\n")
    assert (wide.domain_size, wide.arity) == (3, 2)
    assert parse_fractional_operation("1 0 0 0 1\n", domain_size=4).arity == 1


def test_fractional_operation_errors():
    with pytest.raises(MalformedInputError):
        parse_fractional_operation("1/3 0 0 0 1\n1/3 0 1 1 1\n")
    with pytest.raises(ProblemParseError):
        parse_fractional_operation("1 0 0 0 1\narity 2\n")
    with pytest.raises(ProblemParseError):
        parse_fractional_operation("half 0 0 0 1\n")
    with pytest.raises(ProblemSemanticError):
        parse_fractional_operation("1/2 0 0 0 1\n1/2 0 1 1\n")
    with pytest.raises(ProblemSemanticError):
        parse_fractional_operation("domain 2\narity 3\n1 0 0 0 1\n")
    with pytest.raises(ProblemSemanticError):
        parse_fractional_operation("")


def test_render_fractional_operation():
    omega = FractionalOperation.multimorphism(min_operation(2), max_operation(2))
    bare = render_fractional_operation(omega)
    assert bare == "1/2 0 0 0 1\n1/2 0 1 1 1\n"
    assert parse_fractional_operation(bare) == omega
    text = render_fractional_operation(omega, headers=True)
    assert text == "domain 2\narity 2\n1/2 0 0 0 1\n1/2 0 1 1 1\n"
    assert parse_fractional_operation(text) == omega
