"""
Shared fixtures for the blplab test suites.
"""

import numpy as np
import pytest

from blplab.families import sample_admitting_function
from blplab.operations import Operation
from blplab.rational import INF
from blplab.vcsp import CostFunction, Language, VcspInstance

CYCLE_TEXT = """\
# three labels, f finite only on a directed 3-cycle
domain 3
labels a b c
function f 2
a b 0
b c 0
c a 0
instance
vars x y
term f x y
term f y x
"""


@pytest.fixture
def cycle_language() -> Language:
    dom = {(0, 1), (1, 2), (2, 0)}
    f = CostFunction.from_function(3, 2, lambda x, y: 0 if (x, y) in dom else INF)
    return Language.of(3, {"f": f})


@pytest.fixture
def cycle_pair(cycle_language) -> VcspInstance:
    """f(x, y) + f(y, x): BLP 0, optimum inf."""
    return VcspInstance(language=cycle_language, var_count=2, terms=[("f", (0, 1)), ("f", (1, 0))])


@pytest.fixture
def cycle_instance(cycle_language) -> VcspInstance:
    return VcspInstance(
        language=cycle_language, var_count=3, terms=[("f", (0, 1)), ("f", (1, 2)), ("f", (2, 0))]
    )


@pytest.fixture
def cycle_operation() -> Operation:
    """g(a, b) = a, g(b, c) = b, g(c, a) = c: the winner on the cycle a -> b -> c -> a."""
    wins = {(0, 1), (1, 2), (2, 0)}
    return Operation.from_function(3, 2, lambda x, y: x if x == y or (x, y) in wins else y)


@pytest.fixture
def submodular_pair() -> CostFunction:
    """Boolean f(0,0)=0, f(0,1)=2, f(1,0)=3, f(1,1)=4."""
    return CostFunction(domain_size=2, arity=2, table=[0, 2, 3, 4])


@pytest.fixture
def anti_submodular() -> CostFunction:
    """f(0,0)=f(1,1)=1, f(0,1)=f(1,0)=0: violates min/max."""
    return CostFunction(domain_size=2, arity=2, table=[1, 0, 0, 1])


@pytest.fixture
def cycle_text() -> str:
    return CYCLE_TEXT


@pytest.fixture
def family_instance():
    """Builds seeded instances of binary functions admitting omega on random distinct scopes."""

    def _build(omega, seed, var_count, term_count, value_bound=20, function_count=2):
        rng = np.random.default_rng(seed)
        functions = {
            f"f{i}": sample_admitting_function(omega, 2, value_bound, rng_seed=seed * 31 + i)
            for i in range(function_count)
        }
        terms = []
        for _ in range(term_count):
            name = f"f{rng.integers(0, function_count)}"
            x, y = rng.choice(var_count, size=2, replace=False)
            terms.append((name, (int(x), int(y))))
        return VcspInstance(language=Language.of(omega.domain_size, functions), var_count=var_count, terms=terms)

    return _build
