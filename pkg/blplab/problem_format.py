"""
Problem Format Service for blplab
Line-oriented text formats: problem files (domain, cost functions, instance, tournament,
tree and poset blocks) and fractional-operation files.
"""

import logging
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from .exceptions import MalformedInputError, ProblemParseError, ProblemSemanticError
from .families import DefectPoset, RootedTree
from .operations import Operation
from .polymorphism import FractionalOperation
from .rational import INF, ExtRational, parse_fraction, render_fraction
from .tournament import Tournament
from .vcsp import CostFunction, Domain, Language, Term, VcspInstance, all_tuples

logger = logging.getLogger(__name__)

Token = Tuple[int, str]

KEYWORDS = {"domain", "labels", "function", "default", "instance", "vars", "term", "tournament", "tree", "poset"}


class ProblemFile(BaseModel):
    """Everything a problem file declares; absent blocks are None."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    language: Optional[Language] = None
    instance: Optional[VcspInstance] = None
    var_names: Tuple[str, ...] = ()
    tournament: Optional[Tournament] = None
    tree: Optional[RootedTree] = None
    poset: Optional[DefectPoset] = None


def _tokenize(text: str) -> List[Tuple[int, List[Token]]]:
    """Non-empty lines as (line number, [(column, token)]), comments stripped."""
    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        tokens: List[Token] = []
        column = 0
        for part in content.split():
            column = content.index(part, column)
            tokens.append((column + 1, part))
            column += len(part)
        if tokens:
            lines.append((number, tokens))
    return lines


def _int(line: int, token: Token, minimum: int = 0) -> int:
    column, text = token
    if not text.lstrip("-").isdigit():
        raise ProblemParseError(line, column, f"expected an integer, found {text!r}")
    value = int(text)
    if value < minimum:
        raise ProblemParseError(line, column, f"expected an integer >= {minimum}, found {value}")
    return value


def _value(line: int, token: Token) -> ExtRational:
    column, text = token
    try:
        return ExtRational.parse(text)
    except MalformedInputError:
        raise ProblemParseError(line, column, f"expected integer, p/q or inf, found {text!r}")


class _FunctionBlock:
    def __init__(self, name: str, arity: int, line: int):
        self.name = name
        self.arity = arity
        self.line = line
        self.default: ExtRational = INF
        self.entries: Dict[Tuple[int, ...], ExtRational] = {}


class _ProblemParser:
    def __init__(self, text: str):
        self.lines = _tokenize(text)
        self.position = 0
        self.domain: Optional[Domain] = None
        self.domain_line = 0
        self.functions: List[_FunctionBlock] = []
        self.var_count: Optional[int] = None
        self.var_names: Tuple[str, ...] = ()
        self.terms: List[Tuple[int, str, List[Token]]] = []
        self.tournament: Optional[Tournament] = None
        self.tree: Optional[RootedTree] = None
        self.poset: Optional[DefectPoset] = None
        self.block: Optional[str] = None

    def next_line(self) -> Tuple[int, List[Token]]:
        if self.position >= len(self.lines):
            last = self.lines[-1][0] if self.lines else 0
            raise ProblemParseError(last + 1, 1, f"unexpected end of file inside {self.block} block")
        entry = self.lines[self.position]
        self.position += 1
        return entry

    def require_domain(self, line: int) -> Domain:
        if self.domain is None:
            raise ProblemSemanticError(line, "domain must be declared first")
        return self.domain

    def label(self, line: int, token: Token) -> int:
        column, text = token
        try:
            return self.require_domain(line).index_of(text)
        except MalformedInputError:
            raise ProblemSemanticError(line, f"label {text!r} at column {column} is out of range")

    def parse(self) -> ProblemFile:
        while self.position < len(self.lines):
            line, tokens = self.next_line()
            keyword = tokens[0][1]
            if keyword in KEYWORDS:
                getattr(self, f"_on_{keyword}")(line, tokens)
            elif self.block == "function":
                self._function_entry(line, tokens)
            else:
                raise ProblemParseError(line, tokens[0][0], f"unexpected token {keyword!r}")
        return self.finish()

    def _expect_count(self, line: int, tokens: List[Token], count: int):
        if len(tokens) != count:
            column = tokens[min(count, len(tokens) - 1)][0]
            raise ProblemParseError(line, column, f"{tokens[0][1]} expects {count - 1} arguments")

    def _on_domain(self, line: int, tokens: List[Token]):
        self._expect_count(line, tokens, 2)
        if self.domain is not None:
            raise ProblemSemanticError(line, "domain declared twice")
        self.domain = Domain(size=_int(line, tokens[1], 1))
        self.domain_line = line
        self.block = None

    def _on_labels(self, line: int, tokens: List[Token]):
        domain = self.require_domain(line)
        names = tuple(t for _, t in tokens[1:])
        if self.functions:
            raise ProblemSemanticError(line, "labels must precede function blocks")
        if len(names) != domain.size or len(set(names)) != len(names):
            raise ProblemSemanticError(line, f"labels needs {domain.size} distinct names")
        self.domain = Domain(size=domain.size, label_names=names)
        self.block = None

    def _on_function(self, line: int, tokens: List[Token]):
        self._expect_count(line, tokens, 3)
        self.require_domain(line)
        name = tokens[1][1]
        if any(f.name == name for f in self.functions):
            raise ProblemSemanticError(line, f"function {name} declared twice")
        self.functions.append(_FunctionBlock(name, _int(line, tokens[2], 1), line))
        self.block = "function"

    def _on_default(self, line: int, tokens: List[Token]):
        if self.block != "function":
            raise ProblemParseError(line, tokens[0][0], "default outside a function block")
        self._expect_count(line, tokens, 2)
        self.functions[-1].default = _value(line, tokens[1])

    def _function_entry(self, line: int, tokens: List[Token]):
        block = self.functions[-1]
        if len(tokens) != block.arity + 1:
            raise ProblemSemanticError(
                line, f"function {block.name} has arity {block.arity}, entry has {len(tokens) - 1} labels"
            )
        t = tuple(self.label(line, token) for token in tokens[:-1])
        if t in block.entries:
            raise ProblemSemanticError(line, f"tuple {t} of {block.name} listed twice")
        block.entries[t] = _value(line, tokens[-1])

    def _on_instance(self, line: int, tokens: List[Token]):
        self._expect_count(line, tokens, 1)
        if self.var_count is not None or self.block == "instance":
            raise ProblemSemanticError(line, "instance declared twice")
        self.block = "instance"

    def _on_vars(self, line: int, tokens: List[Token]):
        if self.block != "instance":
            raise ProblemParseError(line, tokens[0][0], "vars outside an instance block")
        if len(tokens) < 2:
            raise ProblemParseError(line, tokens[0][0], "vars expects a count or names")
        first = tokens[1][1]
        if first.isdigit():
            count = int(first)
            names = tuple(t for _, t in tokens[2:])
            if names and len(names) != count:
                raise ProblemSemanticError(line, f"vars declares {count} variables but names {len(names)}")
        else:
            names = tuple(t for _, t in tokens[1:])
            count = len(names)
        if len(set(names)) != len(names):
            raise ProblemSemanticError(line, "variable names must be distinct")
        self.var_count = count
        self.var_names = names

    def _on_term(self, line: int, tokens: List[Token]):
        if self.block != "instance" or self.var_count is None:
            raise ProblemParseError(line, tokens[0][0], "term needs an instance block with vars")
        if len(tokens) < 2:
            raise ProblemParseError(line, tokens[0][0], "term expects a function name")
        self.terms.append((line, tokens[1][1], tokens[2:]))

    def variable(self, line: int, token: Token) -> int:
        column, text = token
        if text in self.var_names:
            return self.var_names.index(text)
        if text.isdigit() and int(text) < self.var_count:
            return int(text)
        raise ProblemSemanticError(line, f"variable {text!r} at column {column} is not declared")

    def _on_tournament(self, line: int, tokens: List[Token]):
        self._expect_count(line, tokens, 2)
        k = _int(line, tokens[1], 1)
        self.block = "tournament"
        edges = []
        for _ in range(k * (k - 1) // 2):
            edge_line, edge = self.next_line()
            self._expect_count(edge_line, [(0, "edge")] + edge, 3)
            edges.append((_int(edge_line, edge[0]), _int(edge_line, edge[1])))
        try:
            self.tournament = Tournament.from_edges(k, edges)
        except MalformedInputError as e:
            raise ProblemSemanticError(line, f"tournament: {e}")
        self.block = None

    def _on_tree(self, line: int, tokens: List[Token]):
        self._expect_count(line, tokens, 2)
        k = _int(line, tokens[1], 1)
        self.block = "tree"
        parent_line, parents = self.next_line()
        if len(parents) != k:
            raise ProblemSemanticError(parent_line, f"tree of size {k} needs {k} parent entries")
        try:
            self.tree = RootedTree(parent=tuple(_int(parent_line, t) for t in parents))
        except MalformedInputError as e:
            raise ProblemSemanticError(line, f"tree: {e}")
        self.block = None

    def _on_poset(self, line: int, tokens: List[Token]):
        self._expect_count(line, tokens, 4)
        k = _int(line, tokens[1], 1)
        b, c = _int(line, tokens[2]), _int(line, tokens[3])
        self.block = "poset"
        rows = []
        for _ in range(k):
            row_line, row = self.next_line()
            if len(row) != k:
                raise ProblemSemanticError(row_line, f"poset row needs {k} entries")
            values = []
            for token in row:
                if token[1] not in ("0", "1"):
                    raise ProblemParseError(row_line, token[0], f"expected 0 or 1, found {token[1]!r}")
                values.append(token[1] == "1")
            rows.append(tuple(values))
        try:
            self.poset = DefectPoset(less=tuple(rows), b=b, c=c)
        except MalformedInputError as e:
            raise ProblemSemanticError(line, f"poset: {e}")
        self.block = None

    def finish(self) -> ProblemFile:
        language = None
        if self.domain is not None:
            k = self.domain.size
            functions = {}
            for block in self.functions:
                table = [block.entries.get(t, block.default) for t in all_tuples(k, block.arity)]
                functions[block.name] = CostFunction(domain_size=k, arity=block.arity, table=table)
            language = Language(domain=self.domain, functions=functions)
        instance = None
        if self.var_count is not None:
            if language is None:
                raise ProblemSemanticError(0, "an instance needs a domain")
            terms = []
            for line, name, scope_tokens in self.terms:
                f = language.functions.get(name)
                if f is None:
                    raise ProblemSemanticError(line, f"unknown function {name!r}")
                if len(scope_tokens) != f.arity:
                    raise ProblemSemanticError(
                        line, f"function {name} has arity {f.arity}, term has {len(scope_tokens)} variables"
                    )
                terms.append(Term(function=name, scope=tuple(self.variable(line, t) for t in scope_tokens)))
            instance = VcspInstance(language=language, var_count=self.var_count, terms=terms)
        return ProblemFile(
            language=language,
            instance=instance,
            var_names=self.var_names,
            tournament=self.tournament,
            tree=self.tree,
            poset=self.poset,
        )


def parse_problem_file(text: str) -> ProblemFile:
    problem = _ProblemParser(text).parse()
    logger.debug(
        f"Parsed problem file: {len(problem.language.functions) if problem.language else 0} functions, "
        f"{len(problem.instance.terms) if problem.instance else 0} terms"
    )
    return problem


def render_problem(problem: ProblemFile) -> str:
    """Canonical text; unlisted tuples are inf, so only finite entries are written."""
    out: List[str] = []
    language = problem.language
    if language is not None:
        domain = language.domain
        out.append(f"domain {domain.size}")
        if domain.label_names != tuple(str(i) for i in domain.labels):
            out.append("labels " + " ".join(domain.label_names))
        for name, f in language.functions.items():
            out.append(f"function {name} {f.arity}")
            for t in f.dom:
                out.append(" ".join(domain.name(a) for a in t) + f" {f.value(t)}")
    if problem.instance is not None:
        instance = problem.instance
        out.append("instance")
        names = problem.var_names
        out.append(f"vars {instance.var_count}" + "".join(f" {n}" for n in names))
        for term in instance.terms:
            scope = " ".join(names[v] if names else str(v) for v in term.scope)
            out.append(f"term {term.function} {scope}".rstrip())
    if problem.tournament is not None:
        out.append(f"tournament {problem.tournament.size}")
        out.extend(f"{a} {b}" for a, b in problem.tournament.edges)
    if problem.tree is not None:
        out.append(f"tree {problem.tree.size}")
        out.append(" ".join(str(p) for p in problem.tree.parent))
    if problem.poset is not None:
        poset = problem.poset
        out.append(f"poset {poset.size} {poset.b} {poset.c}")
        out.extend(" ".join("1" if x else "0" for x in row) for row in poset.less)
    return "\n".join(out) + "\n"


def parse_fractional_operation(text: str, domain_size: Optional[int] = None) -> FractionalOperation:
    """Lines `<weight> <table...>` after optional `domain <k>` and `arity <m>` headers.

    Without a domain header the caller's domain size is used, else the smallest k >= 2
    above every label for which the table length is a power of k.
    """
    k = domain_size
    m: Optional[int] = None
    rows: List[Tuple[int, Fraction, List[int]]] = []
    for line, tokens in _tokenize(text):
        keyword = tokens[0][1]
        if keyword in ("domain", "arity"):
            if rows:
                raise ProblemParseError(line, tokens[0][0], f"{keyword} header after weight lines")
            if len(tokens) != 2:
                raise ProblemParseError(line, tokens[0][0], f"{keyword} expects one argument")
            if keyword == "domain":
                k = _int(line, tokens[1], 1)
            else:
                m = _int(line, tokens[1], 1)
            continue
        try:
            weight = parse_fraction(keyword)
        except MalformedInputError:
            raise ProblemParseError(line, tokens[0][0], f"expected a weight, found {keyword!r}")
        if len(tokens) < 2:
            raise ProblemParseError(line, tokens[0][0], "weight line without a table")
        rows.append((line, weight, [_int(line, t) for t in tokens[1:]]))
    if not rows:
        raise ProblemSemanticError(0, "fractional operation file has no weight lines")
    width = len(rows[0][2])
    for line, _, table in rows:
        if len(table) != width:
            raise ProblemSemanticError(line, "all tables must have the same length")
    if k is None:
        k = max(2, 1 + max(max(t) for _, _, t in rows))
        while not _is_power(width, k):
            k += 1
            if k > width:
                raise ProblemSemanticError(rows[0][0], f"cannot infer a domain for tables of length {width}")
    if m is None:
        m = _log(width, k)
        if m is None:
            raise ProblemSemanticError(rows[0][0], f"table length {width} is not a power of {k}")
    if k ** m != width:
        raise ProblemSemanticError(rows[0][0], f"tables need {k ** m} entries for domain {k} and arity {m}")
    weights: Dict[Operation, Fraction] = {}
    for line, weight, table in rows:
        if any(a >= k for a in table):
            raise ProblemSemanticError(line, f"table entry out of range for domain {k}")
        g = Operation(domain_size=k, arity=m, table=tuple(table))
        weights[g] = weights.get(g, Fraction(0)) + weight
    return FractionalOperation(domain_size=k, arity=m, weights=weights)


def _log(width: int, k: int) -> Optional[int]:
    if k == 1:
        return 1 if width == 1 else None
    m, power = 0, 1
    while power < width:
        power *= k
        m += 1
    return m if power == width and m >= 1 else None


def _is_power(width: int, k: int) -> bool:
    return _log(width, k) is not None


def render_fractional_operation(omega: FractionalOperation, headers: bool = False) -> str:
    """One `<weight> <table>` line per support operation, optionally after `domain` and `arity` lines."""
    lines = [f"domain {omega.domain_size}", f"arity {omega.arity}"] if headers else []
    lines.extend(f"{render_fraction(w)} {g.render()}" for g, w in omega.items())
    return "\n".join(lines) + "\n"
