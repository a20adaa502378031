"""
Command Line Interface for blplab
Subcommands over problem files and fractional-operation files. Exit codes: 0 success,
1 infeasible or failed result, 2 input error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from .blp import blp_gap, blp_value, self_reduce
from .exceptions import BlpLabError, GenerationWitnessNotFoundError, ProblemSemanticError
from .expansion import expand_to_symmetric
from .polymorphism import check_fractional_polymorphism, find_symmetric_fpol
from .problem_format import ProblemFile, parse_fractional_operation, parse_problem_file, render_fractional_operation
from .tournament import make_acyclic
from .vcsp import Assignment, VcspInstance, brute_force_optimum

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT_ERROR = 2

CommandResult = Tuple[int, str]


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so run_command keeps control of the exit code."""

    def error(self, message):
        raise _ArgumentError(message)


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_problem(path: str) -> ProblemFile:
    return parse_problem_file(_read(path))


def _require_instance(problem: ProblemFile) -> VcspInstance:
    if problem.instance is None:
        raise ProblemSemanticError(0, "the file declares no instance")
    return problem.instance


def _render_assignment(problem: ProblemFile, x: Assignment) -> str:
    domain = problem.language.domain
    return " ".join(domain.name(a) for a in x)


def cmd_blp(args) -> CommandResult:
    instance = _require_instance(_load_problem(args.file))
    value, _ = blp_value(instance)
    return EXIT_OK, str(value)


def cmd_opt(args) -> CommandResult:
    problem = _load_problem(args.file)
    result = brute_force_optimum(_require_instance(problem))
    if result.argmin is None:
        return EXIT_OK, str(result.value)
    return EXIT_OK, f"{result.value}\n{_render_assignment(problem, result.argmin)}"


def cmd_solve(args) -> CommandResult:
    problem = _load_problem(args.file)
    rounded = self_reduce(_require_instance(problem))
    if rounded is None:
        return EXIT_FAILURE, "infeasible"
    return EXIT_OK, f"{rounded.value}\n{_render_assignment(problem, rounded.assignment)}"


def cmd_gap(args) -> CommandResult:
    gap = blp_gap(_require_instance(_load_problem(args.file)))
    verdict = "solves" if gap.solves else "gap"
    return EXIT_OK, f"blp {gap.blp_value}\noracle {gap.oracle_value}\n{verdict}"


def cmd_fpol_find(args) -> CommandResult:
    problem = _load_problem(args.file)
    if problem.language is None:
        raise ProblemSemanticError(0, "the file declares no domain")
    omega = find_symmetric_fpol(problem.language, args.arity)
    if omega is None:
        return EXIT_FAILURE, "infeasible"
    return EXIT_OK, render_fractional_operation(omega, args.headers).rstrip("\n")


def cmd_fpol_check(args) -> CommandResult:
    problem = _load_problem(args.file)
    if problem.language is None:
        raise ProblemSemanticError(0, "the file declares no domain")
    omega = parse_fractional_operation(_read(args.fpol), problem.language.k)
    verdict = check_fractional_polymorphism(problem.language, omega)
    return (EXIT_OK if verdict.holds else EXIT_FAILURE), verdict.render()


def cmd_stp_acyclic(args) -> CommandResult:
    problem = _load_problem(args.file)
    if problem.tournament is None:
        raise ProblemSemanticError(0, "the file declares no tournament")
    result = make_acyclic(problem.tournament)
    lines = [f"flips {len(result.flips)}"]
    lines.extend(f"{a} {b}" for a, b in result.flips)
    lines.append("order " + " ".join(str(v) for v in result.order))
    return EXIT_OK, "\n".join(lines)


def cmd_expand(args) -> CommandResult:
    language = None
    domain_size = args.domain
    if args.language:
        problem = _load_problem(args.language)
        language = problem.language
        if language is not None and domain_size is None:
            domain_size = language.k
    omega = parse_fractional_operation(_read(args.wfile), domain_size)
    try:
        result = expand_to_symmetric(omega, args.arity, language=language, check_invariants=args.check_invariants)
    except GenerationWitnessNotFoundError as e:
        logger.info(f"Expansion found no witness: {e}")
        return EXIT_FAILURE, "no-symmetric-witness"
    return EXIT_OK, render_fractional_operation(result, args.headers).rstrip("\n")


COMMANDS: Dict[str, Callable] = {
    "blp": cmd_blp,
    "opt": cmd_opt,
    "solve": cmd_solve,
    "gap": cmd_gap,
    "fpol-find": cmd_fpol_find,
    "fpol-check": cmd_fpol_check,
    "stp-acyclic": cmd_stp_acyclic,
    "expand": cmd_expand,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blplab", description="Exact BLP and fractional polymorphism tools for VCSPs")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_text in (
        ("blp", "print the exact BLP value"),
        ("opt", "print the exhaustive optimum and its argmin"),
        ("solve", "extract an optimal assignment by self-reduction"),
        ("gap", "compare the BLP value with the optimum"),
        ("stp-acyclic", "make the tournament block acyclic by valid flips"),
    ):
        command = sub.add_parser(name, help=help_text)
        command.add_argument("file")

    find = sub.add_parser("fpol-find", help="find a symmetric fractional polymorphism")
    find.add_argument("file")
    find.add_argument("--arity", type=int, required=True)
    find.add_argument("--headers", action="store_true", help="prefix the output with domain and arity lines")

    check = sub.add_parser("fpol-check", help="check a fractional operation against a language")
    check.add_argument("file")
    check.add_argument("--fpol", required=True)

    expand = sub.add_parser("expand", help="expand a fractional polymorphism to a symmetric one")
    expand.add_argument("wfile")
    expand.add_argument("--arity", type=int, required=True)
    expand.add_argument("--domain", type=int, default=None)
    expand.add_argument("--language", default=None)
    expand.add_argument("--check-invariants", action="store_true")
    expand.add_argument("--headers", action="store_true", help="prefix the output with domain and arity lines")
    return parser


def run_command(argv: Sequence[str], stderr=None) -> CommandResult:
    """Run one subcommand; diagnostics go to stderr, the result text is returned."""
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(list(argv))
    except _ArgumentError as e:
        print(f"error: {e}", file=stderr)
        return EXIT_INPUT_ERROR, ""
    logger.info(f"Running {args.command}")
    try:
        return COMMANDS[args.command](args)
    except (BlpLabError, ValidationError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=stderr)
        return EXIT_INPUT_ERROR, ""
    except Exception as e:
        logger.exception(f"Unexpected failure in {args.command}: {e}")
        print(f"error: {e}", file=stderr)
        return EXIT_INPUT_ERROR, ""


def main(argv: Optional[List[str]] = None) -> int:
    code, text = run_command(sys.argv[1:] if argv is None else argv)
    if text:
        print(text)
    return code
