from __future__ import annotations

"""
Command-line entry point.

Every subcommand reads documents in the model format, runs one library
operation inside a search budget, and reports a verdict:

    0  yes / found          2  not decided up to the cap
    1  no / does not exist  3  input error        4  budget exceeded
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import argparse
import logging
import sys

from . import cqfit, treefit, ucqfit
from .config import FORMATS, Settings, load_settings
from .cqfit import FittingKind, SearchOutcome, Status
from .errors import BudgetExceeded, CapTooSmall, DocumentError, FrontierNotExists, InvalidParameter
from .frontier_duality import (
    check_hom_duality,
    frontier,
    is_c_acyclic,
    relativized_duality_construct,
    relativized_duality_exists,
    single_obstruction_dual,
)
from .homcore import compute_core, direct_product, disjoint_union, find_homomorphism, search_budget
from .model import (
    ConjunctiveQuery,
    LabeledExamples,
    PointedInstance,
    UnionOfCQs,
    dump_document,
    read_document,
    render,
)
from .oracle import get_fixture, list_fixtures

logger = logging.getLogger(__name__)

EXIT_CODES = {"yes": 0, "no": 1, "not-up-to-cap": 2}
EXIT_INPUT_ERROR = 3
EXIT_BUDGET = 4

LANGS = ("cq", "ucq", "tree")
KINDS = ("any", "most-specific", "weakly-most-general", "basis", "unique", "most-general")


@dataclass(frozen=True)
class CommandResult:
    verdict: str
    witness: Optional[str] = None
    diagnostics: str = ""
    exit_code: int = 0


def _result(verdict: str, witness: Optional[str] = None, diagnostics: str = "") -> CommandResult:
    return CommandResult(verdict, witness, diagnostics, EXIT_CODES[verdict])


def _decide(flag: bool, diagnostics: str = "") -> CommandResult:
    return _result("yes" if flag else "no", None, diagnostics)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise InvalidParameter(message)


# --- document loading --- #

def _load(path: str, *kinds: type) -> Any:
    doc = read_document(path)
    if not isinstance(doc, kinds):
        names = " or ".join(k.__name__ for k in kinds)
        raise DocumentError(f"expected {names}, got {type(doc).__name__}", path)
    return doc


def _instance(path: str) -> PointedInstance:
    doc = _load(path, PointedInstance, ConjunctiveQuery)
    return doc.body if isinstance(doc, ConjunctiveQuery) else doc


def _instances(path: str) -> List[PointedInstance]:
    doc = read_document(path)
    if isinstance(doc, PointedInstance):
        return [doc]
    if isinstance(doc, ConjunctiveQuery):
        return [doc.body]
    if isinstance(doc, list):
        return [d.body if isinstance(d, ConjunctiveQuery) else d for d in doc]
    raise DocumentError(f"expected an instance or instance list, got {type(doc).__name__}", path)


def _query(path: str) -> ConjunctiveQuery:
    doc = _load(path, ConjunctiveQuery, PointedInstance)
    return doc if isinstance(doc, ConjunctiveQuery) else ConjunctiveQuery(doc)


def _queries(path: str) -> List[ConjunctiveQuery]:
    doc = read_document(path)
    if isinstance(doc, ConjunctiveQuery):
        return [doc]
    if isinstance(doc, UnionOfCQs):
        return list(doc.disjuncts)
    if isinstance(doc, list) and all(isinstance(d, ConjunctiveQuery) for d in doc):
        return doc
    raise DocumentError(f"expected a query list, got {type(doc).__name__}", path)


def _examples(path: str) -> LabeledExamples:
    return _load(path, LabeledExamples)


# --- handlers --- #

def _dump(obj: Any, settings: Settings, schema=None) -> str:
    return dump_document(obj, pretty=settings.format == "pretty", schema=schema)


def _cmd_hom(args: argparse.Namespace, settings: Settings) -> CommandResult:
    src, dst = _instance(args.src), _instance(args.dst)
    h = find_homomorphism(src, dst)
    if h is None:
        return _result("no", diagnostics="no homomorphism")
    payload = {"schema": src.schema.as_dict(), "kind": "mapping", "pairs": h.as_dict()}
    return _result("yes", render(payload, settings.format == "pretty"))


def _cmd_core(args: argparse.Namespace, settings: Settings) -> CommandResult:
    return _result("yes", _dump(compute_core(_instance(args.file)), settings))


def _cmd_product(args: argparse.Namespace, settings: Settings) -> CommandResult:
    return _result("yes", _dump(direct_product([_instance(f) for f in args.files]), settings))


def _cmd_union(args: argparse.Namespace, settings: Settings) -> CommandResult:
    return _result("yes", _dump(disjoint_union(_instance(args.a), _instance(args.b)), settings))


def _cmd_cacyclic(args: argparse.Namespace, settings: Settings) -> CommandResult:
    return _decide(is_c_acyclic(_instance(args.file)))


def _cmd_frontier(args: argparse.Namespace, settings: Settings) -> CommandResult:
    q = _query(args.file)
    try:
        members = treefit.tree_frontier(q) if args.lang == "tree" else frontier(q)
    except FrontierNotExists as exc:
        return _result("no", diagnostics=str(exc))
    return _result("yes", _dump(list(members.members), settings, schema=q.schema))


def _cmd_sim(args: argparse.Namespace, settings: Settings) -> CommandResult:
    a, b = _instance(args.a), _instance(args.b)
    relation = treefit.max_simulation(a, b)
    payload = {"schema": a.schema.as_dict(), "kind": "simulation", "pairs": [list(p) for p in sorted(relation.pairs)]}
    witness = render(payload, settings.format == "pretty")
    if a.arity == 1 and b.arity == 1 and (a.distinguished[0], b.distinguished[0]) not in relation:
        return _result("no", witness, "distinguished pair not simulated")
    return _result("yes", witness)


def _cmd_unravel(args: argparse.Namespace, settings: Settings) -> CommandResult:
    depth = args.depth if args.depth is not None else settings.cap
    return _result("yes", _dump(treefit.unravel(_instance(args.file), depth), settings))


def _cmd_fixture(args: argparse.Namespace, settings: Settings) -> CommandResult:
    return _result("yes", _dump(get_fixture(args.name, args.n), settings))


def _cmd_dual(args: argparse.Namespace, settings: Settings) -> CommandResult:
    cap = settings.cap if args.cap is None else args.cap
    if args.dual_command == "single":
        e = _instance(args.file)
        dual = single_obstruction_dual(e, args.cap if args.cap is not None else settings.dual_cap)
        return _result("yes", _dump(list(dual), settings, schema=e.schema))
    if args.dual_command == "check":
        return _decide(check_hom_duality(_instances(args.f), _instances(args.d), settings.dual_cap))
    D, p = _instances(args.d), _instance(args.p)
    if args.dual_command == "relative-exists":
        return _decide(relativized_duality_exists(D, p))
    if not relativized_duality_exists(D, p):
        return _result("no", diagnostics="no finite duality relative to p")
    F = relativized_duality_construct(D, p, cap, settings.check_bound)
    return _result("yes", _dump(list(F), settings, schema=p.schema))


def _from_outcome(outcome: SearchOutcome, settings: Settings, schema=None) -> CommandResult:
    if outcome.status is Status.FOUND:
        return _result("yes", _dump(outcome.witness, settings, schema=schema))
    if outcome.status is Status.NOT_EXISTS:
        return _result("no")
    diag = f"undecided up to cap {outcome.cap}"
    if outcome.partial:
        diag += f"; {len(outcome.partial)} partial results"
    return _result("not-up-to-cap", diagnostics=diag)


def _verify(args: argparse.Namespace, settings: Settings, E: LabeledExamples) -> CommandResult:
    lang, kind = args.lang, args.kind
    if kind == "basis":
        qs = _queries(args.query)
        check = cqfit.verify_basis_cq if lang == "cq" else treefit.verify_tree_basis if lang == "tree" else None
        if check is None:
            raise InvalidParameter("Bases are defined for --lang cq and --lang tree")
        return _decide(check(qs, E, settings.dual_cap))
    if lang == "ucq":
        qs = _queries(args.query)
        return _decide(ucqfit.verify_extremal_ucq(ucqfit.UcqKind(kind), UnionOfCQs(tuple(qs)), E, settings.dual_cap))
    if kind == "most-general":
        raise InvalidParameter("--kind most-general applies to --lang ucq")
    q = _query(args.query)
    if lang == "tree":
        return _decide(treefit.verify_tree_fitting(FittingKind(kind), q, E))
    return _decide(cqfit.verify_extremal_cq(FittingKind(kind), q, E))


_SEARCHES: Dict[Tuple[str, str], Callable[[LabeledExamples, Settings], Any]] = {
    ("cq", "any"): lambda E, s: cqfit.exists_fitting_cq(E),
    ("cq", "most-specific"): lambda E, s: cqfit.construct_most_specific_cq(E),
    ("cq", "unique"): lambda E, s: cqfit.exists_unique_cq(E),
    ("cq", "weakly-most-general"): lambda E, s: cqfit.search_weakly_most_general_cq(E, s.cap),
    ("cq", "basis"): lambda E, s: cqfit.construct_basis_cq(E, s.cap, s.dual_cap, s.check_bound),
    ("ucq", "any"): lambda E, s: ucqfit.construct_most_specific_ucq(E),
    ("ucq", "most-specific"): lambda E, s: ucqfit.construct_most_specific_ucq(E),
    ("ucq", "most-general"): lambda E, s: ucqfit.construct_most_general_ucq(E, s.cap, s.dual_cap, s.check_bound),
    ("ucq", "unique"): lambda E, s: ucqfit.exists_unique_ucq(E, s.dual_cap),
    ("tree", "any"): lambda E, s: treefit.exists_tree_fitting(E, s.cap),
    ("tree", "most-specific"): lambda E, s: treefit.exists_most_specific_tree(E, s.cap),
    ("tree", "unique"): lambda E, s: treefit.exists_unique_tree(E, s.cap),
    ("tree", "weakly-most-general"): lambda E, s: treefit.search_weakly_most_general_tree(E, s.cap),
    ("tree", "basis"): lambda E, s: treefit.search_tree_basis(E, s.cap, s.dual_cap),
}


def _cmd_fit(args: argparse.Namespace, settings: Settings) -> CommandResult:
    E = _examples(args.examples)
    if args.fit_command == "verify":
        if args.query is None:
            raise InvalidParameter("fit verify needs -q/--query")
        return _verify(args, settings, E)
    if args.fit_command == "exists" and (args.lang, args.kind) == ("cq", "basis"):
        return _decide(cqfit.exists_basis_cq(E))
    search = _SEARCHES.get((args.lang, args.kind))
    if search is None:
        raise InvalidParameter(f"--kind {args.kind} is not available for --lang {args.lang}")
    return _from_outcome(search(E, settings), settings, schema=E.schema)


# --- parser --- #

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qfit", description="Fit conjunctive queries to labeled examples.")
    parser.add_argument("--config", help="TOML settings file")
    parser.add_argument("--format", choices=FORMATS, help="Output layout")
    parser.add_argument("--budget", type=int, help="Node budget per homomorphism search")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("hom", help="Find a homomorphism")
    p.add_argument("src")
    p.add_argument("dst")
    p.set_defaults(handler=_cmd_hom)

    p = sub.add_parser("core", help="Compute the core")
    p.add_argument("file")
    p.set_defaults(handler=_cmd_core)

    p = sub.add_parser("product", help="Direct product of instances")
    p.add_argument("files", nargs="+")
    p.set_defaults(handler=_cmd_product)

    p = sub.add_parser("union", help="Disjoint union of two instances")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(handler=_cmd_union)

    p = sub.add_parser("cacyclic", help="Test c-acyclicity")
    p.add_argument("file")
    p.set_defaults(handler=_cmd_cacyclic)

    p = sub.add_parser("frontier", help="Frontier of a CQ or tree CQ")
    p.add_argument("file")
    p.add_argument("--lang", choices=("cq", "tree"), default="cq")
    p.set_defaults(handler=_cmd_frontier)

    p = sub.add_parser("dual", help="Homomorphism dualities")
    dual = p.add_subparsers(dest="dual_command", required=True, parser_class=_Parser)
    d = dual.add_parser("single")
    d.add_argument("file")
    d.add_argument("--cap", type=int)
    d = dual.add_parser("check")
    d.add_argument("--f", required=True)
    d.add_argument("--d", required=True)
    for name in ("relative-exists", "relative-construct"):
        d = dual.add_parser(name)
        d.add_argument("--d", required=True)
        d.add_argument("--p", required=True)
        d.add_argument("--cap", type=int)
    p.set_defaults(handler=_cmd_dual, cap=None)

    p = sub.add_parser("fit", help="Verify or construct fitting queries")
    p.add_argument("fit_command", choices=("verify", "exists", "construct"))
    p.add_argument("--lang", choices=LANGS, default="cq")
    p.add_argument("--kind", choices=KINDS, default="any")
    p.add_argument("--cap", type=int)
    p.add_argument("--budget", type=int, dest="fit_budget")
    p.add_argument("-q", "--query")
    p.add_argument("-e", "--examples", required=True)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("sim", help="Greatest simulation")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(handler=_cmd_sim)

    p = sub.add_parser("unravel", help="Finite unraveling")
    p.add_argument("file")
    p.add_argument("--depth", type=int)
    p.set_defaults(handler=_cmd_unravel)

    p = sub.add_parser("fixture", help=f"Print a fixture ({', '.join(list_fixtures())})")
    p.add_argument("name")
    p.add_argument("--n", type=int)
    p.set_defaults(handler=_cmd_fixture)
    return parser


def _settings(args: argparse.Namespace) -> Settings:
    budget = getattr(args, "fit_budget", None) or args.budget
    return load_settings(args.config).with_overrides(
        cap=getattr(args, "cap", None), budget=budget, format=args.format,
    )


def execute(argv: Sequence[str]) -> CommandResult:
    try:
        args = build_parser().parse_args(list(argv))
        _configure_logging(args.verbose)
        settings = _settings(args)
        with search_budget(settings.budget):
            return args.handler(args, settings)
    except BudgetExceeded as exc:
        return CommandResult("error", None, str(exc), EXIT_BUDGET)
    except CapTooSmall as exc:
        return CommandResult("not-up-to-cap", None, str(exc), EXIT_CODES["not-up-to-cap"])
    except (DocumentError, ValueError, KeyError, FileNotFoundError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        return CommandResult("error", None, message, EXIT_INPUT_ERROR)


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    result = execute(sys.argv[1:] if argv is None else argv)
    if result.witness is not None:
        print(result.witness)
    if result.diagnostics:
        print(result.diagnostics, file=sys.stderr)
    logger.debug("verdict %s, exit %d", result.verdict, result.exit_code)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
