from __future__ import annotations

"""
Fitting conjunctive queries.

Provides:
- FittingKind and the three-valued SearchOutcome shared by the fitting modules
- verify_fitting_cq / verify_extremal_cq
- exists_fitting_cq, construct_most_specific_cq, exists_unique_cq (product based, exact)
- exists_basis_cq, construct_basis_cq, verify_basis_cq (relativized dualities)
- search_weakly_most_general_cq over enumerate_c_acyclic_cqs (capped)

Intended usage:
    outcome = construct_most_specific_cq(examples)
    if outcome.found:
        print(outcome.witness)
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple
import logging

from .errors import ArityMismatch, CapTooSmall, SchemaMismatch, WellDefinednessError
from .frontier_duality import (
    fg_components,
    frontier,
    is_c_acyclic,
    products_covered,
    relativized_duality_construct,
    relativized_duality_exists,
    single_obstruction_dual,
)
from .homcore import (
    canonical_key,
    canonical_relabel,
    compute_core,
    direct_product,
    hom_equivalent,
    keep_hom_minimal,
    maps_to,
)
from .model import ConjunctiveQuery, Fact, LabeledExamples, PointedInstance, Schema, canonical_cq, validate_collection
from .oracle import distinguished_patterns

logger = logging.getLogger(__name__)


class FittingKind(str, Enum):
    ANY = "any"
    MOST_SPECIFIC = "most-specific"
    WEAKLY_MOST_GENERAL = "weakly-most-general"
    UNIQUE = "unique"


class Status(str, Enum):
    FOUND = "found"
    NOT_EXISTS = "not-exists"
    NOT_UP_TO_CAP = "not-up-to-cap"


@dataclass(frozen=True)
class SearchOutcome:
    """Result of a fitting search.

    ``witness`` is set for FOUND, ``cap`` for NOT_UP_TO_CAP; ``partial`` holds
    whatever a capped search collected before giving up.
    """
    status: Status
    witness: Any = None
    cap: Optional[int] = None
    partial: Tuple[Any, ...] = ()

    def __post_init__(self):
        if self.status is Status.FOUND and self.witness is None:
            raise ValueError("A found outcome needs a witness")
        if self.status is Status.NOT_UP_TO_CAP and self.cap is None:
            raise ValueError("A capped outcome needs its cap")

    @classmethod
    def found_with(cls, witness: Any, cap: Optional[int] = None) -> "SearchOutcome":
        return cls(Status.FOUND, witness, cap)

    @classmethod
    def not_exists(cls) -> "SearchOutcome":
        return cls(Status.NOT_EXISTS)

    @classmethod
    def not_up_to_cap(cls, cap: int, partial: Iterable[Any] = ()) -> "SearchOutcome":
        return cls(Status.NOT_UP_TO_CAP, None, cap, tuple(partial))

    @property
    def found(self) -> bool:
        return self.status is Status.FOUND


def require_valid(examples: LabeledExamples) -> None:
    """Raise the error matching the first violated collection invariant."""
    errors = {"schema": SchemaMismatch, "arity": ArityMismatch, "data-example": WellDefinednessError}
    for violation in validate_collection(examples):
        raise errors[violation.rule](violation.message)


def _check_query(q: ConjunctiveQuery, examples: LabeledExamples) -> None:
    if q.schema != examples.schema:
        raise SchemaMismatch(f"Query schema {q.schema.as_dict()} differs from {examples.schema.as_dict()}")
    if q.arity != examples.arity:
        raise ArityMismatch(f"Query arity {q.arity} differs from example arity {examples.arity}")


def positive_product(examples: LabeledExamples) -> PointedInstance:
    return direct_product(examples.positives, examples.schema, examples.arity)


def fits(e: PointedInstance, examples: LabeledExamples) -> bool:
    """Whether the query with canonical instance ``e`` fits."""
    return (all(maps_to(e, pos) for pos in examples.positives)
            and not any(maps_to(e, neg) for neg in examples.negatives))


def verify_fitting_cq(q: ConjunctiveQuery, examples: LabeledExamples) -> bool:
    _check_query(q, examples)
    require_valid(examples)
    return fits(q.body, examples)


def _weakly_most_general(q: ConjunctiveQuery, examples: LabeledExamples) -> bool:
    core = compute_core(q.body)
    if not is_c_acyclic(core):
        return False
    return all(any(maps_to(m.body, neg) for neg in examples.negatives) for m in frontier(q))


def verify_extremal_cq(kind: FittingKind, q: ConjunctiveQuery, examples: LabeledExamples) -> bool:
    kind = FittingKind(kind)
    if not verify_fitting_cq(q, examples):
        return False
    if kind is FittingKind.ANY:
        return True
    specific = hom_equivalent(q.body, positive_product(examples))
    if kind is FittingKind.MOST_SPECIFIC:
        return specific
    if kind is FittingKind.UNIQUE and not specific:
        return False
    return _weakly_most_general(q, examples)


def exists_fitting_cq(examples: LabeledExamples) -> SearchOutcome:
    """A fitting CQ exists iff the canonical CQ of the positive product is defined and fits."""
    require_valid(examples)
    p = positive_product(examples)
    if not p.is_data_example or not fits(p, examples):
        return SearchOutcome.not_exists()
    return SearchOutcome.found_with(canonical_cq(p))


def construct_most_specific_cq(examples: LabeledExamples) -> SearchOutcome:
    require_valid(examples)
    p = positive_product(examples)
    if not p.is_data_example:
        return SearchOutcome.not_exists()
    core = compute_core(p)
    logger.debug("positive product: %d values, core %d values", len(p.values), len(core.values))
    if not fits(core, examples):
        return SearchOutcome.not_exists()
    return SearchOutcome.found_with(ConjunctiveQuery(canonical_relabel(core, prefix="x")))


def exists_unique_cq(examples: LabeledExamples) -> SearchOutcome:
    specific = construct_most_specific_cq(examples)
    if not specific.found:
        return specific
    if _weakly_most_general(specific.witness, examples):
        return specific
    return SearchOutcome.not_exists()


def exists_basis_cq(examples: LabeledExamples) -> bool:
    """Whether a finite basis of most-general fitting CQs exists."""
    require_valid(examples)
    return relativized_duality_exists(examples.negatives, positive_product(examples))


def verify_basis_cq(qs: Sequence[ConjunctiveQuery], examples: LabeledExamples,
                    dual_cap: Optional[int] = None) -> bool:
    """Whether ``qs`` is a basis of most-general fitting CQs.

    Every fitting CQ x must be contained in a member; dually every data example
    below the positive product that no member maps into must lie below a
    negative example.
    """
    require_valid(examples)
    for q in qs:
        _check_query(q, examples)
    if not all(fits(q.body, examples) for q in qs):
        return False
    cores = keep_hom_minimal(q.body for q in qs)
    if not all(is_c_acyclic(c) for c in cores):
        return False
    duals = [list(single_obstruction_dual(c, dual_cap)) for c in cores]
    negatives = examples.negatives
    return products_covered(duals, positive_product(examples),
                            lambda s: any(maps_to(s, neg) for neg in negatives))


def _presentation_order(q: ConjunctiveQuery) -> Tuple[int, int, str]:
    return len(q.body.values), len(q.body.facts), str(q)


def construct_basis_cq(examples: LabeledExamples, size_cap: int, dual_cap: Optional[int] = None,
                       check_bound: Optional[int] = None) -> SearchOutcome:
    """Minimal basis of most-general fitting CQs built from critical obstructions.

    Raises CapTooSmall when the members found with ``size_cap`` values do not
    verify as a basis.
    """
    require_valid(examples)
    p = positive_product(examples)
    if not relativized_duality_exists(examples.negatives, p):
        logger.info("no finite basis: the negatives admit no duality relative to the positive product")
        return SearchOutcome.not_exists()
    F = relativized_duality_construct(examples.negatives, p, size_cap, check_bound)
    fitting = [f for f in F if f.is_data_example and fits(f, examples)]
    if not fitting:
        return SearchOutcome.not_exists()
    basis = sorted(
        (ConjunctiveQuery(canonical_relabel(m, prefix="x")) for m in keep_hom_minimal(fitting)),
        key=_presentation_order,
    )
    if not verify_basis_cq(basis, examples, dual_cap):
        raise CapTooSmall(size_cap, "constructed members do not form a basis")
    logger.info("basis of %d members", len(basis))
    return SearchOutcome.found_with(basis, size_cap)


# --- candidate enumeration --- #

def _fresh(e: PointedInstance) -> str:
    n = 0
    while f"y{n}" in e.values:
        n += 1
    return f"y{n}"


def _extensions(e: PointedInstance, schema: Schema, max_vars: int) -> Iterable[PointedInstance]:
    values = list(e.values)
    spare = max_vars - len(values)
    for name, arity in schema.relations:
        yield from _grow(e, name, arity, values, spare)


def _grow(e: PointedInstance, name: str, arity: int, values: List[str], spare: int) -> Iterable[PointedInstance]:
    def go(args: Tuple[str, ...], pool: List[str], left: int) -> Iterable[Tuple[str, ...]]:
        if len(args) == arity:
            yield args
            return
        for v in pool:
            yield from go(args + (v,), pool, left)
        if left > 0:
            fresh = f"new{len(pool)}"
            yield from go(args + (fresh,), pool + [fresh], left - 1)

    for args in go((), values, spare):
        fact = Fact(name, args)
        if fact in e.facts:
            continue
        grown = e.with_facts(e.facts | {fact})
        renaming = {}
        for v in args:
            if v.startswith("new") and v not in renaming:
                renaming[v] = _fresh(grown.rename(renaming))
        yield grown.rename(renaming) if renaming else grown


def enumerate_c_acyclic_cqs(schema: Schema, arity: int, max_vars: int, max_degree: int,
                            max_components: Optional[int] = None) -> List[ConjunctiveQuery]:
    """Safe c-acyclic CQs within the bounds, up to isomorphism.

    Ordered by variable count, then atom count, then rendering.
    """
    level: Dict[Any, PointedInstance] = {}
    for pattern in distinguished_patterns(arity, arity):
        start = PointedInstance(schema, frozenset(), tuple(f"x{i}" for i in pattern))
        if len(start.values) <= max_vars:
            level.setdefault(canonical_key(start), start)
    collected: Dict[Any, PointedInstance] = dict(level)
    while level:
        following: Dict[Any, PointedInstance] = {}
        for e in level.values():
            for grown in _extensions(e, schema, max_vars):
                if any(grown.degree(v) > max_degree for v in grown.values):
                    continue
                if max_components is not None and len(fg_components(grown)) > max_components:
                    continue
                if not is_c_acyclic(grown):
                    continue
                key = canonical_key(grown)
                if key not in collected and key not in following:
                    following[key] = grown
        collected.update(following)
        level = following
    queries = [
        ConjunctiveQuery(canonical_relabel(e, prefix="x"))
        for e in collected.values() if e.is_data_example
    ]
    logger.debug("enumerated %d c-acyclic CQs with <= %d variables", len(queries), max_vars)
    return sorted(queries, key=_presentation_order)


def search_weakly_most_general_cq(examples: LabeledExamples, size_cap: int) -> SearchOutcome:
    """First weakly most-general fitting CQ with at most ``size_cap`` variables."""
    require_valid(examples)
    degree = max(examples.schema.max_arity, examples.negative_size)
    candidates = enumerate_c_acyclic_cqs(
        examples.schema, examples.arity, size_cap, degree, max_components=len(examples.negatives),
    )
    # already ordered by variable count
    for q in candidates:
        if fits(q.body, examples) and _weakly_most_general(q, examples):
            return SearchOutcome.found_with(q, size_cap)
    logger.info("no weakly most-general fitting CQ among %d candidates", len(candidates))
    return SearchOutcome.not_up_to_cap(size_cap)
