from __future__ import annotations

"""
Fitting unions of conjunctive queries.

A UCQ q maps to q' when every disjunct of q' receives a homomorphism from
some disjunct of q; this is containment of q' in q.
"""

from enum import Enum
from typing import List
import logging

from .cqfit import SearchOutcome, _check_query, fits, require_valid
from .frontier_duality import check_hom_duality, relativized_duality_construct, relativized_duality_exists
from .homcore import canonical_relabel, check_compatible, keep_hom_minimal, maps_to
from .model import ConjunctiveQuery, LabeledExamples, PointedInstance, UnionOfCQs, all_facts_instance, canonical_cq

logger = logging.getLogger(__name__)


class UcqKind(str, Enum):
    ANY = "any"
    MOST_SPECIFIC = "most-specific"
    MOST_GENERAL = "most-general"
    UNIQUE = "unique"


def ucq_homomorphism(q: UnionOfCQs, q2: UnionOfCQs) -> bool:
    check_compatible(q.disjuncts[0].body, q2.disjuncts[0].body)
    return all(any(maps_to(d.body, d2.body) for d in q.disjuncts) for d2 in q2.disjuncts)


def _ucq_equivalent(q: UnionOfCQs, q2: UnionOfCQs) -> bool:
    return ucq_homomorphism(q, q2) and ucq_homomorphism(q2, q)


def _positive_union(examples: LabeledExamples) -> UnionOfCQs:
    return UnionOfCQs(tuple(canonical_cq(e) for e in examples.positives))


def fits_ucq(q: UnionOfCQs, examples: LabeledExamples) -> bool:
    bodies = [d.body for d in q.disjuncts]
    return (all(any(maps_to(b, pos) for b in bodies) for pos in examples.positives)
            and not any(maps_to(b, neg) for b in bodies for neg in examples.negatives))


def verify_extremal_ucq(kind: UcqKind, q: UnionOfCQs, examples: LabeledExamples,
                        dual_cap: int | None = None) -> bool:
    kind = UcqKind(kind)
    require_valid(examples)
    for d in q.disjuncts:
        _check_query(d, examples)
    if not fits_ucq(q, examples):
        return False
    if kind is UcqKind.ANY:
        return True
    if kind is UcqKind.MOST_GENERAL:
        return check_hom_duality([d.body for d in q.disjuncts], examples.negatives, dual_cap)
    if not examples.positives or not _ucq_equivalent(q, _positive_union(examples)):
        return False
    if kind is UcqKind.MOST_SPECIFIC:
        return True
    return check_hom_duality(examples.positives, examples.negatives, dual_cap)


def construct_most_specific_ucq(examples: LabeledExamples) -> SearchOutcome:
    require_valid(examples)
    if not examples.positives:
        return SearchOutcome.not_exists()
    union = _positive_union(examples)
    if not fits_ucq(union, examples):
        return SearchOutcome.not_exists()
    return SearchOutcome.found_with(union)


def _as_union(members: List[PointedInstance]) -> UnionOfCQs:
    queries = sorted(
        (ConjunctiveQuery(canonical_relabel(m, prefix="x")) for m in members),
        key=lambda q: (len(q.body.values), len(q.body.facts), str(q)),
    )
    return UnionOfCQs(tuple(queries))


def construct_most_general_ucq(examples: LabeledExamples, size_cap: int, dual_cap: int | None = None,
                               check_bound: int | None = None) -> SearchOutcome:
    """The most-general fitting UCQ: the obstruction set of E⁻ relative to the all-facts singleton."""
    require_valid(examples)
    top = all_facts_instance(examples.schema, examples.arity)
    if not relativized_duality_exists(examples.negatives, top):
        logger.info("no most-general fitting UCQ: the negatives have no finite obstruction set")
        return SearchOutcome.not_exists()
    F = relativized_duality_construct(examples.negatives, top, size_cap, check_bound)
    disjuncts = keep_hom_minimal(f for f in F if f.is_data_example)
    if not disjuncts or len(disjuncts) != len(keep_hom_minimal(F)):
        # an unsafe obstruction has no CQ counterpart
        return SearchOutcome.not_exists()
    union = _as_union(disjuncts)
    if not fits_ucq(union, examples):
        return SearchOutcome.not_exists()
    return SearchOutcome.found_with(union, size_cap)


def exists_unique_ucq(examples: LabeledExamples, dual_cap: int | None = None) -> SearchOutcome:
    specific = construct_most_specific_ucq(examples)
    if not specific.found:
        return specific
    if not check_hom_duality(examples.positives, examples.negatives, dual_cap):
        return SearchOutcome.not_exists()
    return specific
