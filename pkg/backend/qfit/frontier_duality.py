from __future__ import annotations

"""
Frontiers and homomorphism dualities.

Provides:
- is_c_acyclic / fg_components over the incidence multigraph
- frontier: finite complete set of minimal weakenings of a c-acyclic CQ
- single_obstruction_dual: bounded enumeration of the dual of one instance
- check_hom_duality: decide whether (F, D) is a homomorphism duality
- dismantle_check, relativized_duality_exists, relativized_duality_construct
- critical_obstructions and the subsumption reduction used by the above

Intended usage:
    if is_c_acyclic(canonical_instance(q)):
        weaker = frontier(q).members
"""

from dataclasses import dataclass
from itertools import combinations, product
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple
import logging

import networkx as nx

from . import oracle
from .config import DEFAULT_CHECK_BOUND, DEFAULT_DUAL_CAP
from .errors import CapTooSmall, FrontierNotExists, InvalidParameter, NotCAcyclic
from .homcore import (
    arc_consistent,
    canonical_key,
    check_compatible,
    compute_core,
    dedupe_isomorphic,
    direct_product,
    disjoint_union_all,
    keep_hom_maximal,
    keep_hom_minimal,
    maps_to,
    pair_value,
)
from .model import ConjunctiveQuery, Fact, PointedInstance, Schema, Value, all_facts_instance, canonical_instance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Frontier:
    query: ConjunctiveQuery
    members: Tuple[ConjunctiveQuery, ...]

    def __iter__(self) -> Iterator[ConjunctiveQuery]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class DualitySide:
    examples: Tuple[PointedInstance, ...]

    def __iter__(self) -> Iterator[PointedInstance]:
        return iter(self.examples)

    def __len__(self) -> int:
        return len(self.examples)


def _uniform(members: Sequence[PointedInstance]) -> None:
    for other in members[1:]:
        check_compatible(members[0], other)


# --- c-acyclicity --- #

def _incidence_multigraph(e: PointedInstance) -> nx.MultiGraph:
    graph = nx.MultiGraph()
    graph.add_nodes_from(("v", v) for v in e.values)
    for n, fact in enumerate(e.sorted_facts):
        graph.add_node(("f", n))
        for v in fact.args:
            graph.add_edge(("f", n), ("v", v))
    return graph


def is_c_acyclic(e: PointedInstance) -> bool:
    """Every cycle of the incidence multigraph passes through a distinguished value."""
    graph = _incidence_multigraph(e)
    graph.remove_nodes_from(("v", d) for d in set(e.distinguished))
    return graph.number_of_nodes() == 0 or nx.is_forest(graph)


def fg_components(e: PointedInstance) -> List[Tuple[Fact, ...]]:
    """Facts grouped by shared non-distinguished values."""
    answers = set(e.distinguished)
    graph = nx.Graph()
    graph.add_nodes_from(e.sorted_facts)
    for v, occ in e.occurrences.items():
        if v in answers:
            continue
        facts = [f for f, _ in occ]
        graph.add_edges_from(zip(facts, facts[1:]))
    return sorted(tuple(sorted(c)) for c in nx.connected_components(graph))


# --- frontier construction --- #

def _fresh_prefix(values: Iterable[Value], base: str = "u") -> str:
    taken = list(values)
    prefix = base
    while any(v.startswith(prefix) for v in taken):
        prefix += base
    return prefix


def _component_frontier(component: Tuple[Fact, ...], answers: set, name: Callable[..., Value]) -> List[Fact]:
    holders: Dict[Value, List[int]] = {}
    for j, fact in enumerate(component):
        for v in fact.args:
            if v not in answers and j not in holders.setdefault(v, []):
                holders[v].append(j)
    facts = []
    for j, fact in enumerate(component):
        options = []
        for v in fact.args:
            if v in answers:
                options.append([(v, False), (name(v), True)])
            else:
                options.append([(name(v, k), k != j) for k in holders[v]])
        for choice in product(*options):
            if any(flag for _, flag in choice):
                facts.append(Fact(fact.relation, tuple(v for v, _ in choice)))
    return facts


def _unp_frontier(core: PointedInstance) -> List[PointedInstance]:
    answers = set(core.distinguished)
    prefix = _fresh_prefix(core.values)
    replicas: Dict[Tuple[int, Value, Optional[int]], Value] = {}
    members = []
    for i, component in enumerate(fg_components(core)):
        def name(v: Value, k: Optional[int] = None, i: int = i) -> Value:
            return replicas.setdefault((i, v, k), f"{prefix}{len(replicas)}")
        rest = [f for f in core.sorted_facts if f not in component]
        replaced = _component_frontier(component, answers, name)
        members.append(PointedInstance(core.schema, frozenset(rest + replaced), core.distinguished))
    return members


def _complete_instance(schema: Schema, distinguished: Tuple[Value, ...]) -> PointedInstance:
    values = sorted(set(distinguished))
    return PointedInstance(schema, frozenset(oracle.all_facts(schema, values)), distinguished)


def _minimal_weakenings(tup: Tuple[Value, ...]) -> Iterator[Tuple[Value, ...]]:
    """Tuples whose equality type splits exactly one class of ``tup`` in two."""
    classes: Dict[Value, List[int]] = {}
    for i, v in enumerate(tup):
        classes.setdefault(v, []).append(i)
    labels = {v: f"c{n}" for n, v in enumerate(classes)}
    for v, positions in classes.items():
        head, rest = positions[0], positions[1:]
        for size in range(0, len(rest)):
            for stay in combinations(rest, size):
                moved = set(rest) - set(stay)
                yield tuple(labels[w] + ("'" if i in moved else "") for i, w in enumerate(tup))


def _frontier_instances(core: PointedInstance) -> List[PointedInstance]:
    if core.has_unp:
        return _unp_frontier(core)
    reps = list(dict.fromkeys(core.distinguished))
    quotient = PointedInstance(core.schema, core.facts, tuple(reps))
    slot = [reps.index(v) for v in core.distinguished]
    members = [
        PointedInstance(core.schema, m.facts, tuple(m.distinguished[s] for s in slot))
        for m in _unp_frontier(quotient)
    ]
    for weaker in _minimal_weakenings(core.distinguished):
        members.append(compute_core(direct_product([core, _complete_instance(core.schema, weaker)])))
    return members


def frontier(q: ConjunctiveQuery) -> Frontier:
    """Frontier of the core of ``q``; raises FrontierNotExists if that core is not c-acyclic."""
    core = compute_core(canonical_instance(q))
    if not is_c_acyclic(core):
        raise FrontierNotExists(f"The core of {q} is not c-acyclic")
    members = tuple(ConjunctiveQuery(m, allow_unsafe=True) for m in _frontier_instances(core))
    logger.debug("frontier of %s: %d members", q, len(members))
    return Frontier(q, members)


# --- duals of single instances --- #

def _maximal_avoiding(e: PointedInstance, facts: Sequence[Fact], dist: Tuple[Value, ...]) -> List[PointedInstance]:
    """Inclusion-maximal subsets of ``facts`` into which ``e`` does not map."""
    schema = e.schema
    found: List[PointedInstance] = []

    def admits(chosen: Iterable[Fact]) -> bool:
        return maps_to(e, PointedInstance(schema, frozenset(chosen), dist))

    def go(i: int, chosen: List[Fact]) -> None:
        if i == len(facts):
            members = set(chosen)
            if all(admits(chosen + [f]) for f in facts if f not in members):
                found.append(PointedInstance(schema, frozenset(chosen), dist))
            return
        fact = facts[i]
        if not admits(chosen + [fact]):
            go(i + 1, chosen + [fact])
            # leaving the fact out only pays off if it becomes blocked later
            if not admits(chosen + [fact] + list(facts[i + 1:])):
                return
        go(i + 1, chosen)

    if not admits([]):
        go(0, [])
    return found


def _avoiding_level(core: PointedInstance, n: int) -> List[PointedInstance]:
    values = [f"d{i}" for i in range(n)]
    facts = oracle.all_facts(core.schema, values)
    found: List[PointedInstance] = []
    for pattern in oracle.distinguished_patterns(core.arity, n):
        found.extend(_maximal_avoiding(core, facts, tuple(values[i] for i in pattern)))
    return dedupe_isomorphic(found)


def dual_value_cap(e: PointedInstance) -> int:
    """Default bound on the values of dual members: the core size, at least DEFAULT_DUAL_CAP."""
    return max(DEFAULT_DUAL_CAP, len(compute_core(e).values))


def single_obstruction_dual(e: PointedInstance, size_cap: Optional[int] = None) -> DualitySide:
    """Members with at most ``size_cap`` values such that x maps into one iff e does not map to x.

    Instances avoiding ``e`` are enumerated level by level in the number of
    values. The first level from two on that only adds instances mapping into
    the members found so far ends the search; the members then agree with
    exhaustive enumeration on every instance of that size. Raises CapTooSmall
    when the level after ``size_cap`` (default ``dual_value_cap(e)``) still
    adds a member.
    """
    if not is_c_acyclic(e):
        raise NotCAcyclic(f"{e} is not c-acyclic")
    core = compute_core(e)
    cap = size_cap if size_cap is not None else dual_value_cap(core)
    if cap < 1:
        raise InvalidParameter(f"Size cap must be positive, got {cap}")
    dual: List[PointedInstance] = []
    for n in range(1, cap + 2):
        fresh = [c for c in _avoiding_level(core, n) if not any(maps_to(c, d) for d in dual)]
        if n >= 2 and not fresh:
            logger.debug("dual of %s: %d members, stable at %d values", e, len(dual), n)
            return DualitySide(tuple(dual))
        dual = keep_hom_maximal(dual + fresh)
    raise CapTooSmall(cap, f"the dual of {e} still grows at {cap + 1} values")


def products_covered(dual_sets: Sequence[Sequence[PointedInstance]], base: PointedInstance,
                     covered: Callable[[PointedInstance], bool]) -> bool:
    """Decide whether every product base × d1 × ... × dn (one di per set) is covered.

    ``covered`` must be closed under taking products, which lets covered
    partial products be dropped early.
    """
    states = [] if covered(base) else [base]
    for duals in dual_sets:
        if not states:
            return True
        seen: Dict[object, Optional[PointedInstance]] = {}
        for state in states:
            for d in duals:
                prod = direct_product([state, d])
                if not prod.is_data_example:
                    continue
                prod = compute_core(prod)
                key = canonical_key(prod)
                if key not in seen:
                    seen[key] = None if covered(prod) else prod
        states = [s for s in seen.values() if s is not None]
    return not states


def check_hom_duality(F: Iterable[PointedInstance], D: Iterable[PointedInstance], dual_cap: Optional[int] = None) -> bool:
    """Decide whether (F, D) is a homomorphism duality."""
    F, D = list(F), list(D)
    if not F and not D:
        return False
    _uniform(F + D)
    schema, arity = (F + D)[0].schema, (F + D)[0].arity
    F, D = keep_hom_minimal(F), keep_hom_maximal(D)
    if not all(is_c_acyclic(f) for f in F):
        return False
    if any(maps_to(f, d) for f in F for d in D):
        return False
    top = all_facts_instance(schema, arity)
    if not relativized_duality_exists(D, top):
        return False
    duals = [list(single_obstruction_dual(f, dual_cap)) for f in F]
    return products_covered(duals, top, lambda s: any(arc_consistent(s, d) for d in D))


# --- relativized dualities --- #

def _tracked_product(e1: PointedInstance, e2: PointedInstance) -> Tuple[PointedInstance, Dict[Value, Tuple[Value, Value]]]:
    prod = direct_product([e1, e2])
    parts = {pair_value(a, b): (a, b) for a in e1.values for b in e2.values}
    return prod, parts


def _dominates(e: PointedInstance, b: Value, a: Value) -> bool:
    for fact, i in e.occurrences[a]:
        args = list(fact.args)
        args[i] = b
        if Fact(fact.relation, tuple(args)) not in e.facts:
            return False
    return True


def dismantle_check(e_p: PointedInstance, e_e: PointedInstance) -> bool:
    """Whether the diagonal-in-p part of the square of core(p̄ × ē) dismantles to its diagonal."""
    check_compatible(e_p, e_e)
    prefix = "mark"
    while any(name.startswith(prefix) for name in e_p.schema.names):
        prefix += "_"
    markers = {p: f"{prefix}{i}" for i, p in enumerate(e_p.values)}
    schema = Schema(list(e_p.schema.relations) + [(m, 1) for m in markers.values()])
    p_bar = PointedInstance(schema, e_p.facts | {Fact(markers[p], (p,)) for p in e_p.values}, e_p.distinguished)
    e_bar = PointedInstance(
        schema,
        e_e.facts | {Fact(m, (v,)) for m in markers.values() for v in e_e.values},
        e_e.distinguished,
    )
    prod, parts = _tracked_product(p_bar, e_bar)
    i_bar = compute_core(prod)
    square, pairs = _tracked_product(i_bar, i_bar)
    origin = {v: parts[v][0] for v in i_bar.values}
    current = square.restrict(w for w, (v1, v2) in pairs.items() if origin[v1] == origin[v2])
    while True:
        off_diagonal = [w for w in current.values if pairs[w][0] != pairs[w][1]]
        if not off_diagonal:
            return True
        fold = next(
            (a for a in off_diagonal if any(b != a and _dominates(current, b, a) for b in current.values)),
            None,
        )
        if fold is None:
            logger.debug("dismantling stuck with %d off-diagonal values", len(off_diagonal))
            return False
        current = current.restrict(v for v in current.values if v != fold)


def non_subsumed(D: Iterable[PointedInstance], p: PointedInstance) -> List[PointedInstance]:
    """Members of D not strictly subsumed relative to p."""
    D = list(D)
    lifted = [direct_product([p, e]) for e in D]
    kept = []
    for i, e in enumerate(D):
        subsumed = any(
            j != i and maps_to(lifted[i], other) and not maps_to(lifted[j], e)
            for j, other in enumerate(D)
        )
        if not subsumed:
            kept.append(e)
    return kept


def strictly_subsumed(D: Iterable[PointedInstance], p: PointedInstance) -> List[PointedInstance]:
    D = list(D)
    kept = non_subsumed(D, p)
    return [e for e in D if all(e is not k for k in kept)]


def relativized_duality_exists(D: Iterable[PointedInstance], p: PointedInstance) -> bool:
    """Whether some finite F makes (F, D) a duality relative to p."""
    D = list(D)
    _uniform([p] + D)
    return all(dismantle_check(p, e) for e in non_subsumed(D, p))


def critical_obstructions(e: PointedInstance, p: PointedInstance, size_cap: int) -> List[PointedInstance]:
    """Instances A with at most ``size_cap`` values, A -> p, A -/-> e, and every proper subset of A's facts mapping to e."""
    check_compatible(e, p)
    if size_cap < 1:
        raise InvalidParameter(f"Size cap must be positive, got {size_cap}")
    schema = e.schema
    found: List[PointedInstance] = []
    for n in range(1, size_cap + 1):
        values = [f"a{i}" for i in range(n)]
        facts = oracle.all_facts(schema, values)
        for pattern in oracle.distinguished_patterns(e.arity, n):
            dist = tuple(values[i] for i in pattern)

            def inst(chosen: Iterable[Fact]) -> PointedInstance:
                return PointedInstance(schema, frozenset(chosen), dist)

            def go(start: int, chosen: List[Fact]) -> None:
                for i in range(start, len(facts)):
                    grown = chosen + [facts[i]]
                    candidate = inst(grown)
                    if not maps_to(candidate, p):
                        continue
                    if maps_to(candidate, e):
                        go(i + 1, grown)
                    elif all(maps_to(inst(grown[:k] + grown[k + 1:]), e) for k in range(len(grown))):
                        found.append(candidate)

            empty = inst([])
            if not maps_to(empty, p):
                continue
            if maps_to(empty, e):
                go(0, [])
            else:
                found.append(empty)
    return dedupe_isomorphic(found)


def relativized_duality_construct(D: Iterable[PointedInstance], p: PointedInstance, size_cap: int,
                                  check_bound: Optional[int] = None) -> DualitySide:
    """Build F with members of bounded size so that (F, D) is a duality relative to p.

    The result is validated by the brute-force oracle on instances with up to
    ``check_bound`` values; a failed validation raises CapTooSmall.
    """
    D = list(D)
    _uniform([p] + D)
    kept = non_subsumed(D, p)
    per_example = [keep_hom_minimal(critical_obstructions(e, p, size_cap)) for e in kept]
    combos = [disjoint_union_all(choice, p.schema, p.arity) for choice in product(*per_example)]
    F = keep_hom_minimal(combos)
    logger.info("relativized dual: %d members from %d combinations", len(F), len(combos))
    bound = DEFAULT_CHECK_BOUND if check_bound is None else check_bound
    if bound and not oracle.brute_check_duality(F, D, bound, p):
        raise CapTooSmall(size_cap, f"constructed set fails validation on instances with {bound} values")
    return DualitySide(tuple(F))
