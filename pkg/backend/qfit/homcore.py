from __future__ import annotations

"""
Homomorphism engine.

Provides:
- find_homomorphism: backtracking search with generalized arc consistency
- arc_consistent: the propagation alone, as a decision procedure
- compute_core, direct_product, disjoint_union, hom_equivalent
- is_isomorphic, canonical_key, canonical_relabel for deduplication
- keep_hom_minimal / keep_hom_maximal to normalize sets of examples
- search_budget: context manager bounding the node count of every search

Intended usage:
    with search_budget(100_000):
        h = find_homomorphism(src, dst)
"""

from collections import Counter, defaultdict, deque
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple
import logging

import networkx as nx

from .config import DEFAULT_BUDGET
from .errors import ArityMismatch, BudgetExceeded, InvalidParameter, SchemaMismatch
from .model import Fact, PointedInstance, Schema, Value, all_facts_instance

logger = logging.getLogger(__name__)

_BUDGET: ContextVar[int] = ContextVar("qfit_search_budget", default=DEFAULT_BUDGET)

Domains = Dict[Value, Set[Value]]


@contextmanager
def search_budget(nodes: int) -> Iterator[int]:
    """Bound every homomorphism search started inside the block to ``nodes`` nodes."""
    if nodes < 1:
        raise InvalidParameter(f"Budget must be positive, got {nodes}")
    token = _BUDGET.set(nodes)
    try:
        yield nodes
    finally:
        _BUDGET.reset(token)


def current_budget() -> int:
    return _BUDGET.get()


@dataclass(frozen=True)
class Mapping:
    """A homomorphism, as sorted (source, target) pairs."""
    pairs: Tuple[Tuple[Value, Value], ...]

    def as_dict(self) -> Dict[Value, Value]:
        return dict(self.pairs)

    def __getitem__(self, value: Value) -> Value:
        return self.as_dict()[value]


def check_compatible(src: PointedInstance, dst: PointedInstance) -> None:
    if src.schema != dst.schema:
        raise SchemaMismatch(f"Schemas differ: {src.schema.as_dict()} vs {dst.schema.as_dict()}")
    if src.arity != dst.arity:
        raise ArityMismatch(f"Arities differ: {src.arity} vs {dst.arity}")


def _initial_domains(src: PointedInstance, dst: PointedInstance) -> Optional[Domains]:
    targets = set(dst.values)
    if src.values and not targets:
        return None
    domains: Domains = {v: set(targets) for v in src.values}
    for a, b in zip(src.distinguished, dst.distinguished):
        domains[a] &= {b}
        if not domains[a]:
            return None
    return domains


def _supports(fact: Fact, candidates: Sequence[Fact], domains: Domains, same_image: bool) -> List[Fact]:
    found = []
    for target in candidates:
        bound: Dict[Value, Value] = {}
        for x, y in zip(fact.args, target.args):
            if y not in domains[x] or (same_image and bound.setdefault(x, y) != y):
                break
        else:
            found.append(target)
    return found


def _propagate(src: PointedInstance, dst: PointedInstance, domains: Domains, pending: Iterable[Fact],
               same_image: bool = True) -> bool:
    """Generalized arc consistency; narrows ``domains`` in place.

    With ``same_image`` a repeated value must meet one target value in a
    supporting fact. That holds for homomorphisms only; plain arc consistency
    treats every position on its own.
    """
    queue = deque(pending)
    queued = set(queue)
    while queue:
        fact = queue.popleft()
        queued.discard(fact)
        support = _supports(fact, dst.by_relation[fact.relation], domains, same_image)
        for i, x in enumerate(fact.args):
            allowed = {t.args[i] for t in support}
            if domains[x] <= allowed:
                continue
            domains[x] &= allowed
            if not domains[x]:
                return False
            for other, _ in src.occurrences[x]:
                if other not in queued:
                    queued.add(other)
                    queue.append(other)
    return True


def find_homomorphism(src: PointedInstance, dst: PointedInstance, *, budget: Optional[int] = None) -> Optional[Mapping]:
    """Return a homomorphism src -> dst, or None when there is none.

    Source values are assigned in order of descending degree (ties by name);
    after each assignment arc consistency is re-established.
    """
    check_compatible(src, dst)
    limit = budget if budget is not None else _BUDGET.get()
    domains = _initial_domains(src, dst)
    if domains is None or not _propagate(src, dst, domains, src.sorted_facts):
        return None
    order = sorted(src.values, key=lambda v: (-src.degree(v), v))
    nodes = 0

    def search(i: int, doms: Domains) -> Optional[Domains]:
        nonlocal nodes
        nodes += 1
        if nodes > limit:
            raise BudgetExceeded(limit)
        if i == len(order):
            return doms
        var = order[i]
        for choice in sorted(doms[var]):
            trial = {v: set(d) for v, d in doms.items()}
            trial[var] = {choice}
            if _propagate(src, dst, trial, [f for f, _ in src.occurrences[var]]):
                found = search(i + 1, trial)
                if found is not None:
                    return found
        return None

    result = search(0, domains)
    logger.debug("hom search %d values -> %d values: %d nodes, %s",
                 len(src.values), len(dst.values), nodes, "found" if result else "none")
    if result is None:
        return None
    return Mapping(tuple((v, next(iter(result[v]))) for v in src.values))


def maps_to(src: PointedInstance, dst: PointedInstance) -> bool:
    return find_homomorphism(src, dst) is not None


def arc_consistent(src: PointedInstance, dst: PointedInstance) -> bool:
    """True iff arc consistency leaves every domain non-empty.

    Equivalently every c-acyclic instance mapping to ``src`` maps to ``dst``.
    """
    check_compatible(src, dst)
    domains = _initial_domains(src, dst)
    return domains is not None and _propagate(src, dst, domains, src.sorted_facts, same_image=False)


def hom_equivalent(e1: PointedInstance, e2: PointedInstance) -> bool:
    return maps_to(e1, e2) and maps_to(e2, e1)


def image(e: PointedInstance, h: Mapping) -> PointedInstance:
    return e.rename(h.as_dict())


def compute_core(e: PointedInstance) -> PointedInstance:
    """Retract ``e`` until no value can be folded away; distinguished values stay fixed."""
    current = e
    shrinking = True
    while shrinking:
        shrinking = False
        fixed = set(current.distinguished)
        for v in current.values:
            if v in fixed:
                continue
            target = current.restrict(x for x in current.values if x != v)
            h = find_homomorphism(current, target)
            if h is not None:
                current = image(current, h)
                shrinking = True
                break
    return current


def pair_value(a: Value, b: Value) -> Value:
    return f"({a},{b})"


def _product2(e1: PointedInstance, e2: PointedInstance) -> PointedInstance:
    facts = []
    for name in e1.schema.names:
        for f in e1.by_relation[name]:
            for g in e2.by_relation[name]:
                facts.append(Fact(name, tuple(pair_value(a, b) for a, b in zip(f.args, g.args))))
    dist = tuple(pair_value(a, b) for a, b in zip(e1.distinguished, e2.distinguished))
    return PointedInstance(e1.schema, frozenset(facts), dist)


def direct_product(es: Sequence[PointedInstance], schema: Optional[Schema] = None, arity: Optional[int] = None) -> PointedInstance:
    """Left-associated product; the empty product is the all-facts singleton."""
    es = list(es)
    if not es:
        if schema is None or arity is None:
            raise InvalidParameter("The empty product needs a schema and an arity")
        return all_facts_instance(schema, arity)
    result = es[0]
    for e in es[1:]:
        check_compatible(result, e)
        result = _product2(result, e)
    return result


def disjoint_union(e1: PointedInstance, e2: PointedInstance) -> PointedInstance:
    """Union with distinguished tuples identified positionally.

    Positions are merged whenever either side repeats a value, so the result
    maps to y exactly when both inputs do.
    """
    check_compatible(e1, e2)
    k = e1.arity
    parent = list(range(k))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for tup in (e1.distinguished, e2.distinguished):
        first: Dict[Value, int] = {}
        for i, v in enumerate(tup):
            j = first.setdefault(v, i)
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    class_name = {i: e1.distinguished[find(i)] for i in range(k)}

    left = {v: class_name[i] for i, v in enumerate(e1.distinguished)}
    used = set(class_name.values()) | {v for v in e1.values if v not in left}
    right: Dict[Value, Value] = {v: class_name[i] for i, v in enumerate(e2.distinguished)}
    for v in e2.values:
        if v in right:
            continue
        name = v
        while name in used:
            name += "'"
        used.add(name)
        right[v] = name
    facts = e1.rename(left).facts | e2.rename(right).facts
    return PointedInstance(e1.schema, facts, tuple(class_name[i] for i in range(k)))


def disjoint_union_all(es: Sequence[PointedInstance], schema: Schema, arity: int) -> PointedInstance:
    """Fold disjoint_union over ``es``; the empty union has no facts."""
    es = list(es)
    if not es:
        return PointedInstance(schema, frozenset(), tuple(f"d{i}" for i in range(arity)))
    result = es[0]
    for e in es[1:]:
        result = disjoint_union(result, e)
    return result


# --- isomorphism and canonical forms --- #

def _incidence_graph(e: PointedInstance) -> nx.Graph:
    graph = nx.Graph()
    for v in e.values:
        graph.add_node(("v", v), label=tuple(i for i, d in enumerate(e.distinguished) if d == v))
    for n, fact in enumerate(e.sorted_facts):
        graph.add_node(("f", n), label=fact.relation)
        for v in set(fact.args):
            positions = tuple(i for i, x in enumerate(fact.args) if x == v)
            graph.add_edge(("f", n), ("v", v), pos=positions)
    return graph


def is_isomorphic(e1: PointedInstance, e2: PointedInstance) -> bool:
    if e1.schema != e2.schema or e1.arity != e2.arity:
        return False
    if len(e1.facts) != len(e2.facts) or len(e1.values) != len(e2.values):
        return False
    matcher = nx.algorithms.isomorphism.GraphMatcher(
        _incidence_graph(e1),
        _incidence_graph(e2),
        node_match=lambda a, b: a["label"] == b["label"],
        edge_match=lambda a, b: a["pos"] == b["pos"],
    )
    return matcher.is_isomorphic()


CanonicalKey = Tuple[int, Tuple[int, ...], Tuple[Tuple[str, Tuple[int, ...]], ...]]


def _refine(e: PointedInstance, colors: Dict[Value, int]) -> Dict[Value, int]:
    """Color refinement until the partition is stable."""
    while True:
        signature = {
            v: (colors[v], tuple(sorted(
                (f.relation, i, tuple(colors[w] for w in f.args)) for f, i in e.occurrences[v]
            )))
            for v in e.values
        }
        ranks = {s: r for r, s in enumerate(sorted(set(signature.values())))}
        refined = {v: ranks[signature[v]] for v in e.values}
        if len(ranks) == len(set(colors.values())):
            return refined
        colors = refined


def _encode(e: PointedInstance, order: Sequence[Value]) -> CanonicalKey:
    index = {v: i for i, v in enumerate(order)}
    facts = tuple(sorted((f.relation, tuple(index[v] for v in f.args)) for f in e.facts))
    return (len(order), tuple(index[v] for v in e.distinguished), facts)


def _best_labeling(e: PointedInstance, colors: Dict[Value, int],
                   best: Optional[Tuple[CanonicalKey, Tuple[Value, ...]]]) -> Tuple[CanonicalKey, Tuple[Value, ...]]:
    colors = _refine(e, colors)
    cells: Dict[int, List[Value]] = {}
    for v in e.values:
        cells.setdefault(colors[v], []).append(v)
    split = next((c for c in sorted(cells) if len(cells[c]) > 1), None)
    if split is None:
        order = tuple(sorted(e.values, key=colors.__getitem__))
        key = _encode(e, order)
        if best is None or key < best[0]:
            return key, order
        return best
    for v in cells[split]:
        individualized = {w: 2 * c + 1 for w, c in colors.items()}
        individualized[v] = 2 * colors[v]
        best = _best_labeling(e, individualized, best)
    return best


def _initial_colors(e: PointedInstance) -> Dict[Value, int]:
    initial = {
        v: (tuple(i for i, d in enumerate(e.distinguished) if d == v),
            tuple(sorted((f.relation, i) for f, i in e.occurrences[v])))
        for v in e.values
    }
    ranks = {s: r for r, s in enumerate(sorted(set(initial.values())))}
    return {v: ranks[initial[v]] for v in e.values}


def _labeling(e: PointedInstance) -> Tuple[CanonicalKey, Tuple[Value, ...]]:
    if not e.values:
        return _encode(e, ()), ()
    return _best_labeling(e, _initial_colors(e), None)


def _invariant(e: PointedInstance) -> Tuple:
    """Sizes, relation counts and the stable color histogram; isomorphic instances agree."""
    colors = _refine(e, _initial_colors(e)) if e.values else {}
    relations = Counter(f.relation for f in e.facts)
    return len(e.values), tuple(sorted(relations.items())), tuple(sorted(Counter(colors.values()).items()))


def canonical_key(e: PointedInstance) -> CanonicalKey:
    """Isomorphism-invariant key: equal keys iff the instances are isomorphic."""
    return _labeling(e)[0]


def canonical_relabel(e: PointedInstance, prefix: str = "v") -> PointedInstance:
    """Rename values to ``v0, v1, ...`` following the canonical labeling."""
    _, order = _labeling(e)
    return e.rename({v: f"{prefix}{i}" for i, v in enumerate(order)})


def dedupe_isomorphic(es: Iterable[PointedInstance]) -> List[PointedInstance]:
    """First instance of every isomorphism class, in canonical-key order.

    Instances are bucketed by their refinement invariant; within a bucket
    ``is_isomorphic`` decides.
    """
    buckets: Dict[Tuple, List[PointedInstance]] = defaultdict(list)
    for e in es:
        bucket = buckets[_invariant(e)]
        if not any(is_isomorphic(e, rep) for rep in bucket):
            bucket.append(e)
    return sorted((e for bucket in buckets.values() for e in bucket), key=canonical_key)


def _dedupe_equivalent(es: Iterable[PointedInstance]) -> List[PointedInstance]:
    cores = dedupe_isomorphic(compute_core(e) for e in es)
    kept: List[PointedInstance] = []
    for e in cores:
        if not any(hom_equivalent(e, other) for other in kept):
            kept.append(e)
    return kept


def keep_hom_minimal(es: Iterable[PointedInstance]) -> List[PointedInstance]:
    """Cores of ``es`` minus every member into which another member maps."""
    cores = _dedupe_equivalent(es)
    return [e for e in cores if not any(o is not e and maps_to(o, e) for o in cores)]


def keep_hom_maximal(es: Iterable[PointedInstance]) -> List[PointedInstance]:
    """Cores of ``es`` minus every member that maps into another member."""
    cores = _dedupe_equivalent(es)
    return [e for e in cores if not any(o is not e and maps_to(e, o) for o in cores)]
