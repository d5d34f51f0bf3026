from __future__ import annotations

"""
Brute-force enumerators and fixture generators.

Provides:
- all_facts / distinguished_patterns: the raw material of every bounded search
- enumerate_labeled_instances, enumerate_instances, enumerate_cqs
- brute_check_duality / find_duality_counterexample: exhaustive duality test
- FixtureFamily, gen_fixture and the named fixture registry (get_fixture, list_fixtures)

Intended usage:
    E = get_fixture("prime-cycles", 3)
    assert brute_check_duality([path], [tournament], 3)
"""

from dataclasses import dataclass
from itertools import combinations, product
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union
import logging

from .errors import InvalidParameter
from .homcore import canonical_key, canonical_relabel, check_compatible, maps_to
from .model import (
    ConjunctiveQuery,
    Fact,
    LabeledExamples,
    PointedInstance,
    Schema,
    Value,
)

logger = logging.getLogger(__name__)

Fixture = Union[PointedInstance, LabeledExamples]


def all_facts(schema: Schema, values: Sequence[Value]) -> List[Fact]:
    """Every fact over ``values``, in sorted order."""
    facts = [
        Fact(name, args)
        for name, arity in schema.relations
        for args in product(values, repeat=arity)
    ]
    return sorted(facts)


def distinguished_patterns(arity: int, n: int) -> List[Tuple[int, ...]]:
    """Restricted-growth tuples: one representative per equality type over ``n`` values."""
    found: List[Tuple[int, ...]] = []

    def go(prefix: Tuple[int, ...], top: int) -> None:
        if len(prefix) == arity:
            found.append(prefix)
            return
        for i in range(min(top + 2, n)):
            go(prefix + (i,), max(top, i))

    go((), -1)
    return found


def _fact_subsets(facts: Sequence[Fact]) -> Iterator[Tuple[Fact, ...]]:
    for size in range(len(facts) + 1):
        yield from combinations(facts, size)


def enumerate_labeled_instances(schema: Schema, arity: int, n: int) -> Iterator[PointedInstance]:
    """Pointed instances over the values ``v0 .. v{n-1}`` using all of them; no isomorphism reduction."""
    if n < 0:
        raise InvalidParameter(f"Value count must be non-negative, got {n}")
    values = [f"v{i}" for i in range(n)]
    if n == 0:
        if arity == 0:
            yield PointedInstance(schema, frozenset(), ())
        return
    everything = set(values)
    patterns = distinguished_patterns(arity, n)
    for chosen in _fact_subsets(all_facts(schema, values)):
        if {v for f in chosen for v in f.args} != everything:
            continue
        for pattern in patterns:
            yield PointedInstance(schema, frozenset(chosen), tuple(values[i] for i in pattern))


def enumerate_instances(schema: Schema, arity: int, max_values: int) -> Iterator[PointedInstance]:
    """Data examples with at most ``max_values`` values, one per isomorphism class.

    Instances come in order of value count, then canonical key.
    """
    if max_values < 1:
        raise InvalidParameter(f"max_values must be at least 1, got {max_values}")
    for n in range(max_values + 1):
        seen: Dict[object, PointedInstance] = {}
        for e in enumerate_labeled_instances(schema, arity, n):
            seen.setdefault(canonical_key(e), e)
        logger.debug("enumerate_instances: %d classes with %d values", len(seen), n)
        for key in sorted(seen):
            yield canonical_relabel(seen[key])


def enumerate_cqs(schema: Schema, arity: int, max_vars: int) -> Iterator[ConjunctiveQuery]:
    """Safe CQs with at most ``max_vars`` variables, up to isomorphism."""
    for e in enumerate_instances(schema, arity, max_vars):
        yield ConjunctiveQuery(canonical_relabel(e, prefix="x"))


def _reference(F: Sequence[PointedInstance], D: Sequence[PointedInstance],
               p: Optional[PointedInstance]) -> PointedInstance:
    members = list(F) + list(D) + ([p] if p is not None else [])
    if not members:
        raise InvalidParameter("Cannot infer a schema from an empty duality without p")
    for other in members[1:]:
        check_compatible(members[0], other)
    return members[0]


def find_duality_counterexample(F: Sequence[PointedInstance], D: Sequence[PointedInstance], max_values: int,
                                p: Optional[PointedInstance] = None) -> Optional[PointedInstance]:
    """First data example x (x -> p when p is given) violating: x maps into D iff no F member maps to x."""
    F, D = list(F), list(D)
    ref = _reference(F, D, p)
    checked = 0
    for n in range(max_values + 1):
        for x in enumerate_labeled_instances(ref.schema, ref.arity, n):
            if p is not None and not maps_to(x, p):
                continue
            checked += 1
            below = any(maps_to(x, d) for d in D)
            blocked = any(maps_to(f, x) for f in F)
            if below == blocked:
                logger.debug("duality counterexample after %d instances: %s", checked, x)
                return x
    logger.debug("duality holds on %d instances with up to %d values", checked, max_values)
    return None


def brute_check_duality(F: Sequence[PointedInstance], D: Sequence[PointedInstance], max_values: int,
                        p: Optional[PointedInstance] = None) -> bool:
    return find_duality_counterexample(F, D, max_values, p) is None


# --- fixtures --- #

GRAPH = Schema({"R": 2})
UNARY_PQ = Schema({"P": 1, "Q": 1, "R": 2})
TREE_SCHEMA = Schema({"A": 1, "L": 2, "R": 2})


def _graph(edges: Sequence[Tuple[Value, Value]], distinguished: Sequence[Value] = ()) -> PointedInstance:
    return PointedInstance.build(GRAPH, [("R", a, b) for a, b in edges], distinguished)


def _symmetric(edges: Sequence[Tuple[Value, Value]]) -> PointedInstance:
    return _graph([(a, b) for a, b in edges] + [(b, a) for a, b in edges])


def directed_cycle(n: int) -> PointedInstance:
    return _graph([(f"c{i}", f"c{(i + 1) % n}") for i in range(n)])


def clique(n: int) -> PointedInstance:
    return _graph([(f"k{i}", f"k{j}") for i in range(n) for j in range(n) if i != j])


def directed_path(n: int) -> PointedInstance:
    """Path with ``n`` edges."""
    return _graph([(f"p{i}", f"p{i + 1}") for i in range(n)])


def transitive_tournament(n: int) -> PointedInstance:
    return _graph([(f"t{i}", f"t{j}") for i in range(n) for j in range(i + 1, n)])


def wheel(n: int) -> PointedInstance:
    """Symmetric rim cycle of length ``n`` plus a hub adjacent to every rim value."""
    rim = [(f"w{i}", f"w{(i + 1) % n}") for i in range(n)]
    spokes = [("hub", f"w{i}") for i in range(n)]
    return _symmetric(rim + spokes)


def primes(n: int) -> List[int]:
    found: List[int] = []
    candidate = 2
    while len(found) < n:
        if all(candidate % p for p in found):
            found.append(candidate)
        candidate += 1
    return found


def prime_cycle_examples(n: int) -> LabeledExamples:
    ps = primes(n)
    return LabeledExamples(
        GRAPH, 0,
        positives=tuple(directed_cycle(p) for p in ps[1:]),
        negatives=(directed_cycle(ps[0]),),
    )


def lr_cycle(j: int) -> PointedInstance:
    """Cycle of length ``j`` carrying parallel R and L edges; A marks the last value."""
    facts = []
    for k in range(j):
        nxt = (k + 1) % j
        facts += [("R", str(k), str(nxt)), ("L", str(k), str(nxt))]
    facts.append(("A", str(j - 1)))
    return PointedInstance.build(TREE_SCHEMA, facts, ("0",))


def lr_trap() -> PointedInstance:
    """The negative instance on {00, 01, 10, 11, b}; distinguished 00."""
    low = ("00", "01", "10")
    facts = []
    for a in low:
        facts += [("R", "00", a), ("L", "00", a), ("R", "10", a), ("L", "01", a), ("R", "b", a), ("L", "b", a)]
    facts += [("L", "10", "11"), ("R", "01", "11")]
    facts += [("R", "b", "b"), ("L", "b", "b"), ("A", "b")]
    facts += [("R", "11", "11"), ("L", "11", "11"), ("A", "11")]
    return PointedInstance.build(TREE_SCHEMA, facts, ("00",))


def tree_lower_bound(n: int) -> LabeledExamples:
    trap = lr_trap()
    return LabeledExamples(
        TREE_SCHEMA, 1,
        positives=tuple(lr_cycle(p) for p in primes(n)),
        negatives=tuple(PointedInstance(TREE_SCHEMA, trap.facts, (a,)) for a in ("00", "01", "10")),
    )


def four_coloring() -> LabeledExamples:
    """A Boolean graph CQ fits iff the graph is 4-colorable but not 3-colorable."""
    return LabeledExamples(GRAPH, 0, positives=(clique(4),), negatives=(clique(3),))


def _examples(schema: Schema, arity: int, positives: Sequence[Sequence], negatives: Sequence[Sequence]) -> LabeledExamples:
    def build(example: Sequence) -> PointedInstance:
        facts, dist = example
        return PointedInstance.build(schema, facts, dist)
    return LabeledExamples(schema, arity, tuple(build(s) for s in positives), tuple(build(s) for s in negatives))


_K2 = [("R", "a", "b"), ("R", "b", "a")]

_UNIT_EXAMPLES: Dict[str, Callable[[], LabeledExamples]] = {
    "path-tournament": lambda: LabeledExamples(GRAPH, 0, (directed_path(3),), (transitive_tournament(3),)),
    "ternary-most-specific": lambda: _examples(
        Schema({"R": 3, "P": 1}), 0,
        [([("R", "a", "a", "b"), ("P", "a")], ()), ([("R", "c", "d", "d"), ("P", "c")], ())],
        [([], ())],
    ),
    "pq-conjunction": lambda: _examples(UNARY_PQ, 0, [], [([("P", "a"), ("Q", "a")], ())]),
    "p-or-q": lambda: _examples(UNARY_PQ, 0, [], [([("P", "a")], ()), ([("Q", "a")], ())]),
    "symmetric-edge": lambda: _examples(GRAPH, 0, [], [(_K2, ())]),
    "edge-p-or-q": lambda: _examples(UNARY_PQ, 0, [], [(_K2, ()), ([("P", "a")], ()), ([("Q", "a")], ())]),
    "loop-unique": lambda: _examples(
        GRAPH, 1,
        [([("R", "a", "b"), ("R", "b", "a"), ("R", "b", "b")], ("b",))],
        [([("R", "a", "b"), ("R", "b", "a"), ("R", "b", "b")], ("a",))],
    ),
    "pq-pr-union": lambda: _examples(
        Schema({"P": 1, "Q": 1, "R": 1}), 0,
        [([("P", "a"), ("Q", "a")], ()), ([("P", "a"), ("R", "a")], ())],
        [([("P", "a")], ()), ([("Q", "a"), ("R", "a")], ())],
    ),
    "self-loop": lambda: _examples(GRAPH, 1, [([("R", "a", "a")], ("a",))], []),
    "p-or-loop": lambda: _examples(
        Schema({"P": 1, "R": 2}), 1, [], [([("P", "a0")], ("a0",)), ([("R", "a0", "a0")], ("a0",))],
    ),
    "p-only": lambda: _examples(Schema({"P": 1, "R": 2}), 1, [], [([("P", "a")], ("a",))]),
}


@dataclass(frozen=True)
class FixtureFamily:
    """A parametrized fixture: ``name`` is a registry key, ``n`` its size parameter."""
    name: str
    n: Optional[int] = None


_FAMILIES: Dict[str, Tuple[Callable[[int], Fixture], int]] = {
    # name -> (builder, smallest valid n)
    "directed-cycle": (directed_cycle, 1),
    "clique": (clique, 1),
    "directed-path": (directed_path, 1),
    "transitive-tournament": (transitive_tournament, 1),
    "prime-cycles": (prime_cycle_examples, 1),
    "tree-lower-bound": (tree_lower_bound, 1),
    "wheel": (wheel, 3),
}

_DEFAULT_N = 3


def gen_fixture(family: FixtureFamily) -> Fixture:
    if family.name == "four-coloring":
        return four_coloring()
    if family.name in _UNIT_EXAMPLES:
        return _UNIT_EXAMPLES[family.name]()
    if family.name not in _FAMILIES:
        raise KeyError(f"Unknown fixture: {family.name!r}. Supported: {', '.join(list_fixtures())}")
    builder, smallest = _FAMILIES[family.name]
    n = _DEFAULT_N if family.n is None else family.n
    if isinstance(n, bool) or not isinstance(n, int) or n < smallest:
        raise InvalidParameter(f"Fixture {family.name!r} needs n >= {smallest}, got {n!r}")
    return builder(n)


def get_fixture(name: str, n: Optional[int] = None) -> Fixture:
    """Lookup a fixture by name (case-insensitive)."""
    return gen_fixture(FixtureFamily(name.lower(), n))


def list_fixtures() -> List[str]:
    return sorted(list(_FAMILIES) + ["four-coloring"] + list(_UNIT_EXAMPLES))
