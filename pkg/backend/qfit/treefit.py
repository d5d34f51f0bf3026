from __future__ import annotations

"""
Tree CQs over binary schemas: simulations, unravelings, and tree fittings.

Provides:
- max_simulation / simulates: greatest simulation between two instances
- unravel: the m-finite unraveling of a pointed instance
- TreeNode with cq_to_tree / tree_to_cq / is_tree_cq and enumerate_trees
- tree_frontier: the Generalize/Compensate frontier construction
- verify_tree_fitting and the capped searches for fitting, most-specific,
  unique, weakly most-general and basis tree CQs

Intended usage:
    outcome = exists_most_specific_tree(examples, depth_cap=8)
    if outcome.status is Status.NOT_UP_TO_CAP:
        ...
"""

from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Set, Tuple
import logging

import networkx as nx

from .cqfit import FittingKind, SearchOutcome, positive_product, require_valid
from .errors import ArityMismatch, CapTooSmall, InvalidParameter, NonBinarySchema, NotATree, SchemaMismatch
from .frontier_duality import Frontier, products_covered, single_obstruction_dual
from .homcore import compute_core, keep_hom_minimal
from .model import ConjunctiveQuery, Fact, LabeledExamples, PointedInstance, Schema, Value

logger = logging.getLogger(__name__)

Role = Tuple[str, bool]  # (relation, forward)


def _require_binary(schema: Schema) -> None:
    if not schema.is_binary:
        wide = sorted(name for name, arity in schema.relations if arity > 2)
        raise NonBinarySchema(f"Relations {wide} have arity above 2")


def _require_unary_examples(examples: LabeledExamples) -> None:
    require_valid(examples)
    _require_binary(examples.schema)
    if examples.arity != 1:
        raise ArityMismatch(f"Tree CQs are unary, the examples have arity {examples.arity}")


# --- simulations --- #

@dataclass(frozen=True)
class SimulationRelation:
    pairs: FrozenSet[Tuple[Value, Value]]

    def __contains__(self, pair: object) -> bool:
        return pair in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)


def _labels(e: PointedInstance) -> Dict[Value, FrozenSet[str]]:
    found: Dict[Value, Set[str]] = {v: set() for v in e.values}
    for name in e.schema.unary:
        for fact in e.by_relation[name]:
            found[fact.args[0]].add(name)
    return {v: frozenset(s) for v, s in found.items()}


def _neighbours(e: PointedInstance) -> Dict[Tuple[Value, Role], Tuple[Value, ...]]:
    found: Dict[Tuple[Value, Role], List[Value]] = {}
    for name in e.schema.binary:
        for fact in e.by_relation[name]:
            a, b = fact.args
            found.setdefault((a, (name, True)), []).append(b)
            found.setdefault((b, (name, False)), []).append(a)
    return {k: tuple(v) for k, v in found.items()}


def max_simulation(I: PointedInstance, J: PointedInstance) -> SimulationRelation:
    """Greatest relation S with unary labels preserved and every R / R⁻ step of I answered in J within S."""
    _require_binary(I.schema)
    _require_binary(J.schema)
    if I.schema != J.schema:
        raise SchemaMismatch(f"Schemas differ: {I.schema.as_dict()} vs {J.schema.as_dict()}")
    li, lj = _labels(I), _labels(J)
    ni, nj = _neighbours(I), _neighbours(J)
    roles = [(name, fwd) for name in I.schema.binary for fwd in (True, False)]
    rel = {a: {b for b in J.values if li[a] <= lj[b]} for a in I.values}

    def answered(a: Value, b: Value) -> bool:
        for role in roles:
            for a2 in ni.get((a, role), ()):
                if not any(b2 in rel[a2] for b2 in nj.get((b, role), ())):
                    return False
        return True

    changed = True
    while changed:
        changed = False
        for a in I.values:
            for b in sorted(rel[a]):
                if not answered(a, b):
                    rel[a].discard(b)
                    changed = True
    return SimulationRelation(frozenset((a, b) for a, bs in rel.items() for b in bs))


def simulates(e1: PointedInstance, e2: PointedInstance) -> bool:
    """(e1, a) ⪯ (e2, b) for the single distinguished values a and b."""
    if e1.arity != 1 or e2.arity != 1:
        raise InvalidParameter(f"Simulation compares unary pointed instances, got arities {e1.arity} and {e2.arity}")
    return (e1.distinguished[0], e2.distinguished[0]) in max_simulation(e1, e2)


# --- unravelings --- #

@dataclass(frozen=True)
class Path:
    """A walk a₁ ρ₁ a₂ ... through an instance; ρ is a role R or R⁻."""
    start: Value
    steps: Tuple[Tuple[Role, Value], ...] = ()

    @property
    def end(self) -> Value:
        return self.steps[-1][1] if self.steps else self.start

    @property
    def length(self) -> int:
        return len(self.steps) + 1

    def extend(self, role: Role, value: Value) -> "Path":
        return Path(self.start, self.steps + ((role, value),))

    @property
    def name(self) -> str:
        parts = [self.start]
        for (rel, fwd), value in self.steps:
            parts += [rel if fwd else f"{rel}-", value]
        return "/".join(parts)


def unravel(e: PointedInstance, m: int) -> PointedInstance:
    """Tree over the paths from the distinguished value with at most ``m`` values."""
    _require_binary(e.schema)
    if e.arity != 1:
        raise InvalidParameter(f"Unraveling needs a unary pointed instance, got arity {e.arity}")
    if m < 1:
        raise InvalidParameter(f"Unraveling depth must be at least 1, got {m}")
    labels = _labels(e)
    neighbours = _neighbours(e)
    roles = [(name, fwd) for name in e.schema.binary for fwd in (True, False)]
    root = Path(e.distinguished[0])
    facts: List[Fact] = []
    frontier = [root]
    while frontier:
        grown = []
        for path in frontier:
            facts += [Fact(name, (path.name,)) for name in sorted(labels.get(path.end, ()))]
            if path.length == m:
                continue
            for role in roles:
                for value in neighbours.get((path.end, role), ()):
                    child = path.extend(role, value)
                    rel, fwd = role
                    facts.append(Fact(rel, (path.name, child.name) if fwd else (child.name, path.name)))
                    grown.append(child)
        frontier = grown
    return PointedInstance(e.schema, frozenset(facts), (root.name,))


# --- tree structures --- #

@dataclass(frozen=True)
class TreeNode:
    """A rooted tree: unary labels plus role-tagged children.

    ``origin`` names the query variable a node was derived from.
    """
    labels: FrozenSet[str] = frozenset()
    children: Tuple[Tuple[Role, "TreeNode"], ...] = ()
    origin: Optional[Value] = field(default=None, compare=False)

    @property
    def size(self) -> int:
        return 1 + sum(child.size for _, child in self.children)

    @property
    def shape(self) -> tuple:
        return tuple(sorted(self.labels)), tuple(sorted((role, child.shape) for role, child in self.children))

    def canonical(self) -> "TreeNode":
        kids = sorted(((role, child.canonical()) for role, child in self.children), key=lambda rc: (rc[0], rc[1].shape))
        return TreeNode(self.labels, tuple(kids))


def _tree_graph(e: PointedInstance) -> nx.MultiGraph:
    graph = nx.MultiGraph()
    graph.add_nodes_from(e.values)
    for name in e.schema.binary:
        graph.add_edges_from(fact.args for fact in e.by_relation[name])
    return graph


def is_tree_cq(q: ConjunctiveQuery) -> bool:
    """Unary, binary schema, and the binary atoms form a tree over all variables."""
    if q.arity != 1 or not q.schema.is_binary:
        return False
    return nx.is_tree(_tree_graph(q.body))


def _require_tree(q: ConjunctiveQuery) -> None:
    _require_binary(q.schema)
    if not is_tree_cq(q):
        raise NotATree(f"{q} is not a tree CQ")


def _tree_from(e: PointedInstance, root: Value) -> TreeNode:
    labels = _labels(e)

    def build(v: Value, parent: Optional[Fact]) -> TreeNode:
        kids = []
        for fact, pos in e.occurrences[v]:
            if len(fact.args) != 2 or fact == parent:
                continue
            other = fact.args[1 - pos]
            kids.append(((fact.relation, pos == 0), build(other, fact)))
        return TreeNode(labels[v], tuple(kids), origin=v)

    return build(root, None)


def cq_to_tree(q: ConjunctiveQuery) -> TreeNode:
    _require_tree(q)
    return _tree_from(q.body, q.answer_vars[0])


def tree_to_instance(tree: TreeNode, schema: Schema) -> PointedInstance:
    facts: List[Fact] = []
    counter = iter(range(tree.size))

    def emit(node: TreeNode) -> Value:
        name = f"x{next(counter)}"
        facts.extend(Fact(label, (name,)) for label in sorted(node.labels))
        for (rel, fwd), child in node.children:
            child_name = emit(child)
            facts.append(Fact(rel, (name, child_name) if fwd else (child_name, name)))
        return name

    root = emit(tree)
    return PointedInstance(schema, frozenset(facts), (root,))


def tree_to_cq(tree: TreeNode, schema: Schema) -> ConjunctiveQuery:
    return ConjunctiveQuery(tree_to_instance(tree.canonical(), schema), allow_unsafe=True)


def _as_tree_query(e: PointedInstance) -> ConjunctiveQuery:
    return tree_to_cq(_tree_from(e, e.distinguished[0]), e.schema)


def enumerate_trees(schema: Schema, max_nodes: int, max_degree: int) -> List[ConjunctiveQuery]:
    """Tree CQs with at most ``max_nodes`` variables and ``max_degree`` atoms per variable, up to isomorphism."""
    _require_binary(schema)
    roles = [(name, fwd) for name in schema.binary for fwd in (True, False)]
    label_sets = [frozenset(c) for k in range(len(schema.unary) + 1) for c in combinations(schema.unary, k)]
    cache: Dict[Tuple[int, bool], List[TreeNode]] = {}

    def multisets(items: Sequence[Tuple[int, Role, TreeNode]], start: int, total: int, slots: int
                  ) -> Iterator[List[Tuple[Role, TreeNode]]]:
        if total == 0:
            yield []
            return
        if slots == 0:
            return
        for i in range(start, len(items)):
            size, role, node = items[i]
            if size > total:
                continue
            for rest in multisets(items, i, total - size, slots - 1):
                yield [(role, node)] + rest

    def shapes(n: int, has_parent: bool) -> List[TreeNode]:
        key = (n, has_parent)
        if key not in cache:
            items = [(s, role, t) for s in range(1, n) for t in shapes(s, True) for role in roles]
            found = []
            for labels in label_sets:
                slots = max_degree - len(labels) - (1 if has_parent else 0)
                if slots < 0:
                    continue
                for kids in multisets(items, 0, n - 1, slots):
                    found.append(TreeNode(labels, tuple(kids)).canonical())
            cache[key] = sorted(found, key=lambda t: t.shape)
        return cache[key]

    trees = [t for n in range(1, max_nodes + 1) for t in shapes(n, False)]
    logger.debug("enumerated %d trees with <= %d nodes, degree <= %d", len(trees), max_nodes, max_degree)
    return [tree_to_cq(t, schema) for t in trees]


# --- tree frontier --- #

def _generalize(node: TreeNode) -> List[TreeNode]:
    """Trees one step weaker at ``node``: drop a label, or replace a child subtree by its generalizations."""
    found = [replace(node, labels=node.labels - {label}) for label in sorted(node.labels)]
    for i, (role, child) in enumerate(node.children):
        rest = node.children[:i] + node.children[i + 1:]
        weaker = tuple((role, g) for g in _generalize(child))
        found.append(replace(node, children=rest + weaker))
    return found


def _compensate(node: TreeNode, rooted: Dict[Value, TreeNode]) -> TreeNode:
    children = []
    for (rel, fwd), child in node.children:
        glued = rooted[node.origin]
        compensated = _compensate(child, rooted)
        compensated = replace(compensated, children=compensated.children + (((rel, not fwd), glued),))
        children.append(((rel, fwd), compensated))
    return replace(node, children=tuple(children))


def tree_frontier(q: ConjunctiveQuery) -> Frontier:
    _require_tree(q)
    core = compute_core(q.body)
    rooted = {v: _tree_from(core, v) for v in core.values}
    tree = rooted[core.distinguished[0]]
    members = tuple(tree_to_cq(_compensate(p, rooted), q.schema) for p in _generalize(tree))
    logger.debug("tree frontier of %s: %d members", q, len(members))
    return Frontier(q, members)


# --- fitting --- #

def _tree_fits(e: PointedInstance, examples: LabeledExamples) -> bool:
    return (all(simulates(e, pos) for pos in examples.positives)
            and not any(simulates(e, neg) for neg in examples.negatives))


def _tree_weakly_most_general(q: ConjunctiveQuery, examples: LabeledExamples) -> bool:
    return all(any(simulates(m.body, neg) for neg in examples.negatives) for m in tree_frontier(q))


def verify_tree_fitting(kind: FittingKind, q: ConjunctiveQuery, examples: LabeledExamples) -> bool:
    kind = FittingKind(kind)
    _require_unary_examples(examples)
    _require_tree(q)
    if q.schema != examples.schema:
        raise SchemaMismatch(f"Query schema {q.schema.as_dict()} differs from {examples.schema.as_dict()}")
    if not _tree_fits(q.body, examples):
        return False
    if kind is FittingKind.ANY:
        return True
    specific = simulates(positive_product(examples), q.body)
    if kind is FittingKind.MOST_SPECIFIC:
        return specific
    if kind is FittingKind.UNIQUE and not specific:
        return False
    return _tree_weakly_most_general(q, examples)


def exists_tree_fitting(examples: LabeledExamples, depth_cap: int) -> SearchOutcome:
    """Unravel the positive product to growing depth until it avoids every negative."""
    _require_unary_examples(examples)
    product = positive_product(examples)
    for m in range(1, depth_cap + 1):
        unraveled = unravel(product, m)
        fitting = not any(simulates(unraveled, neg) for neg in examples.negatives)
        logger.debug("unraveling depth %d: %d values, fits=%s", m, len(unraveled.values), fitting)
        if fitting:
            return SearchOutcome.found_with(_as_tree_query(unraveled), m)
    return SearchOutcome.not_up_to_cap(depth_cap)


def exists_most_specific_tree(examples: LabeledExamples, depth_cap: int) -> SearchOutcome:
    fitting = exists_tree_fitting(examples, depth_cap)
    if not fitting.found:
        return fitting
    product = positive_product(examples)
    for m in range(fitting.cap, depth_cap + 1):
        unraveled = unravel(product, m)
        if simulates(product, unraveled):
            return SearchOutcome.found_with(_as_tree_query(unraveled), m)
        logger.debug("product does not simulate into its depth-%d unraveling", m)
    return SearchOutcome.not_up_to_cap(depth_cap)


def exists_unique_tree(examples: LabeledExamples, depth_cap: int) -> SearchOutcome:
    """Most-specific fitting that is also weakly most-general; its simulation class is unique."""
    specific = exists_most_specific_tree(examples, depth_cap)
    if not specific.found:
        return specific
    if _tree_weakly_most_general(specific.witness, examples):
        return specific
    return SearchOutcome.not_exists()


def _degree_bound(examples: LabeledExamples) -> int:
    return examples.negative_size


def search_weakly_most_general_tree(examples: LabeledExamples, size_cap: int) -> SearchOutcome:
    _require_unary_examples(examples)
    candidates = enumerate_trees(examples.schema, size_cap, _degree_bound(examples))
    for q in candidates:
        if _tree_fits(q.body, examples) and _tree_weakly_most_general(q, examples):
            return SearchOutcome.found_with(q, size_cap)
    logger.info("no weakly most-general fitting tree among %d candidates", len(candidates))
    return SearchOutcome.not_up_to_cap(size_cap)


def _removals(node: TreeNode) -> Iterator[TreeNode]:
    """Trees obtained by deleting one label or one subtree anywhere below ``node``."""
    for label in sorted(node.labels):
        yield replace(node, labels=node.labels - {label})
    for i, (role, child) in enumerate(node.children):
        rest = node.children[:i] + node.children[i + 1:]
        yield replace(node, children=rest)
        for smaller in _removals(child):
            yield replace(node, children=rest[:i] + ((role, smaller),) + rest[i:])


def critical_tree_obstructions(examples: LabeledExamples, size_cap: int) -> List[ConjunctiveQuery]:
    """Fitting trees with at most ``size_cap`` nodes that stop fitting after any removal."""
    _require_unary_examples(examples)
    schema = examples.schema
    found = []
    for q in enumerate_trees(schema, size_cap, _degree_bound(examples)):
        if not _tree_fits(q.body, examples):
            continue
        tree = cq_to_tree(q)
        if not any(_tree_fits(tree_to_instance(r, schema), examples) for r in _removals(tree)):
            found.append(q)
    return found


def verify_tree_basis(qs: Sequence[ConjunctiveQuery], examples: LabeledExamples,
                      dual_cap: Optional[int] = None) -> bool:
    _require_unary_examples(examples)
    for q in qs:
        _require_tree(q)
    if not all(_tree_fits(q.body, examples) for q in qs):
        return False
    cores = keep_hom_minimal(q.body for q in qs)
    duals = [list(single_obstruction_dual(c, dual_cap)) for c in cores]
    negatives = examples.negatives
    return products_covered(duals, positive_product(examples),
                            lambda s: s.is_data_example and any(simulates(s, neg) for neg in negatives))


def search_tree_basis(examples: LabeledExamples, size_cap: int, dual_cap: Optional[int] = None) -> SearchOutcome:
    """Critical fitting trees up to ``size_cap`` nodes, returned when they verify as a basis."""
    criticals = critical_tree_obstructions(examples, size_cap)
    if not criticals:
        return SearchOutcome.not_up_to_cap(size_cap)
    members = [_as_tree_query(m) for m in keep_hom_minimal(q.body for q in criticals)]
    for t in enumerate_trees(examples.schema, size_cap + 1, _degree_bound(examples)):
        if t.body.is_data_example and _tree_fits(t.body, examples) and not any(simulates(m.body, t.body) for m in members):
            logger.info("fitting tree %s is covered by no critical tree up to %d nodes", t, size_cap)
            return SearchOutcome.not_up_to_cap(size_cap, criticals)
    try:
        verified = verify_tree_basis(members, examples, dual_cap)
    except CapTooSmall as exc:
        logger.info("basis check undecided: %s", exc)
        verified = False
    if verified:
        return SearchOutcome.found_with(members, size_cap)
    return SearchOutcome.not_up_to_cap(size_cap, criticals)
