import itertools

import pytest

from qfit.cqfit import FittingKind, Status
from qfit.errors import ArityMismatch, InvalidParameter, NonBinarySchema, NotATree
from qfit.homcore import hom_equivalent, is_isomorphic, maps_to
from qfit.model import ConjunctiveQuery, LabeledExamples, PointedInstance, Schema
from qfit.oracle import GRAPH, TREE_SCHEMA, directed_cycle, enumerate_instances, get_fixture
from qfit.treefit import (
    Path,
    TreeNode,
    cq_to_tree,
    critical_tree_obstructions,
    enumerate_trees,
    exists_most_specific_tree,
    exists_tree_fitting,
    exists_unique_tree,
    is_tree_cq,
    max_simulation,
    search_tree_basis,
    search_weakly_most_general_tree,
    simulates,
    tree_frontier,
    tree_to_cq,
    unravel,
    verify_tree_basis,
    verify_tree_fitting,
)

AR = Schema({"A": 1, "R": 2})
P_R = Schema({"P": 1, "R": 2})


def tree(schema, facts, root="x"):
    return ConjunctiveQuery(PointedInstance.build(schema, facts, (root,)), allow_unsafe=True)


def at(e, value):
    return PointedInstance(e.schema, e.facts, (value,))


# --- simulations --- #

def test_simulation_of_cycles():
    relation = max_simulation(directed_cycle(3), directed_cycle(2))
    assert len(relation) == 6
    assert simulates(at(directed_cycle(3), "c0"), at(directed_cycle(2), "c1"))


def test_simulation_preserves_labels():
    a = PointedInstance.build(P_R, [("R", "x", "y"), ("P", "y")], ("x",))
    b = PointedInstance.build(P_R, [("R", "a", "b")], ("a",))
    assert not simulates(a, b)
    assert simulates(b, a)
    assert ("y", "b") not in max_simulation(a, b)


def test_simulation_needs_unary_instances():
    with pytest.raises(InvalidParameter):
        simulates(directed_cycle(3), directed_cycle(3))


def test_simulation_needs_binary_schema():
    wide = Schema({"T": 3})
    e = PointedInstance.build(wide, [("T", "a", "b", "c")], ("a",))
    with pytest.raises(NonBinarySchema):
        max_simulation(e, e)


@pytest.mark.timeout(600)
def test_simulation_matches_homomorphism_on_trees():
    targets = list(enumerate_instances(GRAPH, 1, 2))
    for q, target in itertools.product(enumerate_trees(GRAPH, 3, 2), targets):
        assert simulates(q.body, target) == maps_to(q.body, target), (q, target)


# --- unravelings --- #

def test_path_names():
    path = Path("a").extend(("R", True), "b").extend(("R", False), "a")
    assert path.name == "a/R/b/R-/a"
    assert path.end == "a"
    assert path.length == 3


def test_unravel_self_loop():
    loop = PointedInstance.build(GRAPH, [("R", "a", "a")], ("a",))
    u2 = unravel(loop, 2)
    assert set(u2.values) == {"a", "a/R/a", "a/R-/a"}
    assert set(map(str, u2.sorted_facts)) == {"R(a,a/R/a)", "R(a/R-/a,a)"}
    assert u2.distinguished == ("a",)


def test_unravel_depth_one_keeps_labels():
    e = PointedInstance.build(P_R, [("P", "a"), ("R", "a", "b")], ("a",))
    assert set(map(str, unravel(e, 1).sorted_facts)) == {"P(a)"}


def test_unravel_of_tree_is_equivalent():
    t = PointedInstance.build(GRAPH, [("R", "x", "y"), ("R", "y", "z")], ("x",))
    assert hom_equivalent(unravel(t, 3), t)


def test_unravel_rejects_bad_depth():
    loop = PointedInstance.build(GRAPH, [("R", "a", "a")], ("a",))
    with pytest.raises(InvalidParameter):
        unravel(loop, 0)


@pytest.mark.timeout(600)
def test_simulation_via_unravelings():
    instances = list(enumerate_instances(GRAPH, 1, 2))
    unraveled = {e: [unravel(e, m) for m in range(1, 6)] for e in instances}
    for e, target in itertools.product(instances, instances):
        results = [simulates(u, target) for u in unraveled[e]]
        if simulates(e, target):
            assert all(results), (e, target)
        else:
            assert not results[-1], (e, target)


# --- tree structures --- #

def test_is_tree_cq():
    assert is_tree_cq(tree(GRAPH, [("R", "x", "y"), ("R", "z", "y")]))
    assert not is_tree_cq(tree(GRAPH, [("R", "x", "x")]))
    assert not is_tree_cq(tree(GRAPH, [("R", "x", "y"), ("R", "y", "x")]))
    assert not is_tree_cq(ConjunctiveQuery(PointedInstance.build(GRAPH, [("R", "x", "y")])))


def test_tree_round_trip():
    q = tree(AR, [("R", "x", "y"), ("A", "y"), ("R", "z", "x")])
    node = cq_to_tree(q)
    assert node.size == 3
    assert is_isomorphic(tree_to_cq(node, AR).body, q.body)


def test_tree_node_canonical_order():
    a = TreeNode(frozenset({"A"}))
    b = TreeNode()
    left = TreeNode(children=((("R", True), a), (("R", True), b)))
    right = TreeNode(children=((("R", True), b), (("R", True), a)))
    assert left.canonical() == right.canonical()


def test_cq_to_tree_rejects_cycles():
    with pytest.raises(NotATree):
        cq_to_tree(tree(GRAPH, [("R", "x", "y"), ("R", "y", "x")]))


def test_enumerate_trees():
    trees = enumerate_trees(GRAPH, 2, 2)
    # root alone, and one R or R⁻ edge
    assert len(trees) == 3
    assert all(is_tree_cq(t) for t in trees)
    assert all(len(t.body.values) <= 3 for t in enumerate_trees(AR, 3, 3))


# --- tree frontier --- #

def test_tree_frontier_of_label():
    members = tree_frontier(tree(AR, [("A", "x")])).members
    assert len(members) == 1
    assert members[0].body.facts == frozenset()


def test_tree_frontier_of_edge_with_label():
    members = tree_frontier(tree(AR, [("R", "x", "y"), ("A", "y")])).members
    assert len(members) == 1
    expected = PointedInstance.build(AR, [("R", "x", "y"), ("R", "z", "y"), ("R", "z", "w"), ("A", "w")], ("x",))
    assert is_isomorphic(members[0].body, expected)


@pytest.mark.timeout(600)
def test_tree_frontier_sound_and_complete():
    candidates = enumerate_trees(AR, 4, 3)
    for q in enumerate_trees(AR, 3, 2):
        members = tree_frontier(q).members
        for m in members:
            assert simulates(m.body, q.body), (q, m)
            assert not simulates(q.body, m.body), (q, m)
        for other in candidates:
            if simulates(other.body, q.body) and not simulates(q.body, other.body):
                assert any(simulates(other.body, m.body) for m in members), (q, other)


# --- fitting --- #

def test_verify_tree_fitting_self_loop():
    E = get_fixture("self-loop")
    q = tree(GRAPH, [("R", "x", "y")])
    assert verify_tree_fitting(FittingKind.ANY, q, E)
    assert not verify_tree_fitting(FittingKind.MOST_SPECIFIC, q, E)


def test_no_most_specific_tree_for_self_loop():
    E = get_fixture("self-loop")
    loop = E.positives[0]
    assert exists_most_specific_tree(E, 8).status is Status.NOT_UP_TO_CAP
    assert not any(simulates(loop, unravel(loop, m)) for m in range(1, 9))


def test_most_specific_tree_of_edge():
    e = PointedInstance.build(GRAPH, [("R", "a", "b")], ("a",))
    E = LabeledExamples(GRAPH, 1, (e,))
    outcome = exists_most_specific_tree(E, 4)
    assert outcome.found
    assert hom_equivalent(outcome.witness.body, e)
    assert verify_tree_fitting(FittingKind.MOST_SPECIFIC, outcome.witness, E)


def test_tree_fitting_trivial_without_negatives():
    E = get_fixture("self-loop")
    outcome = exists_tree_fitting(E, 3)
    assert outcome.found
    assert outcome.cap == 1


def test_cycles_have_no_tree_fitting_up_to_cap():
    E = LabeledExamples(GRAPH, 1, (at(directed_cycle(3), "c0"),), (at(directed_cycle(2), "c0"),))
    outcome = exists_tree_fitting(E, 8)
    assert outcome.status is Status.NOT_UP_TO_CAP
    assert outcome.cap == 8


def test_tree_lower_bound_fitting():
    E = get_fixture("tree-lower-bound", 1)
    outcome = exists_tree_fitting(E, 3)
    assert outcome.found
    assert outcome.cap == 2
    assert verify_tree_fitting(FittingKind.ANY, outcome.witness, E)
    assert not any(verify_tree_fitting(FittingKind.ANY, t, E) for t in enumerate_trees(TREE_SCHEMA, 2, 4))
    three = tree(TREE_SCHEMA, [("R", "x", "y"), ("L", "x", "z"), ("A", "y"), ("A", "z")])
    assert verify_tree_fitting(FittingKind.ANY, three, E)


def test_unique_tree():
    E = LabeledExamples(
        P_R, 1,
        (PointedInstance.build(P_R, [("R", "a", "b")], ("a",)),),
        (PointedInstance.build(P_R, [("P", "c")], ("c",)),),
    )
    outcome = exists_unique_tree(E, 4)
    assert outcome.found
    assert verify_tree_fitting(FittingKind.UNIQUE, outcome.witness, E)


def test_no_unique_tree_without_negatives():
    E = LabeledExamples(GRAPH, 1, (PointedInstance.build(GRAPH, [("R", "a", "b")], ("a",)),))
    assert exists_unique_tree(E, 4).status is Status.NOT_EXISTS


def test_weakly_most_general_tree():
    E = get_fixture("p-only")
    outcome = search_weakly_most_general_tree(E, 3)
    assert outcome.found
    assert verify_tree_fitting(FittingKind.WEAKLY_MOST_GENERAL, outcome.witness, E)


@pytest.mark.timeout(600)
def test_no_weakly_most_general_tree():
    outcome = search_weakly_most_general_tree(get_fixture("p-or-loop"), 6)
    assert outcome.status is Status.NOT_UP_TO_CAP
    assert outcome.cap == 6


def test_tree_fitting_needs_unary_examples():
    with pytest.raises(ArityMismatch):
        exists_tree_fitting(get_fixture("path-tournament"), 3)


def test_tree_fitting_needs_binary_schema():
    with pytest.raises(NonBinarySchema):
        exists_tree_fitting(LabeledExamples(Schema({"T": 3}), 1), 3)


def test_verify_rejects_non_tree():
    with pytest.raises(NotATree):
        verify_tree_fitting(FittingKind.ANY, tree(GRAPH, [("R", "x", "x")]), get_fixture("self-loop"))


# --- bases --- #

def test_tree_basis_for_p_only():
    E = get_fixture("p-only")
    both = [tree(P_R, [("R", "x", "y")]), tree(P_R, [("R", "y", "x")])]
    assert verify_tree_basis(both, E, dual_cap=2)
    assert not verify_tree_basis(both[:1], E, dual_cap=2)
    outcome = search_tree_basis(E, 3, dual_cap=2)
    assert outcome.found
    assert len(outcome.witness) == 2


@pytest.mark.timeout(600)
def test_no_tree_basis_for_p_or_loop():
    E = get_fixture("p-or-loop")
    candidates = [tree(P_R, [("P", "x"), ("R", "x", "y")]), tree(P_R, [("P", "x"), ("R", "y", "x")])]
    assert not verify_tree_basis(candidates, E, dual_cap=2)
    outcome = search_tree_basis(E, 4, dual_cap=2)
    assert outcome.status is Status.NOT_UP_TO_CAP
    assert len(outcome.partial) >= 3


def test_critical_trees():
    found = critical_tree_obstructions(get_fixture("p-only"), 3)
    assert {len(q.body.facts) for q in found} == {1}
    assert len(found) == 2


def test_no_criticals_when_top_is_negative():
    top = PointedInstance.build(P_R, [("P", "t"), ("R", "t", "t")], ("t",))
    E = LabeledExamples(P_R, 1, (), (top,))
    outcome = search_tree_basis(E, 3)
    assert outcome.status is Status.NOT_UP_TO_CAP
    assert outcome.partial == ()
