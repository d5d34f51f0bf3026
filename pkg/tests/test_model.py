import pytest

from qfit.errors import ArityMismatch, DocumentError, InvalidParameter, SchemaMismatch, WellDefinednessError
from qfit.homcore import is_isomorphic
from qfit.model import (
    ConjunctiveQuery,
    Fact,
    LabeledExamples,
    PointedInstance,
    Schema,
    UnionOfCQs,
    all_facts_instance,
    canonical_cq,
    canonical_instance,
    dump_document,
    load_document,
    read_document,
    validate_collection,
)
from qfit.oracle import GRAPH, get_fixture


@pytest.mark.parametrize(
    "relations",
    [
        {"R": 0},
        {"R": -1},
        {"R": True},
        {"": 1},
        [("R", 2), ("R", 1)],
    ],
)
def test_schema_rejects_bad_relations(relations):
    with pytest.raises(InvalidParameter):
        Schema(relations)


def test_schema_properties():
    schema = Schema({"R": 2, "P": 1, "T": 3})
    assert schema.names == ("P", "R", "T")
    assert schema.unary == ("P",)
    assert schema.binary == ("R",)
    assert schema.max_arity == 3
    assert not schema.is_binary
    assert schema == Schema([("T", 3), ("P", 1), ("R", 2)])


def test_instance_checks_facts_against_schema():
    with pytest.raises(SchemaMismatch):
        PointedInstance.build(GRAPH, [("S", "a", "b")])
    with pytest.raises(ArityMismatch):
        PointedInstance.build(GRAPH, [("R", "a")])


def test_instance_values_include_distinguished():
    e = PointedInstance.build(GRAPH, [("R", "b", "c")], ("a",))
    assert e.adom == frozenset({"b", "c"})
    assert e.values == ("a", "b", "c")
    assert not e.is_data_example
    assert e.arity == 1


def test_unique_names_property():
    e = PointedInstance.build(GRAPH, [("R", "a", "b")], ("a", "a"))
    assert not e.has_unp
    assert PointedInstance.build(GRAPH, [("R", "a", "b")], ("a", "b")).has_unp


def test_all_facts_instance():
    schema = Schema({"P": 1, "R": 2})
    top = all_facts_instance(schema, 2)
    assert top.facts == {Fact("P", ("⋆",)), Fact("R", ("⋆", "⋆"))}
    assert top.distinguished == ("⋆", "⋆")


def test_canonical_cq_renders_atoms():
    e = PointedInstance.build(GRAPH, [("R", "a", "b"), ("R", "b", "a"), ("R", "b", "b")], ("b",))
    q = canonical_cq(e)
    assert str(q) == "q(x_b) :- R(x_a,x_b) ∧ R(x_b,x_a) ∧ R(x_b,x_b)"
    assert q.answer_vars == ("x_b",)
    assert q.existential_vars == ("x_a",)
    assert is_isomorphic(canonical_instance(q), e)


def test_canonical_cq_boolean():
    e = PointedInstance.build(Schema({"P": 1}), [("P", "a")])
    assert str(canonical_cq(e)) == "q :- P(x_a)"


def test_canonical_cq_requires_data_example():
    e = PointedInstance.build(GRAPH, [("R", "a", "b")], ("c",))
    with pytest.raises(WellDefinednessError):
        canonical_cq(e)


def test_unsafe_query_needs_opt_in():
    body = PointedInstance.build(GRAPH, [], ("x",))
    with pytest.raises(WellDefinednessError):
        ConjunctiveQuery(body)
    q = ConjunctiveQuery(body, allow_unsafe=True)
    assert not q.is_safe
    assert str(q) == "q(x) :- true"


def test_union_requires_uniform_disjuncts():
    a = ConjunctiveQuery(PointedInstance.build(GRAPH, [("R", "x", "y")], ("x",)))
    b = ConjunctiveQuery(PointedInstance.build(GRAPH, [("R", "x", "y")]))
    with pytest.raises(ArityMismatch):
        UnionOfCQs((a, b))
    with pytest.raises(InvalidParameter):
        UnionOfCQs(())


def test_validate_collection_accepts_fixture():
    assert validate_collection(get_fixture("ternary-most-specific")) == []


def test_validate_collection_reports_violations():
    ok = PointedInstance.build(GRAPH, [("R", "a", "b")], ("a",))
    wrong_arity = PointedInstance.build(GRAPH, [("R", "a", "b")])
    outside = PointedInstance.build(GRAPH, [("R", "a", "b")], ("z",))
    other_schema = PointedInstance.build(Schema({"R": 2, "P": 1}), [("R", "a", "b")], ("a",))
    E = LabeledExamples(GRAPH, 1, (ok, wrong_arity), (outside, other_schema))
    rules = [(v.example, v.rule) for v in validate_collection(E)]
    assert rules == [
        ("positives[1]", "arity"),
        ("negatives[0]", "data-example"),
        ("negatives[1]", "schema"),
    ]


def test_negative_size_counts_facts():
    assert get_fixture("edge-p-or-q").negative_size == 4


# --- documents --- #

@pytest.mark.parametrize(
    "obj",
    [
        PointedInstance.build(GRAPH, [("R", "a", "b")], ("a",)),
        canonical_cq(PointedInstance.build(GRAPH, [("R", "a", "b"), ("R", "b", "b")], ("b",))),
        ConjunctiveQuery(PointedInstance.build(GRAPH, [], ("x",)), allow_unsafe=True),
        get_fixture("pq-pr-union"),
        get_fixture("loop-unique"),
    ],
)
def test_document_round_trip(obj):
    assert load_document(dump_document(obj)) == obj


def test_ucq_and_list_documents():
    qs = [
        canonical_cq(PointedInstance.build(GRAPH, [("R", "a", "b")])),
        canonical_cq(PointedInstance.build(GRAPH, [("R", "a", "a")])),
    ]
    assert load_document(dump_document(UnionOfCQs(tuple(qs)))) == UnionOfCQs(tuple(qs))
    assert load_document(dump_document(qs)) == qs
    instances = [q.body for q in qs]
    assert load_document(dump_document(instances)) == instances


def test_empty_list_document_needs_schema():
    with pytest.raises(InvalidParameter):
        dump_document([])
    assert load_document(dump_document([], schema=GRAPH)) == []


def test_compact_layout_is_single_line():
    text = dump_document(PointedInstance.build(GRAPH, [("R", "a", "b")]), pretty=False)
    assert "\n" not in text
    assert text.startswith('{"schema":{"R":2},"kind":"instance"')


@pytest.mark.parametrize(
    "text,location",
    [
        ("{not json", "line 1 column 2"),
        ('{"kind": "instance"}', "schema"),
        ('{"schema": {"R": 2}, "kind": "graph"}', "kind"),
        ('{"schema": {"R": 0}, "kind": "instance"}', "schema"),
        ('{"schema": {"R": 2}, "kind": "instance", "facts": [["S", "a", "b"]]}', "document.facts[0]"),
        ('{"schema": {"R": 2}, "kind": "instance", "facts": [["R", "a"]]}', "document.facts[0]"),
        ('{"schema": {"R": 2}, "kind": "cq", "facts": [], "distinguished": ["x"]}', "document"),
        ('{"schema": {"R": 2}, "kind": "ucq", "disjuncts": []}', "disjuncts"),
        ('{"schema": {"R": 2}, "kind": "examples", "positives": [], "negatives": [], "arity": -1}', "arity"),
    ],
)
def test_malformed_documents(text, location):
    with pytest.raises(DocumentError) as info:
        load_document(text)
    assert info.value.location == location


def test_unsafe_flag_in_document():
    q = load_document('{"schema": {"R": 2}, "kind": "cq", "facts": [], "distinguished": ["x"], "unsafe": true}')
    assert isinstance(q, ConjunctiveQuery)
    assert not q.is_safe


def test_examples_arity_inferred():
    E = load_document('{"schema": {"P": 1}, "kind": "examples", '
                      '"positives": [{"facts": [["P", "a"]], "distinguished": ["a"]}], "negatives": []}')
    assert E.arity == 1


def test_read_document_names_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"schema": {"R": 2}}')
    with pytest.raises(DocumentError) as info:
        read_document(str(path))
    assert info.value.location == f"{path}: kind"
