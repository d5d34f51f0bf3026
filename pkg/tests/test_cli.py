import json

import pytest

from qfit.cli import EXIT_BUDGET, EXIT_INPUT_ERROR, execute, main
from qfit.homcore import is_isomorphic
from qfit.model import (
    ConjunctiveQuery,
    LabeledExamples,
    PointedInstance,
    Schema,
    all_facts_instance,
    dump_document,
    load_document,
)
from qfit.oracle import GRAPH, UNARY_PQ, clique, directed_cycle, directed_path, get_fixture, transitive_tournament


@pytest.fixture
def write(tmp_path):
    """Write a document (or raw text) into tmp_path and return its path."""
    def _write(name, doc):
        path = tmp_path / name
        path.write_text(doc if isinstance(doc, str) else dump_document(doc), encoding="utf-8")
        return str(path)
    return _write


def pointed(e, value):
    return PointedInstance(e.schema, e.facts, (value,))


# --- documents and fixtures --- #

def test_fixture_output_reparses():
    result = execute(["fixture", "loop-unique"])
    assert result.exit_code == 0
    assert load_document(result.witness) == get_fixture("loop-unique")


def test_compact_format():
    result = execute(["--format", "compact", "fixture", "directed-cycle", "--n", "3"])
    assert "\n" not in result.witness
    assert is_isomorphic(load_document(result.witness), directed_cycle(3))


def test_format_from_config(tmp_path):
    config = tmp_path / "qfit.toml"
    config.write_text('[qfit]\nformat = "compact"\n', encoding="utf-8")
    result = execute(["--config", str(config), "fixture", "p-only"])
    assert "\n" not in result.witness


# --- fitting --- #

def test_verify_unique(write):
    examples = write("e.json", get_fixture("loop-unique"))
    query = write("q.json", ConjunctiveQuery(PointedInstance.build(GRAPH, [("R", "x", "x")], ("x",))))
    result = execute(["fit", "verify", "--kind", "unique", "-q", query, "-e", examples])
    assert (result.verdict, result.exit_code) == ("yes", 0)


def test_no_fitting_cq(write):
    result = execute(["fit", "exists", "-e", write("e.json", get_fixture("pq-pr-union"))])
    assert (result.verdict, result.exit_code) == ("no", 1)


def test_undecided_tree_search(write):
    examples = write("e.json", get_fixture("self-loop"))
    result = execute(["fit", "exists", "--lang", "tree", "--kind", "most-specific", "--cap", "8", "-e", examples])
    assert (result.verdict, result.exit_code) == ("not-up-to-cap", 2)
    assert "cap 8" in result.diagnostics


def test_cap_from_config(tmp_path, write):
    config = tmp_path / "qfit.toml"
    config.write_text("cap = 3\n", encoding="utf-8")
    examples = write("e.json", get_fixture("self-loop"))
    result = execute(["--config", str(config), "fit", "exists", "--lang", "tree", "--kind", "most-specific", "-e", examples])
    assert result.exit_code == 2
    assert "cap 3" in result.diagnostics


def test_construct_then_verify(write):
    examples = write("e.json", get_fixture("ternary-most-specific"))
    built = execute(["fit", "construct", "--kind", "most-specific", "-e", examples])
    assert built.exit_code == 0
    query = write("q.json", built.witness)
    result = execute(["fit", "verify", "--kind", "most-specific", "-q", query, "-e", examples])
    assert result.exit_code == 0


def test_tree_witness_is_a_query(write):
    examples = write("e.json", get_fixture("p-only"))
    result = execute(["fit", "construct", "--lang", "tree", "--kind", "weakly-most-general", "--cap", "3", "-e", examples])
    assert result.exit_code == 0
    assert isinstance(load_document(result.witness), ConjunctiveQuery)


def test_basis_existence(write):
    result = execute(["fit", "exists", "--kind", "basis", "-e", write("e.json", get_fixture("symmetric-edge"))])
    assert result.exit_code == 1


def test_ucq_verify(write):
    examples = write("e.json", get_fixture("path-tournament"))
    query = write("q.json", ConjunctiveQuery(directed_path(3)))
    result = execute(["fit", "verify", "--lang", "ucq", "--kind", "most-general", "-q", query, "-e", examples])
    assert result.exit_code == 0


# --- instance operations --- #

def test_hom(write):
    c6, c3 = write("c6.json", directed_cycle(6)), write("c3.json", directed_cycle(3))
    result = execute(["hom", c6, c3])
    assert result.exit_code == 0
    payload = json.loads(result.witness)
    assert payload["kind"] == "mapping"
    assert len(payload["pairs"]) == 6
    missing = execute(["hom", c3, write("c2.json", directed_cycle(2))])
    assert (missing.exit_code, missing.diagnostics) == (1, "no homomorphism")


def test_budget_exceeded(write):
    c6, c3 = write("c6.json", directed_cycle(6)), write("c3.json", directed_cycle(3))
    result = execute(["--budget", "1", "hom", c6, c3])
    assert (result.verdict, result.exit_code) == ("error", EXIT_BUDGET)


def test_core(write):
    e = PointedInstance.build(GRAPH, [("R", "a", "b"), ("R", "c", "b")])
    result = execute(["core", write("e.json", e)])
    assert len(load_document(result.witness).facts) == 1


def test_product_and_union(write):
    c2, c3 = write("c2.json", directed_cycle(2)), write("c3.json", directed_cycle(3))
    product = load_document(execute(["product", c2, c3]).witness)
    assert is_isomorphic(product, directed_cycle(6))
    union = load_document(execute(["union", c2, c3]).witness)
    assert len(union.values) == 5


def test_cacyclic(write):
    assert execute(["cacyclic", write("p.json", directed_path(2))]).exit_code == 0
    assert execute(["cacyclic", write("c.json", directed_cycle(3))]).exit_code == 1


def test_frontier(write):
    q = write("q.json", ConjunctiveQuery(PointedInstance.build(GRAPH, [("R", "x", "y")], ("x",))))
    result = execute(["frontier", q])
    members = load_document(result.witness)
    assert len(members) == 1
    assert not members[0].is_safe
    tree = execute(["frontier", "--lang", "tree", q])
    assert len(load_document(tree.witness)) == 1
    assert execute(["frontier", write("c.json", ConjunctiveQuery(directed_cycle(3)))]).exit_code == 1


def test_dual_commands(write):
    path, tournament = write("p.json", directed_path(3)), write("t.json", transitive_tournament(3))
    single = load_document(execute(["dual", "single", path, "--cap", "3"]).witness)
    assert len(single) == 1
    assert is_isomorphic(single[0], transitive_tournament(3))
    assert execute(["dual", "check", "--f", path, "--d", tournament]).exit_code == 0
    top = write("top.json", all_facts_instance(GRAPH, 0))
    assert execute(["dual", "relative-exists", "--d", write("k2.json", clique(2)), "--p", top]).exit_code == 1


def test_relative_construct(write):
    D = write("d.json", PointedInstance.build(UNARY_PQ, [("P", "a"), ("Q", "a")]))
    p = write("p.json", all_facts_instance(UNARY_PQ, 0))
    result = execute(["dual", "relative-construct", "--d", D, "--p", p, "--cap", "2"])
    assert result.exit_code == 0
    F = load_document(result.witness)
    assert len(F) == 1
    assert is_isomorphic(F[0], PointedInstance.build(UNARY_PQ, [("R", "a", "b")]))


def test_sim_and_unravel(write):
    a = write("a.json", pointed(directed_cycle(3), "c0"))
    b = write("b.json", pointed(directed_cycle(2), "c0"))
    result = execute(["sim", a, b])
    assert result.exit_code == 0
    assert len(json.loads(result.witness)["pairs"]) == 6

    schema = Schema({"P": 1, "R": 2})
    labeled = write("l.json", PointedInstance.build(schema, [("R", "x", "y"), ("P", "y")], ("x",)))
    bare = write("r.json", PointedInstance.build(schema, [("R", "u", "v")], ("u",)))
    assert execute(["sim", labeled, bare]).exit_code == 1

    loop = write("loop.json", PointedInstance.build(GRAPH, [("R", "a", "a")], ("a",)))
    unraveled = load_document(execute(["unravel", loop, "--depth", "2"]).witness)
    assert len(unraveled.values) == 3


# --- input errors --- #

@pytest.mark.parametrize(
    "argv",
    [
        ["fixture", "no-such-fixture"],
        ["no-such-command"],
        ["core", "/nonexistent/file.json"],
    ],
)
def test_input_errors(argv):
    assert execute(argv).exit_code == EXIT_INPUT_ERROR


def test_malformed_document(write):
    path = write("bad.json", "{not json")
    result = execute(["core", path])
    assert result.exit_code == EXIT_INPUT_ERROR
    assert result.diagnostics.startswith(path)


def test_wrong_document_kind(write):
    examples = write("e.json", get_fixture("loop-unique"))
    result = execute(["fit", "verify", "-q", examples, "-e", examples])
    assert result.exit_code == EXIT_INPUT_ERROR
    assert "expected" in result.diagnostics


def test_verify_needs_query(write):
    result = execute(["fit", "verify", "-e", write("e.json", get_fixture("loop-unique"))])
    assert result.exit_code == EXIT_INPUT_ERROR


def test_main_prints_witness(capsys):
    assert main(["fixture", "p-only"]) == 0
    out = capsys.readouterr().out
    assert isinstance(load_document(out), LabeledExamples)


def test_main_prints_diagnostics(write, capsys):
    c3 = write("c3.json", directed_cycle(3))
    assert main(["hom", c3, write("c2.json", directed_cycle(2))]) == 1
    assert "no homomorphism" in capsys.readouterr().err


def test_kind_not_available_for_language(write):
    examples = write("e.json", get_fixture("p-only"))
    result = execute(["fit", "exists", "--lang", "ucq", "--kind", "weakly-most-general", "-e", examples])
    assert result.exit_code == EXIT_INPUT_ERROR
    assert "not available" in result.diagnostics
