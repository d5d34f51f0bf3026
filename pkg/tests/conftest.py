import pytest

from qfit.model import LabeledExamples, PointedInstance, Schema
from qfit.oracle import GRAPH, get_fixture


def graph(edges, distinguished=()):
    return PointedInstance.build(GRAPH, [("R", a, b) for a, b in edges], distinguished)


def pointed(schema, facts, distinguished=()):
    return PointedInstance.build(schema, facts, distinguished)


@pytest.fixture
def make_graph():
    return graph


@pytest.fixture
def make_instance():
    return pointed


@pytest.fixture
def fixture_examples():
    """Named example collections from the fixture registry."""
    return get_fixture


@pytest.fixture
def pr_schema():
    return Schema({"P": 1, "R": 2})


@pytest.fixture
def boolean_examples():
    def _build(schema, positives=(), negatives=()):
        return LabeledExamples(schema, 0, tuple(positives), tuple(negatives))
    return _build
