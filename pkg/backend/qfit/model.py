from __future__ import annotations

"""
Relational data model and the JSON document format.

Provides:
- Schema, Fact and PointedInstance (facts plus a tuple of distinguished values)
- ConjunctiveQuery / UnionOfCQs as views over pointed instances
- LabeledExamples with invariant checking (validate_collection)
- canonical_cq / canonical_instance conversions
- load_document / dump_document for the CLI document format

Intended usage:
    schema = Schema({"R": 2, "P": 1})
    e = PointedInstance.build(schema, [("R", "a", "b"), ("P", "a")], ("a",))
    q = canonical_cq(e)
    text = dump_document(q)
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union
import json

from .errors import ArityMismatch, DocumentError, InvalidParameter, SchemaMismatch, WellDefinednessError

Value = str
TOP_VALUE = "⋆"


@dataclass(frozen=True)
class Schema:
    """Relation names with their arities, stored sorted by name."""
    relations: Tuple[Tuple[str, int], ...]

    def __init__(self, relations: Union[Mapping[str, int], Iterable[Tuple[str, int]]]):
        pairs = list(relations.items()) if isinstance(relations, Mapping) else list(relations)
        seen = set()
        for name, arity in pairs:
            if not isinstance(name, str) or not name:
                raise InvalidParameter(f"Relation name must be a non-empty string, got {name!r}")
            if isinstance(arity, bool) or not isinstance(arity, int) or arity < 1:
                raise InvalidParameter(f"Arity of {name!r} must be an integer >= 1, got {arity!r}")
            if name in seen:
                raise InvalidParameter(f"Duplicate relation name: {name!r}")
            seen.add(name)
        object.__setattr__(self, "relations", tuple(sorted(pairs)))

    def arity(self, name: str) -> int:
        for rel, arity in self.relations:
            if rel == name:
                return arity
        raise SchemaMismatch(f"Unknown relation: {name!r}")

    def __contains__(self, name: object) -> bool:
        return any(rel == name for rel, _ in self.relations)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(rel for rel, _ in self.relations)

    @property
    def unary(self) -> Tuple[str, ...]:
        return tuple(rel for rel, arity in self.relations if arity == 1)

    @property
    def binary(self) -> Tuple[str, ...]:
        return tuple(rel for rel, arity in self.relations if arity == 2)

    @property
    def max_arity(self) -> int:
        return max((arity for _, arity in self.relations), default=0)

    @property
    def is_binary(self) -> bool:
        return all(arity <= 2 for _, arity in self.relations)

    def as_dict(self) -> Dict[str, int]:
        return dict(self.relations)


@dataclass(frozen=True, order=True)
class Fact:
    relation: str
    args: Tuple[Value, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    def __str__(self) -> str:
        return f"{self.relation}({','.join(self.args)})"


FactLike = Union[Fact, Sequence[str]]


def _as_fact(item: FactLike) -> Fact:
    if isinstance(item, Fact):
        return item
    relation, *args = item
    return Fact(relation, tuple(args))


@dataclass(frozen=True)
class PointedInstance:
    """A finite instance together with a tuple of distinguished values.

    Distinguished values may lie outside the active domain, and may repeat.
    """
    schema: Schema
    facts: FrozenSet[Fact]
    distinguished: Tuple[Value, ...] = ()

    def __post_init__(self):
        facts = frozenset(_as_fact(f) for f in self.facts)
        for fact in facts:
            if fact.relation not in self.schema:
                raise SchemaMismatch(f"Fact {fact} uses relation {fact.relation!r} outside the schema")
            if len(fact.args) != self.schema.arity(fact.relation):
                raise ArityMismatch(
                    f"Fact {fact} has {len(fact.args)} arguments, "
                    f"relation {fact.relation!r} has arity {self.schema.arity(fact.relation)}"
                )
        object.__setattr__(self, "facts", facts)
        object.__setattr__(self, "distinguished", tuple(self.distinguished))

    @classmethod
    def build(cls, schema: Schema, facts: Iterable[FactLike], distinguished: Sequence[Value] = ()) -> "PointedInstance":
        return cls(schema, frozenset(_as_fact(f) for f in facts), tuple(distinguished))

    @cached_property
    def sorted_facts(self) -> Tuple[Fact, ...]:
        return tuple(sorted(self.facts))

    @cached_property
    def adom(self) -> FrozenSet[Value]:
        return frozenset(v for fact in self.facts for v in fact.args)

    @cached_property
    def values(self) -> Tuple[Value, ...]:
        """Active domain plus distinguished values, sorted."""
        return tuple(sorted(self.adom | set(self.distinguished)))

    @property
    def arity(self) -> int:
        return len(self.distinguished)

    @property
    def has_unp(self) -> bool:
        return len(set(self.distinguished)) == len(self.distinguished)

    @property
    def is_data_example(self) -> bool:
        return set(self.distinguished) <= self.adom

    @cached_property
    def by_relation(self) -> Dict[str, Tuple[Fact, ...]]:
        grouped: Dict[str, List[Fact]] = {name: [] for name in self.schema.names}
        for fact in self.sorted_facts:
            grouped[fact.relation].append(fact)
        return {name: tuple(facts) for name, facts in grouped.items()}

    @cached_property
    def occurrences(self) -> Dict[Value, Tuple[Tuple[Fact, int], ...]]:
        """Map each value to the (fact, position) pairs it occurs at."""
        occ: Dict[Value, List[Tuple[Fact, int]]] = {v: [] for v in self.values}
        for fact in self.sorted_facts:
            for i, v in enumerate(fact.args):
                occ[v].append((fact, i))
        return {v: tuple(pairs) for v, pairs in occ.items()}

    def degree(self, value: Value) -> int:
        return len(self.occurrences.get(value, ()))

    def rename(self, mapping: Mapping[Value, Value]) -> "PointedInstance":
        """Apply a (possibly non-injective) renaming; unmapped values stay."""
        def m(v: Value) -> Value:
            return mapping.get(v, v)
        return PointedInstance(
            self.schema,
            frozenset(Fact(f.relation, tuple(m(v) for v in f.args)) for f in self.facts),
            tuple(m(v) for v in self.distinguished),
        )

    def restrict(self, keep: Iterable[Value]) -> "PointedInstance":
        """Subinstance induced by ``keep``; the distinguished tuple is unchanged."""
        kept = set(keep)
        return PointedInstance(
            self.schema,
            frozenset(f for f in self.facts if all(v in kept for v in f.args)),
            self.distinguished,
        )

    def with_facts(self, facts: Iterable[Fact]) -> "PointedInstance":
        return PointedInstance(self.schema, frozenset(facts), self.distinguished)

    def __str__(self) -> str:
        body = ", ".join(str(f) for f in self.sorted_facts)
        return f"{{{body}}} @ ({','.join(self.distinguished)})"


def all_facts_instance(schema: Schema, arity: int, value: Value = TOP_VALUE) -> PointedInstance:
    """The single-value instance containing every possible fact."""
    facts = [Fact(name, (value,) * ar) for name, ar in schema.relations]
    return PointedInstance(schema, frozenset(facts), (value,) * arity)


@dataclass(frozen=True)
class ConjunctiveQuery:
    """A CQ read off its canonical instance; values are variables."""
    body: PointedInstance
    allow_unsafe: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not self.allow_unsafe and not self.is_safe:
            missing = sorted(set(self.body.distinguished) - self.body.adom)
            raise WellDefinednessError(f"Answer variables {missing} occur in no atom")

    @property
    def schema(self) -> Schema:
        return self.body.schema

    @property
    def arity(self) -> int:
        return self.body.arity

    @property
    def answer_vars(self) -> Tuple[Value, ...]:
        return self.body.distinguished

    @property
    def is_safe(self) -> bool:
        return self.body.is_data_example

    @property
    def existential_vars(self) -> Tuple[Value, ...]:
        answers = set(self.answer_vars)
        return tuple(v for v in self.body.values if v not in answers)

    def __str__(self) -> str:
        head = f"q({','.join(self.answer_vars)})" if self.answer_vars else "q"
        atoms = " ∧ ".join(str(f) for f in self.body.sorted_facts) or "true"
        return f"{head} :- {atoms}"


def canonical_cq(e: PointedInstance) -> ConjunctiveQuery:
    """The CQ with one variable ``x_<value>`` per value and one atom per fact."""
    if not e.is_data_example:
        outside = sorted(set(e.distinguished) - e.adom)
        raise WellDefinednessError(f"Distinguished values {outside} lie outside the active domain")
    return ConjunctiveQuery(e.rename({v: f"x_{v}" for v in e.values}))


def canonical_instance(q: ConjunctiveQuery) -> PointedInstance:
    return q.body


@dataclass(frozen=True)
class UnionOfCQs:
    disjuncts: Tuple[ConjunctiveQuery, ...]

    def __post_init__(self):
        disjuncts = tuple(self.disjuncts)
        if not disjuncts:
            raise InvalidParameter("A union of CQs needs at least one disjunct")
        first = disjuncts[0]
        for q in disjuncts[1:]:
            if q.schema != first.schema:
                raise SchemaMismatch("Disjuncts use different schemas")
            if q.arity != first.arity:
                raise ArityMismatch(f"Disjuncts have arities {first.arity} and {q.arity}")
        object.__setattr__(self, "disjuncts", disjuncts)

    @property
    def schema(self) -> Schema:
        return self.disjuncts[0].schema

    @property
    def arity(self) -> int:
        return self.disjuncts[0].arity

    def __str__(self) -> str:
        return " ∪ ".join(f"({q})" for q in self.disjuncts)


@dataclass(frozen=True)
class LabeledExamples:
    schema: Schema
    arity: int
    positives: Tuple[PointedInstance, ...] = ()
    negatives: Tuple[PointedInstance, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "positives", tuple(self.positives))
        object.__setattr__(self, "negatives", tuple(self.negatives))

    def labeled(self) -> Iterable[Tuple[str, PointedInstance]]:
        for i, e in enumerate(self.positives):
            yield f"positives[{i}]", e
        for i, e in enumerate(self.negatives):
            yield f"negatives[{i}]", e

    @property
    def negative_size(self) -> int:
        """||E⁻||: total number of facts over the negative examples."""
        return sum(len(e.facts) for e in self.negatives)


@dataclass(frozen=True)
class Violation:
    example: str
    rule: str
    message: str


def validate_collection(examples: LabeledExamples) -> List[Violation]:
    violations: List[Violation] = []
    for name, e in examples.labeled():
        if e.schema != examples.schema:
            violations.append(Violation(name, "schema", f"{name} uses schema {e.schema.as_dict()}"))
        if e.arity != examples.arity:
            violations.append(Violation(name, "arity", f"{name} has arity {e.arity}, expected {examples.arity}"))
        elif not e.is_data_example:
            outside = sorted(set(e.distinguished) - e.adom)
            violations.append(Violation(name, "data-example", f"{name} has distinguished values {outside} outside its active domain"))
    return violations


# --- document format --- #

Document = Union[PointedInstance, ConjunctiveQuery, UnionOfCQs, LabeledExamples, List[PointedInstance], List[ConjunctiveQuery]]


def _instance_body(e: PointedInstance) -> Dict[str, Any]:
    return {
        "facts": [[f.relation, *f.args] for f in e.sorted_facts],
        "distinguished": list(e.distinguished),
    }


def _cq_body(q: ConjunctiveQuery) -> Dict[str, Any]:
    body = _instance_body(q.body)
    if not q.is_safe:
        body["unsafe"] = True
    return body


def to_payload(obj: Document, schema: Optional[Schema] = None) -> Dict[str, Any]:
    """Build the ordered JSON object for a document (schema, kind, body)."""
    if isinstance(obj, PointedInstance):
        return {"schema": obj.schema.as_dict(), "kind": "instance", **_instance_body(obj)}
    if isinstance(obj, ConjunctiveQuery):
        return {"schema": obj.schema.as_dict(), "kind": "cq", **_cq_body(obj)}
    if isinstance(obj, UnionOfCQs):
        return {"schema": obj.schema.as_dict(), "kind": "ucq", "disjuncts": [_cq_body(q) for q in obj.disjuncts]}
    if isinstance(obj, LabeledExamples):
        return {
            "schema": obj.schema.as_dict(),
            "kind": "examples",
            "arity": obj.arity,
            "positives": [_instance_body(e) for e in obj.positives],
            "negatives": [_instance_body(e) for e in obj.negatives],
        }
    if isinstance(obj, (list, tuple)):
        items = list(obj)
        if schema is None:
            if not items:
                raise InvalidParameter("An empty list document needs an explicit schema")
            schema = items[0].schema
        if all(isinstance(i, ConjunctiveQuery) for i in items) and items:
            return {"schema": schema.as_dict(), "kind": "cq-list", "queries": [_cq_body(q) for q in items]}
        if all(isinstance(i, PointedInstance) for i in items):
            return {"schema": schema.as_dict(), "kind": "instance-list", "instances": [_instance_body(e) for e in items]}
    raise TypeError(f"Cannot serialize {type(obj).__name__}")


def render(payload: Mapping[str, Any], pretty: bool = True) -> str:
    if pretty:
        return json.dumps(payload, indent=2, ensure_ascii=False)
    return json.dumps(payload, separators=(",", ":"), ensure_ascii=False)


def dump_document(obj: Document, pretty: bool = True, schema: Optional[Schema] = None) -> str:
    return render(to_payload(obj, schema), pretty)


def _expect(cond: bool, message: str, location: str) -> None:
    if not cond:
        raise DocumentError(message, location)


def _parse_schema(raw: Any) -> Schema:
    _expect(isinstance(raw, dict), "schema must be an object mapping names to arities", "schema")
    try:
        return Schema(raw)
    except InvalidParameter as exc:
        raise DocumentError(str(exc), "schema") from exc


def _parse_instance(raw: Any, schema: Schema, where: str) -> PointedInstance:
    _expect(isinstance(raw, dict), "expected an object with facts and distinguished", where)
    facts_raw = raw.get("facts", [])
    _expect(isinstance(facts_raw, list), "facts must be a list", f"{where}.facts")
    facts = []
    for i, item in enumerate(facts_raw):
        loc = f"{where}.facts[{i}]"
        _expect(isinstance(item, list) and len(item) >= 2 and all(isinstance(x, str) for x in item),
                "a fact is a list [relation, value, ...] of strings", loc)
        if item[0] not in schema:
            raise DocumentError(f"unknown relation {item[0]!r}", loc)
        _expect(len(item) - 1 == schema.arity(item[0]),
                f"relation {item[0]!r} has arity {schema.arity(item[0])}", loc)
        facts.append(Fact(item[0], tuple(item[1:])))
    dist = raw.get("distinguished", [])
    _expect(isinstance(dist, list) and all(isinstance(x, str) for x in dist),
            "distinguished must be a list of strings", f"{where}.distinguished")
    return PointedInstance(schema, frozenset(facts), tuple(dist))


def _parse_cq(raw: Any, schema: Schema, where: str) -> ConjunctiveQuery:
    body = _parse_instance(raw, schema, where)
    unsafe = bool(raw.get("unsafe", False))
    if not unsafe and not body.is_data_example:
        raise DocumentError("answer variables must occur in some atom (mark the query \"unsafe\")", where)
    return ConjunctiveQuery(body, allow_unsafe=unsafe)


def _parse_list(raw: Any, key: str, where: str) -> List[Any]:
    items = raw.get(key)
    _expect(isinstance(items, list), f"{key} must be a list", where)
    return items


def from_payload(raw: Any) -> Document:
    _expect(isinstance(raw, dict), "document must be an object", "document")
    _expect("schema" in raw, "missing key", "schema")
    _expect("kind" in raw, "missing key", "kind")
    schema = _parse_schema(raw["schema"])
    kind = raw["kind"]
    if kind == "instance":
        return _parse_instance(raw, schema, "document")
    if kind == "cq":
        return _parse_cq(raw, schema, "document")
    if kind == "ucq":
        items = _parse_list(raw, "disjuncts", "disjuncts")
        _expect(bool(items), "a union needs at least one disjunct", "disjuncts")
        return UnionOfCQs(tuple(_parse_cq(d, schema, f"disjuncts[{i}]") for i, d in enumerate(items)))
    if kind == "cq-list":
        items = _parse_list(raw, "queries", "queries")
        return [_parse_cq(d, schema, f"queries[{i}]") for i, d in enumerate(items)]
    if kind == "instance-list":
        items = _parse_list(raw, "instances", "instances")
        return [_parse_instance(d, schema, f"instances[{i}]") for i, d in enumerate(items)]
    if kind == "examples":
        positives = _parse_list(raw, "positives", "positives")
        negatives = _parse_list(raw, "negatives", "negatives")
        pos = tuple(_parse_instance(d, schema, f"positives[{i}]") for i, d in enumerate(positives))
        neg = tuple(_parse_instance(d, schema, f"negatives[{i}]") for i, d in enumerate(negatives))
        arity = raw.get("arity")
        if arity is None:
            first = (pos + neg)[:1]
            arity = first[0].arity if first else 0
        _expect(isinstance(arity, int) and not isinstance(arity, bool) and arity >= 0,
                "arity must be a non-negative integer", "arity")
        return LabeledExamples(schema, arity, pos, neg)
    raise DocumentError(f"unknown kind {kind!r}", "kind")


def load_document(text: str) -> Document:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    return from_payload(raw)


def read_document(path: str) -> Document:
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    try:
        return load_document(text)
    except DocumentError as exc:
        where = f"{path}: {exc.location}" if exc.location else path
        raise DocumentError(exc.message, where) from exc
