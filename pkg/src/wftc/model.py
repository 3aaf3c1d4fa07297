"""Static structure of workflow nets with tables and guard constraints.

A net couples a classic workflow net (places, transitions, flow relation
with one source and one sink place) with a relational table, abstract data
items, per-transition read/write/delete labels, table operation
descriptors, three-valued predicates, guards and a constraint set over
guard values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

UNDEF = None  # bottom: an unwritten data item / empty table cell

TRUE = "T"
FALSE = "F"
BOT = "U"  # undetermined guard / predicate value


class ModelError(Exception):
    """Structural problem in a net definition."""


# ---------------------------------------------------------------------------
# basic net elements


@dataclass(frozen=True)
class Place:
    name: str
    index: int


@dataclass(frozen=True)
class Transition:
    name: str
    index: int


@dataclass(frozen=True)
class TableSchema:
    name: str
    attributes: tuple[str, ...]

    def attr_index(self, attr: str) -> int:
        try:
            return self.attributes.index(attr)
        except ValueError:
            raise ModelError(f"unknown attribute {self.name}.{attr}") from None


# A record is a tuple of value tokens (or UNDEF), one per schema attribute.
# A table instance is a canonically sorted tuple of records.


def record_key(record):
    # UNDEF cells sort first; tokens sort by (prefix, numeric suffix, text)
    return tuple((0, "", 0, "") if v is None else (1,) + token_key(v) for v in record)


_SUFFIX_RE = re.compile(r"^(.*?)(\d+)$")


def token_key(token: str):
    m = _SUFFIX_RE.match(token)
    if m:
        return (m.group(1), int(m.group(2)), token)
    return (token, -1, token)


def canonical_table(records) -> tuple[tuple, ...]:
    return tuple(sorted(set(tuple(r) for r in records), key=record_key))


# ---------------------------------------------------------------------------
# predicates and guards


@dataclass(frozen=True)
class Predicate:
    """Three-valued condition over data items and the table.

    kinds:
      in   -- item value occurs in a table column      in(id, User.Id)
      eq   -- item value equals a constant token       eq(copy, yes)
      def  -- item carries a value                     def(id)
    """

    name: str
    kind: str  # "in" | "eq" | "def"
    item: str
    table: str = ""
    column: str = ""
    const: str = ""

    def depends_on(self) -> frozenset[str]:
        return frozenset((self.item,))

    def evaluate(self, data: dict, table, schema: TableSchema | None) -> str:
        value = data.get(self.item, UNDEF)
        if value is UNDEF:
            return BOT
        if self.kind == "def":
            return TRUE
        if self.kind == "eq":
            return TRUE if value == self.const else FALSE
        # membership; a net without the referenced table cannot decide it
        if schema is None or schema.name != self.table:
            return BOT
        col = schema.attr_index(self.column)
        return TRUE if any(rec[col] == value for rec in table) else FALSE


# Guard expressions are trees over predicate names:
#   ("pi", name) | ("not", e) | ("and", e, e) | ("or", e, e)


@dataclass(frozen=True)
class Guard:
    name: str
    expr: tuple

    def predicates(self) -> frozenset[str]:
        out = set()

        def walk(node):
            if node[0] == "pi":
                out.add(node[1])
            else:
                for child in node[1:]:
                    walk(child)

        walk(self.expr)
        return frozenset(out)

    def evaluate(self, pi_values: dict) -> str:
        # strict three-valued logic: any undetermined predicate makes the
        # whole guard undetermined, regardless of absorption
        if any(pi_values[p] == BOT for p in self.predicates()):
            return BOT

        def walk(node) -> bool:
            op = node[0]
            if op == "pi":
                return pi_values[node[1]] == TRUE
            if op == "not":
                return not walk(node[1])
            if op == "and":
                return walk(node[1]) and walk(node[2])
            return walk(node[1]) or walk(node[2])

        return TRUE if walk(self.expr) else FALSE


# A constraint is a disjunction of conjunctions of guard literals,
# stored as a tuple of disjuncts, each a tuple of (guard_name, positive).
Constraint = tuple[tuple[tuple[str, bool], ...], ...]


def constraint_consistent(valuation: dict, constraints) -> bool:
    """3-valued check of a guard valuation against the constraint set.

    A constraint is violated only when every disjunct is determinately
    false; disjuncts still containing undetermined guards keep it alive,
    so the all-undetermined initial valuation is always consistent.
    """
    for constraint in constraints:
        all_false = True
        for disjunct in constraint:
            value = TRUE
            for guard_name, positive in disjunct:
                if guard_name not in valuation:
                    raise ModelError(f"constraint references unknown guard {guard_name}")
                gv = valuation[guard_name]
                if gv == BOT:
                    if value == TRUE:
                        value = BOT
                elif (gv == TRUE) != positive:
                    value = FALSE
                    break
            if value != FALSE:
                all_false = False
                break
        if all_false and constraint:
            return False
    return True


# ---------------------------------------------------------------------------
# table operation descriptors

# A value source is ("item", name) or ("const", token).
Source = tuple[str, str]


@dataclass(frozen=True)
class SelScope:
    """Refinement scope for a written item: a column, optionally filtered.

    ``sel(User.Id)`` scopes over the full Id column; ``sel(User.License
    where Id=id)`` restricts to rows whose Id matches the current value of
    data item ``id``. With ``-> item`` the scope acts as an assignment
    instead (the item takes the single scoped value, no branching).
    """

    table: str
    column: str
    where_attr: str = ""
    where_source: Source | None = None
    assign_item: str = ""


@dataclass(frozen=True)
class InsertOp:
    table: str
    values: tuple[tuple[str, Source], ...]  # (attribute, source)


@dataclass(frozen=True)
class DeleteOp:
    table: str
    where_attr: str
    where_source: Source


@dataclass(frozen=True)
class UpdateOp:
    table: str
    sets: tuple[tuple[str, Source], ...]
    where_attr: str
    where_source: Source


@dataclass(frozen=True)
class GuardRef:
    """Guard literal attached to a transition; negated refs require the
    guard to be determinately false."""

    guard: str
    positive: bool = True


# ---------------------------------------------------------------------------
# the net


@dataclass
class WftcNet:
    """The full net. Built once by the parser and treated as read-only
    afterwards; safe to share across threads."""

    places: list[Place] = field(default_factory=list)
    transitions: list[Transition] = field(default_factory=list)
    arcs: set[tuple[str, str]] = field(default_factory=set)
    data_items: list[str] = field(default_factory=list)
    schema: TableSchema | None = None
    initial_records: tuple[tuple, ...] = ()
    rd: dict[str, tuple[str, ...]] = field(default_factory=dict)
    wt: dict[str, tuple[str, ...]] = field(default_factory=dict)
    dt: dict[str, tuple[str, ...]] = field(default_factory=dict)
    sel: dict[str, tuple[SelScope, ...]] = field(default_factory=dict)
    ins: dict[str, tuple[InsertOp, ...]] = field(default_factory=dict)
    dele: dict[str, tuple[DeleteOp, ...]] = field(default_factory=dict)
    upd: dict[str, tuple[UpdateOp, ...]] = field(default_factory=dict)
    guard_of: dict[str, GuardRef] = field(default_factory=dict)
    predicates: dict[str, Predicate] = field(default_factory=dict)
    guards: dict[str, Guard] = field(default_factory=dict)
    constraints: tuple[Constraint, ...] = ()
    start: str = ""
    end: str = ""

    # -- lookup helpers ----------------------------------------------------

    def __post_init__(self):
        self._index()

    def _index(self):
        self.place_by_name = {p.name: p for p in self.places}
        self.transition_by_name = {t.name: t for t in self.transitions}
        self.guard_order = list(self.guards)
        self._pre: dict[str, set[str]] = {n: set() for n in self._node_names()}
        self._post: dict[str, set[str]] = {n: set() for n in self._node_names()}
        for src, dst in self.arcs:
            # arcs may name undeclared nodes; validation reports them
            self._post.setdefault(src, set()).add(dst)
            self._pre.setdefault(dst, set()).add(src)
        # data items each guard's predicates depend on; drives both the
        # undefined fallback and which guards a firing settles
        self.guard_deps = {
            g.name: frozenset().union(
                frozenset(),
                *(self.predicates[p].depends_on() for p in g.predicates()),
            )
            for g in self.guards.values()
        }

    def _node_names(self):
        return [p.name for p in self.places] + [t.name for t in self.transitions]

    def is_place(self, name: str) -> bool:
        return name in self.place_by_name

    def preset(self, node: str) -> set[str]:
        if node not in self._pre:
            raise ModelError(f"unknown node {node}")
        return set(self._pre[node])

    def postset(self, node: str) -> set[str]:
        if node not in self._post:
            raise ModelError(f"unknown node {node}")
        return set(self._post[node])

    def has_table(self) -> bool:
        return self.schema is not None

    def column_values(self, column: str, table) -> list[str]:
        """Non-bottom values of a column in canonical order."""
        col = self.schema.attr_index(column)
        seen = []
        for rec in table:
            v = rec[col]
            if v is not UNDEF and v not in seen:
                seen.append(v)
        return seen

    def key_column_values(self, table) -> list[str]:
        if self.schema is None:
            return []
        return self.column_values(self.schema.attributes[0], table)


# ---------------------------------------------------------------------------
# structural validation


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def add(self, message: str):
        self.violations.append(message)


def _closure(seeds, step):
    seen = set(seeds)
    frontier = list(seeds)
    while frontier:
        node = frontier.pop()
        for nxt in step(node):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def validate_workflow_structure(net: WftcNet) -> ValidationReport:
    """Check the workflow shape: unique source/sink, every node on a
    source-to-sink path, and no dangling label references."""
    report = ValidationReport()

    place_names = {p.name for p in net.places}
    transition_names = {t.name for t in net.transitions}
    if net.start == net.end:
        report.add("start and end must be two distinct places")
    if net.start not in place_names:
        report.add(f"start place {net.start!r} not declared")
    if net.end not in place_names:
        report.add(f"end place {net.end!r} not declared")

    for src, dst in sorted(net.arcs):
        if (src in place_names) == (dst in place_names):
            report.add(f"arc {src}->{dst} does not connect a place and a transition")
        for node in (src, dst):
            if node not in place_names and node not in transition_names:
                report.add(f"arc endpoint {node} not declared")

    sources = [p for p in sorted(place_names) if not net._pre.get(p)]
    sinks = [p for p in sorted(place_names) if not net._post.get(p)]
    if net.start in place_names and sources != [net.start]:
        extra = [p for p in sources if p != net.start]
        if net.start not in sources:
            report.add(f"start place {net.start} has incoming arcs")
        for p in extra:
            report.add(f"extra source place {p}")
    if net.end in place_names and sinks != [net.end]:
        extra = [p for p in sinks if p != net.end]
        if net.end not in sinks:
            report.add(f"end place {net.end} has outgoing arcs")
        for p in extra:
            report.add(f"extra sink place {p}")

    if net.start in place_names and net.end in place_names:
        forward = _closure({net.start}, lambda n: net._post.get(n, ()))
        backward = _closure({net.end}, lambda n: net._pre.get(n, ()))
        for node in sorted(place_names | transition_names):
            if node not in forward or node not in backward:
                report.add(f"node {node} is not on a path from {net.start} to {net.end}")

    items = set(net.data_items)
    for label, mapping in (("rd", net.rd), ("wt", net.wt), ("dt", net.dt)):
        for t, names in mapping.items():
            if t not in transition_names:
                report.add(f"{label} label on unknown transition {t}")
            for d in names:
                if d not in items:
                    report.add(f"{label}({t}) references unknown data item {d}")

    def check_source(t, source, where):
        if source and source[0] == "item" and source[1] not in items:
            report.add(f"{where} on {t} references unknown data item {source[1]}")

    for t, scopes in net.sel.items():
        for scope in scopes:
            _check_column(net, report, t, scope.table, scope.column)
            if scope.where_attr:
                _check_column(net, report, t, scope.table, scope.where_attr)
                check_source(t, scope.where_source, "sel where")
            if scope.assign_item and scope.assign_item not in items:
                report.add(f"sel on {t} assigns unknown data item {scope.assign_item}")
    for t, ops in net.ins.items():
        for op in ops:
            for attr, source in op.values:
                _check_column(net, report, t, op.table, attr)
                check_source(t, source, "ins value")
    for t, ops in net.dele.items():
        for op in ops:
            _check_column(net, report, t, op.table, op.where_attr)
            check_source(t, op.where_source, "del where")
    for t, ops in net.upd.items():
        for op in ops:
            _check_column(net, report, t, op.table, op.where_attr)
            check_source(t, op.where_source, "upd where")
            for attr, source in op.sets:
                _check_column(net, report, t, op.table, attr)
                check_source(t, source, "upd value")

    for t, ref in net.guard_of.items():
        if t not in transition_names:
            report.add(f"guard attached to unknown transition {t}")
        if ref.guard not in net.guards:
            report.add(f"transition {t} references unknown guard {ref.guard}")
    for guard in net.guards.values():
        for pi in guard.predicates():
            if pi not in net.predicates:
                report.add(f"guard {guard.name} references unknown predicate {pi}")
    for pi in net.predicates.values():
        if pi.item not in items:
            report.add(f"predicate {pi.name} references unknown data item {pi.item}")
        if pi.kind == "in":
            if net.schema is None:
                report.add(f"predicate {pi.name} needs table {pi.table} which is not declared")
            elif net.schema.name != pi.table or pi.column not in net.schema.attributes:
                report.add(f"predicate {pi.name} references unknown column {pi.table}.{pi.column}")
    for constraint in net.constraints:
        for disjunct in constraint:
            for guard_name, _ in disjunct:
                if guard_name not in net.guards:
                    report.add(f"constraint references unknown guard {guard_name}")

    return report


def _check_column(net, report, t, table, column):
    if net.schema is None or net.schema.name != table:
        report.add(f"operation on {t} references unknown table {table}")
    elif column and column not in net.schema.attributes:
        report.add(f"operation on {t} references unknown column {table}.{column}")
