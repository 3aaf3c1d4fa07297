"""Formula representation and evaluation over a built reachability graph.

Boolean structure is evaluated by set algebra over state-id sets; the
temporal operators run the usual fixed-point algorithms (one-step
predecessor image for EX, counter-based greatest fixed point for EG,
least fixed points for the until forms). Quantifiers range over the
records of each state's own table instance; a quantifier whose variable
never accesses a schema attribute degenerates to a membership test of
that name in the table's key column.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .model import UNDEF, token_key
from .srg import Srg, StateC


class EvalError(Exception):
    """Formula references something the model does not provide."""


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class PlaceAtom:
    place: str


@dataclass(frozen=True)
class DataAtom:
    # terms: ("const", token) | ("attr", var, attribute) | ("var", var) | ("empty",)
    lhs: tuple
    op: str
    rhs: tuple


@dataclass(frozen=True)
class Quantifier:
    kind: str  # "forall" | "exists"
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Not:
    inner: "Formula"


@dataclass(frozen=True)
class And:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Or:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class EX:
    inner: "Formula"


@dataclass(frozen=True)
class EG:
    inner: "Formula"


@dataclass(frozen=True)
class EU:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class AU:
    lhs: "Formula"
    rhs: "Formula"


Formula = Union[TrueF, PlaceAtom, DataAtom, Quantifier, Not, And, Or, EX, EG, EU, AU]


def formula_text(node: Formula) -> str:
    if isinstance(node, TrueF):
        return "true"
    if isinstance(node, PlaceAtom):
        return node.place
    if isinstance(node, DataAtom):
        return f"{_term_text(node.lhs)} {node.op} {_term_text(node.rhs)}"
    if isinstance(node, Quantifier):
        return f"{node.kind} {node.var} in R, [{formula_text(node.body)}]"
    if isinstance(node, Not):
        return f"!({formula_text(node.inner)})"
    if isinstance(node, And):
        return f"({formula_text(node.lhs)} & {formula_text(node.rhs)})"
    if isinstance(node, Or):
        return f"({formula_text(node.lhs)} | {formula_text(node.rhs)})"
    if isinstance(node, EX):
        return f"EX ({formula_text(node.inner)})"
    if isinstance(node, EG):
        return f"EG ({formula_text(node.inner)})"
    if isinstance(node, EU):
        return f"E(({formula_text(node.lhs)}) U ({formula_text(node.rhs)}))"
    return f"A(({formula_text(node.lhs)}) U ({formula_text(node.rhs)}))"


def _term_text(term) -> str:
    if term[0] == "empty":
        return "empty"
    if term[0] == "attr":
        return f"{term[1]}.{term[2]}"
    return term[1]


# ---------------------------------------------------------------------------
# atoms


def _record_variable(net, node: Quantifier) -> bool:
    """True when the quantified name is used with a schema attribute; a
    name that never touches the schema is a plain value literal and the
    quantifier reduces to a key-column membership precondition."""
    if net.schema is None:
        return True
    attrs = set(net.schema.attributes)

    def walk(sub) -> bool:
        if isinstance(sub, DataAtom):
            for term in (sub.lhs, sub.rhs):
                if term[0] == "attr" and term[1] == node.var and term[2] in attrs:
                    return True
            return False
        if isinstance(sub, Quantifier):
            return sub.var != node.var and walk(sub.body)
        if isinstance(sub, (Not, EX, EG)):
            return walk(sub.inner)
        if isinstance(sub, (And, Or, EU, AU)):
            return walk(sub.lhs) or walk(sub.rhs)
        return False

    return walk(node.body)


def _resolve(term, state: StateC, net, binding: dict):
    kind = term[0]
    if kind == "empty":
        return UNDEF
    if kind == "const":
        return term[1]
    if kind == "var":
        value = binding.get(term[1])
        if value is None:
            raise EvalError(f"unbound record variable {term[1]}")
        return value
    # attribute access
    _, var, attr = term
    record = binding.get(var)
    if record is None:
        raise EvalError(f"unbound record variable {var}")
    if isinstance(record, str):
        # degenerate literal variable: attribute tokens are plain values
        return attr
    if net.schema is None or attr not in net.schema.attributes:
        raise EvalError(f"unknown attribute {attr}")
    return record[net.schema.attr_index(attr)]


def _compare(lhs, op: str, rhs) -> bool:
    a, b = token_key(lhs), token_key(rhs)
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise EvalError(f"unknown comparison {op}")


def eval_atom(state: StateC, atom: DataAtom, net, binding: dict | None = None) -> bool:
    """Truth of a comparison atom at one state under a variable binding.

    ``term = empty`` and ``term != empty`` test definedness; every other
    comparison with an unwritten operand is false. Ordering falls back to
    the numeric suffix of tokens sharing a prefix, plain text otherwise.
    """
    binding = binding or {}
    lhs = _resolve(atom.lhs, state, net, binding)
    rhs = _resolve(atom.rhs, state, net, binding)
    if atom.lhs[0] == "empty" or atom.rhs[0] == "empty":
        other = rhs if atom.lhs[0] == "empty" else lhs
        if atom.op == "=":
            return other is UNDEF
        if atom.op == "!=":
            return other is not UNDEF
        return False
    if isinstance(lhs, tuple) or isinstance(rhs, tuple):
        # whole-record comparison between two bound record variables
        if atom.op == "=":
            return lhs == rhs
        if atom.op == "!=":
            return lhs != rhs
        raise EvalError("ordered comparison of whole records")
    if lhs is UNDEF or rhs is UNDEF:
        return False
    if atom.op == "=":
        return lhs == rhs
    if atom.op == "!=":
        return lhs != rhs
    return _compare(lhs, atom.op, rhs)


def _holds_locally(node: Formula, state: StateC, net, binding: dict) -> bool:
    """Quantifier/boolean evaluation of a temporal-free subformula at one
    state."""
    if isinstance(node, TrueF):
        return True
    if isinstance(node, PlaceAtom):
        if node.place not in net.place_by_name:
            raise EvalError(f"unknown place {node.place}")
        return state.marking[net.place_by_name[node.place].index] > 0
    if isinstance(node, DataAtom):
        return eval_atom(state, node, net, binding)
    if isinstance(node, Not):
        return not _holds_locally(node.inner, state, net, binding)
    if isinstance(node, And):
        return _holds_locally(node.lhs, state, net, binding) and _holds_locally(
            node.rhs, state, net, binding
        )
    if isinstance(node, Or):
        return _holds_locally(node.lhs, state, net, binding) or _holds_locally(
            node.rhs, state, net, binding
        )
    if isinstance(node, Quantifier):
        if _record_variable(net, node):
            domain = list(state.table)
            results = (
                _holds_locally(node.body, state, net, {**binding, node.var: rec})
                for rec in domain
            )
            return all(results) if node.kind == "forall" else any(results)
        # degenerate: the name must occur in the key column of this state
        if node.var not in net.key_column_values(state.table):
            return False
        return _holds_locally(node.body, state, net, {**binding, node.var: node.var})
    raise EvalError("temporal operator nested below a quantifier")


# ---------------------------------------------------------------------------
# satisfaction sets


def sat(srg: Srg, node: Formula) -> set[int]:
    """Bottom-up satisfaction-set computation."""
    net = srg.net
    everything = set(range(len(srg.states)))
    if isinstance(node, TrueF):
        return set(everything)
    if isinstance(node, Not):
        return everything - sat(srg, node.inner)
    if isinstance(node, And):
        return sat(srg, node.lhs) & sat(srg, node.rhs)
    if isinstance(node, Or):
        return sat(srg, node.lhs) | sat(srg, node.rhs)
    if isinstance(node, EX):
        return sat_ex(srg, sat(srg, node.inner))
    if isinstance(node, EG):
        return sat_eg(srg, sat(srg, node.inner))
    if isinstance(node, EU):
        return sat_eu(srg, sat(srg, node.lhs), sat(srg, node.rhs))
    if isinstance(node, AU):
        return sat_au(srg, sat(srg, node.lhs), sat(srg, node.rhs))
    # state-local: place atoms, comparisons, quantifiers
    return {
        i for i, state in enumerate(srg.states) if _holds_locally(node, state, net, {})
    }


def sat_ex(srg: Srg, target: set[int]) -> set[int]:
    """States with at least one successor inside ``target``."""
    return {i for i in range(len(srg.states)) if srg.successors(i) & target}


def sat_eg(srg: Srg, hold: set[int]) -> set[int]:
    """Greatest fixed point by successor counting.

    A state stays while it either has a successor that stays or has no
    successors at all (a maximal run that never leaves ``hold``).
    """
    alive = set(hold)
    count = {i: len(srg.successors(i)) for i in hold}
    dead = [i for i in range(len(srg.states)) if i not in hold]
    while dead:
        gone = dead.pop()
        for pred in srg.predecessors(gone):
            if pred in alive:
                count[pred] -= 1
                if count[pred] == 0 and srg.successors(pred):
                    alive.discard(pred)
                    dead.append(pred)
    return alive


def sat_eu(srg: Srg, lhs: set[int], rhs: set[int]) -> set[int]:
    """Least fixed point of  Q = rhs | (lhs & EX Q)  via backward walk."""
    result = set(rhs)
    frontier = list(rhs)
    while frontier:
        node = frontier.pop()
        for pred in srg.predecessors(node):
            if pred in lhs and pred not in result:
                result.add(pred)
                frontier.append(pred)
    return result


def sat_au(srg: Srg, lhs: set[int], rhs: set[int]) -> set[int]:
    """Least fixed point of  Q = rhs | (lhs & AX Q & not deadlock)."""
    result = set(rhs)
    remaining = {i: len(srg.successors(i)) for i in range(len(srg.states))}
    frontier = list(rhs)
    while frontier:
        node = frontier.pop()
        for pred in srg.predecessors(node):
            remaining[pred] -= 1
            if (
                remaining[pred] == 0
                and pred in lhs
                and pred not in result
                and srg.successors(pred)
            ):
                result.add(pred)
                frontier.append(pred)
    return result


# ---------------------------------------------------------------------------
# verification driver


@dataclass
class Verdict:
    holds: bool
    sat_initial: bool
    sat_set: set[int]
    pre_set: set[int]
    evidence: list[str] | None = None

    def __bool__(self):
        return self.holds


def _quantifier_prefix(node: Formula):
    """Split a formula into its leading quantifier chain (descending
    through the temporal/boolean skeleton) and report the chain."""
    if isinstance(node, Quantifier):
        inner, chain = _quantifier_prefix(node.body)
        return inner, [node] + chain
    if isinstance(node, (EX, EG)):
        return _quantifier_prefix(node.inner)
    if isinstance(node, Not):
        return _quantifier_prefix(node.inner)
    if isinstance(node, (EU, AU)):
        return _quantifier_prefix(node.rhs)
    return node, []


def precondition_set(srg: Srg, node: Formula) -> set[int]:
    """States satisfying the quantifier preconditions of the formula: the
    quantified record domains exist (non-empty table), and degenerate
    literal variables occur in the key column."""
    _, chain = _quantifier_prefix(node)
    net = srg.net
    if not chain:
        return set(range(len(srg.states)))
    result = set()
    for i, state in enumerate(srg.states):
        ok = True
        for q in chain:
            if _record_variable(net, q):
                if not state.table:
                    ok = False
                    break
            elif q.var not in net.key_column_values(state.table):
                ok = False
                break
        if ok:
            result.add(i)
    return result


def verify(srg: Srg, node: Formula) -> Verdict:
    """Full check: empty quantifier precondition refutes the formula
    outright, otherwise the verdict is membership of the initial state in
    the satisfaction set."""
    pre = precondition_set(srg, node)
    if not pre:
        return Verdict(holds=False, sat_initial=False, sat_set=set(), pre_set=pre)
    satisfied = sat(srg, node)
    holds = srg.initial in satisfied
    verdict = Verdict(
        holds=holds, sat_initial=holds, sat_set=satisfied, pre_set=pre
    )
    if not holds:
        verdict.evidence = _counterexample(srg, satisfied)
    return verdict


def _counterexample(srg: Srg, satisfied: set[int]) -> list[str]:
    """Best-effort witness: a shortest path from the initial state to a
    state outside the satisfaction set (the initial state itself when it
    already fails)."""
    from collections import deque

    target = None
    parent = {srg.initial: None}
    queue = deque([srg.initial])
    while queue:
        node = queue.popleft()
        if node not in satisfied:
            target = node
            break
        for succ in sorted(srg.successors(node)):
            if succ not in parent:
                parent[succ] = node
                queue.append(succ)
    if target is None:
        return []
    path = []
    while target is not None:
        path.append(srg.state_id(target))
        target = parent[target]
    return list(reversed(path))


# ---------------------------------------------------------------------------
# built-in behavioural metrics


PM_NAMES = ("PM1", "PM2", "PM3", "PM4", "PM5")


def _fresh(net, column: str, item: str) -> str:
    from .srg import fresh_token

    return fresh_token(item, net.column_values(column, net.initial_records))


def _two_keys(net):
    if net.schema is None or not net.initial_records:
        raise EvalError("needs a table with records")
    keys = net.key_column_values(net.initial_records)
    if len(keys) < 2:
        raise EvalError("needs two records")
    return keys[0], keys[1]


def _pm1(net) -> str:
    first, second = _two_keys(net)
    if len(net.schema.attributes) < 2:
        raise EvalError("needs a second attribute")
    col = net.column_values(net.schema.attributes[1], net.initial_records)
    if len(col) < 2:
        raise EvalError("needs two values in the second column")
    return (
        f"EX((forall {first} in R, forall {second} in R), "
        f"[{first} != {second} -> {first}.{col[0]} < {second}.{col[1]}])"
    )


def _pm2(net) -> str:
    _two_keys(net)
    key = net.schema.attributes[0]
    return f"AG((forall r1 in R, forall r2 in R), [r1 != r2 -> r1.{key} != r2.{key}])"


def _pm3(net) -> str:
    return f"EF {net.end}"


def _pm4(net) -> str:
    first, _ = _two_keys(net)
    if len(net.schema.attributes) < 3:
        raise EvalError("needs a third attribute")
    third = net.column_values(net.schema.attributes[2], net.initial_records)
    if not third:
        raise EvalError("needs a value in the third column")
    return f"AX((exists {first} in R), [{first}.{third[0]} != empty])"


def _pm5(net) -> str:
    # a row key and an attribute value that never occur initially
    _two_keys(net)
    if len(net.schema.attributes) < 2:
        raise EvalError("needs a second attribute")
    key, second = net.schema.attributes[0], net.schema.attributes[1]
    fresh_key = _fresh(net, key, _bound_item(net, key))
    fresh_val = _fresh(net, second, _bound_item(net, second))
    return (
        f"E((forall {fresh_key} in R), "
        f"[{fresh_key} != empty U {fresh_key}.{fresh_val} = empty])"
    )


_PM_BUILDERS = {"PM1": _pm1, "PM2": _pm2, "PM3": _pm3, "PM4": _pm4, "PM5": _pm5}


def metric_formulas(net) -> dict[str, str]:
    """Instantiate the five metric templates against the loaded net;
    raises EvalError for templates the net cannot express."""
    return {name: _PM_BUILDERS[name](net) for name in PM_NAMES}


def _bound_item(net, column: str) -> str:
    for pi in net.predicates.values():
        if pi.kind == "in" and pi.column == column:
            return pi.item
    # fall back to the lowercase column name
    return column.lower()


def builtin_metrics(srg: Srg) -> dict[str, "Verdict | str"]:
    """Evaluate every metric template; templates the net cannot host
    report the reason per metric instead of a verdict."""
    from .textio import parse_dctl

    net = srg.net
    results: dict[str, Verdict | str] = {}
    for name in PM_NAMES:
        try:
            formula = _PM_BUILDERS[name](net)
            results[name] = verify(srg, parse_dctl(formula, net))
        except Exception as exc:  # reported per metric, never fatal
            results[name] = f"not instantiable: {exc}"
    return results
