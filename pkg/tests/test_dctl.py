"""Formula evaluation: satisfaction sets, fixed points, verification."""

import random

import pytest

from conftest import make_random_srg
from wftc import (
    build_srg,
    builtin_metrics,
    eval_atom,
    parse_dctl,
    parse_model,
    sat,
    sat_au,
    sat_eg,
    sat_eu,
    sat_ex,
    verify,
)
from wftc import dctl as ast
from wftc.dctl import EvalError, Verdict


# ---------------------------------------------------------------------------
# bounded-path oracles (independent of the fixed-point implementations)


def oracle_ex(srg, target):
    return {i for i in range(len(srg.states)) if srg.successors(i) & target}


def oracle_eg(srg, hold):
    # some maximal path stays in `hold`: a lasso inside it or a dead end
    def search(node, stack):
        if node not in hold:
            return False
        if node in stack:
            return True
        succ = srg.successors(node)
        if not succ:
            return True
        stack.add(node)
        ok = any(search(s, stack) for s in succ)
        stack.discard(node)
        return ok

    return {i for i in range(len(srg.states)) if search(i, set())}


def oracle_eu(srg, lhs, rhs):
    def search(node, seen):
        if node in rhs:
            return True
        if node not in lhs or node in seen:
            return False
        seen.add(node)
        return any(search(s, seen) for s in srg.successors(node))

    return {i for i in range(len(srg.states)) if search(i, set())}


def oracle_au(srg, lhs, rhs):
    # every maximal path must reach `rhs` through `lhs`; a cycle or dead end
    # before `rhs` refutes it
    def search(node, stack):
        if node in rhs:
            return True
        if node not in lhs or node in stack:
            return False
        succ = srg.successors(node)
        if not succ:
            return False
        stack.add(node)
        ok = all(search(s, stack) for s in succ)
        stack.discard(node)
        return ok

    return {i for i in range(len(srg.states)) if search(i, set())}


def random_sets(rng, n):
    return (
        {i for i in range(n) if rng.random() < 0.6},
        {i for i in range(n) if rng.random() < 0.3},
    )


def test_fixed_points_agree_with_path_oracles():
    rng = random.Random(1234)
    for _ in range(120):
        srg = make_random_srg(rng)
        lhs, rhs = random_sets(rng, len(srg.states))
        assert sat_ex(srg, lhs) == oracle_ex(srg, lhs)
        assert sat_eg(srg, lhs) == oracle_eg(srg, lhs)
        assert sat_eu(srg, lhs, rhs) == oracle_eu(srg, lhs, rhs)
        assert sat_au(srg, lhs, rhs) == oracle_au(srg, lhs, rhs)


def test_fixed_point_trivial_cases():
    rng = random.Random(5)
    srg = make_random_srg(rng, max_states=12)
    everything = set(range(len(srg.states)))
    assert sat_ex(srg, set()) == set()
    assert sat_eg(srg, set()) == set()
    assert sat_eu(srg, everything, set()) == set()
    assert sat_au(srg, everything, set()) == set()
    assert sat_eu(srg, set(), everything) == everything
    assert sat_au(srg, set(), everything) == everything


def test_monotonicity():
    rng = random.Random(77)
    for _ in range(40):
        srg = make_random_srg(rng, max_states=14)
        small, extra = random_sets(rng, len(srg.states))
        big = small | extra
        assert sat_ex(srg, small) <= sat_ex(srg, big)
        assert sat_eg(srg, small) <= sat_eg(srg, big)
        other = {i for i in range(len(srg.states)) if rng.random() < 0.4}
        assert sat_eu(srg, small, other) <= sat_eu(srg, big, other)
        assert sat_au(srg, small, other) <= sat_au(srg, big, other)
        assert sat_eu(srg, other, small) <= sat_eu(srg, other, big)
        assert sat_au(srg, other, small) <= sat_au(srg, other, big)


def test_complement_and_duality_on_random_graphs():
    rng = random.Random(99)
    for _ in range(60):
        srg = make_random_srg(rng, max_states=15)
        everything = set(range(len(srg.states)))
        n = len(srg.states)
        atom = ast.PlaceAtom(f"q{rng.randrange(n)}")
        phi = ast.Or(atom, ast.EX(ast.PlaceAtom(f"q{rng.randrange(n)}")))
        assert sat(srg, ast.Not(phi)) == everything - sat(srg, phi)
        # AG f == !E(true U !f)
        ag = ast.Not(ast.EU(ast.TrueF(), ast.Not(phi)))
        assert sat(srg, ag) == everything - sat(srg, ast.EU(ast.TrueF(), ast.Not(phi)))


# ---------------------------------------------------------------------------
# atoms and quantifiers on the motivating graph


def test_place_atom_at_initial(motivating_net, motivating_srg):
    assert motivating_srg.initial in sat(motivating_srg, ast.PlaceAtom("p0"))


def test_atom_reflexive_inequality_is_false(motivating_net, motivating_srg):
    formula = parse_dctl(
        "forall r1 in R, [r1.Id != r1.Id]", motivating_net
    )
    assert sat(motivating_srg, formula) == set()


def test_empty_comparison_selects_unset_cells(motivating_net, motivating_srg):
    formula = parse_dctl("exists r in R, [r.License = empty]", motivating_net)
    hits = sat(motivating_srg, formula)
    assert hits
    for i in hits:
        assert any(rec[1] is None for rec in motivating_srg.states[i].table)
    formula2 = parse_dctl("forall r in R, [r.License != empty]", motivating_net)
    assert sat(motivating_srg, formula2) == set(range(54)) - hits


def test_eval_atom_orders_by_numeric_suffix(motivating_net, motivating_srg):
    c0 = motivating_srg.states[motivating_srg.initial]
    atom = ast.DataAtom(("const", "license1"), "<", ("const", "license2"))
    assert eval_atom(c0, atom, motivating_net)
    atom2 = ast.DataAtom(("const", "license10"), ">", ("const", "license2"))
    assert eval_atom(c0, atom2, motivating_net)


def test_eval_atom_unknown_attribute(motivating_net, motivating_srg):
    c0 = motivating_srg.states[motivating_srg.initial]
    with pytest.raises(EvalError):
        eval_atom(
            c0,
            ast.DataAtom(("attr", "r", "Nope"), "=", ("const", "x")),
            motivating_net,
            {"r": c0.table[0]},
        )


def test_sat_true_is_everything(motivating_srg, motivating_net):
    assert sat(motivating_srg, parse_dctl("true", motivating_net)) == set(range(54))


def test_sat_ex_example_count(motivating_net, motivating_srg):
    assert len(sat(motivating_srg, parse_dctl("EX(id1 != id2)", motivating_net))) == 53


def test_sat_eg_example_count(motivating_net, motivating_srg):
    assert len(sat(motivating_srg, parse_dctl("EG(id1 != id2)", motivating_net))) == 54


def test_until_examples_cover_everything(motivating_net, motivating_srg):
    eu = parse_dctl("E(id1 != id0 U license1 != license0)", motivating_net)
    au = parse_dctl("A(id1 != id0 U license1 != license0)", motivating_net)
    assert sat(motivating_srg, eu) == set(range(54))
    assert sat(motivating_srg, au) == set(range(54))


# ---------------------------------------------------------------------------
# verification driver


def test_phi1_holds(motivating_net, motivating_srg):
    phi1 = parse_dctl(
        "AG((forall id1 in R, forall id2 in R),"
        " [id1 != id2 -> id1.license1 != id2.license2])",
        motivating_net,
    )
    verdict = verify(motivating_srg, phi1)
    assert verdict.holds
    assert verdict.pre_set == set(range(54))


def test_phi2_fails_through_empty_precondition(motivating_net, motivating_srg):
    phi2 = parse_dctl("EG((forall id10 in R), [id10.copy = true])", motivating_net)
    verdict = verify(motivating_srg, phi2)
    assert not verdict.holds
    assert verdict.pre_set == set()


def test_verify_true_formula(motivating_net, motivating_srg):
    assert verify(motivating_srg, parse_dctl("true", motivating_net)).holds


def test_verify_reports_counterexample(motivating_net, motivating_srg):
    verdict = verify(motivating_srg, parse_dctl("AG !p13", motivating_net))
    assert not verdict.holds
    assert verdict.evidence
    assert verdict.evidence[0] == "c0"
    # the witness path ends in a state outside the satisfaction set
    last = int(verdict.evidence[-1][1:])
    assert last not in verdict.sat_set


def test_record_inequality_claim_fails_on_flaw_state(motivating_net, motivating_srg):
    # the literal-free record reading of the license-uniqueness claim is
    # refuted by the reachable state where two rows share a license value
    phi = parse_dctl(
        "AG(forall r1 in R, forall r2 in R, [r1 != r2 -> r1.License != r2.License])",
        motivating_net,
    )
    assert not verify(motivating_srg, phi).holds


# ---------------------------------------------------------------------------
# built-in metrics


def test_metrics_on_motivating_net(motivating_srg):
    results = builtin_metrics(motivating_srg)
    verdicts = {
        k: v.holds if isinstance(v, Verdict) else v for k, v in results.items()
    }
    assert verdicts == {
        "PM1": True,
        "PM2": True,
        "PM3": True,
        "PM4": True,
        "PM5": False,
    }


def test_metrics_without_table(tiny_net):
    results = builtin_metrics(build_srg(tiny_net))
    assert isinstance(results["PM3"], Verdict) and results["PM3"].holds
    for name in ("PM1", "PM2", "PM4", "PM5"):
        assert isinstance(results[name], str) and "not instantiable" in results[name]


def test_pm2_matches_record_pair_scan(motivating_net, motivating_srg):
    # oracle: quadratic scan of record pairs for key-attribute collisions
    net = motivating_net
    key = net.schema.attr_index(net.schema.attributes[0])
    clean = True
    for s in motivating_srg.states:
        for a in s.table:
            for b in s.table:
                if a != b and a[key] == b[key]:
                    clean = False
    results = builtin_metrics(motivating_srg)
    assert results["PM2"].holds == clean
