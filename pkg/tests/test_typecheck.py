"""Graded typing: synthesis, checking, weakening and substitution."""

import random
from fractions import Fraction

import pytest

from conftest import DNAT, NAT, PROP, gen_term
from qlog.grades import Grade, INF, ONE, ZERO
from qlog.parser import parse_file, parse_term, parse_type
from qlog import terms as T
from qlog.terms import TypeCtx
from qlog.typecheck import Checker, TypeCheckError


CK = Checker({"C": ["Hd", "Tl"]})


def synth(src, types=None, expected=None):
    t = parse_term(src)
    if expected is not None:
        CK.elaborate(t, parse_type(expected))
    ty, usage = CK.synthesize(types or {}, t)
    return t, ty, usage


def test_variable_rule():
    _, ty, usage = synth("x", {"x": NAT})
    assert ty == NAT and usage == {"x": ONE}


def test_geo_body_usage():
    _, ty, usage = synth(
        "delta(zero) (+ 1/2) map(succ, x)", {"x": DNAT}
    )
    assert usage["x"] == Grade(Fraction(1, 2))  # 1 - p


def test_geo_and_contraction():
    t, ty, usage = synth(
        "fix x : Dist Nat. delta(zero) (+ 1/2) map(succ, x)"
    )
    assert ty == DNAT and usage == {}
    assert t.contraction == Grade(Fraction(1, 2))


def test_markov_process_usage():
    proc = parse_type("Proc[1] C")
    t, ty, usage = synth(
        "fix m : Proc[1] C. proc(Hd, delta(m) (+ 1/3) delta(z))",
        {"z": proc},
    )
    assert ty == proc
    assert usage["z"] == ONE
    assert t.contraction == Grade(Fraction(1, 3))
    CK.check(
        TypeCtx.of(("z", ONE, proc)),
        parse_term("fix m : Proc[1] C. proc(Hd, delta(m) (+ 1/3) delta(z))"),
        proc,
    )


def test_fix_identity_rejected():
    with pytest.raises(TypeCheckError) as e:
        synth("fix x : Nat. x")
    assert e.value.rule == "fix"


def test_check_below_declared_grade():
    with pytest.raises(TypeCheckError) as e:
        CK.check(
            TypeCtx.of(("x", Grade(Fraction(1, 2)), NAT)),
            parse_term("x"),
            NAT,
        )
    assert e.value.rule == "var"


def test_case_grades_join_and_floor_one():
    # both branches discard the bound variable; its grade is floored at 1
    t, ty, usage = synth(
        "case s { inj1 a => zero | inj2 b => 1 }",
        {"s": parse_type("Nat + Nat")},
    )
    assert usage["s"] == ONE


def test_let_sample_records_grade():
    t = parse_term("let v = mu in [1/3] (v == zero)")
    CK.synthesize({"mu": DNAT}, t)
    assert t.bind_grade == Grade(Fraction(1, 3))


def test_predicates():
    delta = TypeCtx.of(("x", INF, NAT), ("y", INF, NAT))
    CK.check_predicate(delta, parse_term("x == y"))
    CK.check_predicate(
        TypeCtx.of(("mu", INF, DNAT), ("nu", INF, DNAT)),
        parse_term("kant[Nat](mu, nu)"),
    )
    with pytest.raises(TypeCheckError) as e:
        CK.check_predicate(delta, parse_term("[0] (x == y)"))
    assert e.value.rule == "scale"
    with pytest.raises(TypeCheckError):
        CK.check_predicate(TypeCtx.of(("x", ONE, NAT)), parse_term("x == x"))


def test_quantifier_binders_discount_usage():
    _, ty, usage = synth("exists y : Nat. (x == y) * (x == y)", {"x": NAT})
    assert ty == PROP
    assert usage["x"] == Grade(2)  # x twice; y unconstrained under inf


def test_error_reports_render():
    try:
        synth("fix x : Nat. x")
    except TypeCheckError as e:
        assert "[fix]" in e.render_text()
        import json

        blob = json.loads(e.render_json())
        assert blob["rule"] == "fix" and "message" in blob


def test_weakening_preserves_check():
    rng = random.Random(21)
    ctx_types = {"a": NAT, "mu": DNAT}
    for _ in range(40):
        ty = rng.choice([NAT, PROP, DNAT])
        t = gen_term(rng, ctx_types, ty, depth=3)
        _, usage = CK.synthesize(ctx_types, t)
        base = TypeCtx.of(
            ("a", usage.get("a", ZERO), NAT), ("mu", usage.get("mu", ZERO), DNAT)
        )
        CK.check(base, t, ty)
        raised = TypeCtx.of(
            ("a", usage.get("a", ZERO) + Grade(1), NAT),
            ("mu", INF, DNAT),
        )
        CK.check(raised, t, ty)  # raising grades must stay accepted


def test_substitution_property():
    # if G, x:^r A |- t : B and D |- u : A then t[u/x] needs at most
    # (usage(t) minus x) + r * usage(u)
    rng = random.Random(22)
    checked = 0
    for _ in range(60):
        ctx_types = {"a": NAT, "x": NAT, "mu": DNAT}
        ty = rng.choice([NAT, PROP, DNAT])
        t = gen_term(rng, ctx_types, ty, depth=3)
        _, ut = CK.synthesize(ctx_types, t)
        u = gen_term(rng, {"a": NAT, "mu": DNAT}, NAT, depth=2)
        _, uu = CK.synthesize({"a": NAT, "mu": DNAT}, u)
        subst = T.substitute(t, "x", u)
        ty2, us = CK.synthesize({"a": NAT, "mu": DNAT}, subst)
        assert str(ty2) == str(ty)
        r = ut.get("x", ZERO)
        for var in ("a", "mu"):
            bound = ut.get(var, ZERO) + r * uu.get(var, ZERO)
            assert us.get(var, ZERO) <= bound
        checked += 1
    assert checked == 60


def test_derivation_independence_is_structural():
    # synthesis is a function of (context types, term): same inputs,
    # same outputs, no matter how the term was produced
    src = "fn f : Nat -o[2] Nat. fn x : Nat. f (f x)"
    t1, ty1, u1 = synth(src)
    t2, ty2, u2 = synth(src)
    # f used once directly plus twice through the scaled argument: grade 3;
    # x flows through both applications: grade 4
    assert str(ty1) == str(ty2) == "((Nat -o[2] Nat) -o[3] (Nat -o[4] Nat))"


def test_corpus_mutants_all_named():
    from qlog.acceptance import EXPECTED_MUTANT_RULES, check_typechecker_corpus

    name, ok, detail = check_typechecker_corpus()
    assert ok, detail
    assert len(EXPECTED_MUTANT_RULES) == 10
