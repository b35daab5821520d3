from hypothesis import given, settings
from hypothesis import strategies as st

from laf import Builder, EnumBudget, INT, tup
from laf.domain import (
    DEFAULT_OP_WEIGHTS, TermGenConfig, gen_term, soundness_check,
)
from laf.relational import EqRel, RelationalDomain, binding_points, consistent
from laf.semantics import BottomV, IntV, TupleV, collect_term

from conftest import build_counter_loop


def p(i, comp=None):
    return (i,) if comp is None else (i, comp)


# ---------------------------------------------------------------------------
# Element algebra
# ---------------------------------------------------------------------------

def test_transitive_closure_canonical():
    a = EqRel.top().with_atom(p(1), p(2), 1).with_atom(p(2), p(3), 1)
    b = EqRel.top().with_atom(p(1), p(3), 2).with_atom(p(2), p(3), 1)
    assert a == b  # same relation set, same canonical form
    assert a.difference(p(1), p(3)) == 2


def test_contradiction_is_bottom():
    a = EqRel.top().with_const(p(1), 3).with_const(p(1), 4)
    assert a.bottom


def test_meet_is_conjunction():
    a = EqRel.top().with_atom(p(1), p(2), 0)
    b = EqRel.top().with_const(p(2), 5)
    m = a.meet(b)
    assert m.const_of(p(1)) == 5


def test_join_keeps_common_atoms():
    a = EqRel.top().with_const(p(1), 3).with_atom(p(2), p(1), 1)
    b = EqRel.top().with_const(p(1), 7).with_atom(p(2), p(1), 1)
    j = a.join(b)
    assert j.difference(p(2), p(1)) == 1
    assert j.const_of(p(1)) is None


def test_join_is_least_upper_bound():
    elems = [
        EqRel.top(),
        EqRel.top().with_const(p(1), 3),
        EqRel.top().with_atom(p(1), p(2), 1),
        EqRel.top().with_const(p(1), 3).with_atom(p(2), p(3), 0),
        EqRel.bot(),
    ]
    for a in elems:
        for b in elems:
            j = a.join(b)
            assert a.leq(j) and b.leq(j)
            for c in elems:
                if a.leq(c) and b.leq(c):
                    assert j.leq(c)


def test_forget_keeps_transitive_relations():
    a = (EqRel.top()
         .with_atom(p(1), p(9), 1)
         .with_atom(p(2), p(9), 2)
         .with_const(p(9), 5))
    f = a.forget({p(9)})
    assert f.difference(p(1), p(2)) == -1
    assert f.const_of(p(1)) == 6
    assert f.difference(p(1), p(9)) is None


def test_entailment_ordering():
    strong = EqRel.top().with_const(p(1), 3).with_atom(p(2), p(1), 0)
    weak = EqRel.top().with_atom(p(2), p(1), 0)
    assert strong.leq(weak)
    assert not weak.leq(strong)
    assert EqRel.bot().leq(strong)
    assert strong.leq(EqRel.top())


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4),
                          st.integers(-3, 3)), max_size=6))
def test_canonical_form_insensitive_to_order(atoms):
    a = EqRel.top()
    for (x, y, k) in atoms:
        a = a.with_atom(p(x), p(y), k)
    b = EqRel.top()
    for (x, y, k) in reversed(atoms):
        b = b.with_atom(p(x), p(y), k)
    assert a == b


# ---------------------------------------------------------------------------
# Transfers
# ---------------------------------------------------------------------------

def _eval(term):
    dom = RelationalDomain.for_term(term)
    return dom, dom.eval_abs(term.ctx, dom.initial())


def test_affine_assignment():
    b = Builder()
    y = b.let_unknown("y", INT)
    one = b.let_int("one", 1)
    x = b.let_op("x", INT, "add", [y, one])
    dom, st = _eval(b.term(x))
    assert st.get(x).difference((x.id,), (y.id,)) == 1


def test_nonaffine_havoc():
    b = Builder()
    y = b.let_unknown("y", INT)
    z = b.let_unknown("z", INT)
    x = b.let_op("x", INT, "mul", [y, z])
    dom, st = _eval(b.term(x))
    assert st.get(x).difference((x.id,), (y.id,)) is None


def test_tuple_componentwise():
    b = Builder()
    a = b.let_unknown("a", INT)
    c = b.let_unknown("c", INT)
    m = b.let_op("m", tup(INT, INT), "mk", [a, c])
    dom, st = _eval(b.term(m))
    e = st.get(m)
    assert e.difference((m.id, 0), (a.id,)) == 0
    assert e.difference((m.id, 1), (c.id,)) == 0


def test_add_minus_one_cancels():
    b = Builder()
    x = b.let_unknown("x", INT)
    one = b.let_int("one", 1)
    y = b.let_op("y", INT, "add", [x, one])
    z = b.let_op("z", INT, "sub", [y, one])
    dom, st = _eval(b.term(z))
    assert st.get(z).difference((z.id,), (x.id,)) == 0


def test_nondet_join_of_common_atom():
    b = Builder()
    x0 = b.let_unknown("x0", INT)
    one = b.let_int("one", 1)
    a = b.let_op("a", INT, "add", [x0, one])
    c = b.let_op("c", INT, "add", [x0, one])
    n = b.let_nondet("n", a, c)
    dom, st = _eval(b.term(n))
    assert st.get(n).difference((n.id,), (x0.id,)) == 1


def test_counter_loop_proved():
    term, c3, mf = build_counter_loop()
    dom, st = _eval(term)
    e = st.get(mf)
    assert e.difference((mf.id, 0), (mf.id, 1)) == 0
    assert st.get(c3).const_of((c3.id,)) == 1


def test_counter_loop_sound(small_budget):
    term, _, _ = build_counter_loop()
    dom = RelationalDomain.for_term(term)
    budget = EnumBudget(int_lo=0, int_hi=2, max_mu_iters=8)
    assert soundness_check(dom, term, budget).ok


# ---------------------------------------------------------------------------
# Concretization
# ---------------------------------------------------------------------------

def test_gamma_accepts_consistent_binding():
    d = EqRel.top().with_atom(p(1), p(0), 1)  # y = x + 1
    assert consistent(d, [(p(0), 3)])
    assert consistent(d, [(p(1), 4)])


def test_gamma_per_binding_not_joint():
    # x=3 and y=5 violate y=x+1 jointly, but each alone is satisfiable
    d = EqRel.top().with_atom(p(1), p(0), 1)
    assert consistent(d, [(p(0), 3)])
    assert consistent(d, [(p(1), 5)])


def test_gamma_tuple_components_joint():
    d = EqRel.top().with_atom(p(7, 0), p(7, 1), 0)
    ok = binding_points(7, TupleV((IntV(2), IntV(2))), tup(INT, INT))
    bad = binding_points(7, TupleV((IntV(2), IntV(3))), tup(INT, INT))
    assert consistent(d, ok)
    assert not consistent(d, bad)


def test_gamma_bottom_value_vacuous():
    assert binding_points(3, BottomV(), INT) is None


def test_all_top_accepts_everything(small_budget):
    b = Builder()
    u = b.let_unknown("u", INT)
    v = b.let_op("v", INT, "mul", [u, u])
    t = b.term(v)
    dom, st = _eval(t)
    for env in collect_term(t, small_budget):
        assert dom.gamma_contains(st, env)


def test_soundness_on_random_terms(small_budget):
    w = dict(DEFAULT_OP_WEIGHTS)
    w["arith"] = 7.0
    w["tuple"] = 2.0
    cfg_w = tuple(sorted(w.items()))
    for seed in range(150):
        t = gen_term(TermGenConfig(seed=seed, op_weights=cfg_w))
        v = soundness_check(RelationalDomain.for_term(t), t, small_budget)
        assert v.kind != "counterexample", seed
