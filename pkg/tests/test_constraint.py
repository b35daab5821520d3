import pytest

from laf import BOOL, Builder, EnumBudget, INT
from laf.constraint import (
    ConstraintAnalysis, ConstraintDomain, PropConfig, TRUE_COND, UNSAT,
    cond_of,
)
from laf.domain import TermGenConfig, gen_term, soundness_check
from laf.semantics import collect_term
from laf.values import Interval

from conftest import build_abs_term, build_counter_loop


def _analyze(term, limit=None, direction="both"):
    an = ConstraintAnalysis(cfg=PropConfig(limit=limit, direction=direction))
    an.run(term.ctx)
    return an


def _rows(an):
    return {d.var.name: d.var for d in an.defs.values()}


def _entries(an, var):
    return [(an.cond_str(c), str(v)) for c, v in an.store[var.id].entries]


# ---------------------------------------------------------------------------
# Conditions
# ---------------------------------------------------------------------------

def test_condition_conjoin_dedups_and_contradicts():
    a = cond_of((3, True))
    b = cond_of((3, True), (5, False))
    assert a.conjoin(b).lits == frozenset({(3, True), (5, False)})
    assert a.conjoin(cond_of((3, False))) is UNSAT or \
        a.conjoin(cond_of((3, False))).unsat


def test_condition_implies_is_subset():
    strong = cond_of((1, True), (2, False))
    weak = cond_of((1, True))
    assert strong.implies(weak)
    assert not weak.implies(strong)
    assert strong.implies(TRUE_COND)


def test_literal_canonicalization_through_not():
    b = Builder()
    u = b.let_unknown("u", INT)
    k = b.let_int("k", 0)
    c = b.let_op("c", BOOL, "lt", [u, k])
    n1 = b.let_op("n1", BOOL, "not", [c])
    n2 = b.let_op("n2", BOOL, "not", [n1])
    t = b.term(n2)
    an = _analyze(t)
    cvar = an.val[c.id]
    assert an.canon_lit(an.val[n1.id]) == (cvar.id, False)
    assert an.canon_lit(an.val[n2.id]) == (cvar.id, True)
    assert an.canon_lit(an.val[n2.id], positive=False) == (cvar.id, False)


# ---------------------------------------------------------------------------
# The worked example
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def abs_analysis():
    return _analyze(build_abs_term())


def test_fig_rows_x(abs_analysis):
    an = abs_analysis
    rows = _rows(an)
    assert _entries(an, rows["x"]) == [
        ("true", "[-inf;+inf]"),
        ("c1", "[-inf;-1]"),
        ("¬c1", "[0;+inf]"),
        ("¬c1 ∧ c2", "[0;8]"),
        ("c1 ∧ c2", "[-8;-1]"),
    ]


def test_fig_rows_conditions(abs_analysis):
    an = abs_analysis
    rows = _rows(an)
    assert _entries(an, rows["c1"]) == [
        ("true", "{true;false}"), ("c1", "{true}"), ("¬c1", "{false}")]
    assert _entries(an, rows["c2"]) == [
        ("true", "{true;false}"), ("c2", "{true}")]


def test_fig_rows_division(abs_analysis):
    an = abs_analysis
    rows = _rows(an)
    assert _entries(an, rows["xdiv"]) == [("c2", "[0;0]")]
    assert _entries(an, rows["c4"]) == [("c2", "{true}")]


def test_initial_evaluation_queries_at_condition(abs_analysis):
    an = abs_analysis
    rows = _rows(an)
    # querying x at c2 joins the complementary-branch refinements
    assert an.query(rows["x"], an.lit_condition(rows["c2"])) == \
        Interval.range(-8, 8)


def test_store_query_condition_monotone(abs_analysis):
    an = abs_analysis
    rows = _rows(an)
    x = rows["x"]
    c2 = an.lit_condition(rows["c2"])
    c1 = an.lit_condition(rows["c1"])
    both = c1.conjoin(c2)
    assert an.query(x, both).leq(an.query(x, c2))
    assert an.query(x, both).leq(an.query(x, c1))
    assert an.query(x, c2).leq(an.query(x, TRUE_COND))


def test_dump_layout(abs_analysis):
    dump = abs_analysis.dump_store()
    assert "x : true ⊩ [-inf;+inf], c1 ⊩ [-inf;-1]" in dump
    assert "xdiv : c2 ⊩ [0;0]" in dump


# ---------------------------------------------------------------------------
# Propagation limits
# ---------------------------------------------------------------------------

def test_limit_zero_only_seed_bindings():
    an = _analyze(build_abs_term(), limit=0)
    rows = _rows(an)
    assert _entries(an, rows["x"]) == [("true", "[-inf;+inf]")]
    # the seed bindings themselves are present
    assert ("c1", "{true}") in _entries(an, rows["c1"])


def test_limits_monotone_on_abs_term():
    term = build_abs_term()
    previous = None
    for limit in (0, 1, 2, None):
        an = _analyze(term, limit=limit)
        summary = {}
        for input_id, var in an.val.items():
            summary[input_id] = an.query(var, an.cond[input_id])
        if previous is not None:
            for key, value in summary.items():
                assert value.leq(previous[key]), (limit, key)
        previous = summary


def test_limits_monotone_on_random_terms(small_budget):
    for seed in range(50):
        t = gen_term(TermGenConfig(seed=seed))
        previous = None
        for limit in (0, 1, 2, None):
            an = _analyze(t, limit=limit)
            summary = {i: an.query(v, an.cond[i]) for i, v in an.val.items()}
            if previous is not None:
                for key, value in summary.items():
                    assert value.leq(previous[key]), (seed, limit, key)
            previous = summary


def test_unsat_conditions_never_stored(abs_analysis):
    for row in abs_analysis.store.values():
        for cond, _ in row.entries:
            assert not cond.unsat


def test_constraints_delay_assumes_to_nondet(abs_analysis):
    # assumes survive only as nondet branch wrappers; the division guard is
    # carried purely by the condition map
    from laf.core import AssumeDef, NondetDef, OpDef, UnknownDef

    defs = list(abs_analysis.constraints.defs)
    assumes = [d for d in defs if isinstance(d, AssumeDef)]
    (nd,) = [d for d in defs if isinstance(d, NondetDef)]
    assert {a.var.id for a in assumes} == {nd.a.id, nd.b.id}
    div = next(d for d in defs if isinstance(d, OpDef) and d.op.name == "div")
    unknown = next(d for d in defs if isinstance(d, UnknownDef))
    assert div.args[0] == unknown.var  # reads the input, not an assume of it


# ---------------------------------------------------------------------------
# Straight-line and nested assumes
# ---------------------------------------------------------------------------

def test_assume_free_constraints_isomorphic():
    b = Builder()
    u = b.let_unknown("u", INT)
    k = b.let_int("k", 1)
    s = b.let_op("s", INT, "add", [u, k])
    n = b.let_nondet("n", u, s)
    t = b.term(n)
    an = _analyze(t)
    out_kinds = [type(d).__name__ for d in an.constraints.defs]
    assert out_kinds == [type(d).__name__ for d in t.ctx.defs]
    assert all(c.is_true for c in an.cond.values())


def test_nested_assume_conjunction():
    b = Builder()
    u = b.let_unknown("u", INT)
    k = b.let_int("k", 0)
    c1 = b.let_op("c1", BOOL, "lt", [k, u])
    k5 = b.let_int("k5", 5)
    c2 = b.let_op("c2", BOOL, "lt", [u, k5])
    a1 = b.let_assume("a1", c1, u)
    a2 = b.let_assume("a2", c2, a1)
    t = b.term(a2)
    an = _analyze(t)
    lits = an.cond[a2.id].lits
    assert lits == frozenset({(an.val[c1.id].id, True), (an.val[c2.id].id, True)})


def test_unknown_binding_is_top():
    b = Builder()
    u = b.let_unknown("u", INT)
    an = _analyze(b.term(u))
    assert _entries(an, an.val[u.id]) == [("true", "[-inf;+inf]")]


# ---------------------------------------------------------------------------
# Loops
# ---------------------------------------------------------------------------

def test_identity_loop_keeps_store():
    b = Builder()
    k = b.let_int("k", 7)
    m = b.let_mu("m", k, lambda bb, x: x)
    t = b.term(m)
    an = _analyze(t)
    assert an.query(an.val[m.id], TRUE_COND) == Interval.const(7)


def test_counter_loop_stabilizes_with_widening():
    term, c3, mf = build_counter_loop()
    an = _analyze(term)
    loop_val = an.query(an.val[mf.id], TRUE_COND)
    # the x component widens to [0;+inf]
    assert loop_val.items[0] == Interval.range(0, None)
    assert loop_val.items[1] == Interval.range(0, None)


def test_body_local_conditions_quantified_out():
    term, c3, mf = build_counter_loop()
    an = _analyze(term)
    from laf.core import MuDef
    mu = next(d for d in an.defs.values() if isinstance(d, MuDef))
    body_ids = {bd.var.id for bd in mu.body.defs} | {mu.loopvar.id}
    row = an.store[an.val[mf.id].id]
    for cond, _ in row.entries:
        assert not any(lit[0] in body_ids for lit in cond.lits)


# ---------------------------------------------------------------------------
# Concretization and soundness
# ---------------------------------------------------------------------------

def test_every_oracle_env_accepted(small_budget):
    term = build_abs_term()
    an = _analyze(term)
    budget = EnumBudget(int_lo=-12, int_hi=12)
    for env in collect_term(term, budget):
        assert an.gamma_contains(env, budget)


def test_contradicting_store_rejects(small_budget):
    b = Builder()
    u = b.let_unknown("u", INT)
    t = b.term(u)
    an = _analyze(t)
    # wreck the store: claim u is always 1
    an.store[an.val[u.id].id].add(TRUE_COND, Interval.const(1))
    an._oracle_cache.clear()
    budget = EnumBudget(int_lo=-2, int_hi=2)
    rejected = [env for env in collect_term(t, budget)
                if not an.gamma_contains(env, budget)]
    assert rejected  # some real env asserting u != 1 is refused


def test_empty_store_accepts_everything(small_budget):
    b = Builder()
    u = b.let_unknown("u", INT)
    k = b.let_int("k", 2)
    s = b.let_op("s", INT, "mul", [u, k])
    t = b.term(s)
    an = _analyze(t)
    an.store.clear()
    an._oracle_cache.clear()
    for env in collect_term(t, small_budget):
        assert an.gamma_contains(env, small_budget)


def test_cyclic_refinement_hits_the_cap(small_budget):
    # u < v and v < u can be refined forever over the integers; the hard
    # step cap stops the descent and the result is still sound
    b = Builder()
    u = b.let_unknown("u", INT)
    v = b.let_unknown("v", INT)
    c = b.let_op("c", BOOL, "lt", [u, v])
    d = b.let_op("d", BOOL, "lt", [v, u])
    a1 = b.let_assume("a1", c, u)
    a2 = b.let_assume("a2", d, a1)
    t = b.term(a2)
    an = ConstraintAnalysis(cfg=PropConfig(max_steps=200))
    an.run(t.ctx)  # terminates
    dom = ConstraintDomain(PropConfig(max_steps=200), small_budget)
    assert soundness_check(dom, t, small_budget).kind != "counterexample"


def test_gamma_rejects_wrong_division_claim(small_budget):
    # an environment claiming xdiv = 1 while c2 holds matches no run
    term = build_abs_term()
    an = _analyze(term)
    names = {d.var.name: d.var for d in an.defs.values()}
    from laf.semantics import BoolV, IntV
    for out_env in an.witnesses(EnumBudget(int_lo=-12, int_hi=12)):
        if out_env.slots[names["c2"].id] == BoolV(True):
            assert out_env.slots[names["xdiv"].id] != IntV(1)


def test_soundness_on_random_terms(small_budget):
    for seed in range(150):
        t = gen_term(TermGenConfig(seed=seed))
        dom = ConstraintDomain(PropConfig(), small_budget)
        v = soundness_check(dom, t, small_budget)
        assert v.kind != "counterexample", seed
