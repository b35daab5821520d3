from laf import Builder, EnumBudget, INT, check_wf
from laf.domain import (
    AbstractDomain, TermGenConfig, gen_term, soundness_check,
)
from laf.nonrel import NonRelDomain
from laf.text import print_term
from laf.values import IntervalFamily

from conftest import build_abs_term


def test_gen_term_deterministic():
    a = gen_term(TermGenConfig(seed=0))
    b = gen_term(TermGenConfig(seed=0))
    assert a == b
    assert gen_term(TermGenConfig(seed=1)) != a


GOLDEN_SEED0 = """\
(let k1 int 2)
(let m2 int (mu (m2_s)
  (let t3 int (neg m2_s))
  m2_s k1))
(let p4 (tuple int int) (mk m2 m2))
(let c5 bool (lt k1 m2))
(let t6 int (add m2 k1))
(let a7 int (assume c5 k1))
(let c8 bool (and c5 c5))
(let a9 int (assume c5 a7))
(let u10 int (unknown))
(let c11 bool (not c8))
(let t12 int (neg k1))
(let t13 int (div u10 t12))
(in t12)
"""


def test_gen_term_seed0_golden():
    assert print_term(gen_term(TermGenConfig(seed=0))) == GOLDEN_SEED0


def test_generated_terms_well_formed():
    for seed in range(1000):
        t = gen_term(TermGenConfig(seed=seed))
        assert check_wf(t) == [], seed


def test_generated_mu_exits_in_scope():
    from laf.core import MuDef, iter_defs
    found = 0
    for seed in range(300):
        t = gen_term(TermGenConfig(seed=seed))
        for d in iter_defs(t.ctx):
            if isinstance(d, MuDef):
                found += 1
                body_ids = {bd.var.id for bd in d.body.defs}
                body_ids.add(d.loopvar.id)
                outer = {v.id for v in _outer_scope(t, d)}
                assert d.exit.id in body_ids | outer
    assert found > 10


def _outer_scope(term, mu):
    from laf.core import iter_vars
    return [v for v in iter_vars(term) if v.id < mu.loopvar.id]


def test_soundness_ok_on_interval_domain(small_budget):
    t = build_abs_term()
    dom = NonRelDomain.for_term(IntervalFamily(), t)
    assert soundness_check(dom, t, small_budget).ok


class BrokenDomain(AbstractDomain):
    name = "broken"

    def initial(self):
        return None

    def eval_abs(self, ctx, state):
        return None

    def gamma_contains(self, state, env):
        return False  # empty concretization: everything is a counterexample


def test_soundness_counterexample_on_broken_domain(small_budget):
    b = Builder()
    x = b.let_int("x", 1)
    t = b.term(x)
    verdict = soundness_check(BrokenDomain(), t, small_budget)
    assert verdict.kind == "counterexample"
    assert verdict.env is not None


def test_soundness_inconclusive_on_budget(small_budget):
    b = Builder()
    one = b.let_int("one", 1)
    m = b.let_mu("m", one, lambda bb, x: bb.let_op("x2", INT, "add", [x, x]))
    t = b.term(m)
    verdict = soundness_check(NonRelDomain.for_term(IntervalFamily(), t),
                              t, EnumBudget(max_mu_iters=4))
    assert verdict.kind == "inconclusive"


def _nested_loop_term():
    # the inner loop folds a choice between its state and the outer loop
    # variable shifted by one, so both value sets stay finite
    b = Builder()
    zero = b.let_int("zero", 0)
    one = b.let_int("one", 1)

    def outer(bb, x):
        clamp = bb.let_nondet("clamp", x, one)

        def inner(bbb, y):
            return bbb.let_nondet("pick", y, clamp)

        folded = bb.let_mu("inner", one, inner)
        return bb.let_nondet("step", x, folded)

    m = b.let_mu("outer", zero, outer)
    k = b.let_op("k", INT, "add", [m, one])
    return b.term(k)


def test_nested_loops_sound_in_every_domain():
    from laf.constraint import ConstraintDomain, PropConfig
    from laf.relational import RelationalDomain
    from laf.rewrite import APPROX, EXACT, RewriteDomain, default_rulesets
    from laf.semantics import collect_term

    t = _nested_loop_term()
    assert check_wf(t) == []
    budget = EnumBudget(int_lo=-2, int_hi=2, max_mu_iters=24,
                        max_env_count=100_000)
    collect_term(t, budget)  # convergent: the oracle really runs
    exact, approx = default_rulesets()
    domains = [
        NonRelDomain.for_term(IntervalFamily(), t),
        RewriteDomain(exact, EXACT, budget),
        RewriteDomain(exact + approx, APPROX, budget),
        ConstraintDomain(PropConfig(), budget),
        RelationalDomain.for_term(t),
    ]
    for dom in domains:
        verdict = soundness_check(dom, t, budget)
        assert verdict.ok, (dom.name, verdict.kind)


def test_gamma_contains_pure(small_budget):
    t = build_abs_term()
    dom = NonRelDomain.for_term(IntervalFamily(), t)
    state = dom.eval_abs(t.ctx, dom.initial())
    from laf.semantics import collect_term
    env = next(iter(collect_term(t, small_budget)))
    assert dom.gamma_contains(state, env) == dom.gamma_contains(state, env)
