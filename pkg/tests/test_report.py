"""Report-level guarantees across the fixture corpus: a 'proved' verdict
from any domain never contradicts the oracle, and exit codes are stable."""

import pytest
from click.testing import CliRunner

from laf import EnumBudget
from laf.cli import main
from laf.constraint import ConstraintAnalysis, PropConfig
from laf.core import OpDef, iter_defs
from laf.lang import parse_while, simplify_translation, translate
from laf.nonrel import NonRelDomain
from laf.relational import RelationalDomain
from laf.report import PROVED, REFUTED
from laf.rewrite import EMPTY_STATE, default_rulesets, eval_rewrite
from laf.semantics import BoolV, BottomV, collect_term
from laf.values import BoolSet, ConstFamily, IntervalFamily

from conftest import FIXTURES


def _fixture_terms():
    out = []
    for name in ("abs.while", "loop.while"):
        tr = simplify_translation(translate(parse_while(
            (FIXTURES / name).read_text())))
        out.append((name, tr.term, list(tr.assertions)))
    # the shipped bitvector fixture at half width: same structure, but the
    # unknowns stay enumerable within the oracle budget
    from conftest import build_bitcopy_term
    term, assertion = build_bitcopy_term(width=8)
    out.append(("bitcopy-w8", term, [("result", assertion)]))
    return out


def _verdicts(term, assertions):
    """(name, var, status) per assertion per domain."""
    results = []
    for family in (IntervalFamily(), ConstFamily()):
        dom = NonRelDomain.for_term(family, term)
        state = dom.eval_abs(term.ctx, dom.initial())
        for name, var in assertions:
            val = state.slots[var.id]
            status = None
            if val == BoolSet.const(True):
                status = PROVED
            elif val == BoolSet.const(False):
                status = REFUTED
            results.append((family.name, name, var, status))
    exact, approx = default_rulesets()
    rw = eval_rewrite(term.ctx, EMPTY_STATE, exact)
    defs = {d.var.id: d for d in iter_defs(rw.out)}
    for name, var in assertions:
        image = rw.image(var)
        d = defs.get(image.id)
        status = None
        if isinstance(d, OpDef) and d.op.name == "lit":
            status = PROVED if d.op.params[0] else REFUTED
        results.append(("rewrite", name, var, status))
    an = ConstraintAnalysis(cfg=PropConfig())
    an.run(term.ctx)
    for name, var in assertions:
        val = an.query(an.val[var.id], an.cond[var.id])
        status = None
        if val == BoolSet.const(True):
            status = PROVED
        elif val == BoolSet.const(False):
            status = REFUTED
        results.append(("constraint", name, var, status))
    rel = RelationalDomain.for_term(term)
    rel_state = rel.eval_abs(term.ctx, rel.initial())
    for name, var in assertions:
        element = rel_state.slots[var.id]
        status = None
        if element is not None and not element.bottom:
            k = element.const_of((var.id,))
            if k == 1:
                status = PROVED
            elif k == 0:
                status = REFUTED
        results.append(("relational", name, var, status))
    return results


@pytest.mark.parametrize("name,term,assertions", _fixture_terms(),
                         ids=[f[0] for f in _fixture_terms()])
def test_proved_never_contradicts_oracle(name, term, assertions):
    budget = EnumBudget(int_lo=-10, int_hi=10, max_mu_iters=12,
                        max_env_count=200_000)
    envs = collect_term(term, budget)
    for domain, aname, var, status in _verdicts(term, assertions):
        if status is None:
            continue
        want = status == PROVED
        for env in envs:
            value = env.slots[var.id]
            if value is None or isinstance(value, BottomV):
                continue  # dead assertions are vacuous
            assert value == BoolV(want), (domain, aname, status)


def test_exit_codes_deterministic():
    runner = CliRunner()
    args = ["analyze", str(FIXTURES / "abs.while"), "--domain", "constraint"]
    first = runner.invoke(main, args)
    second = runner.invoke(main, args)
    assert first.exit_code == second.exit_code == 1
