import pytest

from laf import (
    BOOL, EMPTY, INT, Builder, DuplicateBinderError, ScopeError, SortError,
    append, bv, check_wf, iter_vars, sort_of, tup,
)
from laf.core import (
    Op, OpDef, Var, extract_op, get_op, lit_op, op_result_sort, var_count,
)


def test_sorts_compare_structurally():
    assert bv(8) == bv(8)
    assert bv(8) != bv(9)
    assert tup(INT, BOOL) == tup(INT, BOOL)
    assert tup(INT) != tup(INT, INT)


def test_sort_invariants():
    with pytest.raises(SortError):
        bv(0)
    with pytest.raises(SortError):
        tup()


def test_signatures():
    assert op_result_sort(Op("add"), (INT, INT)) == INT
    assert op_result_sort(Op("lt"), (INT, INT)) == BOOL
    assert op_result_sort(Op("eq"), (bv(4), bv(4))) == BOOL
    assert op_result_sort(Op("mk"), (INT, BOOL)) == tup(INT, BOOL)
    assert op_result_sort(get_op(1), (tup(INT, BOOL),)) == BOOL
    assert op_result_sort(extract_op(7, 4), (bv(8),)) == bv(4)
    assert op_result_sort(Op("concat"), (bv(3), bv(5))) == bv(8)
    with pytest.raises(SortError):
        op_result_sort(Op("add"), (INT, BOOL))
    with pytest.raises(SortError):
        op_result_sort(extract_op(8, 0), (bv(8),))
    with pytest.raises(SortError):
        op_result_sort(Op("eq"), (BOOL, BOOL))


def test_append_evaluates_to_13():
    b = Builder()
    x = b.let_int("x", 12)
    one = b.let_int("one", 1)
    y = b.let_op("y", INT, "add", [x, one])
    t = b.term(y)
    from laf import result_values
    assert {v.value for v in result_values(t)} == {13}


def test_append_base_case():
    b = Builder()
    x = b.let_int("x", 5)
    ctx = b.context
    assert len(ctx) == 1 and ctx.defs[0].var == x


def test_append_persistent():
    b = Builder()
    x = b.let_int("x", 1)
    ctx = b.context
    snapshot = ctx.defs
    d = OpDef(Var(1, "y", INT), lit_op(2), ())
    ctx2 = append(ctx, d)
    assert ctx.defs == snapshot  # original unchanged
    assert len(ctx2) == 2


def test_append_scope_error():
    ghost = Var(99, "z", INT)
    d = OpDef(Var(0, "x", INT), Op("neg"), (ghost,))
    with pytest.raises(ScopeError):
        append(EMPTY, d)


def test_duplicate_binder_rejected():
    b = Builder()
    x = b.let_int("x", 1)
    with pytest.raises(DuplicateBinderError):
        append(b.context, OpDef(x, lit_op(2), ()))


def test_builder_uniquifies_names():
    b = Builder()
    x1 = b.let_int("x", 1)
    x2 = b.let_int("x", 2)
    assert x1.name == "x" and x2.name != "x"


def test_check_wf_clean_term(small_budget):
    from conftest import build_abs_term
    assert check_wf(build_abs_term()) == []


def test_check_wf_sort_diagnostic():
    # assume with an int condition
    b = Builder()
    y = b.let_int("y", 1)
    z = b.let_int("z", 2)
    from laf.core import AssumeDef, Context, Term
    bad = AssumeDef(Var(2, "x", INT), y, z)
    term = Term(Context(b.context.defs + (bad,)), bad.var)
    diags = check_wf(term)
    assert any("bool" in d.message for d in diags)


def test_check_wf_duplicate_binder_diagnostic():
    b = Builder()
    x = b.let_int("x", 1)
    from laf.core import Context, Term
    dup = OpDef(Var(0, "x", INT), lit_op(2), ())
    term = Term(Context(b.context.defs + (dup,)), x)
    diags = check_wf(term)
    assert any("twice" in d.message or "shadow" in d.message for d in diags)


def test_iter_vars_increasing_ids():
    b = Builder()
    zero = b.let_int("zero", 0)
    one = b.let_int("one", 1)

    def body(bb, lv):
        return bb.let_op("x2", INT, "add", [lv, one])

    m = b.let_mu("m", zero, body)
    t = b.term(m)
    ids = [v.id for v in iter_vars(t)]
    assert ids == sorted(ids) == list(range(len(ids)))
    assert var_count(t) == len(ids)


def test_sort_of():
    from conftest import build_abs_term
    t = build_abs_term()
    by_name = {v.name: v for v in iter_vars(t)}
    assert sort_of(t, by_name["c1"]) == BOOL
    assert sort_of(t, by_name["t1"]) == tup(INT, INT)
    with pytest.raises(ScopeError):
        sort_of(t, Var(999, "ghost", INT))


def test_mu_shares_sorts():
    b = Builder()
    flag = b.let_bool("flag", True)
    with pytest.raises(SortError):
        # loop over a bool init but an int body exit
        b.let_mu("m", flag, lambda bb, lv: bb.let_int("k", 1))
