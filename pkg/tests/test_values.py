import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from laf import BOOL, INT, EnumBudget, bv, tup
from laf.core import Op, extract_op, get_op
from laf.semantics import (
    BOTTOM, BoolV, BottomV, IntV, TupleV, apply_op, enumerate_sort,
)
from laf.values import (
    BoolSet, Const, ConstFamily, Interval, IntervalFamily, TupleAbs,
    scalar_width,
)

FAM = IntervalFamily()

intervals = st.builds(
    lambda lo, hi, inf_lo, inf_hi: Interval.range(
        None if inf_lo else min(lo, hi), None if inf_hi else max(lo, hi)),
    st.integers(-10, 10), st.integers(-10, 10), st.booleans(), st.booleans())
boolsets = st.sampled_from([BoolSet.bottom(), BoolSet.const(True),
                            BoolSet.const(False), BoolSet.top()])


# ---------------------------------------------------------------------------
# Lattice laws
# ---------------------------------------------------------------------------

@given(intervals, intervals)
def test_join_upper_bound(a, b):
    j = a.join(b)
    assert a.leq(j) and b.leq(j)


@given(intervals)
def test_join_idempotent(a):
    assert a.join(a) == a


@given(intervals, intervals)
def test_join_commutative(a, b):
    assert a.join(b) == b.join(a)


@given(intervals, intervals, intervals)
def test_join_associative(a, b, c):
    x = a.join(b).join(c)
    y = a.join(b.join(c))
    assert x.leq(y) and y.leq(x)


@given(intervals, intervals)
def test_meet_lower_bound(a, b):
    m = a.meet(b)
    assert m.leq(a) and m.leq(b)


@given(intervals, intervals)
def test_join_gamma_superset(a, b):
    j = a.join(b)
    for z in range(-12, 13):
        if a.contains_int(z) or b.contains_int(z):
            assert j.contains_int(z)


@given(boolsets, boolsets)
def test_boolset_join_is_union(a, b):
    assert a.join(b).values == a.values | b.values


def test_branch_join_example():
    a = Interval.range(-8, -1)
    b = Interval.range(0, 8)
    assert a.join(b) == Interval.range(-8, 8)


def test_widen_example():
    assert Interval.range(0, 1).widen(Interval.range(0, 2)) == Interval.range(0, None)


def test_widen_thresholds():
    w = Interval.range(0, 1).widen(Interval.range(0, 2), thresholds=(-1, 0, 1, 8))
    assert w == Interval.range(0, 8)


@given(st.lists(intervals, min_size=1, max_size=6))
def test_widening_stabilizes_chains(chain):
    # force an ascending chain by cumulative joins
    ascending = []
    acc = chain[0]
    for x in chain:
        acc = acc.join(x)
        ascending.append(acc)
    w = ascending[0]
    changes = 0
    for nxt in ascending[1:] + ascending[-1:] * 3:
        w2 = w.widen(w.join(nxt))
        if w2 != w:
            changes += 1
        w = w2
    assert changes <= 3


def test_bottom_and_empty():
    assert Interval.bottom().is_empty()
    assert Interval.bottom().leq(Interval.range(0, 0))
    assert Interval.range(3, 2) == Interval.bottom()


# ---------------------------------------------------------------------------
# Gamma membership
# ---------------------------------------------------------------------------

def test_gamma_examples():
    assert Interval.range(0, 8).contains(IntV(5))
    assert Interval.bottom().contains(BOTTOM)          # ⊥ in every value
    assert not BoolSet.const(False).contains(BoolV(True))
    assert TupleAbs((Interval.const(1), BoolSet.top())).contains(
        TupleV((IntV(1), BoolV(False))))
    assert TupleAbs((Interval.const(1),)).contains(BOTTOM)


def test_bottom_in_every_abstraction():
    for a in (Interval.top(), Interval.bottom(), BoolSet.bottom(),
              Const.mk_bottom(), TupleAbs((Interval.bottom(),))):
        assert a.contains(BOTTOM)


# ---------------------------------------------------------------------------
# Transfer soundness (condition 3, brute force over a window)
# ---------------------------------------------------------------------------

def _members(a, sort, budget):
    return [v for v in enumerate_sort(sort, budget) if a.contains(v)]


SCALAR_CASES = [
    (Op("add"), (INT, INT), INT),
    (Op("sub"), (INT, INT), INT),
    (Op("mul"), (INT, INT), INT),
    (Op("div"), (INT, INT), INT),
    (Op("neg"), (INT,), INT),
    (Op("lt"), (INT, INT), BOOL),
    (Op("le"), (INT, INT), BOOL),
    (Op("eq"), (INT, INT), BOOL),
    (Op("and"), (BOOL, BOOL), BOOL),
    (Op("or"), (BOOL, BOOL), BOOL),
    (Op("not"), (BOOL,), BOOL),
    (extract_op(2, 1), (bv(4),), bv(2)),
    (Op("concat"), (bv(2), bv(2)), bv(4)),
    (Op("eq"), (bv(2), bv(2)), BOOL),
]

SAMPLE_INTERVALS = [
    Interval.bottom(), Interval.const(0), Interval.const(-3),
    Interval.range(-2, 2), Interval.range(0, 3), Interval.range(None, -1),
    Interval.range(1, None), Interval.top(), Interval.range(9, 9),
]


def _samples(sort):
    if sort == INT:
        return SAMPLE_INTERVALS
    if sort == BOOL:
        return [BoolSet.bottom(), BoolSet.const(True), BoolSet.const(False),
                BoolSet.top()]
    from laf.values import BitVecSet
    width = sort.width
    return [BitVecSet.bottom(width), BitVecSet.const(width, 1),
            BitVecSet.of(width, frozenset({0, 3})), BitVecSet.top(width)]


@pytest.mark.parametrize("op,arg_sorts,res_sort", SCALAR_CASES,
                         ids=[str(c[0]) for c in SCALAR_CASES])
def test_transfer_condition3(op, arg_sorts, res_sort):
    budget = EnumBudget(int_lo=-4, int_hi=4)
    for abs_args in itertools.product(*(_samples(s) for s in arg_sorts)):
        out = FAM.transfer(op, res_sort, list(abs_args))
        pools = [_members(a, s, budget) for a, s in zip(abs_args, arg_sorts)]
        for concrete in itertools.product(*pools):
            res = apply_op(op, res_sort, concrete)
            assert out.contains(res), (op, abs_args, concrete, res, out)


def test_transfer_monotone_spotcheck():
    small = Interval.range(0, 1)
    large = Interval.range(-1, 3)
    rhs = Interval.const(2)
    a = FAM.transfer(Op("add"), INT, [small, rhs])
    b = FAM.transfer(Op("add"), INT, [large, rhs])
    assert a.leq(b)


def test_div_by_nine_window():
    assert FAM.transfer(Op("div"), INT,
                        [Interval.range(-8, 8), Interval.const(9)]) == \
        Interval.const(0)


def test_lt_derived_example():
    # brute-forced over the window [-8,-1] x {0}: always true
    out = FAM.transfer(Op("lt"), BOOL,
                       [Interval.range(None, -1), Interval.const(0)])
    assert out == BoolSet.const(True)


def test_add_identity():
    x = Interval.range(-3, 5)
    assert FAM.transfer(Op("add"), INT, [x, Interval.const(0)]) == x


def test_tuple_transfer():
    t = FAM.transfer(Op("mk"), tup(INT, BOOL),
                     [Interval.const(1), BoolSet.const(True)])
    assert isinstance(t, TupleAbs)
    assert FAM.transfer(get_op(0), INT, [t]) == Interval.const(1)
    assert scalar_width(t) == 2


# ---------------------------------------------------------------------------
# Backward (refinement) transfers: refined γ ⊇ exact preimage
# ---------------------------------------------------------------------------

REFINE_CASES = [
    (Op("add"), (INT, INT), INT),
    (Op("sub"), (INT, INT), INT),
    (Op("neg"), (INT,), INT),
    (Op("div"), (INT, INT), INT),
    (Op("lt"), (INT, INT), BOOL),
    (Op("le"), (INT, INT), BOOL),
    (Op("eq"), (INT, INT), BOOL),
    (Op("not"), (BOOL,), BOOL),
    (Op("and"), (BOOL, BOOL), BOOL),
    (Op("or"), (BOOL, BOOL), BOOL),
]


@pytest.mark.parametrize("op,arg_sorts,res_sort", REFINE_CASES,
                         ids=[str(c[0]) for c in REFINE_CASES])
def test_refinement_covers_preimage(op, arg_sorts, res_sort):
    budget = EnumBudget(int_lo=-3, int_hi=3)
    results = _samples(res_sort)
    for abs_args in itertools.product(*(_samples(s) for s in arg_sorts)):
        pools = [_members(a, s, budget) for a, s in zip(abs_args, arg_sorts)]
        for result_abs in results:
            refined = FAM.refine_args(op, list(abs_args), result_abs)
            for concrete in itertools.product(*pools):
                res = apply_op(op, res_sort, concrete)
                if isinstance(res, BottomV) or not result_abs.contains(res):
                    continue
                # this concrete combination is in the exact preimage: every
                # refined argument must still contain its component
                for i, r in enumerate(refined):
                    if r is not None:
                        assert r.contains(concrete[i]), \
                            (op, abs_args, result_abs, concrete, i, r)


def test_tuple_refinement():
    t = TupleAbs((Interval.top(), Interval.top()))
    refined = FAM.refine_args(get_op(0), [t], Interval.range(0, 8))
    assert refined[0].items[0] == Interval.range(0, 8)
    args = [Interval.top(), Interval.const(3)]
    out = FAM.refine_args(Op("mk"), args,
                          TupleAbs((Interval.range(1, 2), Interval.top())))
    assert out[0] == Interval.range(1, 2)


# ---------------------------------------------------------------------------
# Flat constants
# ---------------------------------------------------------------------------

def test_const_family():
    fam = ConstFamily()
    one = fam.of_value(IntV(1), INT)
    two = fam.of_value(IntV(2), INT)
    assert one.join(one) == one
    assert one.join(two).top
    assert fam.transfer(Op("add"), INT, [one, two]) == fam.of_value(IntV(3), INT)
    assert fam.transfer(Op("add"), INT, [one, Const.mk_top()]).top
    assert Const.mk_bottom().leq(one) and one.leq(Const.mk_top())
