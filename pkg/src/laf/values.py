"""Abstract values: lattices with join, inclusion, widening, meet, a
concretization membership test, and transfer functions for every theory op.

Two families are provided: intervals (with boolean powersets and small
bitvector sets) and flat constants.  Tuples are componentwise in both.

Convention: the dead value ⊥ concretizes into *every* abstract value — the
lifted domains ignore assume conditions, so environments with killed values
must still be covered.  The empty interval therefore means "dead or
unreachable", never "no environment".
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

from .core import BitVecSort, BoolSort, IntSort, Op, Sort, TupleSort
from .semantics import (
    BitVecV, BoolV, BottomV, IntV, TupleV, Value, apply_op, trunc_div,
)


class AbstractValue:
    """Base type; concrete lattices implement the small shared protocol."""

    def join(self, other: "AbstractValue") -> "AbstractValue":
        raise NotImplementedError

    def meet(self, other: "AbstractValue") -> "AbstractValue":
        raise NotImplementedError

    def widen(self, other: "AbstractValue") -> "AbstractValue":
        raise NotImplementedError

    def leq(self, other: "AbstractValue") -> bool:
        raise NotImplementedError

    def contains(self, v: Value) -> bool:
        raise NotImplementedError

    def is_empty(self) -> bool:
        return False


# ---------------------------------------------------------------------------
# Intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval(AbstractValue):
    """[lo, hi] over the integers; None bounds are infinite; empty allowed."""

    lo: int | None
    hi: int | None
    empty: bool = False

    def __post_init__(self) -> None:
        if not self.empty and self.lo is not None and self.hi is not None:
            assert self.lo <= self.hi, f"bad interval [{self.lo},{self.hi}]"

    @staticmethod
    def top() -> "Interval":
        return Interval(None, None)

    @staticmethod
    def bottom() -> "Interval":
        return Interval(0, 0, empty=True)

    @staticmethod
    def const(z: int) -> "Interval":
        return Interval(z, z)

    @staticmethod
    def range(lo: int | None, hi: int | None) -> "Interval":
        if lo is not None and hi is not None and lo > hi:
            return Interval.bottom()
        return Interval(lo, hi)

    def is_empty(self) -> bool:
        return self.empty

    def join(self, other: "Interval") -> "Interval":
        if self.empty:
            return other
        if other.empty:
            return self
        lo = None if self.lo is None or other.lo is None else min(self.lo, other.lo)
        hi = None if self.hi is None or other.hi is None else max(self.hi, other.hi)
        return Interval(lo, hi)

    def meet(self, other: "Interval") -> "Interval":
        if self.empty or other.empty:
            return Interval.bottom()
        lo = self.lo if other.lo is None else other.lo if self.lo is None \
            else max(self.lo, other.lo)
        hi = self.hi if other.hi is None else other.hi if self.hi is None \
            else min(self.hi, other.hi)
        return Interval.range(lo, hi)

    def widen(self, other: "Interval", thresholds: tuple[int, ...] = ()) -> "Interval":
        """Unstable bounds jump to the next threshold, else to infinity."""
        if self.empty:
            return other
        if other.empty:
            return self
        lo: int | None
        hi: int | None
        if other.lo is None or (self.lo is not None and other.lo < self.lo):
            lo = max((t for t in thresholds
                      if other.lo is not None and t <= other.lo), default=None)
        else:
            lo = self.lo
        if other.hi is None or (self.hi is not None and other.hi > self.hi):
            hi = min((t for t in thresholds
                      if other.hi is not None and t >= other.hi), default=None)
        else:
            hi = self.hi
        return Interval(lo, hi)

    def leq(self, other: "Interval") -> bool:
        if self.empty:
            return True
        if other.empty:
            return False
        lo_ok = other.lo is None or (self.lo is not None and self.lo >= other.lo)
        hi_ok = other.hi is None or (self.hi is not None and self.hi <= other.hi)
        return lo_ok and hi_ok

    def contains(self, v: Value) -> bool:
        if isinstance(v, BottomV):
            return True
        if not isinstance(v, IntV) or self.empty:
            return isinstance(v, BottomV)
        return ((self.lo is None or self.lo <= v.value)
                and (self.hi is None or v.value <= self.hi))

    def contains_int(self, z: int) -> bool:
        return self.contains(IntV(z))

    def __str__(self) -> str:
        if self.empty:
            return "[]"
        lo = "-inf" if self.lo is None else str(self.lo)
        hi = "+inf" if self.hi is None else str(self.hi)
        return f"[{lo};{hi}]"


def _ivl_add(a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return Interval.bottom()
    lo = None if a.lo is None or b.lo is None else a.lo + b.lo
    hi = None if a.hi is None or b.hi is None else a.hi + b.hi
    return Interval(lo, hi)


def _ivl_neg(a: Interval) -> Interval:
    if a.empty:
        return a
    return Interval(None if a.hi is None else -a.hi,
                    None if a.lo is None else -a.lo)


def _ivl_sub(a: Interval, b: Interval) -> Interval:
    return _ivl_add(a, _ivl_neg(b))


def _mul_bound(x: int | None, y: int | None, sx: int, sy: int) -> tuple[int | None, int]:
    """Multiply bounds treating None as an infinity with sign sx/sy; returns
    (value-or-None, sign) where None means infinite with the given sign."""
    if x == 0 or y == 0:
        return 0, 0
    if x is None and y is None:
        return None, sx * sy
    if x is None:
        return None, sx * (1 if y > 0 else -1)
    if y is None:
        return None, sy * (1 if x > 0 else -1)
    return x * y, 0


def _ivl_mul(a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return Interval.bottom()
    candidates = []
    for x, sx in ((a.lo, -1), (a.hi, 1)):
        for y, sy in ((b.lo, -1), (b.hi, 1)):
            candidates.append(_mul_bound(x, y, sx, sy))
    finite = [v for v, _ in candidates if v is not None]
    neg_inf = any(v is None and s < 0 for v, s in candidates)
    pos_inf = any(v is None and s > 0 for v, s in candidates)
    lo = None if neg_inf else min(finite)
    hi = None if pos_inf else max(finite)
    return Interval(lo, hi)


def _ivl_div(a: Interval, b: Interval) -> Interval:
    """Truncating division; zero divisors contribute only ⊥ (ignored)."""
    if a.empty or b.empty:
        return Interval.bottom()
    parts = []
    pos = b.meet(Interval.range(1, None))
    neg = b.meet(Interval.range(None, -1))
    for d in (pos, neg):
        if d.empty:
            continue
        corners = []
        unbounded_num = a.lo is None or a.hi is None
        for x in (a.lo, a.hi):
            for y in (d.lo, d.hi):
                if x is None or y is None:
                    continue
                corners.append(trunc_div(x, y))
        # infinite numerator keeps the quotient unbounded on that side;
        # infinite divisor drives the quotient toward 0, covered by corners
        # at the finite end plus 0 itself.
        if d.lo is None or d.hi is None:
            corners.append(0)
        if not corners and not unbounded_num:
            continue
        lo: int | None = min(corners) if corners else None
        hi: int | None = max(corners) if corners else None
        if a.lo is None:
            lo = None if (d.lo is not None and d.lo > 0) or d.hi is None else lo
            hi = None if (d.hi is not None and d.hi < 0) or d.lo is None else hi
        if a.hi is None:
            hi = None if (d.lo is not None and d.lo > 0) or d.hi is None else hi
            lo = None if (d.hi is not None and d.hi < 0) or d.lo is None else lo
        parts.append(Interval(lo, hi))
    return reduce(lambda x, y: x.join(y), parts, Interval.bottom())


# ---------------------------------------------------------------------------
# Boolean powerset
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoolSet(AbstractValue):
    values: frozenset[bool]

    @staticmethod
    def top() -> "BoolSet":
        return BoolSet(frozenset({True, False}))

    @staticmethod
    def bottom() -> "BoolSet":
        return BoolSet(frozenset())

    @staticmethod
    def const(b: bool) -> "BoolSet":
        return BoolSet(frozenset({b}))

    def is_empty(self) -> bool:
        return not self.values

    def join(self, other: "BoolSet") -> "BoolSet":
        return BoolSet(self.values | other.values)

    def meet(self, other: "BoolSet") -> "BoolSet":
        return BoolSet(self.values & other.values)

    def widen(self, other: "BoolSet") -> "BoolSet":
        return self.join(other)

    def leq(self, other: "BoolSet") -> bool:
        return self.values <= other.values

    def contains(self, v: Value) -> bool:
        if isinstance(v, BottomV):
            return True
        return isinstance(v, BoolV) and v.value in self.values

    def __str__(self) -> str:
        if not self.values:
            return "{}"
        return "{" + ";".join(s for s in ("true", "false")
                              if (s == "true") in self.values) + "}"


# ---------------------------------------------------------------------------
# Small bitvector sets
# ---------------------------------------------------------------------------

BV_SET_CAP = 16


@dataclass(frozen=True)
class BitVecSet(AbstractValue):
    """Explicit set of bit patterns up to a cap, else ⊤ (values=None)."""

    width: int
    values: frozenset[int] | None  # None is ⊤

    @staticmethod
    def top(width: int) -> "BitVecSet":
        return BitVecSet(width, None)

    @staticmethod
    def bottom(width: int) -> "BitVecSet":
        return BitVecSet(width, frozenset())

    @staticmethod
    def const(width: int, bits: int) -> "BitVecSet":
        return BitVecSet(width, frozenset({bits}))

    @staticmethod
    def of(width: int, values: frozenset[int]) -> "BitVecSet":
        if len(values) > BV_SET_CAP:
            return BitVecSet.top(width)
        return BitVecSet(width, values)

    def is_empty(self) -> bool:
        return self.values is not None and not self.values

    def is_top(self) -> bool:
        return self.values is None

    def join(self, other: "BitVecSet") -> "BitVecSet":
        if self.values is None or other.values is None:
            return BitVecSet.top(self.width)
        return BitVecSet.of(self.width, self.values | other.values)

    def meet(self, other: "BitVecSet") -> "BitVecSet":
        if self.values is None:
            return other
        if other.values is None:
            return self
        return BitVecSet(self.width, self.values & other.values)

    def widen(self, other: "BitVecSet") -> "BitVecSet":
        return self.join(other)

    def leq(self, other: "BitVecSet") -> bool:
        if other.values is None:
            return True
        if self.values is None:
            return False
        return self.values <= other.values

    def contains(self, v: Value) -> bool:
        if isinstance(v, BottomV):
            return True
        if not isinstance(v, BitVecV) or v.width != self.width:
            return False
        return self.values is None or v.bits in self.values

    def __str__(self) -> str:
        if self.values is None:
            return f"bv{self.width}.top"
        return "{" + ";".join(format(b, "#x") for b in sorted(self.values)) + "}"


# ---------------------------------------------------------------------------
# Flat constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Const(AbstractValue):
    """⊥ / single known scalar value / ⊤ (value=None, is_top=True)."""

    value: Value | None
    top: bool

    @staticmethod
    def mk_top() -> "Const":
        return Const(None, True)

    @staticmethod
    def mk_bottom() -> "Const":
        return Const(None, False)

    @staticmethod
    def of(v: Value) -> "Const":
        return Const(v, False)

    def is_empty(self) -> bool:
        return self.value is None and not self.top

    def join(self, other: "Const") -> "Const":
        if self.is_empty():
            return other
        if other.is_empty():
            return self
        if self.top or other.top or self.value != other.value:
            return Const.mk_top()
        return self

    def meet(self, other: "Const") -> "Const":
        if self.top:
            return other
        if other.top:
            return self
        if self.is_empty() or other.is_empty() or self.value != other.value:
            return Const.mk_bottom()
        return self

    def widen(self, other: "Const") -> "Const":
        return self.join(other)

    def leq(self, other: "Const") -> bool:
        if self.is_empty() or other.top:
            return True
        if other.is_empty() or self.top:
            return False
        return self.value == other.value

    def contains(self, v: Value) -> bool:
        if isinstance(v, BottomV):
            return True
        return self.top or v == self.value

    def __str__(self) -> str:
        if self.top:
            return "top"
        if self.is_empty():
            return "bot"
        return str(self.value)


# ---------------------------------------------------------------------------
# Tuples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TupleAbs(AbstractValue):
    items: tuple[AbstractValue, ...]

    def is_empty(self) -> bool:
        return any(x.is_empty() for x in self.items)

    def join(self, other: "TupleAbs") -> "TupleAbs":
        return TupleAbs(tuple(a.join(b) for a, b in zip(self.items, other.items)))

    def meet(self, other: "TupleAbs") -> "TupleAbs":
        return TupleAbs(tuple(a.meet(b) for a, b in zip(self.items, other.items)))

    def widen(self, other: "TupleAbs") -> "TupleAbs":
        return TupleAbs(tuple(a.widen(b) for a, b in zip(self.items, other.items)))

    def leq(self, other: "TupleAbs") -> bool:
        return all(a.leq(b) for a, b in zip(self.items, other.items))

    def contains(self, v: Value) -> bool:
        if isinstance(v, BottomV):
            return True
        if not isinstance(v, TupleV) or len(v.items) != len(self.items):
            return False
        return all(a.contains(x) for a, x in zip(self.items, v.items))

    def __str__(self) -> str:
        return "<" + ", ".join(str(x) for x in self.items) + ">"


# ---------------------------------------------------------------------------
# Value families
# ---------------------------------------------------------------------------

class ValueFamily:
    """Chooses a lattice per sort and implements the transfer functions."""

    name = "abstract"

    def top(self, sort: Sort) -> AbstractValue:
        raise NotImplementedError

    def of_value(self, v: Value, sort: Sort) -> AbstractValue:
        raise NotImplementedError

    def transfer(self, op: Op, sort: Sort, args: list[AbstractValue]) -> AbstractValue:
        raise NotImplementedError

    def refine_args(self, op: Op, args: list[AbstractValue],
                    result: AbstractValue) -> list[AbstractValue | None]:
        """Backward transfer: per-argument refinement (already met with the
        old value) or None when nothing is learned.  Must over-approximate
        the exact preimage."""
        return [None] * len(args)


class IntervalFamily(ValueFamily):
    name = "interval"

    def __init__(self, widen_thresholds: tuple[int, ...] = ()) -> None:
        self.widen_thresholds = widen_thresholds

    def top(self, sort: Sort) -> AbstractValue:
        if isinstance(sort, IntSort):
            return Interval.top()
        if isinstance(sort, BoolSort):
            return BoolSet.top()
        if isinstance(sort, BitVecSort):
            return BitVecSet.top(sort.width)
        if isinstance(sort, TupleSort):
            return TupleAbs(tuple(self.top(s) for s in sort.elements))
        raise TypeError(f"no abstraction for {sort}")

    def bottom(self, sort: Sort) -> AbstractValue:
        if isinstance(sort, IntSort):
            return Interval.bottom()
        if isinstance(sort, BoolSort):
            return BoolSet.bottom()
        if isinstance(sort, BitVecSort):
            return BitVecSet.bottom(sort.width)
        if isinstance(sort, TupleSort):
            return TupleAbs(tuple(self.bottom(s) for s in sort.elements))
        raise TypeError(f"no abstraction for {sort}")

    def of_value(self, v: Value, sort: Sort) -> AbstractValue:
        if isinstance(v, BottomV):
            return self.bottom(sort)
        if isinstance(v, IntV):
            return Interval.const(v.value)
        if isinstance(v, BoolV):
            return BoolSet.const(v.value)
        if isinstance(v, BitVecV):
            return BitVecSet.const(v.width, v.bits)
        if isinstance(v, TupleV):
            assert isinstance(sort, TupleSort)
            return TupleAbs(tuple(self.of_value(x, s)
                                  for x, s in zip(v.items, sort.elements)))
        raise TypeError(f"no abstraction for {v}")

    def widen(self, a: AbstractValue, b: AbstractValue) -> AbstractValue:
        if isinstance(a, Interval):
            return a.widen(b, self.widen_thresholds)
        if isinstance(a, TupleAbs):
            return TupleAbs(tuple(self.widen(x, y)
                                  for x, y in zip(a.items, b.items)))
        return a.widen(b)

    # -- forward transfer ----------------------------------------------------

    def transfer(self, op: Op, sort: Sort, args: list[AbstractValue]) -> AbstractValue:
        n = op.name
        if n == "lit":
            return self.of_value(apply_op(op, sort, ()), sort)
        if n == "mk":
            return TupleAbs(tuple(args))
        if n == "get":
            t = args[0]
            assert isinstance(t, TupleAbs)
            return t.items[op.params[0]]
        if any(a.is_empty() for a in args):
            return self.bottom(sort)
        if n == "add":
            return _ivl_add(args[0], args[1])
        if n == "sub":
            return _ivl_sub(args[0], args[1])
        if n == "neg":
            return _ivl_neg(args[0])
        if n == "mul":
            return _ivl_mul(args[0], args[1])
        if n == "div":
            return _ivl_div(args[0], args[1])
        if n in ("lt", "le"):
            a, b = args
            a_lo = float("-inf") if a.lo is None else a.lo
            a_hi = float("inf") if a.hi is None else a.hi
            b_lo = float("-inf") if b.lo is None else b.lo
            b_hi = float("inf") if b.hi is None else b.hi
            if n == "lt":
                if a_hi < b_lo:
                    return BoolSet.const(True)
                if a_lo >= b_hi:
                    return BoolSet.const(False)
            else:
                if a_hi <= b_lo:
                    return BoolSet.const(True)
                if a_lo > b_hi:
                    return BoolSet.const(False)
            return BoolSet.top()
        if n == "eq":
            a, b = args
            if isinstance(a, Interval):
                meet = a.meet(b)
                if meet.empty:
                    return BoolSet.const(False)
                if (a.lo is not None and a.lo == a.hi and b.lo == a.lo
                        and b.hi == a.lo):
                    return BoolSet.const(True)
                return BoolSet.top()
            if isinstance(a, BitVecSet):
                if a.is_top() or b.is_top():
                    return BoolSet.top()
                common = a.values & b.values
                if not common:
                    return BoolSet.const(False)
                if len(a.values) == 1 and a.values == b.values:
                    return BoolSet.const(True)
                return BoolSet.top()
            raise TypeError(f"eq on {a}")
        if n in ("and", "or"):
            a, b = args
            f = (lambda x, y: x and y) if n == "and" else (lambda x, y: x or y)
            out = frozenset(f(x, y) for x in a.values for y in b.values)
            return BoolSet(out)
        if n == "not":
            return BoolSet(frozenset(not x for x in args[0].values))
        if n == "extract":
            a = args[0]
            hi, lo = op.params
            if a.is_top():
                return BitVecSet.top(hi - lo + 1)
            mask = (1 << (hi - lo + 1)) - 1
            return BitVecSet.of(hi - lo + 1,
                                frozenset((b >> lo) & mask for b in a.values))
        if n == "concat":
            a, b = args
            if a.is_top() or b.is_top():
                return BitVecSet.top(a.width + b.width)
            return BitVecSet.of(
                a.width + b.width,
                frozenset((x << b.width) | y for x in a.values for y in b.values))
        raise TypeError(f"unknown op {n}")

    # -- backward transfer ---------------------------------------------------

    def refine_args(self, op: Op, args: list[AbstractValue],
                    result: AbstractValue) -> list[AbstractValue | None]:
        n = op.name
        out: list[AbstractValue | None] = [None] * len(args)
        if n == "add":
            out[0] = args[0].meet(_ivl_sub(result, args[1]))
            out[1] = args[1].meet(_ivl_sub(result, args[0]))
        elif n == "sub":
            out[0] = args[0].meet(_ivl_add(result, args[1]))
            out[1] = args[1].meet(_ivl_sub(args[0], result))
        elif n == "neg":
            out[0] = args[0].meet(_ivl_neg(result))
        elif n == "div":
            # x / y = q  =>  x in q*y + r with |r| <= max|y| - 1, y != 0
            y = args[1]
            nz = y.meet(Interval.range(1, None)).join(y.meet(Interval.range(None, -1)))
            if not nz.empty:
                bound = None
                if nz.lo is not None and nz.hi is not None:
                    bound = max(abs(nz.lo), abs(nz.hi)) - 1
                prod = _ivl_mul(result, nz)
                slack = Interval.top() if bound is None else Interval.range(-bound, bound)
                out[0] = args[0].meet(_ivl_add(prod, slack))
        elif n in ("lt", "le"):
            out[0], out[1] = self._refine_cmp(n, args[0], args[1], result)
        elif n == "eq":
            if isinstance(result, BoolSet) and result.values == frozenset({True}):
                if isinstance(args[0], (Interval, BitVecSet)):
                    both = args[0].meet(args[1])
                    out[0] = both
                    out[1] = both
            elif isinstance(result, BoolSet) and result.values == frozenset({False}):
                out[0], out[1] = self._refine_neq(args[0], args[1])
        elif n == "not":
            if isinstance(result, BoolSet):
                out[0] = args[0].meet(BoolSet(frozenset(not b for b in result.values)))
        elif n == "and":
            if isinstance(result, BoolSet) and result.values == frozenset({True}):
                out[0] = args[0].meet(BoolSet.const(True))
                out[1] = args[1].meet(BoolSet.const(True))
        elif n == "or":
            if isinstance(result, BoolSet) and result.values == frozenset({False}):
                out[0] = args[0].meet(BoolSet.const(False))
                out[1] = args[1].meet(BoolSet.const(False))
        elif n == "mk":
            if isinstance(result, TupleAbs):
                out = [a.meet(r) for a, r in zip(args, result.items)]
        elif n == "get":
            t = args[0]
            if isinstance(t, TupleAbs):
                i = op.params[0]
                items = list(t.items)
                items[i] = items[i].meet(result)
                out[0] = TupleAbs(tuple(items))
        return out

    def _refine_cmp(self, n: str, a: Interval, b: Interval, result: AbstractValue):
        if not isinstance(result, BoolSet) or len(result.values) != 1:
            return None, None
        truth = True in result.values
        # Normalize to "a < b" / "a <= b" knowledge.
        if n == "lt":
            if truth:   # a < b: a.hi <= b.hi - 1, b.lo >= a.lo + 1
                ra = a.meet(Interval.range(None, _sub1(b.hi)))
                rb = b.meet(Interval.range(_add1(a.lo), None))
            else:       # a >= b
                ra = a.meet(Interval.range(b.lo, None))
                rb = b.meet(Interval.range(None, a.hi))
        else:
            if truth:   # a <= b
                ra = a.meet(Interval.range(None, b.hi))
                rb = b.meet(Interval.range(a.lo, None))
            else:       # a > b
                ra = a.meet(Interval.range(_add1(b.lo), None))
                rb = b.meet(Interval.range(None, _sub1(a.hi)))
        return ra, rb

    def _refine_neq(self, a: AbstractValue, b: AbstractValue):
        ra = rb = None
        if isinstance(a, Interval) and not a.empty and not b.empty:
            if b.lo is not None and b.lo == b.hi:
                ra = a.meet(_without_point(a, b.lo))
            if a.lo is not None and a.lo == a.hi:
                rb = b.meet(_without_point(b, a.lo))
        if isinstance(a, BitVecSet) and a.values is not None and b.values is not None:
            if len(b.values) == 1:
                ra = BitVecSet(a.width, a.values - b.values)
            if len(a.values) == 1:
                rb = BitVecSet(b.width, b.values - a.values)
        return ra, rb


def _add1(x: int | None) -> int | None:
    return None if x is None else x + 1


def _sub1(x: int | None) -> int | None:
    return None if x is None else x - 1


def _without_point(a: Interval, z: int) -> Interval:
    """Trim an endpoint equal to z; interior points cannot be removed."""
    lo, hi = a.lo, a.hi
    if lo is not None and lo == z:
        lo = lo + 1
    if hi is not None and hi == z:
        hi = hi - 1
    return Interval.range(lo, hi)


class ConstFamily(ValueFamily):
    """Flat constants on scalars, componentwise on tuples."""

    name = "constants"

    def top(self, sort: Sort) -> AbstractValue:
        if isinstance(sort, TupleSort):
            return TupleAbs(tuple(self.top(s) for s in sort.elements))
        return Const.mk_top()

    def bottom(self, sort: Sort) -> AbstractValue:
        if isinstance(sort, TupleSort):
            return TupleAbs(tuple(self.bottom(s) for s in sort.elements))
        return Const.mk_bottom()

    def of_value(self, v: Value, sort: Sort) -> AbstractValue:
        if isinstance(v, BottomV):
            return self.bottom(sort)
        if isinstance(v, TupleV):
            assert isinstance(sort, TupleSort)
            return TupleAbs(tuple(self.of_value(x, s)
                                  for x, s in zip(v.items, sort.elements)))
        return Const.of(v)

    def widen(self, a: AbstractValue, b: AbstractValue) -> AbstractValue:
        return a.widen(b)

    def transfer(self, op: Op, sort: Sort, args: list[AbstractValue]) -> AbstractValue:
        n = op.name
        if n == "lit":
            return Const.of(apply_op(op, sort, ()))
        if n == "mk":
            return TupleAbs(tuple(args))
        if n == "get":
            t = args[0]
            assert isinstance(t, TupleAbs)
            return t.items[op.params[0]]
        if any(a.is_empty() for a in args):
            return self.bottom(sort)
        if any(isinstance(a, Const) and a.top for a in args):
            return self.top(sort)
        vals = tuple(a.value for a in args)  # type: ignore[union-attr]
        res = apply_op(op, sort, vals)
        if isinstance(res, BottomV):
            return self.bottom(sort)
        return Const.of(res)

    def refine_args(self, op: Op, args: list[AbstractValue],
                    result: AbstractValue) -> list[AbstractValue | None]:
        out: list[AbstractValue | None] = [None] * len(args)
        if op.name == "mk" and isinstance(result, TupleAbs):
            out = [a.meet(r) for a, r in zip(args, result.items)]
        elif op.name == "get" and isinstance(args[0], TupleAbs):
            i = op.params[0]
            items = list(args[0].items)
            items[i] = items[i].meet(result)
            out[0] = TupleAbs(tuple(items))
        return out


def scalar_width(a: AbstractValue) -> int:
    """Number of scalar lattice components (tuples recurse)."""
    if isinstance(a, TupleAbs):
        return sum(scalar_width(x) for x in a.items)
    return 1
