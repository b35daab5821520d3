"""Rewriting abstract domain: dynamic translation through a term-rewriting
system.

The abstract state is itself a context, built by re-emitting each input
definition after rewriting its let-inlined view.  When a definition rewrites
to an existing variable, only an alias is recorded; identical deterministic
definitions are shared (nondet, unknown and μ are never shared — each is an
independent choice).

Rule classes:
  exact   — evaluation of both sides agrees for every substitution;
  approx  — agreement is only required when the left side is not dead (⊥).

Some shipped exact rules carry a liveness side condition (the matched
variables must be provably never-⊥, e.g. `eq(x,x) -> true`): with a strict
`eq`, a dead operand makes the left side ⊥ while the right side stays true,
so the unguarded rule would only be approx.  The guard is checked against a
syntactic can-never-be-⊥ analysis of the output context.

Concretization is by evaluation of the output context: exact mode demands a
run agreeing on every mapped variable; approx mode tolerates dead input
values (they may map to anything).
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

from .core import (
    BOOL, INT, AssumeDef, BitVecSort, BoolSort, Builder, Context, Def, IntSort,
    MuDef, NondetDef, Op, OpDef, Sort, Term, TupleSort, UnknownDef, Var,
    lit_op, op_result_sort,
)
from .semantics import (
    BOTTOM, BottomV, EnumBudget, Env, IntV, Value, collect, enumerate_sort,
    result_values,
)
from .domain import AbstractDomain


# ---------------------------------------------------------------------------
# Views: let-inlined expressions over output variables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VNode:
    pass


@dataclass(frozen=True)
class VVar(VNode):
    var: Var


@dataclass(frozen=True)
class VOp(VNode):
    op: Op
    args: tuple[VNode, ...]


@dataclass(frozen=True)
class VNondet(VNode):
    a: VNode
    b: VNode


@dataclass(frozen=True)
class VAssume(VNode):
    cond: VNode
    value: VNode


INLINE_DEPTH = 3


def view_sort(node: VNode) -> Sort:
    if isinstance(node, VVar):
        return node.var.sort
    if isinstance(node, VOp):
        if node.op.name == "lit":
            raise TypeError("literal views carry their sort externally")
        return op_result_sort(node.op, tuple(view_sort(a) for a in node.args))
    if isinstance(node, VNondet):
        return view_sort(node.a)
    if isinstance(node, VAssume):
        return view_sort(node.value)
    raise TypeError(f"bad view {node!r}")


@dataclass(frozen=True)
class LitView(VNode):
    """A literal with its sort (literals alone do not determine one)."""

    value: object
    sort: Sort


class DefTable:
    """Lookup from output vars to their definitions, for transparent leaves."""

    def __init__(self) -> None:
        self.defs: dict[int, Def] = {}

    def add(self, d: Def) -> None:
        self.defs[d.var.id] = d

    def expand(self, node: VNode, depth: int) -> VNode | None:
        """One-step expansion of a variable leaf; None when opaque."""
        if depth <= 0 or not isinstance(node, VVar):
            return None
        d = self.defs.get(node.var.id)
        if isinstance(d, OpDef):
            if d.op.name == "lit":
                return LitView(d.op.params[0], d.var.sort)
            return VOp(d.op, tuple(VVar(a) for a in d.args))
        if isinstance(d, NondetDef):
            return VNondet(VVar(d.a), VVar(d.b))
        if isinstance(d, AssumeDef):
            return VAssume(VVar(d.cond), VVar(d.value))
        return None


# ---------------------------------------------------------------------------
# Patterns and templates (structural rules)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PVar:
    name: str


@dataclass(frozen=True)
class PLit:
    value: object


@dataclass(frozen=True)
class PApp:
    head: str               # op name, or "nondet" / "assume"
    params: tuple
    args: tuple


Pattern = PVar | PLit | PApp


def match(pattern, node: VNode, table: DefTable, depth: int,
          bindings: dict[str, VNode]) -> bool:
    if isinstance(pattern, PVar):
        prev = bindings.get(pattern.name)
        if prev is None:
            bindings[pattern.name] = node
            return True
        return _same_view(prev, node, table)
    if isinstance(pattern, PLit):
        lit = _as_lit(node, table, depth)
        return lit is not None and lit.value == pattern.value
    if isinstance(pattern, PApp):
        resolved = _resolve(node, table, depth)
        if pattern.head == "nondet":
            if not isinstance(resolved, VNondet):
                return False
            return (match(pattern.args[0], resolved.a, table, depth - 1, bindings)
                    and match(pattern.args[1], resolved.b, table, depth - 1, bindings))
        if pattern.head == "assume":
            if not isinstance(resolved, VAssume):
                return False
            return (match(pattern.args[0], resolved.cond, table, depth - 1, bindings)
                    and match(pattern.args[1], resolved.value, table, depth - 1, bindings))
        if not isinstance(resolved, VOp) or resolved.op.name != pattern.head:
            return False
        if pattern.params and resolved.op.params != pattern.params:
            return False
        if len(resolved.args) != len(pattern.args):
            return False
        return all(match(p, a, table, depth - 1, bindings)
                   for p, a in zip(pattern.args, resolved.args))
    raise TypeError(f"bad pattern {pattern!r}")


def _resolve(node: VNode, table: DefTable, depth: int) -> VNode:
    expanded = table.expand(node, depth)
    return expanded if expanded is not None else node


def _as_lit(node: VNode, table: DefTable, depth: int) -> LitView | None:
    if isinstance(node, LitView):
        return node
    resolved = _resolve(node, table, depth)
    return resolved if isinstance(resolved, LitView) else None


def _same_view(a: VNode, b: VNode, table: DefTable) -> bool:
    if a == b:
        return True
    # compare one-step resolutions (aliases are already collapsed by the map)
    ra = _resolve(a, table, 1)
    rb = _resolve(b, table, 1)
    return ra == rb


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class TLit:
    value: object


@dataclass(frozen=True)
class TApp:
    head: str
    params: tuple
    args: tuple


Template = TVar | TLit | TApp


def instantiate(template, bindings: dict[str, VNode]) -> VNode:
    if isinstance(template, TVar):
        return bindings[template.name]
    if isinstance(template, TLit):
        return LitView(template.value, _lit_sort(template.value))
    if isinstance(template, TApp):
        args = tuple(instantiate(a, bindings) for a in template.args)
        if template.head == "nondet":
            return VNondet(args[0], args[1])
        if template.head == "assume":
            return VAssume(args[0], args[1])
        return VOp(Op(template.head, template.params), args)
    raise TypeError(f"bad template {template!r}")


def _lit_sort(value) -> Sort:
    if isinstance(value, bool):
        return BOOL
    if isinstance(value, int):
        return INT
    raise TypeError(f"cannot infer a sort for literal {value!r}")


# ---------------------------------------------------------------------------
# Rules
# ---------------------------------------------------------------------------

EXACT = "exact"
APPROX = "approx"


class Rule:
    name: str = "rule"
    kind: str = EXACT
    lhs_ops: int = 1
    rhs_ops: int = 0

    def try_rewrite(self, node: VNode, engine: "_Frame") -> VNode | None:
        raise NotImplementedError

    def check_instances(self) -> "list[tuple[Term, Term]]":
        """Substitution instances (lhs term, rhs term) for the validity
        checker; only substitutions satisfying the rule's side conditions."""
        raise NotImplementedError


class StructRule(Rule):
    """lhs => rhs over pattern variables, optional liveness side condition."""

    def __init__(self, name: str, kind: str, lhs, rhs,
                 requires_live: tuple[str, ...] = (),
                 var_sorts: tuple[tuple[str, Sort], ...] = ()) -> None:
        self.name = name
        self.kind = kind
        self.lhs = lhs
        self.rhs = rhs
        self.requires_live = requires_live
        self.var_sorts = var_sorts
        self.lhs_ops = _pattern_ops(lhs)
        self.rhs_ops = _template_ops(rhs)

    def try_rewrite(self, node: VNode, engine: "_Frame") -> VNode | None:
        bindings: dict[str, VNode] = {}
        if not match(self.lhs, node, engine.table, INLINE_DEPTH, bindings):
            return None
        for name in self.requires_live:
            if not engine.is_live_node(bindings[name]):
                return None
        return instantiate(self.rhs, bindings)

    def check_instances(self) -> list[tuple[Term, Term]]:
        sorts = dict(self.var_sorts)
        names = sorted(_pattern_vars(self.lhs))
        if any(n not in sorts for n in names):
            inferred = _infer_pattern_sorts(self.lhs)
            for n in names:
                sorts.setdefault(n, inferred.get(n, INT))
        universes = []
        for n in names:
            u = list(_universe(sorts[n]))
            if n not in self.requires_live:
                u.append(BOTTOM)
            universes.append(u)
        out = []
        for combo in itertools.product(*universes):
            sub = dict(zip(names, combo))
            out.append((_pattern_term(self.lhs, sub, sorts),
                        _template_term(self.rhs, sub, sorts)))
        return out


_ARG_SORTS = {
    "add": (INT, INT), "sub": (INT, INT), "mul": (INT, INT),
    "div": (INT, INT), "neg": (INT,), "lt": (INT, INT), "le": (INT, INT),
    "eq": (INT, INT), "and": (BOOL, BOOL), "or": (BOOL, BOOL), "not": (BOOL,),
}


def _infer_pattern_sorts(p, expected: Sort | None = None,
                         env: dict[str, Sort] | None = None) -> dict[str, Sort]:
    """Best-effort variable sorts from operator signatures (user rules)."""
    env = {} if env is None else env
    if isinstance(p, PVar):
        if expected is not None:
            env.setdefault(p.name, expected)
    elif isinstance(p, PApp):
        if p.head in _ARG_SORTS:
            for arg, sort in zip(p.args, _ARG_SORTS[p.head]):
                _infer_pattern_sorts(arg, sort, env)
        elif p.head in ("nondet", "assume"):
            sorts = (expected, expected) if p.head == "nondet" \
                else (BOOL, expected)
            for arg, sort in zip(p.args, sorts):
                _infer_pattern_sorts(arg, sort, env)
        else:
            for arg in p.args:
                _infer_pattern_sorts(arg, None, env)
    return env


def _pattern_vars(p) -> set[str]:
    if isinstance(p, PVar):
        return {p.name}
    if isinstance(p, PApp):
        return set().union(*(_pattern_vars(a) for a in p.args)) if p.args else set()
    return set()


def _pattern_ops(p) -> int:
    if isinstance(p, PApp):
        return 1 + sum(_pattern_ops(a) for a in p.args)
    return 0


def _template_ops(t) -> int:
    if isinstance(t, TApp):
        return 1 + sum(_template_ops(a) for a in t.args)
    return 0


def _universe(sort: Sort) -> list[Value]:
    budget = EnumBudget(int_lo=-2, int_hi=3)
    return list(enumerate_sort(sort, budget))


def _value_def(b: Builder, name: str, value: Value, sort: Sort) -> Var:
    """Bind a concrete value (⊥ included) as a definition."""
    from .semantics import BitVecV, BoolV, IntV, TupleV
    if isinstance(value, BottomV):
        flag = b.let_bool(name + "_f", False)
        dummy = _value_def(b, name + "_d", _default_value(sort), sort)
        return b.let_assume(name, flag, dummy)
    if isinstance(value, (BoolV, IntV)):
        return b.let_lit(name, sort, value.value)
    if isinstance(value, BitVecV):
        return b.let_lit(name, sort, value.bits)
    if isinstance(value, TupleV):
        assert isinstance(sort, TupleSort)
        parts = [_value_def(b, f"{name}_{i}", x, s)
                 for i, (x, s) in enumerate(zip(value.items, sort.elements))]
        return b.let_op(name, sort, "mk", parts)
    raise TypeError(f"bad value {value!r}")


def _default_value(sort: Sort) -> Value:
    from .semantics import BitVecV, BoolV, IntV, TupleV
    if isinstance(sort, BoolSort):
        return BoolV(True)
    if isinstance(sort, IntSort):
        return IntV(0)
    if isinstance(sort, BitVecSort):
        return BitVecV(sort.width, 0)
    if isinstance(sort, TupleSort):
        return TupleV(tuple(_default_value(s) for s in sort.elements))
    raise TypeError(f"bad sort {sort}")


def _build_shape(b: Builder, shape, env: dict[str, Var], counter: list[int]) -> Var:
    """Emit a pattern/template instance as definitions; returns the root var."""
    counter[0] += 1
    nm = f"e{counter[0]}"
    if isinstance(shape, (PVar, TVar)):
        return env[shape.name]
    if isinstance(shape, (PLit, TLit)):
        return b.let_lit(nm, _lit_sort(shape.value), shape.value)
    args = [_build_shape(b, a, env, counter) for a in shape.args]
    if shape.head == "nondet":
        return b.let_nondet(nm, args[0], args[1])
    if shape.head == "assume":
        return b.let_assume(nm, args[0], args[1])
    op = Op(shape.head, shape.params)
    sort = op_result_sort(op, tuple(a.sort for a in args))
    return b.let_op(nm, sort, op, args)


def _pattern_term(p, sub: dict[str, Value], sorts: dict[str, Sort]) -> Term:
    b = Builder()
    env = {n: _value_def(b, n, v, sorts[n]) for n, v in sub.items()}
    root = _build_shape(b, p, env, [0])
    return b.term(root)


def _template_term(t, sub: dict[str, Value], sorts: dict[str, Sort]) -> Term:
    b = Builder()
    env = {n: _value_def(b, n, v, sorts[n]) for n, v in sub.items()}
    root = _build_shape(b, t, env, [0])
    return b.term(root)


# ---------------------------------------------------------------------------
# Built-in parametric rules (bitvectors, constant folding, tuple projection)
# ---------------------------------------------------------------------------

class BvConcatExtract(Rule):
    """concat(x[a..b], x[b-1..c]) -> x[a..c]"""

    name = "bv-concat-extract"
    kind = EXACT
    lhs_ops = 3
    rhs_ops = 1

    def try_rewrite(self, node: VNode, engine: "_Frame") -> VNode | None:
        r = _resolve(node, engine.table, INLINE_DEPTH)
        if not (isinstance(r, VOp) and r.op.name == "concat"):
            return None
        hi_part = _resolve(r.args[0], engine.table, INLINE_DEPTH - 1)
        lo_part = _resolve(r.args[1], engine.table, INLINE_DEPTH - 1)
        if not (isinstance(hi_part, VOp) and hi_part.op.name == "extract"
                and isinstance(lo_part, VOp) and lo_part.op.name == "extract"):
            return None
        if not _same_view(hi_part.args[0], lo_part.args[0], engine.table):
            return None
        a, b = hi_part.op.params
        b2, c = lo_part.op.params
        if b != b2 + 1:
            return None
        return VOp(Op("extract", (a, c)), (hi_part.args[0],))

    def check_instances(self) -> list[tuple[Term, Term]]:
        out = []
        for w in (2, 3, 4):
            for c in (0,):
                for b_split in range(c + 1, w):
                    for a in range(b_split, w):
                        for x in _universe(BitVecSort(w)) + [BOTTOM]:
                            lb = Builder()
                            xv = _value_def(lb, "x", x, BitVecSort(w))
                            h = lb.let_op("h", BitVecSort(a - b_split + 1),
                                          Op("extract", (a, b_split)), [xv])
                            l = lb.let_op("l", BitVecSort(b_split - c),
                                          Op("extract", (b_split - 1, c)), [xv])
                            r = lb.let_op("r", BitVecSort(a - c + 1), "concat", [h, l])
                            rb = Builder()
                            xv2 = _value_def(rb, "x", x, BitVecSort(w))
                            r2 = rb.let_op("r", BitVecSort(a - c + 1),
                                           Op("extract", (a, c)), [xv2])
                            out.append((lb.term(r), rb.term(r2)))
        return out


class BvExtractWidth(Rule):
    """x[w-1..0] -> x when x has width w"""

    name = "bv-extract-width"
    kind = EXACT
    lhs_ops = 1
    rhs_ops = 0

    def try_rewrite(self, node: VNode, engine: "_Frame") -> VNode | None:
        r = _resolve(node, engine.table, INLINE_DEPTH)
        if not (isinstance(r, VOp) and r.op.name == "extract"):
            return None
        hi, lo = r.op.params
        arg = r.args[0]
        sort = engine.sort_of(arg)
        if isinstance(sort, BitVecSort) and lo == 0 and hi == sort.width - 1:
            return arg
        return None

    def check_instances(self) -> list[tuple[Term, Term]]:
        out = []
        for w in (1, 2, 3, 4):
            for x in _universe(BitVecSort(w)) + [BOTTOM]:
                lb = Builder()
                xv = _value_def(lb, "x", x, BitVecSort(w))
                r = lb.let_op("r", BitVecSort(w), Op("extract", (w - 1, 0)), [xv])
                rb = Builder()
                xv2 = _value_def(rb, "x", x, BitVecSort(w))
                out.append((lb.term(r), rb.term(xv2)))
        return out


class BvExtractCompose(Rule):
    """x[a..b][c..d] -> x[c+b..d+b]"""

    name = "bv-extract-compose"
    kind = EXACT
    lhs_ops = 2
    rhs_ops = 1

    def try_rewrite(self, node: VNode, engine: "_Frame") -> VNode | None:
        r = _resolve(node, engine.table, INLINE_DEPTH)
        if not (isinstance(r, VOp) and r.op.name == "extract"):
            return None
        inner = _resolve(r.args[0], engine.table, INLINE_DEPTH - 1)
        if not (isinstance(inner, VOp) and inner.op.name == "extract"):
            return None
        c, d = r.op.params
        a, b = inner.op.params
        return VOp(Op("extract", (c + b, d + b)), (inner.args[0],))

    def check_instances(self) -> list[tuple[Term, Term]]:
        out = []
        w = 4
        for b in range(w):
            for a in range(b, w):
                inner_w = a - b + 1
                for d in range(inner_w):
                    for c in range(d, inner_w):
                        for x in _universe(BitVecSort(w)) + [BOTTOM]:
                            lb = Builder()
                            xv = _value_def(lb, "x", x, BitVecSort(w))
                            i = lb.let_op("i", BitVecSort(inner_w),
                                          Op("extract", (a, b)), [xv])
                            r = lb.let_op("r", BitVecSort(c - d + 1),
                                          Op("extract", (c, d)), [i])
                            rb = Builder()
                            xv2 = _value_def(rb, "x", x, BitVecSort(w))
                            r2 = rb.let_op("r", BitVecSort(c - d + 1),
                                           Op("extract", (c + b, d + b)), [xv2])
                            out.append((lb.term(r), rb.term(r2)))
        return out


class AddConstFold(Rule):
    """k1 + x + k2 -> x + (k1 + k2) (constants folded along an add chain)"""

    name = "add-const-fold"
    kind = EXACT
    lhs_ops = 2
    rhs_ops = 1

    def try_rewrite(self, node: VNode, engine: "_Frame") -> VNode | None:
        r = _resolve(node, engine.table, INLINE_DEPTH)
        if not (isinstance(r, VOp) and r.op.name == "add"):
            return None
        leaves: list[VNode] = []
        consts: list[int] = []

        def flatten(n: VNode, depth: int) -> None:
            rn = _resolve(n, engine.table, depth)
            lit = _as_lit(n, engine.table, depth)
            if lit is not None and isinstance(lit.sort, IntSort):
                consts.append(lit.value)  # type: ignore[arg-type]
            elif isinstance(rn, VOp) and rn.op.name == "add" and depth > 0:
                flatten(rn.args[0], depth - 1)
                flatten(rn.args[1], depth - 1)
            else:
                leaves.append(n)

        flatten(r.args[0], INLINE_DEPTH - 1)
        flatten(r.args[1], INLINE_DEPTH - 1)
        if len(consts) < 2 or not leaves:
            return None
        total = sum(consts)
        acc = leaves[0]
        for leaf in leaves[1:]:
            acc = VOp(Op("add"), (acc, leaf))
        return VOp(Op("add"), (acc, LitView(total, INT)))

    def check_instances(self) -> list[tuple[Term, Term]]:
        out = []
        for k1 in (-2, 0, 2):
            for k2 in (-1, 1, 3):
                for x in _universe(INT) + [BOTTOM]:
                    lb = Builder()
                    a = lb.let_int("k1", k1)
                    xv = _value_def(lb, "x", x, INT)
                    s1 = lb.let_op("s1", INT, "add", [a, xv])
                    c = lb.let_int("k2", k2)
                    s2 = lb.let_op("s2", INT, "add", [s1, c])
                    rb = Builder()
                    xv2 = _value_def(rb, "x", x, INT)
                    k = rb.let_int("k", k1 + k2)
                    s = rb.let_op("s", INT, "add", [xv2, k])
                    out.append((lb.term(s2), rb.term(s)))
        return out


class TupleProjMk(Rule):
    """get_i(mk(x0..xn)) -> xi, provided the other components are live."""

    name = "tuple-proj-mk"
    kind = EXACT
    lhs_ops = 2
    rhs_ops = 0

    def try_rewrite(self, node: VNode, engine: "_Frame") -> VNode | None:
        r = _resolve(node, engine.table, INLINE_DEPTH)
        if not (isinstance(r, VOp) and r.op.name == "get"):
            return None
        inner = _resolve(r.args[0], engine.table, INLINE_DEPTH - 1)
        if not (isinstance(inner, VOp) and inner.op.name == "mk"):
            return None
        i = r.op.params[0]
        others = [a for j, a in enumerate(inner.args) if j != i]
        if not all(engine.is_live_node(a) for a in others):
            return None
        return inner.args[i]

    def check_instances(self) -> list[tuple[Term, Term]]:
        out = []
        for i in (0, 1):
            for xi in _universe(INT) + [BOTTOM]:
                for other in _universe(INT):  # live per the side condition
                    lb = Builder()
                    comps = [None, None]
                    comps[i] = _value_def(lb, "xi", xi, INT)
                    comps[1 - i] = _value_def(lb, "xo", other, INT)
                    t = lb.let_op("t", TupleSort((INT, INT)), "mk", comps)
                    r = lb.let_op("r", INT, Op("get", (i,)), [t])
                    rb = Builder()
                    out.append((lb.term(r), rb.term(_value_def(rb, "xi", xi, INT))))
        return out


class TupleProjAssume(Rule):
    """get_i(assume(c, t)) -> assume(c, get_i(t))"""

    name = "tuple-proj-assume"
    kind = EXACT
    lhs_ops = 2
    rhs_ops = 2

    def try_rewrite(self, node: VNode, engine: "_Frame") -> VNode | None:
        r = _resolve(node, engine.table, INLINE_DEPTH)
        if not (isinstance(r, VOp) and r.op.name == "get"):
            return None
        inner = _resolve(r.args[0], engine.table, INLINE_DEPTH - 1)
        if not isinstance(inner, VAssume):
            return None
        return VAssume(inner.cond, VOp(r.op, (inner.value,)))

    def check_instances(self) -> list[tuple[Term, Term]]:
        from .semantics import BoolV, TupleV
        out = []
        pair = TupleSort((INT, INT))
        tuples = [TupleV((IntV(0), IntV(2))), TupleV((IntV(-1), IntV(1))), BOTTOM]
        for c in (BoolV(True), BoolV(False), BOTTOM):
            for t in tuples:
                lb = Builder()
                cv = _value_def(lb, "c", c, BOOL)
                tv = _value_def(lb, "t", t, pair)
                av = lb.let_assume("a", cv, tv)
                r = lb.let_op("r", INT, Op("get", (0,)), [av])
                rb = Builder()
                cv2 = _value_def(rb, "c", c, BOOL)
                tv2 = _value_def(rb, "t", t, pair)
                g = rb.let_op("g", INT, Op("get", (0,)), [tv2])
                r2 = rb.let_assume("r", cv2, g)
                out.append((lb.term(r), rb.term(r2)))
        return out


class TupleProjNondetCommon(Rule):
    """get_i(nondet(mk(..u..), mk(..u..))) -> u when slot i is the same
    variable in both branches and the other components are live."""

    name = "tuple-proj-nondet-common"
    kind = EXACT
    lhs_ops = 4
    rhs_ops = 0

    def try_rewrite(self, node: VNode, engine: "_Frame") -> VNode | None:
        r = _resolve(node, engine.table, INLINE_DEPTH)
        if not (isinstance(r, VOp) and r.op.name == "get"):
            return None
        inner = _resolve(r.args[0], engine.table, INLINE_DEPTH - 1)
        if not isinstance(inner, VNondet):
            return None
        mk_a = _resolve(inner.a, engine.table, INLINE_DEPTH - 2)
        mk_b = _resolve(inner.b, engine.table, INLINE_DEPTH - 2)
        if not (isinstance(mk_a, VOp) and mk_a.op.name == "mk"
                and isinstance(mk_b, VOp) and mk_b.op.name == "mk"):
            return None
        i = r.op.params[0]
        if not _same_view(mk_a.args[i], mk_b.args[i], engine.table):
            return None
        others = ([a for j, a in enumerate(mk_a.args) if j != i]
                  + [a for j, a in enumerate(mk_b.args) if j != i])
        if not all(engine.is_live_node(a) for a in others):
            return None
        return mk_a.args[i]

    def check_instances(self) -> list[tuple[Term, Term]]:
        out = []
        for u in _universe(INT) + [BOTTOM]:
            for a in (-1, 2):
                for b2 in (0, 3):
                    lb = Builder()
                    uv = _value_def(lb, "u", u, INT)
                    av = lb.let_int("a", a)
                    bv_ = lb.let_int("b", b2)
                    t1 = lb.let_op("t1", TupleSort((INT, INT)), "mk", [uv, av])
                    t2 = lb.let_op("t2", TupleSort((INT, INT)), "mk", [uv, bv_])
                    nd = lb.let_nondet("n", t1, t2)
                    r = lb.let_op("r", INT, Op("get", (0,)), [nd])
                    rb = Builder()
                    out.append((lb.term(r), rb.term(_value_def(rb, "u", u, INT))))
        return out


# ---------------------------------------------------------------------------
# Default rulesets
# ---------------------------------------------------------------------------

def _struct(name: str, kind: str, lhs: str, rhs: str,
            requires_live: tuple[str, ...] = (),
            var_sorts: dict[str, Sort] | None = None) -> StructRule:
    lp = parse_pattern(lhs)
    rp = parse_template(rhs)
    return StructRule(name, kind, lp, rp, requires_live,
                      tuple((var_sorts or {}).items()))


def default_rulesets() -> tuple[list[Rule], list[Rule]]:
    """The shipped (exact, over-approximating) rules."""
    int_x = {"x": INT}
    exact: list[Rule] = [
        BvConcatExtract(),
        BvExtractWidth(),
        BvExtractCompose(),
        _struct("nondet-idem", EXACT, "(nondet ?x ?x)", "?x", var_sorts=int_x),
        _struct("eq-refl", EXACT, "(eq ?x ?x)", "true",
                requires_live=("x",), var_sorts=int_x),
        _struct("and-idem", EXACT, "(and ?x ?x)", "?x", var_sorts={"x": BOOL}),
        _struct("mul-one", EXACT, "(mul 1 ?x)", "?x", var_sorts=int_x),
        AddConstFold(),
        TupleProjMk(),
        TupleProjAssume(),
        TupleProjNondetCommon(),
    ]
    approx: list[Rule] = [
        _struct("mul-zero", APPROX, "(mul 0 ?x)", "0", var_sorts=int_x),
        _struct("sub-self", APPROX, "(sub ?x ?x)", "0", var_sorts=int_x),
        _struct("div-self", APPROX, "(div ?x ?x)", "1", var_sorts=int_x),
    ]
    return exact, approx


# ---------------------------------------------------------------------------
# Ruleset files: one rule per line, "lhs => rhs [exact|approx]"
# ---------------------------------------------------------------------------

_ATOM = re.compile(r"\(|\)|[^\s()]+")


def _parse_sexpr(text: str):
    toks = _ATOM.findall(text.split(";")[0])
    pos = [0]

    def walk():
        if pos[0] >= len(toks):
            raise ValueError(f"unexpected end of pattern in {text!r}")
        t = toks[pos[0]]
        pos[0] += 1
        if t == "(":
            head = toks[pos[0]]
            pos[0] += 1
            args = []
            while toks[pos[0]] != ")":
                args.append(walk())
            pos[0] += 1
            return (head, tuple(args))
        return t

    tree = walk()
    if pos[0] != len(toks):
        raise ValueError(f"trailing tokens in {text!r}")
    return tree


def _head_to_op(head: str) -> tuple[str, tuple]:
    if head.startswith("get."):
        return "get", (int(head[4:]),)
    if head.startswith("extract."):
        _, hi, lo = head.split(".")
        return "extract", (int(hi), int(lo))
    return head, ()


def _tree_to_pattern(tree):
    if isinstance(tree, tuple):
        head, args = tree
        name, params = _head_to_op(head)
        return PApp(name, params, tuple(_tree_to_pattern(a) for a in args))
    if tree.startswith("?"):
        return PVar(tree[1:])
    return PLit(_parse_lit(tree))


def _tree_to_template(tree):
    if isinstance(tree, tuple):
        head, args = tree
        name, params = _head_to_op(head)
        return TApp(name, params, tuple(_tree_to_template(a) for a in args))
    if tree.startswith("?"):
        return TVar(tree[1:])
    return TLit(_parse_lit(tree))


def _parse_lit(text: str):
    if text == "true":
        return True
    if text == "false":
        return False
    return int(text)


def parse_pattern(text: str):
    return _tree_to_pattern(_parse_sexpr(text))


def parse_template(text: str):
    return _tree_to_template(_parse_sexpr(text))


def parse_rule_line(line: str, lineno: int = 0) -> StructRule | None:
    body = line.split(";")[0].strip()
    if not body:
        return None
    m = re.match(r"(.*)=>(.*?)\s+(exact|approx)\s*$", body)
    if not m:
        raise ValueError(f"line {lineno}: expected 'lhs => rhs [exact|approx]'")
    lhs = parse_pattern(m.group(1).strip())
    rhs = parse_template(m.group(2).strip())
    return StructRule(f"user-{lineno}", m.group(3), lhs, rhs)


def load_ruleset(text: str) -> list[Rule]:
    rules: list[Rule] = []
    for i, line in enumerate(text.splitlines(), start=1):
        r = parse_rule_line(line, i)
        if r is not None:
            rules.append(r)
    return rules


# ---------------------------------------------------------------------------
# The engine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RewriteState:
    """Immutable snapshot: output context plus input-var images."""

    out: Context
    mapping: tuple[tuple[int, Var], ...]  # input var id -> output var
    live: frozenset[int]
    memo: tuple[tuple[tuple, Var], ...]
    names: frozenset[str]
    next_id: int

    def image(self, v: Var) -> Var:
        return dict(self.mapping)[v.id]


EMPTY_STATE = RewriteState(Context(), (), frozenset(), (), frozenset(), 0)


class _Frame:
    """Mutable engine state for one context level (top or μ body)."""

    def __init__(self, engine: "_Engine", builder: Builder,
                 memo: dict, live: set[int], table: DefTable) -> None:
        self.engine = engine
        self.builder = builder
        self.memo = memo
        self.live = live
        self.table = table

    # -- liveness ------------------------------------------------------------

    def is_live_node(self, node: VNode) -> bool:
        if isinstance(node, LitView):
            return True
        if isinstance(node, VVar):
            return node.var.id in self.live
        if isinstance(node, VOp):
            return all(self.is_live_node(a) for a in node.args)
        if isinstance(node, VNondet):
            return self.is_live_node(node.a) and self.is_live_node(node.b)
        return False

    def sort_of(self, node: VNode) -> Sort:
        if isinstance(node, LitView):
            return node.sort
        return view_sort(node)

    # -- emission ------------------------------------------------------------

    def fresh_name(self, stem: str) -> str:
        return stem

    def materialize(self, node: VNode, stem: str) -> Var:
        """Turn a view into an output variable, sharing deterministic defs."""
        if isinstance(node, VVar):
            return node.var
        if isinstance(node, LitView):
            key = ("lit", node.value, node.sort)
            hit = self.memo.get(key)
            if hit is not None:
                return hit
            v = self.builder.let_lit(stem, node.sort, node.value)
            self._note(v, lit_op(node.value), key, live=True)
            return v
        if isinstance(node, VOp):
            args = [self.materialize(a, stem) for a in node.args]
            key = ("op", node.op, tuple(a.id for a in args))
            hit = self.memo.get(key)
            if hit is not None:
                return hit
            sort = op_result_sort(node.op, tuple(a.sort for a in args))
            v = self.builder.let_op(stem, sort, node.op, args)
            self._note(v, node.op, key,
                       live=all(a.id in self.live for a in args))
            return v
        if isinstance(node, VNondet):
            a = self.materialize(node.a, stem)
            b = self.materialize(node.b, stem)
            v = self.builder.let_nondet(stem, a, b)
            self.table.add(NondetDef(v, a, b))
            if a.id in self.live and b.id in self.live:
                self.live.add(v.id)
            return v
        if isinstance(node, VAssume):
            c = self.materialize(node.cond, stem)
            val = self.materialize(node.value, stem)
            key = ("assume", c.id, val.id)
            hit = self.memo.get(key)
            if hit is not None:
                return hit
            v = self.builder.let_assume(stem, c, val)
            self.table.add(AssumeDef(v, c, val))
            self.memo[key] = v
            return v
        raise TypeError(f"bad view {node!r}")

    def _note(self, v: Var, op: Op, key, live: bool) -> None:
        d = self.builder.context.defs[-1]
        self.table.add(d)
        self.memo[key] = v
        if live:
            self.live.add(v.id)


class _Engine:
    def __init__(self, rules: list[Rule]) -> None:
        self.rules = rules

    def normalize(self, node: VNode, frame: _Frame) -> VNode:
        for _ in range(8):
            for rule in self.rules:
                replacement = rule.try_rewrite(node, frame)
                if replacement is not None:
                    node = replacement
                    break
            else:
                return node
        return node

    def run(self, ctx: Context, state: RewriteState) -> RewriteState:
        alloc_builder = Builder()
        # restore allocator position so names stay unique across increments
        alloc_builder._alloc.next_id = state.next_id
        alloc_builder._alloc.used_names = set(state.names)
        mapping = dict(state.mapping)
        live = set(state.live)
        memo = dict(state.memo)
        table = DefTable()
        # replay prior defs into builder and table
        for d in state.out.defs:
            alloc_builder._defs.append(d)
            alloc_builder._scope[d.var.id] = d.var
            for dd in _walk_defs(d):
                table.add(dd)
        frame = _Frame(self, alloc_builder, memo, live, table)
        for d in ctx.defs:
            self._translate(d, frame, mapping)
        a = alloc_builder._alloc
        return RewriteState(frame.builder.context,
                            tuple(sorted(mapping.items(), key=lambda kv: kv[0])),
                            frozenset(live), tuple(memo.items()),
                            frozenset(a.used_names), a.next_id)

    def _translate(self, d: Def, frame: _Frame, mapping: dict[int, Var]) -> None:
        name = d.var.name
        if isinstance(d, UnknownDef):
            v = frame.builder.let_unknown(name, d.var.sort)
            frame.table.add(UnknownDef(v))
            frame.live.add(v.id)
            mapping[d.var.id] = v
            return
        if isinstance(d, MuDef):
            init = mapping[d.init.id]

            def build(child: Builder, loopvar: Var) -> Var:
                # child frame: memo/liveness overlays, shared def lookup;
                # the loop variable stays opaque (absent from the table)
                body_frame = _Frame(self, child, dict(frame.memo),
                                    set(frame.live), frame.table)
                mapping[d.loopvar.id] = loopvar
                for bd in d.body.defs:
                    self._translate(bd, body_frame, mapping)
                return mapping[d.exit.id]

            v = frame.builder.let_mu(name, init, build,
                                     loopvar_name=d.loopvar.name)
            mapping[d.var.id] = v
            return
        # op / nondet / assume: build root view over images, rewrite, emit
        if isinstance(d, OpDef):
            if d.op.name == "lit":
                root: VNode = LitView(d.op.params[0], d.var.sort)
            else:
                root = VOp(d.op, tuple(VVar(mapping[a.id]) for a in d.args))
        elif isinstance(d, NondetDef):
            root = VNondet(VVar(mapping[d.a.id]), VVar(mapping[d.b.id]))
        elif isinstance(d, AssumeDef):
            root = VAssume(VVar(mapping[d.cond.id]), VVar(mapping[d.value.id]))
        else:
            raise TypeError(f"unknown def {d!r}")
        rewritten = self.normalize(root, frame)
        mapping[d.var.id] = frame.materialize(rewritten, name)


def _walk_defs(d: Def):
    yield d
    if isinstance(d, MuDef):
        for bd in d.body.defs:
            yield from _walk_defs(bd)


def eval_rewrite(ctx: Context, state: RewriteState,
                 rules: list[Rule]) -> RewriteState:
    return _Engine(rules).run(ctx, state)


# ---------------------------------------------------------------------------
# Concretization and domain adapter
# ---------------------------------------------------------------------------

def _out_var_count(state: RewriteState) -> int:
    n = state.next_id
    return n


def gamma_rewrite(state: RewriteState, env: Env, mode: str,
                  budget: EnumBudget | None = None,
                  _cache: dict | None = None) -> bool:
    """Exact: some run of the output agrees with `env` on every mapped var.
    Approx: agreement only where `env` is not ⊥."""
    budget = budget or EnumBudget()
    runs = _output_runs(state, budget, _cache)
    mapping = dict(state.mapping)
    for out_env in runs:
        ok = True
        for var_id, value in env.items():
            img = mapping.get(var_id)
            if img is None:
                continue
            got = out_env.slots[img.id]
            if mode == APPROX and isinstance(value, BottomV):
                continue
            if got != value:
                ok = False
                break
        if ok:
            return True
    return False


def _output_runs(state: RewriteState, budget: EnumBudget,
                 cache: dict | None) -> frozenset[Env]:
    key = id(state)
    if cache is not None and key in cache:
        return cache[key]
    runs = collect(state.out, Env.empty(_out_var_count(state)), budget)
    if cache is not None:
        cache[key] = runs
    return runs


class RewriteDomain(AbstractDomain):
    def __init__(self, rules: list[Rule], mode: str = EXACT,
                 budget: EnumBudget | None = None) -> None:
        self.rules = rules
        self.mode = mode
        self.budget = budget or EnumBudget()
        self.name = f"rewrite-{mode}"
        self._cache: dict = {}

    def initial(self) -> RewriteState:
        return EMPTY_STATE

    def eval_abs(self, ctx: Context, state: RewriteState) -> RewriteState:
        return eval_rewrite(ctx, state, self.rules)

    def gamma_contains(self, state: RewriteState, env: Env) -> bool:
        return gamma_rewrite(state, env, self.mode, self.budget, self._cache)


# ---------------------------------------------------------------------------
# Rule validity checking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RuleReport:
    rule: str
    kind: str
    exact_ok: bool
    approx_ok: bool
    instances: int
    failure: str = ""

    @property
    def valid(self) -> bool:
        return self.exact_ok if self.kind == EXACT else self.approx_ok


def check_rule(rule: Rule, budget: EnumBudget | None = None) -> RuleReport:
    """Evaluate both sides of every substitution instance.

    exact : value sets equal for every instance (side conditions honored by
            the instance enumeration itself);
    approx: left values other than ⊥ all appear on the right, and the sets
            are equal whenever ⊥ is not a left value.
    """
    budget = budget or EnumBudget(int_lo=-4, int_hi=4)
    exact_ok = True
    approx_ok = True
    failure = ""
    instances = rule.check_instances()
    for lhs_term, rhs_term in instances:
        left = result_values(lhs_term, budget)
        right = result_values(rhs_term, budget)
        if left != right:
            if exact_ok:
                failure = failure or f"exact mismatch: {_fmt(left)} vs {_fmt(right)}"
            exact_ok = False
        live_left = left - {BOTTOM}
        if not (live_left <= right) or (BOTTOM not in left and left != right):
            approx_ok = False
            failure = failure or f"approx mismatch: {_fmt(left)} vs {_fmt(right)}"
    return RuleReport(rule.name, rule.kind, exact_ok, approx_ok,
                      len(instances), failure)


def _fmt(values: frozenset[Value]) -> str:
    return "{" + ", ".join(sorted(str(v) for v in values)) + "}"


def check_rules(rules: list[Rule], budget: EnumBudget | None = None) -> list[RuleReport]:
    return [check_rule(r, budget) for r in rules]
