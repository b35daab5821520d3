"""Core IR: sorts, variables, definitions, contexts and terms.

A term is an ordered sequence of single-assignment definitions followed by a
result variable.  Every intermediate computation is named, variables denote
values (never storage locations), and contexts extend persistently: `append`
returns a new context, the original is never mutated.

Variable ids are dense non-negative integers allocated in definition order,
so environments (concrete or abstract) can be plain arrays indexed by id.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterator


class LafError(Exception):
    """Base class for IR construction errors."""


class ScopeError(LafError):
    pass


class SortError(LafError):
    pass


class DuplicateBinderError(LafError):
    pass


# ---------------------------------------------------------------------------
# Sorts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sort:
    def __str__(self) -> str:  # pragma: no cover - overridden
        raise NotImplementedError


@dataclass(frozen=True)
class BoolSort(Sort):
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class IntSort(Sort):
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class BitVecSort(Sort):
    width: int

    def __post_init__(self) -> None:
        if self.width < 1:
            raise SortError(f"bitvector width must be >= 1, got {self.width}")

    def __str__(self) -> str:
        return f"(bv {self.width})"


@dataclass(frozen=True)
class TupleSort(Sort):
    elements: tuple[Sort, ...]

    def __post_init__(self) -> None:
        if len(self.elements) < 1:
            raise SortError("tuple sorts need at least one element")

    def __str__(self) -> str:
        return "(tuple " + " ".join(str(s) for s in self.elements) + ")"


BOOL = BoolSort()
INT = IntSort()


def bv(width: int) -> BitVecSort:
    return BitVecSort(width)


def tup(*elements: Sort) -> TupleSort:
    return TupleSort(tuple(elements))


# ---------------------------------------------------------------------------
# Variables
# ---------------------------------------------------------------------------

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.'!$@-]*\Z")


@dataclass(frozen=True)
class Var:
    id: int
    name: str
    sort: Sort

    def __str__(self) -> str:
        return self.name


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------
#
# An operation is a name plus static parameters:
#   get:      params = (index,)
#   extract:  params = (hi, lo)
#   lit:      params = (python payload,)   -- bool, int, or bit pattern int
# All other ops have empty params.

@dataclass(frozen=True)
class Op:
    name: str
    params: tuple = ()

    def __str__(self) -> str:
        if self.name == "get":
            return f"get.{self.params[0]}"
        if self.name == "extract":
            return f"extract.{self.params[0]}.{self.params[1]}"
        if self.name == "lit":
            return f"lit:{self.params[0]}"
        return self.name


def lit_op(value) -> Op:
    return Op("lit", (value,))


def get_op(index: int) -> Op:
    return Op("get", (index,))


def extract_op(hi: int, lo: int) -> Op:
    return Op("extract", (hi, lo))


_INT_BINOPS = {"add", "sub", "mul", "div"}
_INT_CMPS = {"lt", "le"}
_BOOL_BINOPS = {"and", "or"}

OP_NAMES = (
    _INT_BINOPS | _INT_CMPS | _BOOL_BINOPS
    | {"neg", "not", "eq", "mk", "get", "extract", "concat", "lit"}
)


def op_result_sort(op: Op, arg_sorts: tuple[Sort, ...],
                   decl_sort: Sort | None = None) -> Sort:
    """Result sort of `op` applied to `arg_sorts`; raises SortError on misuse.

    Literals have no intrinsic sort and need `decl_sort` to be checked.
    """
    name = op.name
    if name in _INT_BINOPS:
        _expect(arg_sorts, (INT, INT), name)
        return INT
    if name == "neg":
        _expect(arg_sorts, (INT,), name)
        return INT
    if name in _INT_CMPS:
        _expect(arg_sorts, (INT, INT), name)
        return BOOL
    if name in _BOOL_BINOPS:
        _expect(arg_sorts, (BOOL, BOOL), name)
        return BOOL
    if name == "not":
        _expect(arg_sorts, (BOOL,), name)
        return BOOL
    if name == "eq":
        if len(arg_sorts) != 2 or arg_sorts[0] != arg_sorts[1]:
            raise SortError(f"eq needs two arguments of one sort, got {arg_sorts}")
        if not isinstance(arg_sorts[0], (IntSort, BitVecSort)):
            raise SortError(f"eq is defined on int and bitvector sorts, got {arg_sorts[0]}")
        return BOOL
    if name == "mk":
        if not arg_sorts:
            raise SortError("mk needs at least one argument")
        return TupleSort(arg_sorts)
    if name == "get":
        if len(arg_sorts) != 1 or not isinstance(arg_sorts[0], TupleSort):
            raise SortError(f"get needs one tuple argument, got {arg_sorts}")
        i = op.params[0]
        elems = arg_sorts[0].elements
        if not 0 <= i < len(elems):
            raise SortError(f"get.{i} out of range for arity {len(elems)}")
        return elems[i]
    if name == "extract":
        if len(arg_sorts) != 1 or not isinstance(arg_sorts[0], BitVecSort):
            raise SortError(f"extract needs one bitvector argument, got {arg_sorts}")
        hi, lo = op.params
        if not 0 <= lo <= hi < arg_sorts[0].width:
            raise SortError(
                f"extract.{hi}.{lo} out of range for width {arg_sorts[0].width}")
        return BitVecSort(hi - lo + 1)
    if name == "concat":
        if len(arg_sorts) != 2 or not all(isinstance(s, BitVecSort) for s in arg_sorts):
            raise SortError(f"concat needs two bitvector arguments, got {arg_sorts}")
        return BitVecSort(arg_sorts[0].width + arg_sorts[1].width)
    if name == "lit":
        if arg_sorts:
            raise SortError("literals take no arguments")
        if decl_sort is None:
            raise SortError("literal needs a declared sort")
        _check_literal(op.params[0], decl_sort)
        return decl_sort
    raise SortError(f"unknown operation {name!r}")


def _expect(got: tuple[Sort, ...], want: tuple[Sort, ...], name: str) -> None:
    if got != want:
        raise SortError(f"{name} expects {want}, got {got}")


def _check_literal(value, sort: Sort) -> None:
    if isinstance(sort, BoolSort):
        if not isinstance(value, bool):
            raise SortError(f"boolean literal expected, got {value!r}")
    elif isinstance(sort, IntSort):
        if not isinstance(value, int) or isinstance(value, bool):
            raise SortError(f"integer literal expected, got {value!r}")
    elif isinstance(sort, BitVecSort):
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise SortError(f"bit pattern expected, got {value!r}")
        if value >= (1 << sort.width):
            raise SortError(f"literal {value} does not fit in {sort.width} bits")
    else:
        raise SortError(f"no literals of sort {sort}")


# ---------------------------------------------------------------------------
# Definitions, contexts, terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Def:
    var: Var

    def arg_vars(self) -> tuple[Var, ...]:
        return ()


@dataclass(frozen=True)
class OpDef(Def):
    op: Op
    args: tuple[Var, ...]

    def arg_vars(self) -> tuple[Var, ...]:
        return self.args


@dataclass(frozen=True)
class NondetDef(Def):
    a: Var
    b: Var

    def arg_vars(self) -> tuple[Var, ...]:
        return (self.a, self.b)


@dataclass(frozen=True)
class AssumeDef(Def):
    cond: Var
    value: Var

    def arg_vars(self) -> tuple[Var, ...]:
        return (self.cond, self.value)


@dataclass(frozen=True)
class UnknownDef(Def):
    pass


@dataclass(frozen=True)
class MuDef(Def):
    loopvar: Var
    body: "Context"
    exit: Var
    init: Var

    def arg_vars(self) -> tuple[Var, ...]:
        # Free arguments only; exit is resolved in body scope.
        return (self.init,)


@dataclass(frozen=True)
class Context:
    defs: tuple[Def, ...] = ()

    def __len__(self) -> int:
        return len(self.defs)

    def __iter__(self) -> Iterator[Def]:
        return iter(self.defs)


@dataclass(frozen=True)
class Term:
    ctx: Context
    result: Var


EMPTY = Context()


def append(ctx: Context, d: Def) -> Context:
    """Persistent extension: a new context with `d`; `ctx` is unchanged."""
    _check_def(d, _scope_of(ctx))
    return Context(ctx.defs + (d,))


def _scope_of(ctx: Context) -> dict[int, Var]:
    scope: dict[int, Var] = {}
    for d in ctx.defs:
        scope[d.var.id] = d.var
    return scope


def _check_def(d: Def, scope: dict[int, Var]) -> None:
    if d.var.id in scope:
        raise DuplicateBinderError(f"variable {d.var.name} already bound")
    for a in d.arg_vars():
        if scope.get(a.id) is not a and scope.get(a.id) != a:
            raise ScopeError(f"{a.name} not in scope")
    if isinstance(d, OpDef):
        res = op_result_sort(d.op, tuple(a.sort for a in d.args), d.var.sort)
        if res != d.var.sort:
            raise SortError(f"{d.var.name}: op yields {res}, declared {d.var.sort}")
    elif isinstance(d, NondetDef):
        if not (d.a.sort == d.b.sort == d.var.sort):
            raise SortError(f"{d.var.name}: nondet arguments must share the bound sort")
    elif isinstance(d, AssumeDef):
        if d.cond.sort != BOOL:
            raise SortError(f"{d.var.name}: assume condition must be bool")
        if d.value.sort != d.var.sort:
            raise SortError(f"{d.var.name}: assume value sort mismatch")
    elif isinstance(d, MuDef):
        if not (d.loopvar.sort == d.init.sort == d.exit.sort == d.var.sort):
            raise SortError(f"{d.var.name}: mu variables must share one sort")
        body_scope = dict(scope)
        body_scope[d.loopvar.id] = d.loopvar
        for bd in d.body.defs:
            _check_def(bd, body_scope)
            body_scope[bd.var.id] = bd.var
        if body_scope.get(d.exit.id) != d.exit:
            raise ScopeError(f"{d.var.name}: exit variable {d.exit.name} not in body scope")


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

class _Allocator:
    """Shared id/name allocator for one term under construction."""

    def __init__(self) -> None:
        self.next_id = 0
        self.used_names: set[str] = set()

    def fresh(self, name: str, sort: Sort) -> Var:
        if not _NAME_RE.match(name):
            raise LafError(f"invalid variable name {name!r}")
        candidate = name
        k = 1
        while candidate in self.used_names:
            candidate = f"{name}.{k}"
            k += 1
        self.used_names.add(candidate)
        v = Var(self.next_id, candidate, sort)
        self.next_id += 1
        return v


class Builder:
    """Incremental construction of a well-formed context.

    Each let_* method allocates the bound variable, checks the definition and
    appends it.  μ bodies are built through a callback receiving a child
    builder whose scope extends the parent's:

        def body(b, x):
            return b.let_op("x2", INT, "add", [x, one])
        loop = bld.let_mu("loop", init=x0, build_body=body)
    """

    def __init__(self, _alloc: _Allocator | None = None,
                 _scope: dict[int, Var] | None = None) -> None:
        self._alloc = _alloc or _Allocator()
        self._scope: dict[int, Var] = dict(_scope or {})
        self._defs: list[Def] = []

    # -- queries ------------------------------------------------------------

    @property
    def context(self) -> Context:
        return Context(tuple(self._defs))

    def in_scope(self, v: Var) -> bool:
        return self._scope.get(v.id) == v

    # -- definition forms ---------------------------------------------------

    def _add(self, d: Def) -> Var:
        _check_def(d, self._scope)
        self._defs.append(d)
        self._scope[d.var.id] = d.var
        return d.var

    def let_op(self, name: str, sort: Sort, op: Op | str, args: list[Var]) -> Var:
        if isinstance(op, str):
            op = Op(op)
        v = self._alloc.fresh(name, sort)
        return self._add(OpDef(v, op, tuple(args)))

    def let_lit(self, name: str, sort: Sort, value) -> Var:
        v = self._alloc.fresh(name, sort)
        return self._add(OpDef(v, lit_op(value), ()))

    def let_int(self, name: str, value: int) -> Var:
        return self.let_lit(name, INT, value)

    def let_bool(self, name: str, value: bool) -> Var:
        return self.let_lit(name, BOOL, value)

    def let_nondet(self, name: str, a: Var, b: Var) -> Var:
        v = self._alloc.fresh(name, a.sort)
        return self._add(NondetDef(v, a, b))

    def let_assume(self, name: str, cond: Var, value: Var) -> Var:
        v = self._alloc.fresh(name, value.sort)
        return self._add(AssumeDef(v, cond, value))

    def let_unknown(self, name: str, sort: Sort) -> Var:
        v = self._alloc.fresh(name, sort)
        return self._add(UnknownDef(v))

    def let_mu(self, name: str, init: Var,
               build_body: Callable[["Builder", Var], Var],
               loopvar_name: str | None = None) -> Var:
        loopvar = self._alloc.fresh(loopvar_name or name + "_s", init.sort)
        child = Builder(self._alloc, {**self._scope, loopvar.id: loopvar})
        exit_var = build_body(child, loopvar)
        v = self._alloc.fresh(name, init.sort)
        return self._add(MuDef(v, loopvar, child.context, exit_var, init))

    def term(self, result: Var) -> Term:
        if not self.in_scope(result):
            raise ScopeError(f"result {result.name} not in scope")
        return Term(self.context, result)


# ---------------------------------------------------------------------------
# Whole-term utilities
# ---------------------------------------------------------------------------

def iter_defs(ctx: Context) -> Iterator[Def]:
    """All definitions, μ bodies included, in allocation order."""
    for d in ctx.defs:
        if isinstance(d, MuDef):
            yield from iter_defs(d.body)
        yield d


def iter_vars(term: Term) -> Iterator[Var]:
    """Every bound variable (μ loop variables included) in increasing id order."""
    def walk(ctx: Context) -> Iterator[Var]:
        for d in ctx.defs:
            if isinstance(d, MuDef):
                yield d.loopvar
                yield from walk(d.body)
            yield d.var
    return walk(term.ctx)


def var_count(term: Term) -> int:
    return max((v.id for v in iter_vars(term)), default=-1) + 1


def sort_of(term: Term, v: Var) -> Sort:
    for w in iter_vars(term):
        if w.id == v.id:
            return w.sort
    raise ScopeError(f"unknown variable {v.name}")


@dataclass(frozen=True)
class Diagnostic:
    index: int          # definition position in iteration order
    message: str

    def __str__(self) -> str:
        return f"def #{self.index}: {self.message}"


def check_wf(term: Term) -> list[Diagnostic]:
    """Validate a term; returns diagnostics instead of raising.

    Checks scoping, sorts, binder uniqueness, dense increasing ids and
    display-name uniqueness (names are the parse identity).
    """
    diags: list[Diagnostic] = []
    seen_ids: set[int] = set()
    seen_names: set[str] = set()
    counter = [0]

    def note(msg: str) -> None:
        diags.append(Diagnostic(counter[0], msg))

    def bind(v: Var) -> None:
        if v.id in seen_ids:
            note(f"variable id {v.id} bound twice ({v.name})")
        if v.name in seen_names:
            note(f"variable name {v.name!r} bound twice")
        seen_ids.add(v.id)
        seen_names.add(v.name)

    last_id = [-1]

    def check_order(v: Var) -> None:
        if v.id <= last_id[0]:
            note(f"variable {v.name} breaks definition-order ids")
        last_id[0] = v.id

    def walk(ctx: Context, scope: dict[int, Var]) -> None:
        for d in ctx.defs:
            if isinstance(d, MuDef):
                bind(d.loopvar)
                check_order(d.loopvar)
                body_scope = dict(scope)
                body_scope[d.loopvar.id] = d.loopvar
                walk(d.body, body_scope)
                if body_scope.get(d.exit.id) != d.exit:
                    note(f"mu exit {d.exit.name} not in body scope")
                if scope.get(d.init.id) != d.init:
                    note(f"mu init {d.init.name} not in scope")
                if not (d.loopvar.sort == d.init.sort == d.exit.sort == d.var.sort):
                    note(f"{d.var.name}: mu variables must share one sort")
            else:
                try:
                    _check_def(d, scope)
                except LafError as e:
                    note(str(e))
            if d.var.id in scope:
                note(f"variable {d.var.name} shadows an existing binder")
            bind(d.var)
            check_order(d.var)
            scope[d.var.id] = d.var
            counter[0] += 1

    scope: dict[int, Var] = {}
    walk(term.ctx, scope)
    if scope.get(term.result.id) != term.result:
        diags.append(Diagnostic(counter[0], f"result {term.result.name} not in scope"))
    ids = sorted(seen_ids)
    if ids and ids != list(range(ids[0], ids[0] + len(ids))):
        diags.append(Diagnostic(counter[0], "variable ids are not dense"))
    return diags
