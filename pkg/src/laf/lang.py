"""WHILE-language frontend: parser, reference interpreter, translation.

Grammar (statements end with ';', blocks in braces, '#' or '//' comments):

    program  := stmt*
    stmt     := NAME ":=" expr ";"
              | "if" "(" expr ")" block ["else" block]
              | "while" "(" expr ")" block
              | "assert" "(" expr ")" ";"
              | "skip" ";"
    block    := "{" stmt* "}"
    expr     := disjunction of && over ! over comparisons (< <= == !=)
                over +,- over *,/ over unary - over atoms
    atom     := NAME | INT | "true" | "false" | "nondet" "(" ")" | "(" expr ")"

Programs manipulate integer variables; conditions are boolean expressions.
Uninitialized variables hold an arbitrary integer; `nondet()` reads a fresh
arbitrary integer.

The translation threads the whole memory as one tuple (one slot per program
variable, fixed indices): reads project out of it, writes rebuild it, an if
joins the two rebuilt memories through guarded assumes and a nondet, and a
while folds its body into a μ whose exit is guarded by the loop condition
(the negated condition kills the fall-through memory).  Asserts become named
boolean outputs.  The reference interpreter below is the independent oracle
the translation is tested against; it predates the translator in this file
on purpose.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .core import (
    BOOL, INT, Builder, Context, Term, TupleSort, Var, get_op, tup,
)
from .semantics import trunc_div


class WhileSyntaxError(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Name(Expr):
    name: str


@dataclass(frozen=True)
class Lit(Expr):
    value: int | bool


@dataclass(frozen=True)
class NondetInput(Expr):
    pass


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # + - * / < <= == && ||
    left: Expr
    right: Expr


@dataclass(frozen=True)
class UnOp(Expr):
    op: str  # ! -
    arg: Expr


@dataclass(frozen=True)
class Stmt:
    pass


@dataclass(frozen=True)
class Assign(Stmt):
    name: str
    expr: Expr


@dataclass(frozen=True)
class Seq(Stmt):
    stmts: tuple[Stmt, ...]


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: Stmt
    orelse: Stmt


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr
    body: Stmt


@dataclass(frozen=True)
class Assert(Stmt):
    expr: Expr


SKIP = Seq(())


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s+|#[^\n]*|//[^\n]*"
    r"|(?P<num>\d+)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>:=|<=|==|!=|&&|\|\||[-+*/<>!(){};])")


def _tokenize(text: str) -> list[tuple[str, str, int, int]]:
    toks = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise WhileSyntaxError(f"stray character {text[pos]!r}", line, col)
        chunk = m.group(0)
        if m.lastgroup:
            toks.append((m.lastgroup, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    return toks


class _WParser:
    def __init__(self, text: str) -> None:
        self.toks = _tokenize(text)
        self.pos = 0

    def _err(self, msg: str) -> WhileSyntaxError:
        if self.pos < len(self.toks):
            _, t, line, col = self.toks[self.pos]
            return WhileSyntaxError(f"{msg} (got {t!r})", line, col)
        return WhileSyntaxError(msg + " (at end of input)",
                                *(self.toks[-1][2:] if self.toks else (1, 1)))

    def peek(self) -> str | None:
        return self.toks[self.pos][1] if self.pos < len(self.toks) else None

    def next(self) -> tuple[str, str]:
        if self.pos >= len(self.toks):
            raise self._err("unexpected end of input")
        kind, text, _, _ = self.toks[self.pos]
        self.pos += 1
        return kind, text

    def expect(self, text: str) -> None:
        _, t = self.next()
        if t != text:
            self.pos -= 1
            raise self._err(f"expected {text!r}")

    def program(self) -> Stmt:
        stmts = []
        while self.peek() is not None:
            stmts.append(self.stmt())
        return Seq(tuple(stmts))

    def block(self) -> Stmt:
        self.expect("{")
        stmts = []
        while self.peek() != "}":
            if self.peek() is None:
                raise self._err("unterminated block")
            stmts.append(self.stmt())
        self.expect("}")
        return Seq(tuple(stmts)) if len(stmts) != 1 else stmts[0]

    def stmt(self) -> Stmt:
        t = self.peek()
        if t == "if":
            self.next()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            orelse: Stmt = SKIP
            if self.peek() == "else":
                self.next()
                orelse = self.block()
            return If(cond, then, orelse)
        if t == "while":
            self.next()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return While(cond, self.block())
        if t == "assert":
            self.next()
            self.expect("(")
            e = self.expr()
            self.expect(")")
            self.expect(";")
            return Assert(e)
        if t == "skip":
            self.next()
            self.expect(";")
            return SKIP
        kind, name = self.next()
        if kind != "name":
            raise self._err("expected a statement")
        self.expect(":=")
        e = self.expr()
        self.expect(";")
        return Assign(name, e)

    # expressions, loosest binding first
    def expr(self) -> Expr:
        return self._or()

    def _or(self) -> Expr:
        e = self._and()
        while self.peek() == "||":
            self.next()
            e = BinOp("||", e, self._and())
        return e

    def _and(self) -> Expr:
        e = self._not()
        while self.peek() == "&&":
            self.next()
            e = BinOp("&&", e, self._not())
        return e

    def _not(self) -> Expr:
        if self.peek() == "!":
            self.next()
            return UnOp("!", self._not())
        return self._cmp()

    def _cmp(self) -> Expr:
        e = self._add()
        t = self.peek()
        if t in ("<", "<=", "==", "!=", ">", ">="):
            self.next()
            rhs = self._add()
            if t == ">":
                return BinOp("<", rhs, e)
            if t == ">=":
                return BinOp("<=", rhs, e)
            if t == "!=":
                return UnOp("!", BinOp("==", e, rhs))
            return BinOp(t, e, rhs)
        return e

    def _add(self) -> Expr:
        e = self._mul()
        while self.peek() in ("+", "-"):
            _, op = self.next()
            e = BinOp(op, e, self._mul())
        return e

    def _mul(self) -> Expr:
        e = self._unary()
        while self.peek() in ("*", "/"):
            _, op = self.next()
            e = BinOp(op, e, self._unary())
        return e

    def _unary(self) -> Expr:
        if self.peek() == "-":
            self.next()
            return UnOp("-", self._unary())
        return self._atom()

    def _atom(self) -> Expr:
        kind, t = self.next()
        if kind == "num":
            return Lit(int(t))
        if t == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if t == "true":
                return Lit(True)
            if t == "false":
                return Lit(False)
            if t == "nondet":
                self.expect("(")
                self.expect(")")
                return NondetInput()
            return Name(t)
        self.pos -= 1
        raise self._err("expected an expression")


def parse_while(text: str) -> Stmt:
    return _WParser(text).program()


def program_vars(s: Stmt) -> list[str]:
    """All program variables in order of first appearance."""
    out: list[str] = []

    def expr(e: Expr) -> None:
        if isinstance(e, Name) and e.name not in out:
            out.append(e.name)
        elif isinstance(e, BinOp):
            expr(e.left)
            expr(e.right)
        elif isinstance(e, UnOp):
            expr(e.arg)

    def stmt(st: Stmt) -> None:
        if isinstance(st, Assign):
            expr(st.expr)
            if st.name not in out:
                out.append(st.name)
        elif isinstance(st, Seq):
            for x in st.stmts:
                stmt(x)
        elif isinstance(st, If):
            expr(st.cond)
            stmt(st.then)
            stmt(st.orelse)
        elif isinstance(st, While):
            expr(st.cond)
            stmt(st.body)
        elif isinstance(st, Assert):
            expr(st.expr)

    stmt(s)
    return out


# ---------------------------------------------------------------------------
# Reference interpreter (the oracle the translation is checked against)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InterpBudget:
    input_lo: int = -8
    input_hi: int = 8
    max_loop_iters: int = 64
    max_stores: int = 100_000


class InterpDiverged(Exception):
    pass


def interpret(s: Stmt, budget: InterpBudget | None = None) -> set[tuple]:
    """Reachable final stores (tuples ordered by program_vars); executions
    that divide by zero or fail to leave a loop within the bound are dropped,
    matching the dead-path semantics of the translation."""
    budget = budget or InterpBudget()
    names = program_vars(s)
    index = {n: i for i, n in enumerate(names)}
    inputs = range(budget.input_lo, budget.input_hi + 1)

    def eval_expr(e: Expr, store: tuple) -> set:
        if isinstance(e, Lit):
            return {e.value}
        if isinstance(e, Name):
            return {store[index[e.name]]}
        if isinstance(e, NondetInput):
            return set(inputs)
        if isinstance(e, UnOp):
            vals = eval_expr(e.arg, store)
            return {(not v) if e.op == "!" else -v for v in vals}
        assert isinstance(e, BinOp)
        out = set()
        for a in eval_expr(e.left, store):
            for b in eval_expr(e.right, store):
                if e.op == "+":
                    out.add(a + b)
                elif e.op == "-":
                    out.add(a - b)
                elif e.op == "*":
                    out.add(a * b)
                elif e.op == "/":
                    if b != 0:
                        out.add(trunc_div(a, b))
                elif e.op == "<":
                    out.add(a < b)
                elif e.op == "<=":
                    out.add(a <= b)
                elif e.op == "==":
                    out.add(a == b)
                elif e.op == "&&":
                    out.add(a and b)
                elif e.op == "||":
                    out.add(a or b)
                else:
                    raise ValueError(e.op)
        return out

    def run(st: Stmt, stores: set[tuple]) -> set[tuple]:
        if isinstance(st, Seq):
            for x in st.stmts:
                stores = run(x, stores)
            return stores
        if isinstance(st, Assign):
            out = set()
            for store in stores:
                for v in eval_expr(st.expr, store):
                    s2 = list(store)
                    s2[index[st.name]] = v
                    out.add(tuple(s2))
                    if len(out) > budget.max_stores:
                        raise InterpDiverged("store budget")
            return out
        if isinstance(st, If):
            out = set()
            for store in stores:
                for c in eval_expr(st.cond, store):
                    out |= run(st.then if c else st.orelse, {store})
            return out
        if isinstance(st, While):
            done: set[tuple] = set()
            frontier = set(stores)
            for _ in range(budget.max_loop_iters + 1):
                if not frontier:
                    return done
                next_frontier: set[tuple] = set()
                for store in frontier:
                    for c in eval_expr(st.cond, store):
                        if c:
                            next_frontier |= run(st.body, {store})
                        else:
                            done.add(store)
                frontier = next_frontier
            # paths still looping are dropped (they have not terminated)
            return done
        if isinstance(st, Assert):
            return stores  # assertions are observations, not filters
        raise TypeError(st)

    # every variable starts arbitrary, mirroring the unknown inputs of the
    # translated memory tuple
    import itertools
    out: set[tuple] = set()
    for combo in itertools.product(inputs, repeat=len(names)):
        out |= run(s, {tuple(combo)})
        if len(out) > budget.max_stores:
            raise InterpDiverged("store budget")
    return out


# ---------------------------------------------------------------------------
# Translation
# ---------------------------------------------------------------------------

@dataclass
class MemTuple:
    """Current memory image: a tuple-sorted var plus the fixed name→index map.

    When the tuple was built by a visible `mk`, the component variables are
    remembered so rebuilds and reads reuse them instead of emitting gets.
    A memory reached through assume/nondet/μ may be dead (⊥); its deadness
    travels through the `get` components (`tainted` slots).  When a write
    sequence would drop the last such component, the rebuilt tuple is guarded
    by a liveness probe of the previous memory — otherwise dead code could
    resurrect by overwriting every variable."""

    var: Var
    index: dict[str, int]
    components: tuple[Var, ...] | None = None
    root_live: bool = True
    tainted: frozenset[int] = frozenset()

    def read(self, b: Builder, name: str) -> Var:
        i = self.index[name]
        if self.components is not None:
            return self.components[i]
        return b.let_op(name, INT, get_op(i), [self.var])

    def write(self, b: Builder, name: str, value: Var) -> "MemTuple":
        i = self.index[name]
        if self.components is not None:
            comps = list(self.components)
            tainted = self.tainted - {i}
        else:
            comps = [b.let_op(n, INT, get_op(j), [self.var])
                     for n, j in sorted(self.index.items(), key=lambda kv: kv[1])]
            tainted = frozenset(range(len(comps))) - {i}
        comps[i] = value
        if not self.root_live and not tainted:
            return self._guarded_rebuild(b, comps)
        new = b.let_op("M", self.memory_sort(), "mk", comps)
        return MemTuple(new, self.index, tuple(comps), self.root_live, tainted)

    def _guarded_rebuild(self, b: Builder, comps: list[Var]) -> "MemTuple":
        probe = b.let_op("lp", INT, get_op(0), [self.var])
        alive = b.let_op("lc", BOOL, "le", [probe, probe])
        new = b.let_op("M", self.memory_sort(), "mk", comps)
        guarded = b.let_assume("M", alive, new)
        return self.opaque(guarded)

    def opaque(self, var: Var) -> "MemTuple":
        return MemTuple(var, self.index, None, False, frozenset())

    def memory_sort(self) -> TupleSort:
        return tup(*(INT for _ in self.index))


@dataclass(frozen=True)
class Translation:
    term: Term
    assertions: tuple[tuple[str, Var], ...]
    memory: Var
    var_index: tuple[tuple[str, int], ...]


def translate(s: Stmt, unroll: int = 0) -> Translation:
    """Whole-program translation; `unroll` peels that many iterations off
    every while loop before folding the rest into a μ."""
    if unroll:
        s = _unroll(s, unroll)
    names = program_vars(s)
    if not names:
        names = ["_"]
    index = {n: i for i, n in enumerate(names)}
    b = Builder()
    assertions: list[tuple[str, Var]] = []
    inputs = [b.let_unknown(f"{n}0", INT) for n in names]
    m0 = b.let_op("M0", tup(*(INT for _ in names)), "mk", inputs)
    mem = MemTuple(m0, index, tuple(inputs))
    mem = _stmt(s, b, mem, assertions)
    term = b.term(mem.var)
    return Translation(term, tuple(assertions), mem.var,
                       tuple(sorted(index.items(), key=lambda kv: kv[1])))


def _unroll(s: Stmt, n: int) -> Stmt:
    if isinstance(s, Seq):
        return Seq(tuple(_unroll(x, n) for x in s.stmts))
    if isinstance(s, If):
        return If(s.cond, _unroll(s.then, n), _unroll(s.orelse, n))
    if isinstance(s, While):
        body = _unroll(s.body, n)
        loop: Stmt = While(s.cond, body)
        for _ in range(n):
            loop = If(s.cond, Seq((body, loop)), SKIP)
        return loop
    return s


def _expr(e: Expr, b: Builder, mem: MemTuple) -> Var:
    if isinstance(e, Lit):
        if isinstance(e.value, bool):
            return b.let_bool("k", e.value)
        return b.let_int("k", e.value)
    if isinstance(e, Name):
        return mem.read(b, e.name)
    if isinstance(e, NondetInput):
        return b.let_unknown("in", INT)
    if isinstance(e, UnOp):
        a = _expr(e.arg, b, mem)
        if e.op == "!":
            return b.let_op("t", BOOL, "not", [a])
        return b.let_op("t", INT, "neg", [a])
    assert isinstance(e, BinOp)
    left = _expr(e.left, b, mem)
    right = _expr(e.right, b, mem)
    opname = {"+": "add", "-": "sub", "*": "mul", "/": "div",
              "<": "lt", "<=": "le", "==": "eq",
              "&&": "and", "||": "or"}[e.op]
    sort = INT if e.op in "+-*/" else BOOL
    return b.let_op("t", sort, opname, [left, right])


def _stmt(s: Stmt, b: Builder, mem: MemTuple,
          assertions: list[tuple[str, Var]]) -> MemTuple:
    if isinstance(s, Seq):
        for x in s.stmts:
            mem = _stmt(x, b, mem, assertions)
        return mem
    if isinstance(s, Assign):
        v = _expr(s.expr, b, mem)
        return mem.write(b, s.name, v)
    if isinstance(s, If):
        cond = _expr(s.cond, b, mem)
        ncond = b.let_op("nc", BOOL, "not", [cond])
        mem_then = _stmt(s.then, b, mem, assertions)
        mem_else = _stmt(s.orelse, b, mem, assertions)
        m_then = b.let_assume("Mt", cond, mem_then.var)
        m_else = b.let_assume("Me", ncond, mem_else.var)
        joined = b.let_nondet("M", m_then, m_else)
        return mem.opaque(joined)
    if isinstance(s, While):
        def body(child: Builder, loopvar: Var) -> Var:
            inner = mem.opaque(loopvar)
            cond = _expr(s.cond, child, inner)
            guarded = child.let_assume("Mg", cond, loopvar)
            out = _stmt(s.body, child, mem.opaque(guarded), assertions)
            # guard the exit too: a body that overwrites every variable
            # before reading any would otherwise bypass the kill and leak
            # spurious iterates into the loop's value set
            return child.let_assume("Mx", cond, out.var)

        folded = b.let_mu("M", mem.var, body, loopvar_name="Ml")
        after = mem.opaque(folded)
        cond2 = _expr(s.cond, b, after)
        ncond2 = b.let_op("nc", BOOL, "not", [cond2])
        killed = b.let_assume("M", ncond2, folded)
        return mem.opaque(killed)
    if isinstance(s, Assert):
        v = _expr(s.expr, b, mem)
        assertions.append((f"assert#{len(assertions) + 1}", v))
        return mem
    raise TypeError(s)


# ---------------------------------------------------------------------------
# Post-translation simplification
# ---------------------------------------------------------------------------

def simplify_translation(tr: Translation) -> Translation:
    """Tuple-projection rewriting plus dead-definition elimination; preserves
    the oracle semantics of the memory result and every assertion var."""
    from .rewrite import EMPTY_STATE, default_rulesets, eval_rewrite

    exact, _ = default_rulesets()
    state = eval_rewrite(tr.term.ctx, EMPTY_STATE, exact)
    mapping = dict(state.mapping)
    roots = [mapping[tr.memory.id].id] + \
        [mapping[v.id].id for _, v in tr.assertions]
    keep = _live_ids(state.out, set(roots))
    b = Builder()
    new_vars: dict[int, Var] = {}
    _rebuild(state.out, keep, b, new_vars)
    term = b.term(new_vars[mapping[tr.memory.id].id])
    assertions = tuple((name, new_vars[mapping[v.id].id])
                       for name, v in tr.assertions)
    return Translation(term, assertions, term.result, tr.var_index)


def _live_ids(ctx: Context, roots: set[int]) -> set[int]:
    from .core import Def, MuDef

    defs: dict[int, Def] = {}

    def collect_defs(c: Context) -> None:
        for d in c.defs:
            defs[d.var.id] = d
            if isinstance(d, MuDef):
                collect_defs(d.body)

    collect_defs(ctx)
    live: set[int] = set()
    work = list(roots)
    while work:
        var_id = work.pop()
        if var_id in live:
            continue
        live.add(var_id)
        d = defs.get(var_id)
        if d is None:
            continue
        for a in d.arg_vars():
            work.append(a.id)
        if isinstance(d, MuDef):
            # everything the exit transitively needs inside the body
            work.append(d.exit.id)
            work.append(d.init.id)
    return live


def _rebuild(ctx: Context, keep: set[int], b: Builder,
             new_vars: dict[int, Var]) -> None:
    from .core import AssumeDef, MuDef, NondetDef, OpDef, UnknownDef

    for d in ctx.defs:
        if d.var.id not in keep:
            continue
        if isinstance(d, OpDef):
            new_vars[d.var.id] = b.let_op(
                d.var.name, d.var.sort, d.op,
                [new_vars[a.id] for a in d.args])
        elif isinstance(d, NondetDef):
            new_vars[d.var.id] = b.let_nondet(
                d.var.name, new_vars[d.a.id], new_vars[d.b.id])
        elif isinstance(d, AssumeDef):
            new_vars[d.var.id] = b.let_assume(
                d.var.name, new_vars[d.cond.id], new_vars[d.value.id])
        elif isinstance(d, UnknownDef):
            new_vars[d.var.id] = b.let_unknown(d.var.name, d.var.sort)
        elif isinstance(d, MuDef):
            def body(child: Builder, loopvar: Var, d=d) -> Var:
                new_vars[d.loopvar.id] = loopvar
                _rebuild(d.body, keep, child, new_vars)
                return new_vars[d.exit.id]

            new_vars[d.var.id] = b.let_mu(
                d.var.name, new_vars[d.init.id], body,
                loopvar_name=d.loopvar.name)
        else:
            raise TypeError(f"unknown def {d!r}")
