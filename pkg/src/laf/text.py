"""Textual term format.

Grammar (prefix, parenthesized; ';' comments to end of line; UTF-8, ".laf"):

    term   := def* "(in" VAR ")"
    def    := "(let" VAR sort rhs ")"
    rhs    := "(" OPNAME VAR* ")" | "(nondet" VAR VAR ")" | "(assume" VAR VAR ")"
            | "(unknown)" | "(mu" "(" VAR ")" def* VAR VAR ")" | literal
    sort   := "bool" | "int" | "(bv" INT ")" | "(tuple" sort+ ")"
    OPNAME := add|sub|neg|mul|div|lt|le|eq|and|or|not|mk|get.<i>|extract.<hi>.<lo>|concat
    literal:= INT | true | false | #b[01]+ | #x[0-9a-f]+

print_term(parse_term(s)) normalizes whitespace; parse_term(print_term(t)) == t.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .core import (
    BOOL, INT, AssumeDef, BitVecSort, BoolSort, Builder, Context, Def, IntSort,
    MuDef, NondetDef, Op, OpDef, Sort, Term, TupleSort, UnknownDef, Var,
    extract_op, get_op,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class _Tok:
    kind: str   # "(", ")", "atom"
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"\(|\)|[^\s();]+")


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split(";", 1)[0]
        for m in _TOKEN_RE.finditer(body):
            t = m.group(0)
            kind = t if t in "()" else "atom"
            toks.append(_Tok(kind, t, lineno, m.start() + 1))
    return toks


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = _tokenize(text)
        self.pos = 0

    def _err(self, msg: str) -> ParseError:
        if self.pos < len(self.toks):
            t = self.toks[self.pos]
            return ParseError(msg, t.line, t.col)
        last = self.toks[-1] if self.toks else _Tok("atom", "", 1, 1)
        return ParseError(msg + " (at end of input)", last.line, last.col)

    def peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self) -> _Tok:
        t = self.peek()
        if t is None:
            raise self._err("unexpected end of input")
        self.pos += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            raise self._err(f"expected {text!r}, got {t.text!r}")
        return t

    def atom(self) -> str:
        t = self.next()
        if t.kind != "atom":
            raise self._err(f"expected an identifier, got {t.text!r}")
        return t.text

    # -- sorts ---------------------------------------------------------------

    def sort(self) -> Sort:
        t = self.next()
        if t.text == "bool":
            return BOOL
        if t.text == "int":
            return INT
        if t.text == "(":
            head = self.atom()
            if head == "bv":
                w = self._int(self.atom())
                self.expect(")")
                return BitVecSort(w)
            if head == "tuple":
                elems = []
                while self.peek() and self.peek().text != ")":
                    elems.append(self.sort())
                self.expect(")")
                if not elems:
                    raise self._err("tuple sort needs elements")
                return TupleSort(tuple(elems))
            raise self._err(f"unknown sort {head!r}")
        raise self._err(f"expected a sort, got {t.text!r}")

    def _int(self, s: str) -> int:
        try:
            return int(s)
        except ValueError:
            raise self._err(f"expected an integer, got {s!r}") from None

    # -- terms ---------------------------------------------------------------

    def term(self) -> Term:
        b = Builder()
        scope: dict[str, Var] = {}
        result = self._defs(b, scope, top=True)
        if self.peek() is not None:
            raise self._err("trailing input after term")
        return b.term(result)

    def _lookup(self, scope: dict[str, Var], name: str) -> Var:
        v = scope.get(name)
        if v is None:
            raise self._err(f"unknown variable {name!r}")
        return v

    def _defs(self, b: Builder, scope: dict[str, Var], top: bool) -> Var:
        """Parse defs; at top level consume "(in x)" and return the result."""
        while True:
            self.expect("(")
            head = self.atom()
            if head == "in":
                name = self.atom()
                self.expect(")")
                return self._lookup(scope, name)
            if head != "let":
                raise self._err(f"expected 'let' or 'in', got {head!r}")
            name = self.atom()
            sort = self.sort()
            v = self._rhs(b, scope, name, sort)
            scope[name] = v
            self.expect(")")

    def _rhs(self, b: Builder, scope: dict[str, Var], name: str, sort: Sort) -> Var:
        t = self.next()
        if t.kind == "atom":
            return self._literal(b, name, sort, t)
        head = self.atom()
        if head == "nondet":
            a = self._lookup(scope, self.atom())
            c = self._lookup(scope, self.atom())
            self.expect(")")
            if a.sort != sort or c.sort != sort:
                raise self._err(f"nondet arguments must have sort {sort}")
            return b.let_nondet(name, a, c)
        if head == "assume":
            cond = self._lookup(scope, self.atom())
            val = self._lookup(scope, self.atom())
            self.expect(")")
            if val.sort != sort:
                raise self._err(f"assume value must have sort {sort}")
            return b.let_assume(name, cond, val)
        if head == "unknown":
            self.expect(")")
            return b.let_unknown(name, sort)
        if head == "mu":
            return self._mu(b, scope, name, sort)
        op = self._opname(head)
        args = []
        while self.peek() and self.peek().text != ")":
            args.append(self._lookup(scope, self.atom()))
        self.expect(")")
        return b.let_op(name, sort, op, args)

    def _mu(self, b: Builder, scope: dict[str, Var], name: str, sort: Sort) -> Var:
        self.expect("(")
        loopname = self.atom()
        self.expect(")")
        return _StagedMu(self, b, scope, name, sort, loopname).run()

    def _opname(self, head: str) -> Op:
        if head.startswith("get."):
            return get_op(self._int(head[4:]))
        if head.startswith("extract."):
            parts = head.split(".")
            if len(parts) != 3:
                raise self._err(f"malformed extract {head!r}")
            return extract_op(self._int(parts[1]), self._int(parts[2]))
        if head in {"add", "sub", "neg", "mul", "div", "lt", "le", "eq",
                    "and", "or", "not", "mk", "concat"}:
            return Op(head)
        raise self._err(f"unknown operation {head!r}")

    def _literal(self, b: Builder, name: str, sort: Sort, t: _Tok) -> Var:
        s = t.text
        if s == "true":
            value: object = True
        elif s == "false":
            value = False
        elif s.startswith("#b"):
            if not re.fullmatch(r"#b[01]+", s):
                raise self._err(f"malformed bitvector literal {s!r}")
            value = int(s[2:], 2)
        elif s.startswith("#x"):
            if not re.fullmatch(r"#x[0-9a-fA-F]+", s):
                raise self._err(f"malformed bitvector literal {s!r}")
            value = int(s[2:], 16)
        elif re.fullmatch(r"-?[0-9]+", s):
            value = int(s)
        else:
            raise self._err(f"expected a right-hand side, got {s!r}")
        try:
            return b.let_lit(name, sort, value)
        except Exception as e:
            raise self._err(str(e)) from None


class _StagedMu:
    """Parses a μ body through Builder.let_mu's callback protocol.

    The init variable comes last in the concrete syntax but first in the
    builder API, so it is resolved by a balanced-paren pre-scan and the body
    is then parsed inside the builder callback.
    """

    def __init__(self, p: _Parser, b: Builder, scope: dict[str, Var],
                 name: str, sort: Sort, loopname: str) -> None:
        self.p, self.b, self.scope = p, b, scope
        self.name, self.sort, self.loopname = name, sort, loopname

    def _prescan_init(self) -> Var:
        p = self.p
        depth = 1
        idx = p.pos
        while idx < len(p.toks) and depth > 0:
            t = p.toks[idx]
            if t.kind == "(":
                depth += 1
            elif t.kind == ")":
                depth -= 1
            idx += 1
        if depth != 0:
            raise p._err("unterminated mu")
        init_tok = p.toks[idx - 2]
        if init_tok.kind != "atom":
            raise p._err("mu needs a trailing init variable")
        init = p._lookup(self.scope, init_tok.text)
        if init.sort != self.sort:
            raise p._err("mu init variable sort mismatch")
        return init

    def run(self) -> Var:
        p = self.p
        init = self._prescan_init()

        def build(child: Builder, loopvar: Var) -> Var:
            body_scope = dict(self.scope)
            body_scope[self.loopname] = loopvar
            while p.peek() and p.peek().text == "(":
                p.expect("(")
                head = p.atom()
                if head != "let":
                    raise p._err(f"expected 'let' in mu body, got {head!r}")
                dname = p.atom()
                dsort = p.sort()
                v = p._rhs(child, body_scope, dname, dsort)
                body_scope[dname] = v
                p.expect(")")
            exit_v = p._lookup(body_scope, p.atom())
            p.atom()  # init name, resolved by the pre-scan
            return exit_v

        v = self.b.let_mu(self.name, init, build, loopvar_name=self.loopname)
        p.expect(")")
        return v


def parse_term(text: str) -> Term:
    """Parse a term, raising ParseError with line/column on malformed input."""
    return _Parser(text).term()


def parse_sort(text: str) -> Sort:
    p = _Parser(text)
    s = p.sort()
    if p.peek() is not None:
        raise p._err("trailing input after sort")
    return s


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def _print_literal(value, sort: Sort) -> str:
    if isinstance(sort, BoolSort):
        return "true" if value else "false"
    if isinstance(sort, IntSort):
        return str(value)
    if isinstance(sort, BitVecSort):
        return "#b" + format(value, f"0{sort.width}b")
    raise ValueError(f"no literal syntax for sort {sort}")


def _print_rhs(d: Def, indent: str) -> str:
    if isinstance(d, OpDef):
        if d.op.name == "lit":
            return _print_literal(d.op.params[0], d.var.sort)
        parts = [str(d.op)] + [a.name for a in d.args]
        return "(" + " ".join(parts) + ")"
    if isinstance(d, NondetDef):
        return f"(nondet {d.a.name} {d.b.name})"
    if isinstance(d, AssumeDef):
        return f"(assume {d.cond.name} {d.value.name})"
    if isinstance(d, UnknownDef):
        return "(unknown)"
    if isinstance(d, MuDef):
        inner = indent + "  "
        lines = [f"(mu ({d.loopvar.name})"]
        for bd in d.body.defs:
            lines.append(inner + _print_def(bd, inner))
        lines.append(inner + f"{d.exit.name} {d.init.name})")
        return "\n".join(lines)
    raise TypeError(f"unknown def {d!r}")


def _print_def(d: Def, indent: str) -> str:
    return f"(let {d.var.name} {d.var.sort} {_print_rhs(d, indent)})"


def print_context(ctx: Context) -> str:
    return "\n".join(_print_def(d, "") for d in ctx.defs)


def print_term(term: Term) -> str:
    body = print_context(term.ctx)
    closing = f"(in {term.result.name})"
    return body + ("\n" if body else "") + closing + "\n"
