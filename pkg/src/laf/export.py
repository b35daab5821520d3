"""Translation of terms to first-order formulas and Horn clauses.

Every term variable x maps to a pair of solver variables ⟨c_x, v_x⟩: c_x is
a necessary condition for x to be live (not ⊥) and v_x its value when it is.
Tuples are exploded into per-component scalar value variables so emitted
scripts stay in core integer/boolean/bitvector logics.

Loops are over-approximated in the first-order translation (the μ result is
a fresh unconstrained value guarded by the init's condition); the Horn
translation represents each μ exactly with one uninterpreted invariant
predicate over the captured outer variables and the loop value.

Division is guarded (c includes divisor ≠ 0) because a zero divisor kills
the value in the term semantics; without the guard the liveness tracking
would be wrong on division terms.

The translation is linear: one ⟨c, v⟩ pair and a bounded number of
conjuncts per definition.
"""

from __future__ import annotations

import itertools
import shlex
import subprocess
from dataclasses import dataclass, field

from .core import (
    AssumeDef, BitVecSort, BoolSort, Context, Def, IntSort, MuDef, NondetDef,
    Op, OpDef, Sort, Term, TupleSort, UnknownDef, Var,
)
from .semantics import (
    BitVecV, BoolV, BottomV, EnumBudget, Env, IntV, TupleV, Value, trunc_div,
)


class ExportError(Exception):
    pass


# ---------------------------------------------------------------------------
# A tiny expression language for solver formulas
# ---------------------------------------------------------------------------
#
# Expressions are s-expression tuples over variable names and constants:
# ("and", ...), ("or", ...), ("not", e), ("=>", a, b), ("=", a, b),
# ("+",a,b), ("-",a,b), ("neg",a), ("*",a,b), ("div",a,b), ("<",a,b),
# ("<=",a,b), ("extract",hi,lo,e), ("concat",a,b,width_b),
# ("int", n), ("bv", bits, width), True/False, variable names as str.

SExpr = object


def int_const(n: int) -> tuple:
    return ("int", n)


def bv_const(bits: int, width: int) -> tuple:
    return ("bv", bits, width)


def eval_sexpr(e: SExpr, env: dict[str, object]) -> object:
    """Evaluate under a total assignment; division by zero yields 0 (any
    total extension works — the conjuncts guard the zero case)."""
    if isinstance(e, bool):
        return e
    if isinstance(e, str):
        return env[e]
    assert isinstance(e, tuple), repr(e)
    head = e[0]
    if head == "int" or head == "bv":
        return e[1]
    if head == "and":
        return all(eval_sexpr(x, env) for x in e[1:])
    if head == "or":
        return any(eval_sexpr(x, env) for x in e[1:])
    if head == "not":
        return not eval_sexpr(e[1], env)
    if head == "=>":
        return (not eval_sexpr(e[1], env)) or eval_sexpr(e[2], env)
    if head == "=":
        return eval_sexpr(e[1], env) == eval_sexpr(e[2], env)
    if head == "extract":
        hi, lo = e[1], e[2]
        v = eval_sexpr(e[3], env)
        return (v >> lo) & ((1 << (hi - lo + 1)) - 1)
    if head == "concat":
        a = eval_sexpr(e[1], env)
        b = eval_sexpr(e[2], env)
        return (a << e[3]) | b
    args = [eval_sexpr(x, env) for x in e[1:]]
    if head == "+":
        return args[0] + args[1]
    if head == "-":
        return args[0] - args[1]
    if head == "neg":
        return -args[0]
    if head == "*":
        return args[0] * args[1]
    if head == "div":
        return trunc_div(args[0], args[1]) if args[1] != 0 else 0
    if head == "<":
        return args[0] < args[1]
    if head == "<=":
        return args[0] <= args[1]
    raise ValueError(f"bad expression {e!r}")


def sexpr_names(e: SExpr, out: set[str]) -> None:
    if isinstance(e, str):
        out.add(e)
    elif isinstance(e, tuple) and e[0] not in ("int", "bv"):
        start = 3 if e[0] == "extract" else 1
        stop = 3 if e[0] == "concat" else None
        for x in (e[start:stop] if stop else e[start:]):
            sexpr_names(x, out)


# ---------------------------------------------------------------------------
# First-order translation
# ---------------------------------------------------------------------------

@dataclass
class SolverVars:
    """⟨c, v⟩: the liveness variable and per-scalar-component value names."""

    cond: str
    values: tuple[str, ...]
    sorts: tuple[Sort, ...]


@dataclass
class FoFormula:
    conjuncts: list[SExpr] = field(default_factory=list)
    mapping: dict[int, SolverVars] = field(default_factory=dict)
    decls: dict[str, Sort] = field(default_factory=dict)
    defined: set[str] = field(default_factory=set)  # names with an "=" def
    pred_facts: list = field(default_factory=list)  # Horn use atoms

    def holds(self, assignment: dict[str, object]) -> bool:
        return all(bool(eval_sexpr(c, assignment)) for c in self.conjuncts)

    def free_value_names(self) -> list[str]:
        return [n for n in self.decls if n not in self.defined]


def _scalars(sort: Sort) -> tuple[Sort, ...]:
    if isinstance(sort, TupleSort):
        out: tuple[Sort, ...] = ()
        for s in sort.elements:
            out += _scalars(s)
        return out
    return (sort,)


def _component_slice(sort: TupleSort, i: int) -> tuple[int, int]:
    start = sum(len(_scalars(s)) for s in sort.elements[:i])
    return start, start + len(_scalars(sort.elements[i]))


class _FoState:
    def __init__(self, formula: FoFormula, prefix: str = "") -> None:
        self.f = formula
        self.prefix = prefix
        self.counter = 0

    def fresh(self, stem: str, sort: Sort) -> str:
        self.counter += 1
        name = f"{self.prefix}{stem}{self.counter}"
        while name in self.f.decls:
            self.counter += 1
            name = f"{self.prefix}{stem}{self.counter}"
        self.f.decls[name] = sort
        return name

    def pair(self, v: Var) -> SolverVars:
        sorts = _scalars(v.sort)
        c = self.fresh(f"c.{v.name}.", BoolSort())
        vals = tuple(self.fresh(f"v.{v.name}.", s) for s in sorts)
        sv = SolverVars(c, vals, sorts)
        self.f.mapping[v.id] = sv
        return sv

    def define(self, name: str, expr: SExpr) -> None:
        self.f.conjuncts.append(("=", name, expr))
        self.f.defined.add(name)

    def add(self, conjunct: SExpr) -> None:
        self.f.conjuncts.append(conjunct)


def _translate_def(d: Def, st: _FoState, mu_handler) -> None:
    f = st.f
    if isinstance(d, OpDef):
        sv = st.pair(d.var)
        args = [f.mapping[a.id] for a in d.args]
        if d.op.name == "div":
            a, b = args
            nonzero = ("not", ("=", b.values[0], int_const(0)))
            st.define(sv.cond, ("and", a.cond, b.cond, nonzero))
            st.add(("=>", nonzero, ("=", sv.values[0],
                                    ("div", a.values[0], b.values[0]))))
        elif d.op.name == "get":
            t = args[0]
            tup_sort = d.args[0].sort
            assert isinstance(tup_sort, TupleSort)
            start, stop = _component_slice(tup_sort, d.op.params[0])
            st.define(sv.cond, t.cond)
            for name, src in zip(sv.values, t.values[start:stop]):
                st.define(name, src)
        else:
            live: SExpr = ("and", *(a.cond for a in args)) if args else True
            st.define(sv.cond, live)
            for name, expr in zip(sv.values, _op_values(d.op, args, d.var.sort)):
                st.define(name, expr)
        return
    if isinstance(d, UnknownDef):
        sv = st.pair(d.var)
        st.define(sv.cond, True)
        return
    if isinstance(d, AssumeDef):
        sv = st.pair(d.var)
        cond = f.mapping[d.cond.id]
        val = f.mapping[d.value.id]
        st.define(sv.cond, ("and", cond.cond, val.cond, cond.values[0]))
        for name, src in zip(sv.values, val.values):
            st.define(name, src)
        return
    if isinstance(d, NondetDef):
        sv = st.pair(d.var)
        a = f.mapping[d.a.id]
        b = f.mapping[d.b.id]
        picks_a = ("and", a.cond,
                   *(("=", x, y) for x, y in zip(sv.values, a.values)))
        picks_b = ("and", b.cond,
                   *(("=", x, y) for x, y in zip(sv.values, b.values)))
        st.add(("=>", sv.cond, ("or", picks_a, picks_b)))
        # a necessary liveness condition only: equality with (or c_a c_b)
        # would make ⊥ unreachable when one branch is always live, breaking
        # the model-embedding property
        st.add(("=>", sv.cond, ("or", a.cond, b.cond)))
        return
    if isinstance(d, MuDef):
        mu_handler(d, st)
        return
    raise TypeError(f"unknown def {d!r}")


def _op_values(op: Op, args: list[SolverVars], sort: Sort) -> list[SExpr]:
    n = op.name
    if n == "lit":
        payload = op.params[0]
        if isinstance(sort, BoolSort):
            return [bool(payload)]
        if isinstance(sort, BitVecSort):
            return [bv_const(payload, sort.width)]
        return [int_const(payload)]
    if n == "mk":
        out: list[SExpr] = []
        for a in args:
            out.extend(a.values)
        return out
    a = args[0]
    if n in ("add", "sub", "mul"):
        sym = {"add": "+", "sub": "-", "mul": "*"}[n]
        return [(sym, a.values[0], args[1].values[0])]
    if n == "neg":
        return [("neg", a.values[0])]
    if n in ("lt", "le"):
        sym = "<" if n == "lt" else "<="
        return [(sym, a.values[0], args[1].values[0])]
    if n == "eq":
        return [("=", a.values[0], args[1].values[0])]
    if n == "and":
        return [("and", a.values[0], args[1].values[0])]
    if n == "or":
        return [("or", a.values[0], args[1].values[0])]
    if n == "not":
        return [("not", a.values[0])]
    if n == "extract":
        hi, lo = op.params
        return [("extract", hi, lo, a.values[0])]
    if n == "concat":
        b = args[1]
        width_b = b.sorts[0].width  # type: ignore[union-attr]
        return [("concat", a.values[0], b.values[0], width_b)]
    raise TypeError(f"unknown op {n}")


# ---------------------------------------------------------------------------
# to_fo / embed_model
# ---------------------------------------------------------------------------

def to_fo(term: Term) -> FoFormula:
    """First-order over-approximation: μ results become fresh values guarded
    by the init's liveness."""
    f = FoFormula()
    st = _FoState(f)

    def mu(d: MuDef, state: _FoState) -> None:
        sv = state.pair(d.var)
        init = f.mapping[d.init.id]
        state.define(sv.cond, init.cond)
        # values stay unconstrained: the loop is over-approximated

    for d in term.ctx.defs:
        _translate_def(d, st, mu)
    return f


def flatten_value(v: Value) -> list[object]:
    """Per-scalar-component solver encoding of a concrete value."""
    if isinstance(v, TupleV):
        out: list[object] = []
        for x in v.items:
            out.extend(flatten_value(x))
        return out
    if isinstance(v, BoolV):
        return [v.value]
    if isinstance(v, IntV):
        return [v.value]
    if isinstance(v, BitVecV):
        return [v.bits]
    raise ExportError(f"no scalar encoding for {v}")


def _default_scalars(sorts: tuple[Sort, ...]) -> list[object]:
    out: list[object] = []
    for s in sorts:
        out.append(False if isinstance(s, BoolSort) else 0)
    return out


def embed_model(term: Term, env: Env, formula: FoFormula | None = None
                ) -> dict[str, object]:
    """Assignment satisfying the formula and mirroring the environment:
    c_x false where env has ⊥, else c_x true and v_x the value.

    Only defined for loop-free terms; raises loudly when `env` does not
    describe a run of the term.
    """
    f = formula if formula is not None else to_fo(term)
    asg: dict[str, object] = {}
    for d in term.ctx.defs:
        if isinstance(d, MuDef):
            raise ExportError("model embedding needs a loop-free term")
        sv = f.mapping[d.var.id]
        value = env.get(d.var)
        dead = isinstance(value, BottomV)
        if isinstance(d, OpDef):
            if d.op.name == "div":
                b = f.mapping[d.args[1].id]
                divisor_ok = asg[b.values[0]] != 0
                a = f.mapping[d.args[0].id]
                asg[sv.cond] = bool(asg[a.cond] and asg[b.cond] and divisor_ok)
                asg[sv.values[0]] = (trunc_div(asg[a.values[0]], asg[b.values[0]])
                                     if divisor_ok else 0)
            else:
                conds = [asg[f.mapping[a.id].cond] for a in d.args]
                asg[sv.cond] = all(conds)
                exprs = (_component_exprs_for(d, f))
                for name, expr in zip(sv.values, exprs):
                    asg[name] = eval_sexpr(expr, asg)
        elif isinstance(d, UnknownDef):
            asg[sv.cond] = True
            for name, enc in zip(sv.values, flatten_value(value)):
                asg[name] = enc
        elif isinstance(d, AssumeDef):
            cond = f.mapping[d.cond.id]
            val = f.mapping[d.value.id]
            asg[sv.cond] = bool(asg[cond.cond] and asg[val.cond]
                                and asg[cond.values[0]])
            for name, src in zip(sv.values, val.values):
                asg[name] = asg[src]
        elif isinstance(d, NondetDef):
            a = f.mapping[d.a.id]
            b = f.mapping[d.b.id]
            if dead:
                asg[sv.cond] = False
                for name, src in zip(sv.values, a.values):
                    asg[name] = asg[src]
            else:
                asg[sv.cond] = True
                chosen = None
                for arg, pair in ((d.a, a), (d.b, b)):
                    if env.get(arg) == value and asg[pair.cond]:
                        chosen = pair
                        break
                if chosen is None:
                    raise ExportError(
                        f"{d.var.name}: environment is not a run of the term")
                for name, src in zip(sv.values, chosen.values):
                    asg[name] = asg[src]
        else:
            raise TypeError(f"unknown def {d!r}")
        # cross-check the liveness invariant
        if bool(asg[sv.cond]) == dead:
            raise ExportError(
                f"{d.var.name}: environment is not a run of the term")
        if not dead:
            for name, enc in zip(sv.values, flatten_value(value)):
                if asg[name] != enc:
                    raise ExportError(
                        f"{d.var.name}: environment is not a run of the term")
    return asg


def _component_exprs_for(d: OpDef, f: FoFormula) -> list[SExpr]:
    if d.op.name == "get":
        t = f.mapping[d.args[0].id]
        tup_sort = d.args[0].sort
        assert isinstance(tup_sort, TupleSort)
        start, stop = _component_slice(tup_sort, d.op.params[0])
        return list(t.values[start:stop])
    args = [f.mapping[a.id] for a in d.args]
    return _op_values(d.op, args, d.var.sort)


# ---------------------------------------------------------------------------
# Horn translation
# ---------------------------------------------------------------------------

@dataclass
class PredDecl:
    name: str
    arg_sorts: tuple[Sort, ...]
    loop_arity: int
    captured: tuple[str, ...]  # display names of captured variables


@dataclass
class PredApp:
    pred: str
    args: tuple[str, ...]


@dataclass
class HornClause:
    """∀ vars: body-conjuncts ∧ body-preds ⇒ head."""

    variables: dict[str, Sort]
    body: list[SExpr]
    body_preds: list[PredApp]
    head: PredApp


@dataclass
class HornSystem:
    preds: list[PredDecl]
    clauses: list[HornClause]
    main: FoFormula
    main_preds: list[PredApp]   # use facts constraining μ results
    mu_vars: dict[int, str]     # μ var id -> predicate name


_TT = "tt"


def to_horn(term: Term) -> HornSystem:
    """Loop-free fragment as in to_fo; every μ gets one invariant predicate
    with an init clause (Inv holds the init value), a consecution clause
    guarded by the exit's liveness, and a use atom binding the μ result to
    some predicate value.  Captured outer variables are passed explicitly."""
    f = FoFormula()
    st = _FoState(f)
    system = HornSystem([], [], f, [], {})
    mu_count = [0]

    def cap_args(pairs: list[SolverVars]) -> tuple[str, ...]:
        out: tuple[str, ...] = ()
        for sv in pairs:
            out += (sv.cond,) + sv.values
        return out

    def handle_mu(d: MuDef, state: _FoState) -> None:
        mu_count[0] += 1
        pred_name = f"Inv{mu_count[0]}"
        captured = _captured_vars(d)
        cap_pairs = [state.f.mapping[c.id] for c in captured]
        loop_sorts = _scalars(d.var.sort)
        arg_sorts: tuple[Sort, ...] = ()
        for sv in cap_pairs:
            arg_sorts += (BoolSort(),) + sv.sorts
        arg_sorts += loop_sorts
        system.preds.append(PredDecl(pred_name, arg_sorts, len(loop_sorts),
                                     tuple(c.name for c in captured)))

        init = state.f.mapping[d.init.id]
        system.clauses.append(HornClause(
            dict(state.f.decls),
            list(state.f.conjuncts),
            list(state.f.pred_facts),
            PredApp(pred_name, cap_args(cap_pairs) + init.values)))

        # consecution clause: the body translated over clause-local names
        body_f = FoFormula()
        body_st = _FoState(body_f, prefix=f"{pred_name}.")
        local_caps = [body_st.pair(c) for c in captured]
        s_vals = tuple(body_st.fresh("s.", s) for s in loop_sorts)
        tt = body_st.fresh(_TT, BoolSort())
        body_st.define(tt, True)
        body_f.mapping[d.loopvar.id] = SolverVars(tt, s_vals, loop_sorts)
        body_preds = [PredApp(pred_name, cap_args(local_caps) + s_vals)]
        for bd in d.body.defs:
            _translate_def(bd, body_st, handle_mu)
        exit_sv = body_f.mapping[d.exit.id]
        system.clauses.append(HornClause(
            dict(body_f.decls),
            list(body_f.conjuncts) + [exit_sv.cond],
            body_preds + list(body_f.pred_facts),
            PredApp(pred_name, cap_args(local_caps) + exit_sv.values)))

        # use atom: the μ result is some value the predicate holds
        sv = state.pair(d.var)
        state.define(sv.cond, init.cond)
        state.f.pred_facts.append(
            PredApp(pred_name, cap_args(cap_pairs) + sv.values))
        system.mu_vars[d.var.id] = pred_name

    system.main_preds = f.pred_facts
    for d in term.ctx.defs:
        _translate_def(d, st, handle_mu)
    return system


def _captured_vars(d: MuDef) -> list[Var]:
    """Outer variables the body reads, in id order."""
    bound = {d.loopvar.id}
    captured: dict[int, Var] = {}

    def walk(ctx: Context) -> None:
        for bd in ctx.defs:
            if isinstance(bd, MuDef):
                bound.add(bd.loopvar.id)
                walk(bd.body)
            for a in bd.arg_vars():
                if a.id not in bound:
                    captured[a.id] = a
            if isinstance(bd, MuDef) and bd.exit.id not in bound:
                captured[bd.exit.id] = bd.exit
            bound.add(bd.var.id)

    walk(d.body)
    return [captured[i] for i in sorted(captured)]


# ---------------------------------------------------------------------------
# Bounded Horn evaluation (validation without an external solver)
# ---------------------------------------------------------------------------

def horn_mu_values(system: HornSystem, budget: EnumBudget,
                   rounds: int) -> dict[str, set[tuple]]:
    """Saturate each predicate's facts by evaluating its init/consecution
    clauses concretely (free variables enumerated over the budget window);
    returns the loop-value projections per predicate."""
    facts: dict[str, set[tuple]] = {p.name: set() for p in system.preds}
    for _ in range(rounds + 1):
        grown = False
        for clause in system.clauses:
            for fact in _clause_facts(clause, facts, budget):
                if fact not in facts[clause.head.pred]:
                    facts[clause.head.pred].add(fact)
                    grown = True
        if not grown:
            break
    out: dict[str, set[tuple]] = {}
    for p in system.preds:
        out[p.name] = {fact[-p.loop_arity:] for fact in facts[p.name]}
    return out


def _clause_facts(clause: HornClause, facts: dict[str, set[tuple]],
                  budget: EnumBudget):
    defined: set[str] = set()
    for c in clause.body:
        if isinstance(c, tuple) and len(c) == 3 and c[0] == "=" \
                and isinstance(c[1], str):
            defined.add(c[1])
    pred_bound: set[str] = set()
    for app in clause.body_preds:
        pred_bound.update(app.args)
    free = [n for n, s in clause.variables.items()
            if n not in defined and n not in pred_bound
            and not isinstance(s, TupleSort)]

    def enum_sort(s: Sort):
        if isinstance(s, BoolSort):
            return [True, False]
        if isinstance(s, BitVecSort):
            return list(range(min(1 << s.width, 16)))
        return list(range(budget.int_lo, budget.int_hi + 1))

    pred_choices = []
    for app in clause.body_preds:
        pred_choices.append([dict(zip(app.args, fact))
                             for fact in facts[app.pred]])
    free_pools = [enum_sort(clause.variables[n]) for n in free]
    for pred_combo in itertools.product(*pred_choices) if pred_choices else [()]:
        base: dict[str, object] = {}
        consistent = True
        for partial in pred_combo:
            for k, v in partial.items():
                if k in base and base[k] != v:
                    consistent = False
                base[k] = v
        if not consistent:
            continue
        for combo in itertools.product(*free_pools):
            asg = dict(base)
            asg.update(zip(free, combo))
            for sat_asg in _solve_body(clause.body, asg):
                yield tuple(sat_asg[a] for a in clause.head.args)


def _solve_body(body: list[SExpr], asg: dict[str, object]):
    """Forward-evaluate the conjuncts in order, branching on nondet
    disjunctions; yields completed assignments satisfying all conjuncts."""
    states = [dict(asg)]
    for c in body:
        nxt = []
        for st in states:
            nxt.extend(_step_conjunct(c, st))
        states = nxt
        if not states:
            return
    yield from states


def _step_conjunct(c: SExpr, asg: dict[str, object]):
    if isinstance(c, tuple) and c[0] == "=" and isinstance(c[1], str):
        name, expr = c[1], c[2]
        if name not in asg:
            try:
                asg[name] = eval_sexpr(expr, asg)
            except KeyError:
                return  # depends on an unassigned free var: drop this path
            yield asg
            return
        if asg[name] == eval_sexpr(expr, asg):
            yield asg
        return
    if isinstance(c, tuple) and c[0] == "=>" and isinstance(c[2], tuple) \
            and c[2][0] == "or" \
            and all(isinstance(br, tuple) and br and br[0] == "and"
                    for br in c[2][1:]):
        # nondet choice: guard ⇒ (branch ∨ branch)
        try:
            guard = eval_sexpr(c[1], asg)
        except KeyError:
            guard = True  # guard not yet decidable: explore both branches
        if not guard:
            # values stay unconstrained; pick a default per unassigned name
            names: set[str] = set()
            sexpr_names(c[2], names)
            for n in names:
                asg.setdefault(n, 0)
            yield asg
            return
        for branch in c[2][1:]:
            alt = dict(asg)
            if _assign_branch(branch, alt):
                yield alt
        return
    if isinstance(c, tuple) and c[0] == "=>":
        # guarded definition (division): when the guard is false the value
        # is free — default it
        try:
            guard = eval_sexpr(c[1], asg)
        except KeyError:
            return
        inner = c[2]
        if guard and isinstance(inner, tuple) and inner[0] == "=" \
                and isinstance(inner[1], str):
            asg[inner[1]] = eval_sexpr(inner[2], asg)
        elif isinstance(inner, tuple) and inner[0] == "=" \
                and isinstance(inner[1], str):
            asg.setdefault(inner[1], 0)
        yield asg
        return
    # plain constraint: filter
    try:
        if eval_sexpr(c, asg):
            yield asg
    except KeyError:
        return


def _assign_branch(branch: SExpr, asg: dict[str, object]) -> bool:
    """branch = (and, cond, (= v a)...): require cond, assign the values."""
    assert isinstance(branch, tuple) and branch[0] == "and"
    cond = branch[1]
    try:
        if not eval_sexpr(cond, asg):
            return False
    except KeyError:
        return False
    for eq in branch[2:]:
        _, name, src = eq
        val = eval_sexpr(src, asg)
        if name in asg and asg[name] != val:
            return False
        asg[name] = val
    return True


# ---------------------------------------------------------------------------
# SMT-LIB emission
# ---------------------------------------------------------------------------

def _sort_smt(s: Sort) -> str:
    if isinstance(s, BoolSort):
        return "Bool"
    if isinstance(s, IntSort):
        return "Int"
    if isinstance(s, BitVecSort):
        return f"(_ BitVec {s.width})"
    raise ExportError(f"no solver sort for {s}")


def _smt(e: SExpr) -> str:
    if isinstance(e, bool):
        return "true" if e else "false"
    if isinstance(e, str):
        return f"|{e}|"
    assert isinstance(e, tuple)
    head = e[0]
    if head == "int":
        n = e[1]
        return str(n) if n >= 0 else f"(- {-n})"
    if head == "bv":
        return f"(_ bv{e[1]} {e[2]})"
    if head == "extract":
        return f"((_ extract {e[1]} {e[2]}) {_smt(e[3])})"
    if head == "concat":
        return f"(concat {_smt(e[1])} {_smt(e[2])})"
    if head == "neg":
        return f"(- {_smt(e[1])})"
    if head == "div":
        return f"(tdiv {_smt(e[1])} {_smt(e[2])})"
    sym = {"and": "and", "or": "or", "not": "not", "=>": "=>", "=": "=",
           "+": "+", "-": "-", "*": "*", "<": "<", "<=": "<="}[head]
    return "(" + sym + "".join(" " + _smt(x) for x in e[1:]) + ")"


_TDIV_DEF = ("(define-fun tdiv ((a Int) (b Int)) Int\n"
             "  (let ((q (div (abs a) (abs b))))\n"
             "    (ite (= (>= a 0) (>= b 0)) q (- q))))")


def _uses_div(conjuncts: list[SExpr]) -> bool:
    def walk(e: SExpr) -> bool:
        if isinstance(e, tuple):
            if e[0] == "div":
                return True
            start = 3 if e[0] == "extract" else 1
            return any(walk(x) for x in e[1:] if not isinstance(x, int))
        return False
    return any(walk(c) for c in conjuncts)


def emit_smtlib(f: FoFormula, goal: Var, target: Value) -> str:
    """Solver script asking whether the goal variable can be live with the
    target value; deterministic for a fixed input."""
    sv = f.mapping[goal.id]
    lines = ["(set-logic ALL)"]
    if _uses_div(f.conjuncts):
        lines.append(_TDIV_DEF)
    for name in sorted(f.decls):
        lines.append(f"(declare-const |{name}| {_sort_smt(f.decls[name])})")
    for c in f.conjuncts:
        lines.append(f"(assert {_smt(c)})")
    lines.append(f"(assert {_smt(sv.cond)})")
    for name, enc in zip(sv.values, flatten_value(target)):
        lines.append(f"(assert (= |{name}| {_enc_smt(enc, f.decls[name])}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _enc_smt(enc: object, sort: Sort) -> str:
    if isinstance(sort, BoolSort):
        return "true" if enc else "false"
    if isinstance(sort, BitVecSort):
        return f"(_ bv{enc} {sort.width})"
    return str(enc) if enc >= 0 else f"(- {-enc})"  # type: ignore[operator]


def emit_horn_smtlib(system: HornSystem, goal: Var, target: Value) -> str:
    """HORN-logic script; unsat means the goal can never be live with the
    target value."""
    f = system.main
    lines = ["(set-logic HORN)"]
    if _uses_div(f.conjuncts) or any(_uses_div(c.body) for c in system.clauses):
        lines.append(_TDIV_DEF)
    for p in system.preds:
        sorts = " ".join(_sort_smt(s) for s in p.arg_sorts)
        lines.append(f"(declare-fun {p.name} ({sorts}) Bool)")
    for clause in system.clauses:
        lines.append(_clause_smt(clause))
    # the query clause: main conjuncts + μ use atoms + goal ⇒ false
    sv = f.mapping[goal.id]
    body = [_smt(c) for c in f.conjuncts]
    for app in system.main_preds:
        body.append(f"({app.pred}"
                    + "".join(f" |{a}|" for a in app.args) + ")")
    body.append(_smt(sv.cond))
    for name, enc in zip(sv.values, flatten_value(target)):
        body.append(f"(= |{name}| {_enc_smt(enc, f.decls[name])})")
    qvars = " ".join(f"(|{n}| {_sort_smt(s)})" for n, s in sorted(f.decls.items()))
    lines.append(f"(assert (forall ({qvars})\n  (=> (and "
                 + " ".join(body) + ") false)))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _clause_smt(clause: HornClause) -> str:
    body = [_smt(c) for c in clause.body]
    for app in clause.body_preds:
        body.append(f"({app.pred}" + "".join(f" |{a}|" for a in app.args) + ")")
    head = f"({clause.head.pred}" + \
        "".join(f" |{a}|" for a in clause.head.args) + ")"
    qvars = " ".join(f"(|{n}| {_sort_smt(s)})"
                     for n, s in sorted(clause.variables.items()))
    conj = body[0] if len(body) == 1 else "(and " + " ".join(body) + ")"
    return f"(assert (forall ({qvars})\n  (=> {conj} {head})))"


# ---------------------------------------------------------------------------
# Optional external solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverResult:
    status: str  # "sat" | "unsat" | "unknown" | "error"
    detail: str = ""


def run_solver(command_template: str, path: str,
               timeout: float = 10.0) -> SolverResult:
    """Run `command_template` (a shell-ish template with {file}) on a script
    and report sat/unsat/unknown; failures degrade to an error result."""
    cmd = [part.format(file=path)
           for part in shlex.split(command_template)]
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True,
                              timeout=timeout)
    except (OSError, subprocess.TimeoutExpired) as e:
        return SolverResult("error", str(e))
    out = (proc.stdout + proc.stderr).strip().splitlines()
    for line in out:
        token = line.strip()
        if token in ("sat", "unsat", "unknown"):
            return SolverResult(token)
    return SolverResult("error", "\n".join(out[:5]))

