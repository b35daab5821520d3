"""Whole-program constraint propagation over condition maps.

The domain re-emits the input term as a *constraints* context with assume
definitions delayed to nondet branches and loop exits; every input variable
maps to a constraint variable (its value) and a condition (the conjunction
of assume guards it passed through).  A single global store associates each
constraint variable with a condition map: an ordered list of
condition ⊩ abstract-value entries.

Queries meet all entries whose condition is implied (syntactic subset) by
the query condition, plus case splits over complementary literals: entries
under c∧l and c∧¬l join into knowledge valid under c alone.  Splits are
restricted to literals that provably cannot be ⊥ (a dead literal satisfies
neither case).

Propagation is a worklist refinement started at each input assume: the guard
literal is seeded true under itself, then definitions are re-evaluated
backward (inverse transfer functions) and forward.  Backward steps only walk
chains whose liveness is forced by the propagated condition: strict
operators force their arguments live, assume forces its guard true, and a
nondet branch is only entered under the negation of the other branch's
guard.  Stopping early (the propagation limit) is always sound.

Loops iterate the condition map of the loop variable as a function lattice
(pointwise join/widen/inclusion); conditions over body-local literals are
existentially quantified out of the exit row before joining back.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .core import (
    BOOL, AssumeDef, BitVecSort, BoolSort, Builder, Context, Def, MuDef,
    NondetDef, Op, OpDef, Sort, UnknownDef, Var, lit_op,
)
from .domain import AbstractDomain
from .semantics import (
    BitVecV, BoolV, BottomV, BudgetExceededError, EnumBudget, Env, Value,
    collect,
)
from .values import AbstractValue, BoolSet, IntervalFamily, ValueFamily


# ---------------------------------------------------------------------------
# Conditions
# ---------------------------------------------------------------------------

Literal = tuple[int, bool]  # (constraint var id, polarity)


@dataclass(frozen=True)
class Condition:
    """Conjunction of literals; lits=None marks unsatisfiable-by-construction."""

    lits: frozenset[Literal] | None = frozenset()

    @property
    def unsat(self) -> bool:
        return self.lits is None

    @property
    def is_true(self) -> bool:
        return self.lits is not None and not self.lits

    def conjoin(self, other: "Condition") -> "Condition":
        if self.unsat or other.unsat:
            return UNSAT
        lits = self.lits | other.lits
        if any((i, not p) in lits for (i, p) in lits):
            return UNSAT
        return Condition(lits)

    def implies(self, other: "Condition") -> bool:
        """Syntactic: self carries at least other's literals."""
        if self.unsat:
            return True
        if other.unsat:
            return False
        return other.lits <= self.lits


TRUE_COND = Condition(frozenset())
UNSAT = Condition(None)


def cond_of(*lits: Literal) -> Condition:
    return TRUE_COND.conjoin(Condition(frozenset(lits)))


@dataclass
class ConditionMap:
    """Append-ordered condition ⊩ value entries."""

    entries: list[tuple[Condition, AbstractValue]] = field(default_factory=list)

    def add(self, cond: Condition, value: AbstractValue) -> None:
        if not cond.unsat:
            self.entries.append((cond, value))

    def copy(self) -> "ConditionMap":
        return ConditionMap(list(self.entries))


@dataclass(frozen=True)
class PropConfig:
    limit: int | None = None          # distinct vars refined per seed; None = inf
    direction: str = "both"           # "backward" | "both"
    split_depth: int = 2
    max_steps: int = 10_000           # hard cap: cyclic integer refinements
                                      # would otherwise descend forever


_BODY_OPEN = 1 << 62


# ---------------------------------------------------------------------------
# The analysis
# ---------------------------------------------------------------------------

class ConstraintAnalysis:
    """Mutable analysis state: constraints under construction, maps, store."""

    def __init__(self, family: ValueFamily | None = None,
                 cfg: PropConfig | None = None) -> None:
        self.family = family or IntervalFamily()
        self.cfg = cfg or PropConfig()
        self.builder = Builder()
        self.val: dict[int, Var] = {}          # input var id -> constraint var
        self.cond: dict[int, Condition] = {}   # input var id -> condition
        self.store: dict[int, ConditionMap] = {}
        self.defs: dict[int, Def] = {}         # constraint var id -> def
        self.uses: dict[int, list[Def]] = {}
        self.live: set[int] = set()
        self.sorts: dict[int, Sort] = {}
        self._memo: dict[tuple, Var] = {}
        self._not_memo: dict[int, Literal | bool] = {}
        self._frames: list[Builder] = []
        self._plans: list[tuple[list, int]] = []   # (event list, body start id)
        self._oracle_cache: dict[tuple, frozenset[Env]] = {}

    # -- emission helpers ------------------------------------------------------

    @property
    def constraints(self) -> Context:
        return self.builder.context

    def out_var_count(self) -> int:
        return self.builder._alloc.next_id

    def _cur(self) -> Builder:
        return self._frames[-1] if self._frames else self.builder

    def _register(self, d: Def, live: bool) -> Var:
        v = d.var
        self.defs[v.id] = d
        self.sorts[v.id] = v.sort
        for a in d.arg_vars():
            self.uses.setdefault(a.id, []).append(d)
        if live:
            self.live.add(v.id)
        return v

    def _emit_op(self, name: str, sort: Sort, op: Op, args: list[Var]) -> Var:
        key = ("op", op, sort, tuple(a.id for a in args))
        if key in self._memo:
            return self._memo[key]
        v = self._cur().let_op(name, sort, op, args)
        self._register(OpDef(v, op, tuple(args)),
                       live=all(a.id in self.live for a in args))
        self._memo[key] = v
        return v

    def _emit_lit(self, name: str, sort: Sort, value) -> Var:
        key = ("op", lit_op(value), sort, ())
        if key in self._memo:
            return self._memo[key]
        v = self._cur().let_lit(name, sort, value)
        self._register(OpDef(v, lit_op(value), ()), live=True)
        self._memo[key] = v
        self._bind_lit_row(v)
        return v

    def _emit_assume(self, name: str, cond_var: Var, value: Var) -> Var:
        key = ("assume", cond_var.id, value.id)
        if key in self._memo:
            return self._memo[key]
        v = self._cur().let_assume(name, cond_var, value)
        self._register(AssumeDef(v, cond_var, value), live=False)
        self._memo[key] = v
        return v

    def _emit_nondet(self, name: str, a: Var, b: Var) -> Var:
        v = self._cur().let_nondet(name, a, b)
        self._register(NondetDef(v, a, b),
                       live=a.id in self.live and b.id in self.live)
        return v

    def _emit_unknown(self, name: str, sort: Sort) -> Var:
        v = self._cur().let_unknown(name, sort)
        self._register(UnknownDef(v), live=True)
        return v

    def _bind_lit_row(self, v: Var) -> None:
        d = self.defs[v.id]
        assert isinstance(d, OpDef) and d.op.name == "lit"
        concrete = _lit_value(d.op.params[0], v.sort)
        self.bind_initial(v, TRUE_COND, self.family.of_value(concrete, v.sort))

    # -- literal canonicalization and condition materialization -----------------

    def canon_lit(self, v: Var, positive: bool = True) -> Literal | bool:
        """Canonical literal, resolving chains of `not` and boolean constants
        (constants come back as a plain bool)."""
        var_id, pol = v.id, positive
        for _ in range(64):
            d = self.defs.get(var_id)
            if isinstance(d, OpDef) and d.op.name == "not":
                var_id, pol = d.args[0].id, not pol
                continue
            if isinstance(d, OpDef) and d.op.name == "lit":
                return bool(d.op.params[0]) == pol
            return (var_id, pol)
        return (var_id, pol)

    def lit_condition(self, v: Var, positive: bool = True) -> Condition:
        lit = self.canon_lit(v, positive)
        if lit is True:
            return TRUE_COND
        if lit is False:
            return UNSAT
        return cond_of(lit)

    def materialize(self, cond: Condition, stem: str = "c") -> Var:
        """A boolean constraint var equivalent to `cond`."""
        if cond.unsat:
            return self._emit_lit("ff", BOOL, False)
        if cond.is_true:
            return self._emit_lit("tt", BOOL, True)
        parts = []
        for (var_id, pol) in sorted(cond.lits):
            base = self._var_of(var_id)
            parts.append(base if pol else
                         self._emit_op(f"n.{base.name}", BOOL, Op("not"), [base]))
        acc = parts[0]
        for p in parts[1:]:
            acc = self._emit_op(stem, BOOL, Op("and"), [acc, p])
        return acc

    def _name_of(self, var_id: int) -> str:
        d = self.defs.get(var_id)
        return d.var.name if d else f"v{var_id}"

    def _var_of(self, var_id: int) -> Var:
        return self.defs[var_id].var

    # -- store ------------------------------------------------------------------

    def row(self, v: Var) -> ConditionMap:
        return self.store.setdefault(v.id, ConditionMap())

    def bind_initial(self, v: Var, cond: Condition, value: AbstractValue) -> None:
        if not cond.unsat:
            self.row(v).add(cond, value)

    def bind_refined(self, v: Var, cond: Condition, value: AbstractValue) -> bool:
        """Add only when strictly more precise than the current query."""
        if cond.unsat:
            return False
        current = self.query(v, cond)
        refined = value.meet(current)
        if current.leq(refined):
            return False
        self.row(v).add(cond, refined)
        return True

    def query(self, v: Var, cond: Condition, depth: int | None = None) -> AbstractValue:
        depth = self.cfg.split_depth if depth is None else depth
        return self._query_id(v.id, cond, depth)

    def _query_id(self, var_id: int, cond: Condition, depth: int) -> AbstractValue:
        sort = self.sorts[var_id]
        if cond.unsat:
            return self.family.bottom(sort)
        result = self.family.top(sort)
        row = self.store.get(var_id)
        if row is None:
            return result
        split_ids: set[int] = set()
        for c, value in row.entries:
            if cond.implies(c):
                result = result.meet(value)
            elif depth > 0:
                for (lid, _pol) in c.lits:
                    if (lid, True) not in cond.lits and (lid, False) not in cond.lits:
                        split_ids.add(lid)
        for lid in sorted(split_ids):
            if lid not in self.live:
                continue  # dead literal: neither split case need apply
            pos = self._query_id(var_id, cond.conjoin(cond_of((lid, True))), depth - 1)
            neg = self._query_id(var_id, cond.conjoin(cond_of((lid, False))), depth - 1)
            result = result.meet(pos.join(neg))
        return result

    # -- events ------------------------------------------------------------------

    def _event(self, ev: tuple) -> None:
        """Record (inside a μ body) and execute one evaluation event."""
        if self._plans:
            self._plans[-1][0].append(ev)
            self._exec(ev, restrict=(self._plans[-1][1], _BODY_OPEN))
        else:
            self._exec(ev, restrict=None)

    def _exec(self, ev: tuple, restrict: tuple[int, int] | None) -> None:
        kind = ev[0]
        if kind == "eval-op":
            _, var_id, cond = ev
            self._initial_eval_op(self._var_of(var_id), cond)
        elif kind == "eval-unknown":
            v = self._var_of(ev[1])
            self.bind_initial(v, TRUE_COND, self.family.top(v.sort))
        elif kind == "eval-wrapper":
            v = self._var_of(ev[1])
            guard_cond = ev[2]
            d = self.defs[v.id]
            assert isinstance(d, AssumeDef)
            if self._cond_refuted(guard_cond):
                # the guard is abstractly refuted: the wrapper is always ⊥
                self.bind_initial(v, TRUE_COND, self.family.bottom(v.sort))
            else:
                # a live wrapper forces its guard: query the value under it
                self.bind_initial(v, TRUE_COND, self.query(d.value, guard_cond))
        elif kind == "eval-nondet":
            self._eval_nondet_row(self._var_of(ev[1]))
        elif kind == "seed":
            self.propagate(ev[1], restrict=restrict)
        else:
            raise ValueError(f"unknown event {ev!r}")

    def _cond_refuted(self, cond: Condition) -> bool:
        """Some literal's stored value contradicts its required polarity."""
        if cond.unsat:
            return True
        for (var_id, pol) in cond.lits:
            value = self._query_id(var_id, TRUE_COND, 0)
            if isinstance(value, BoolSet) and \
                    value.values == frozenset({not pol}):
                return True
        return False

    def _initial_eval_op(self, v: Var, cond: Condition) -> None:
        d = self.defs[v.id]
        assert isinstance(d, OpDef)
        if d.op.name == "lit":
            return  # bound at emission / row reset
        args = [self.query(a, cond) for a in d.args]
        self.bind_initial(v, cond, self.family.transfer(d.op, v.sort, args))

    def _eval_nondet_row(self, v: Var) -> None:
        d = self.defs[v.id]
        assert isinstance(d, NondetDef)
        v1 = self.query(d.a, TRUE_COND)
        v2 = self.query(d.b, TRUE_COND)
        self.bind_initial(v, TRUE_COND, v1.join(v2))
        # under the negation of one branch's guard only the other lives
        for mine, other in ((v1, d.b), (v2, d.a)):
            other_def = self.defs.get(other.id)
            if isinstance(other_def, AssumeDef):
                neg = self.lit_condition(other_def.cond, False)
                if not neg.unsat:
                    self.bind_initial(v, neg, mine)

    # -- generation ---------------------------------------------------------------

    def run(self, ctx: Context) -> "ConstraintAnalysis":
        self._oracle_cache.clear()
        for d in ctx.defs:
            self._translate(d)
        return self

    def _translate(self, d: Def) -> None:
        if isinstance(d, OpDef):
            if d.op.name == "lit":
                v = self._emit_lit(d.var.name, d.var.sort, d.op.params[0])
                self.val[d.var.id] = v
                self.cond[d.var.id] = TRUE_COND
                return
            args = [self.val[a.id] for a in d.args]
            cond = TRUE_COND
            for a in d.args:
                cond = cond.conjoin(self.cond[a.id])
            v = self._emit_op(d.var.name, d.var.sort, d.op, args)
            self.val[d.var.id] = v
            self.cond[d.var.id] = cond
            self._event(("eval-op", v.id, cond))
        elif isinstance(d, UnknownDef):
            v = self._emit_unknown(d.var.name, d.var.sort)
            self.val[d.var.id] = v
            self.cond[d.var.id] = TRUE_COND
            self._event(("eval-unknown", v.id))
        elif isinstance(d, AssumeDef):
            guard = self.val[d.cond.id]
            self.val[d.var.id] = self.val[d.value.id]
            self.cond[d.var.id] = (
                self.cond[d.cond.id]
                .conjoin(self.cond[d.value.id])
                .conjoin(self.lit_condition(guard)))
            lit = self.canon_lit(guard)
            if (not isinstance(lit, bool)
                    and not self.cond[d.value.id].unsat
                    and not self.cond[d.cond.id].unsat):
                self._event(("seed", lit))
        elif isinstance(d, NondetDef):
            w1, c1 = self._branch(d.a, d.var.name + ".l")
            w2, c2 = self._branch(d.b, d.var.name + ".r")
            v = self._emit_nondet(d.var.name, w1, w2)
            self.val[d.var.id] = v
            self.cond[d.var.id] = self._or_condition(c1, c2)
            self._event(("eval-nondet", v.id))
        elif isinstance(d, MuDef):
            self._translate_mu(d)
        else:
            raise TypeError(f"unknown def {d!r}")

    def _branch(self, x: Var, stem: str) -> tuple[Var, Condition]:
        """assume-wrapped branch value for a nondet argument."""
        cond = self.cond[x.id]
        value = self.val[x.id]
        if cond.is_true:
            return value, TRUE_COND
        guard = self.materialize(cond, stem + "g")
        w = self._emit_assume(stem, guard, value)
        self._event(("eval-wrapper", w.id, cond))
        return w, cond

    def _or_condition(self, c1: Condition, c2: Condition) -> Condition:
        # The disjunction of the branch conditions; the assume wrappers carry
        # the per-branch guards, so `true` is sound here (a fresh or-variable
        # would itself be strict in possibly-dead guards).
        if c1.unsat:
            return c2
        if c2.unsat:
            return c1
        return TRUE_COND

    # -- propagation ----------------------------------------------------------

    def propagate(self, seed: Literal, cfg: PropConfig | None = None,
                  restrict: tuple[int, int] | None = None) -> None:
        cfg = cfg or self.cfg
        seed_id, pol = seed
        seed_cond = cond_of(seed)
        self.bind_refined(self._var_of(seed_id), seed_cond, BoolSet.const(pol))
        work: deque[tuple[int, Condition, bool]] = deque([(seed_id, seed_cond, True)])
        refined: set[int] = set()

        def try_bind(var_id: int, cond: Condition, value: AbstractValue,
                     certified: bool) -> bool:
            """False stops the whole propagation (variable limit reached)."""
            if restrict is not None and not (restrict[0] <= var_id < restrict[1]):
                return True
            if cond.unsat:
                return True
            new_var = var_id != seed_id and var_id not in refined
            if new_var and cfg.limit is not None and len(refined) >= cfg.limit:
                return False
            if self.bind_refined(self._var_of(var_id), cond, value):
                if new_var:
                    refined.add(var_id)
                work.append((var_id, cond, certified))
            return True

        steps = 0
        while work:
            steps += 1
            if steps > cfg.max_steps:
                return  # stopping early is always sound
            var_id, cond, certified = work.popleft()
            if certified:
                for (w, c, val) in self._backward_steps(var_id, cond):
                    if not try_bind(w, c, val, True):
                        return
            if cfg.direction == "both":
                for (w, c, val) in self._forward_steps(var_id, cond):
                    if not try_bind(w, c, val, False):
                        return

    def _backward_steps(self, var_id: int, cond: Condition):
        d = self.defs.get(var_id)
        known = self._query_id(var_id, cond, self.cfg.split_depth)
        if isinstance(d, OpDef) and d.op.name != "lit":
            args = [self.query(a, cond) for a in d.args]
            for a, refined in zip(d.args,
                                  self.family.refine_args(d.op, args, known)):
                if refined is not None:
                    yield a.id, cond, refined
        elif isinstance(d, AssumeDef):
            inner = cond.conjoin(self.lit_condition(d.cond))
            if not inner.unsat:
                yield d.value.id, inner, known.meet(self.query(d.value, inner))
        elif isinstance(d, NondetDef):
            for branch, other in ((d.a, d.b), (d.b, d.a)):
                other_def = self.defs.get(other.id)
                if isinstance(other_def, AssumeDef):
                    excl = cond.conjoin(self.lit_condition(other_def.cond, False))
                    if not excl.unsat:
                        yield branch.id, excl, known.meet(self.query(branch, excl))

    def _forward_steps(self, var_id: int, cond: Condition):
        for d in self.uses.get(var_id, []):
            row = self.store.get(d.var.id)
            if row is None or not row.entries:
                # not yet evaluated (μ-body replay resets rows): its own
                # evaluation event will see the refinement through queries
                continue
            if isinstance(d, OpDef):
                args = [self.query(a, cond) for a in d.args]
                yield d.var.id, cond, self.family.transfer(d.op, d.var.sort, args)
            elif isinstance(d, AssumeDef) and d.value.id == var_id:
                inner = cond.conjoin(self.lit_condition(d.cond))
                if not inner.unsat:
                    yield d.var.id, cond, self.query(d.value, inner)
            elif isinstance(d, NondetDef):
                yield d.var.id, cond, self.query(d.a, cond).join(self.query(d.b, cond))

    # -- μ ---------------------------------------------------------------------

    def _translate_mu(self, d: MuDef) -> None:
        # The init is assume-wrapped so the translated loop dies exactly when
        # the input one does; a live loop result does not imply a live init
        # (the body may ignore the loop variable), so the μ condition is true.
        init_cond = self.cond[d.init.id]
        if init_cond.is_true:
            init_var = self.val[d.init.id]
        else:
            guard = self.materialize(init_cond, d.var.name + ".ig")
            init_var = self._emit_assume(d.var.name + ".i", guard,
                                         self.val[d.init.id])
            self._event(("eval-wrapper", init_var.id, init_cond))
        plan: list[tuple] = []
        span = [0, 0]

        def build(child: Builder, loopvar: Var) -> Var:
            self._frames.append(child)
            memo_before = dict(self._memo)
            span[0] = loopvar.id
            self._plans.append((plan, loopvar.id))
            self.val[d.loopvar.id] = loopvar
            self.cond[d.loopvar.id] = TRUE_COND
            self._register(UnknownDef(loopvar), live=False)
            try:
                for bd in d.body.defs:
                    self._translate(bd)
                exit_cond = self.cond[d.exit.id]
                exit_val = self.val[d.exit.id]
                if exit_cond.is_true:
                    exit_out = exit_val
                else:
                    guard = self.materialize(exit_cond, d.var.name + ".xg")
                    exit_out = self._emit_assume(d.var.name + ".x", guard, exit_val)
                    self._event(("eval-wrapper", exit_out.id, exit_cond))
            finally:
                self._plans.pop()
                self._frames.pop()
                self._memo = memo_before
            span[1] = self.builder._alloc.next_id
            return exit_out

        v = self._cur().let_mu(d.var.name, init_var, build,
                               loopvar_name=d.loopvar.name)
        mu_def = self._cur().context.defs[-1]
        assert isinstance(mu_def, MuDef) and mu_def.var.id == v.id
        self._register(mu_def, live=False)
        self.val[d.var.id] = v
        self.cond[d.var.id] = TRUE_COND
        self._fix_mu(v, mu_def, init_var, plan, (span[0], span[1]))

    def _fix_mu(self, v: Var, mu_def: MuDef, init_var: Var,
                plan: list, span: tuple[int, int]) -> None:
        base = self.store.get(init_var.id, ConditionMap()).copy()
        current = base.copy()
        for _ in range(100):
            self._reset_body_rows(span, mu_def.loopvar, current)
            for ev in plan:
                self._exec(ev, restrict=span)
            exit_row = self._quantify(
                self.store.get(mu_def.exit.id, ConditionMap()), span)
            candidate = self._map_join(exit_row, base, v.sort)
            if self._map_leq(candidate, current, v.sort):
                break
            current = self._map_widen(current, candidate, v.sort)
        else:
            raise BudgetExceededError(
                "mu-abstract", f"condition-map fixpoint for {v.name}")
        self.store[v.id] = current.copy()

    def _reset_body_rows(self, span: tuple[int, int], loopvar: Var,
                         current: ConditionMap) -> None:
        for var_id in range(span[0], span[1]):
            if var_id in self.store:
                del self.store[var_id]
            d = self.defs.get(var_id)
            if isinstance(d, OpDef) and d.op.name == "lit":
                self._bind_lit_row(d.var)
        self.store[loopvar.id] = current.copy()

    def _quantify(self, row: ConditionMap, span: tuple[int, int]) -> ConditionMap:
        """Existential quantification of body-local literals: entries whose
        condition mentions them are joined into the entry for the condition
        with those literals deleted (no such entry: nothing to strengthen)."""
        def body_local(lit: Literal) -> bool:
            return span[0] <= lit[0] < span[1]

        out = ConditionMap([(c, v) for c, v in row.entries
                            if not c.unsat and not any(body_local(l) for l in c.lits)])
        for cond, value in row.entries:
            if cond.unsat or not any(body_local(l) for l in cond.lits):
                continue
            outer = Condition(frozenset(l for l in cond.lits if not body_local(l)))
            out.entries = [(c, v.join(value) if c == outer else v)
                           for c, v in out.entries]
        return out

    def _map_value(self, m: ConditionMap, cond: Condition, sort: Sort) -> AbstractValue:
        value = self.family.top(sort)
        for c, x in m.entries:
            if cond.implies(c):
                value = value.meet(x)
        return value

    def _map_keys(self, *maps: ConditionMap) -> list[Condition]:
        keys: list[Condition] = [TRUE_COND]
        for m in maps:
            for c, _ in m.entries:
                if c not in keys:
                    keys.append(c)
        return keys

    def _map_join(self, a: ConditionMap, b: ConditionMap, sort: Sort) -> ConditionMap:
        out = ConditionMap()
        for c in self._map_keys(a, b):
            out.add(c, self._map_value(a, c, sort).join(self._map_value(b, c, sort)))
        return out

    def _map_widen(self, a: ConditionMap, b: ConditionMap, sort: Sort) -> ConditionMap:
        out = ConditionMap()
        for c in self._map_keys(a, b):
            out.add(c, self.family.widen(self._map_value(a, c, sort),
                                         self._map_value(b, c, sort)))
        return out

    def _map_leq(self, a: ConditionMap, b: ConditionMap, sort: Sort) -> bool:
        return all(self._map_value(a, c, sort).leq(self._map_value(b, c, sort))
                   for c in self._map_keys(a, b))

    # -- concretization ----------------------------------------------------------

    def gamma2_ok(self, out_env: Env) -> bool:
        for var_id, row in self.store.items():
            slots = out_env.slots
            value = slots[var_id] if var_id < len(slots) else None
            if value is None:
                continue
            for cond, abs_val in row.entries:
                if self._cond_holds(out_env, cond) and not abs_val.contains(value):
                    return False
        return True

    def _cond_holds(self, out_env: Env, cond: Condition) -> bool:
        if cond.unsat:
            return False
        for (var_id, pol) in cond.lits:
            got = out_env.slots[var_id] if var_id < len(out_env.slots) else None
            if got != BoolV(pol):
                return False
        return True

    def witnesses(self, budget: EnumBudget) -> list[Env]:
        """Runs of the constraints accepted by the store (γ2)."""
        key = (budget.int_lo, budget.int_hi, budget.max_mu_iters)
        if key not in self._oracle_cache:
            runs = collect(self.constraints, Env.empty(self.out_var_count()),
                           budget)
            self._oracle_cache[key] = frozenset(
                e for e in runs if self.gamma2_ok(e))
        return list(self._oracle_cache[key])

    def gamma_contains(self, env: Env, budget: EnumBudget) -> bool:
        for out_env in self.witnesses(budget):
            if self._match(env, out_env):
                return True
        return False

    def _match(self, env: Env, out_env: Env) -> bool:
        for var_id, value in env.items():
            img = self.val.get(var_id)
            if img is None:
                continue
            cond = self.cond[var_id]
            holds = self._cond_holds(out_env, cond)
            got = out_env.slots[img.id]
            if isinstance(value, BottomV):
                if holds and not isinstance(got, BottomV):
                    return False
            else:
                if not holds or got != value:
                    return False
        return True

    # -- reporting -----------------------------------------------------------------

    def lit_name(self, lit: Literal) -> str:
        name = self._name_of(lit[0])
        return name if lit[1] else f"¬{name}"

    def cond_str(self, cond: Condition) -> str:
        if cond.unsat:
            return "false"
        if cond.is_true:
            return "true"
        return " ∧ ".join(self.lit_name(l) for l in sorted(cond.lits))

    def row_str(self, var_id: int) -> str:
        row = self.store.get(var_id)
        if row is None or not row.entries:
            return ""
        return ", ".join(f"{self.cond_str(c)} ⊩ {v}" for c, v in row.entries)

    def dump_store(self) -> str:
        lines = []
        for var_id in sorted(self.store):
            text = self.row_str(var_id)
            if text:
                lines.append(f"{self._name_of(var_id)} : {text}")
        return "\n".join(lines)


def _lit_value(payload, sort: Sort) -> Value:
    from .semantics import IntV
    if isinstance(sort, BoolSort):
        return BoolV(payload)
    if isinstance(sort, BitVecSort):
        return BitVecV(sort.width, payload)
    return IntV(payload)


# ---------------------------------------------------------------------------
# Domain adapter
# ---------------------------------------------------------------------------

class ConstraintDomain(AbstractDomain):
    def __init__(self, cfg: PropConfig | None = None,
                 budget: EnumBudget | None = None,
                 family: ValueFamily | None = None) -> None:
        self.cfg = cfg or PropConfig()
        self.budget = budget or EnumBudget()
        self.family = family or IntervalFamily()
        self.name = "constraint"

    def initial(self) -> ConstraintAnalysis:
        return ConstraintAnalysis(self.family, self.cfg)

    def eval_abs(self, ctx: Context, state: ConstraintAnalysis) -> ConstraintAnalysis:
        return state.run(ctx)

    def gamma_contains(self, state: ConstraintAnalysis, env: Env) -> bool:
        return state.gamma_contains(env, self.budget)
