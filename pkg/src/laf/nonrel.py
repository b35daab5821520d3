"""Non-relational abstract domain: one abstract value per variable.

The environment is a plain array indexed by variable id, so lookup and
update are O(1).  `nondet` joins exactly the two named values (a join
targeted at what changed, never a whole-store join), and μ runs a local
fixpoint with widening.  assume is evaluated as a copy of the value side;
dead paths are covered because ⊥ concretizes into every abstract value.

Scalar lattice operations are counted so the targeted-join cost (k scalar
joins for a k-tuple, independent of how many variables exist) is assertable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    AssumeDef, Context, Def, MuDef, NondetDef, OpDef, Term, UnknownDef, Var,
    iter_vars,
)
from .domain import AbstractDomain
from .semantics import Env
from .values import AbstractValue, TupleAbs, ValueFamily


@dataclass
class NonRelEnv:
    """Array from var id to abstract value plus the scalar-op counter."""

    slots: list[AbstractValue | None]
    op_counter: int = 0

    @staticmethod
    def empty(size: int) -> "NonRelEnv":
        return NonRelEnv([None] * size)

    def get(self, v: Var) -> AbstractValue:
        val = self.slots[v.id]
        assert val is not None, f"{v.name} not evaluated"
        return val

    def set(self, v: Var, value: AbstractValue) -> None:
        self.slots[v.id] = value

    def copy(self) -> "NonRelEnv":
        c = NonRelEnv(list(self.slots), self.op_counter)
        return c


class _Counted:
    """Structural lattice ops that count one unit per scalar component."""

    def __init__(self, family: ValueFamily, env: NonRelEnv) -> None:
        self.family = family
        self.env = env

    def join(self, a: AbstractValue, b: AbstractValue) -> AbstractValue:
        if isinstance(a, TupleAbs) and isinstance(b, TupleAbs):
            return TupleAbs(tuple(self.join(x, y) for x, y in zip(a.items, b.items)))
        self.env.op_counter += 1
        return a.join(b)

    def widen(self, a: AbstractValue, b: AbstractValue) -> AbstractValue:
        if isinstance(a, TupleAbs) and isinstance(b, TupleAbs):
            return TupleAbs(tuple(self.widen(x, y) for x, y in zip(a.items, b.items)))
        self.env.op_counter += 1
        return self.family.widen(a, b)

    def leq(self, a: AbstractValue, b: AbstractValue) -> bool:
        if isinstance(a, TupleAbs) and isinstance(b, TupleAbs):
            return all(self.leq(x, y) for x, y in zip(a.items, b.items))
        self.env.op_counter += 1
        return a.leq(b)


def eval_def_nonrel(d: Def, env: NonRelEnv, family: ValueFamily,
                    widen_delay: int = 0) -> None:
    """Evaluate one definition in place."""
    ops = _Counted(family, env)
    if isinstance(d, OpDef):
        args = [env.get(a) for a in d.args]
        if d.op.name not in ("mk", "get"):
            env.op_counter += 1  # one scalar transfer
        env.set(d.var, family.transfer(d.op, d.var.sort, args))
    elif isinstance(d, NondetDef):
        env.set(d.var, ops.join(env.get(d.a), env.get(d.b)))
    elif isinstance(d, UnknownDef):
        env.set(d.var, family.top(d.var.sort))
    elif isinstance(d, AssumeDef):
        env.set(d.var, env.get(d.value))  # condition discarded
    elif isinstance(d, MuDef):
        init = env.get(d.init)
        current = init
        rounds = 0
        while True:
            env.set(d.loopvar, current)
            for bd in d.body.defs:
                eval_def_nonrel(bd, env, family, widen_delay)
            candidate = ops.join(env.get(d.exit), init)
            if ops.leq(candidate, current):
                break
            if rounds < widen_delay:
                current = ops.join(current, candidate)
            else:
                current = ops.widen(current, candidate)
            rounds += 1
        env.set(d.var, current)
    else:
        raise TypeError(f"unknown def {d!r}")


def eval_nonrel(ctx: Context, env: NonRelEnv, family: ValueFamily,
                widen_delay: int = 0) -> NonRelEnv:
    for d in ctx.defs:
        eval_def_nonrel(d, env, family, widen_delay)
    return env


def count_ops_for(d: Def, env: NonRelEnv, family: ValueFamily) -> int:
    """Scalar lattice operations attributable to evaluating `d`."""
    scratch = env.copy()
    before = scratch.op_counter
    eval_def_nonrel(d, scratch, family)
    return scratch.op_counter - before


class NonRelDomain(AbstractDomain):
    """Adapter implementing the domain contract over a value family."""

    def __init__(self, family: ValueFamily, size: int, widen_delay: int = 0,
                 vars_by_id: dict[int, Var] | None = None) -> None:
        self.family = family
        self.size = size
        self.widen_delay = widen_delay
        self.name = family.name
        self.vars_by_id = vars_by_id or {}

    @classmethod
    def for_term(cls, family: ValueFamily, term: Term,
                 widen_delay: int = 0) -> "NonRelDomain":
        table = {v.id: v for v in iter_vars(term)}
        n = max(table, default=-1) + 1
        return cls(family, n, widen_delay, table)

    def initial(self) -> NonRelEnv:
        return NonRelEnv.empty(self.size)

    def eval_abs(self, ctx: Context, state: NonRelEnv) -> NonRelEnv:
        return eval_nonrel(ctx, state.copy(), self.family, self.widen_delay)

    def gamma_contains(self, state: NonRelEnv, env: Env) -> bool:
        return self.rejection_witness_id(state, env) is None

    def rejection_witness(self, state: NonRelEnv, env: Env) -> Var | None:
        var_id = self.rejection_witness_id(state, env)
        return self.vars_by_id.get(var_id) if var_id is not None else None

    def rejection_witness_id(self, state: NonRelEnv, env: Env) -> int | None:
        for var_id, value in env.items():
            abs_val = state.slots[var_id]
            if abs_val is None or not abs_val.contains(value):
                return var_id
        return None
