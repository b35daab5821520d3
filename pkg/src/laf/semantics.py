"""Concrete collecting semantics and the equivalent small-step machine.

`collect` computes the set of environments a context can produce under all
nondeterministic choices; it is the ground-truth oracle every abstract domain
is tested against.  Infinite sorts are enumerated over a configurable window,
and μ fixpoints run to stability or fail hard: a budget error is raised (with
the partial result attached) rather than silently truncating, so the oracle
is never quietly unsound.

The dead value ⊥ is a member of every sort and propagates through all theory
operations (⊥ + 3 = ⊥); assume(false, v) introduces it, and an assume whose
condition is itself dead also yields ⊥.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

from .core import (
    AssumeDef, BitVecSort, BoolSort, Context, Def, IntSort, MuDef, NondetDef,
    Op, OpDef, Sort, Term, TupleSort, UnknownDef, Var, var_count,
)


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Value:
    pass


@dataclass(frozen=True)
class BoolV(Value):
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class IntV(Value):
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class BitVecV(Value):
    width: int
    bits: int

    def __post_init__(self) -> None:
        assert 0 <= self.bits < (1 << self.width)

    def __str__(self) -> str:
        return "#b" + format(self.bits, f"0{self.width}b")


@dataclass(frozen=True)
class TupleV(Value):
    items: tuple[Value, ...]

    def __str__(self) -> str:
        return "<" + ", ".join(str(v) for v in self.items) + ">"


@dataclass(frozen=True)
class BottomV(Value):
    def __str__(self) -> str:
        return "⊥"


BOTTOM = BottomV()

TRUE = BoolV(True)
FALSE = BoolV(False)


def value_sort(v: Value) -> Sort | None:
    """Sort of a value; None for ⊥ (a member of every sort)."""
    if isinstance(v, BoolV):
        return BoolSort()
    if isinstance(v, IntV):
        return IntSort()
    if isinstance(v, BitVecV):
        return BitVecSort(v.width)
    if isinstance(v, TupleV):
        sorts = [value_sort(x) for x in v.items]
        if any(s is None for s in sorts):
            return None
        return TupleSort(tuple(sorts))  # type: ignore[arg-type]
    return None


def trunc_div(a: int, b: int) -> int:
    """Integer division truncating toward zero (b != 0)."""
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def apply_op(op: Op, sort: Sort, args: tuple[Value, ...]) -> Value:
    """Evaluate a theory operation; strict in ⊥, division by zero is ⊥."""
    if op.name == "lit":
        payload = op.params[0]
        if isinstance(sort, BoolSort):
            return BoolV(payload)
        if isinstance(sort, IntSort):
            return IntV(payload)
        if isinstance(sort, BitVecSort):
            return BitVecV(sort.width, payload)
        raise TypeError(f"bad literal sort {sort}")
    if any(isinstance(a, BottomV) for a in args):
        return BOTTOM
    n = op.name
    if n == "add":
        return IntV(args[0].value + args[1].value)
    if n == "sub":
        return IntV(args[0].value - args[1].value)
    if n == "mul":
        return IntV(args[0].value * args[1].value)
    if n == "div":
        if args[1].value == 0:
            return BOTTOM
        return IntV(trunc_div(args[0].value, args[1].value))
    if n == "neg":
        return IntV(-args[0].value)
    if n == "lt":
        return BoolV(args[0].value < args[1].value)
    if n == "le":
        return BoolV(args[0].value <= args[1].value)
    if n == "eq":
        return BoolV(args[0] == args[1])
    if n == "and":
        return BoolV(args[0].value and args[1].value)
    if n == "or":
        return BoolV(args[0].value or args[1].value)
    if n == "not":
        return BoolV(not args[0].value)
    if n == "mk":
        return TupleV(args)
    if n == "get":
        return args[0].items[op.params[0]]
    if n == "extract":
        hi, lo = op.params
        mask = (1 << (hi - lo + 1)) - 1
        return BitVecV(hi - lo + 1, (args[0].bits >> lo) & mask)
    if n == "concat":
        a, b = args
        return BitVecV(a.width + b.width, (a.bits << b.width) | b.bits)
    raise TypeError(f"unknown op {n}")


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Env:
    """Array from variable id to value; None marks not-yet-evaluated."""

    slots: tuple[Value | None, ...]

    @staticmethod
    def empty(size: int) -> "Env":
        return Env((None,) * size)

    def get(self, v: Var) -> Value:
        val = self.slots[v.id]
        if val is None:
            raise KeyError(f"{v.name} not evaluated")
        return val

    def defined(self, v: Var) -> bool:
        return self.slots[v.id] is not None

    def bind(self, v: Var, value: Value) -> "Env":
        assert self.slots[v.id] is None, f"{v.name} bound twice"
        s = list(self.slots)
        s[v.id] = value
        return Env(tuple(s))

    def items(self) -> list[tuple[int, Value]]:
        return [(i, v) for i, v in enumerate(self.slots) if v is not None]


@dataclass(frozen=True)
class EnumBudget:
    """Bounds making the collecting semantics computable at desk scale."""

    int_lo: int = -8
    int_hi: int = 8
    max_mu_iters: int = 64
    max_env_count: int = 100_000

    def __post_init__(self) -> None:
        assert self.int_lo <= self.int_hi
        assert self.max_mu_iters > 0 and self.max_env_count > 0


class BudgetExceededError(Exception):
    """μ failed to converge or the environment set outgrew the budget.

    `partial` carries whatever had been computed when the budget tripped;
    it is reported, never silently substituted for the true result.
    """

    def __init__(self, kind: str, detail: str, partial=None) -> None:
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.detail = detail
        self.partial = partial


def enumerate_sort(sort: Sort, budget: EnumBudget):
    """All values substituted for unknown_S: bools exactly, ints over the
    window, bitvectors exactly up to width 8 (windowed beyond), tuples as the
    component product."""
    if isinstance(sort, BoolSort):
        yield TRUE
        yield FALSE
    elif isinstance(sort, IntSort):
        for z in range(budget.int_lo, budget.int_hi + 1):
            yield IntV(z)
    elif isinstance(sort, BitVecSort):
        total = 1 << sort.width
        if sort.width <= 8:
            count = total
        else:
            count = min(total, budget.int_hi - budget.int_lo + 1)
        for bits in range(count):
            yield BitVecV(sort.width, bits)
    elif isinstance(sort, TupleSort):
        pools = [list(enumerate_sort(s, budget)) for s in sort.elements]
        for combo in itertools.product(*pools):
            yield TupleV(tuple(combo))
    else:
        raise TypeError(f"cannot enumerate {sort}")


# ---------------------------------------------------------------------------
# Collecting semantics
# ---------------------------------------------------------------------------

def _def_successors(d: Def, env: Env, budget: EnumBudget) -> list[Env]:
    if isinstance(d, OpDef):
        args = tuple(env.get(a) for a in d.args)
        return [env.bind(d.var, apply_op(d.op, d.var.sort, args))]
    if isinstance(d, NondetDef):
        va, vb = env.get(d.a), env.get(d.b)
        first = env.bind(d.var, va)
        if va == vb:
            return [first]
        return [first, env.bind(d.var, vb)]
    if isinstance(d, UnknownDef):
        return [env.bind(d.var, v) for v in enumerate_sort(d.var.sort, budget)]
    if isinstance(d, AssumeDef):
        cond = env.get(d.cond)
        if cond == TRUE:
            return [env.bind(d.var, env.get(d.value))]
        # false or dead condition both kill the value
        return [env.bind(d.var, BOTTOM)]
    if isinstance(d, MuDef):
        values = _mu_values(d, env, budget)
        return [env.bind(d.var, v) for v in values]
    raise TypeError(f"unknown def {d!r}")


def _mu_values(d: MuDef, env: Env, budget: EnumBudget) -> frozenset[Value]:
    """Least value set containing the init and closed under one body pass."""
    values: set[Value] = {env.get(d.init)}
    for _ in range(budget.max_mu_iters):
        exits: set[Value] = set()
        for v in values:
            for body_env in collect(d.body, env.bind(d.loopvar, v), budget):
                exits.add(body_env.get(d.exit))
        nxt = values | exits
        if nxt == values:
            return frozenset(values)
        values = nxt
    raise BudgetExceededError(
        "mu-not-converged",
        f"mu {d.var.name} still growing after {budget.max_mu_iters} iterations",
        partial=frozenset(values))


def collect(ctx: Context, env: Env, budget: EnumBudget) -> frozenset[Env]:
    """All environments `ctx` can produce starting from `env`."""
    envs: set[Env] = {env}
    for d in ctx.defs:
        nxt: set[Env] = set()
        for g in envs:
            nxt.update(_def_successors(d, g, budget))
            if len(nxt) > budget.max_env_count:
                raise BudgetExceededError(
                    "env-count",
                    f"more than {budget.max_env_count} environments at {d.var.name}",
                    partial=frozenset(nxt))
        envs = nxt
    return frozenset(envs)


def collect_term(term: Term, budget: EnumBudget | None = None) -> frozenset[Env]:
    budget = budget or EnumBudget()
    return collect(term.ctx, Env.empty(var_count(term)), budget)


def result_values(term: Term, budget: EnumBudget | None = None) -> frozenset[Value]:
    return frozenset(g.get(term.result) for g in collect_term(term, budget))


# ---------------------------------------------------------------------------
# Small-step machine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Frame:
    """One loop-nesting level: values computed so far plus what remains."""

    env: Env
    remaining: tuple[Def, ...]
    exit: Var | None  # None for the top-level frame


@dataclass(frozen=True)
class MachineState:
    stack: tuple[Frame, ...]

    @property
    def top(self) -> Frame:
        return self.stack[-1]

    def replace_top(self, frame: Frame) -> "MachineState":
        return MachineState(self.stack[:-1] + (frame,))

    def push(self, frame: Frame) -> "MachineState":
        return MachineState(self.stack + (frame,))

    def pop(self) -> "MachineState":
        return MachineState(self.stack[:-1])

    def is_terminal(self) -> bool:
        return len(self.stack) == 1 and not self.top.remaining


def initial_state(term: Term) -> MachineState:
    return MachineState((Frame(Env.empty(var_count(term)), term.ctx.defs, None),))


def step(state: MachineState, budget: EnumBudget | None = None) -> set[MachineState]:
    """Successor states; empty for terminal states."""
    budget = budget or EnumBudget()
    top = state.top

    if not top.remaining:
        if top.exit is None:
            return set()  # terminal
        # Body frame finished: parent's head definition is the μ.
        parent = state.stack[-2]
        mu = parent.remaining[0]
        assert isinstance(mu, MuDef)
        exit_val = top.env.get(top.exit)
        out = set()
        # loop exit
        popped = state.pop()
        out.add(popped.replace_top(
            Frame(parent.env.bind(mu.var, exit_val), parent.remaining[1:], parent.exit)))
        # loop again
        out.add(state.replace_top(
            Frame(parent.env.bind(mu.loopvar, exit_val), mu.body.defs, mu.exit)))
        return out

    d = top.remaining[0]
    rest = top.remaining[1:]
    if isinstance(d, MuDef):
        out = set()
        # do not enter loop
        out.add(state.replace_top(
            Frame(top.env.bind(d.var, top.env.get(d.init)), rest, top.exit)))
        # enter loop
        out.add(state.push(
            Frame(top.env.bind(d.loopvar, top.env.get(d.init)), d.body.defs, d.exit)))
        return out
    return {state.replace_top(Frame(e, rest, top.exit))
            for e in _def_successors(d, top.env, budget)}


def reachable_results(term: Term, budget: EnumBudget | None = None) -> frozenset[Env]:
    """Environments of terminal states reachable from ⟨ε, term⟩.

    Must equal `collect` under the same enumeration bounds whenever neither
    trips its budget; exploration is memoized on states and capped at
    max_env_count distinct states.
    """
    budget = budget or EnumBudget()
    start = initial_state(term)
    seen = {start}
    queue = deque([start])
    results: set[Env] = set()
    while queue:
        st = queue.popleft()
        if st.is_terminal():
            results.add(st.top.env)
            continue
        for nxt in step(st, budget):
            if nxt not in seen:
                seen.add(nxt)
                if len(seen) > budget.max_env_count:
                    raise BudgetExceededError(
                        "state-count",
                        f"more than {budget.max_env_count} machine states",
                        partial=frozenset(results))
                queue.append(nxt)
    return frozenset(results)
