"""Abstract-domain contract and the generic soundness harness.

A domain is a quadruple: abstract states, an evaluation function over
contexts, an initial state, and a decidable concretization membership test.
No lattice structure is required of the states themselves.

Soundness (tested, not assumed): every environment the oracle can produce
from a state's concretization is accepted by the evaluated state's
concretization.  The harness checks the closed-term instance of that rule
against `collect`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any

from .core import (
    BOOL, INT, Builder, Context, Op, Sort, Term, TupleSort, Var, bv, var_count,
)
from .semantics import BudgetExceededError, EnumBudget, Env, collect


class AbstractDomain:
    """Interface the soundness harness drives."""

    name = "domain"

    def initial(self) -> Any:
        raise NotImplementedError

    def eval_abs(self, ctx: Context, state: Any) -> Any:
        raise NotImplementedError

    def gamma_contains(self, state: Any, env: Env) -> bool:
        raise NotImplementedError

    def rejection_witness(self, state: Any, env: Env) -> Var | None:
        """Optionally name the variable that made gamma_contains fail."""
        return None


@dataclass(frozen=True)
class Verdict:
    kind: str                     # "ok" | "counterexample" | "inconclusive"
    env: Env | None = None
    var: Var | None = None
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.kind == "ok"


OK = Verdict("ok")


def soundness_check(dom: AbstractDomain, term: Term,
                    budget: EnumBudget | None = None) -> Verdict:
    """OK iff every oracle environment of `term` is in γ of the final state."""
    budget = budget or EnumBudget()
    try:
        oracle = collect(term.ctx, Env.empty(var_count(term)), budget)
    except BudgetExceededError as e:
        return Verdict("inconclusive", reason=str(e))
    try:
        state = dom.eval_abs(term.ctx, dom.initial())
    except BudgetExceededError as e:
        return Verdict("inconclusive", reason=f"abstract evaluation: {e}")
    for env in oracle:
        if not dom.gamma_contains(state, env):
            return Verdict("counterexample", env=env,
                           var=dom.rejection_witness(state, env))
    return OK


# ---------------------------------------------------------------------------
# Random term generation
# ---------------------------------------------------------------------------

DEFAULT_OP_WEIGHTS = {
    "lit": 2.0,
    "unknown": 1.0,
    "arith": 5.0,
    "cmp": 2.0,
    "bool": 1.5,
    "nondet": 2.0,
    "assume": 1.5,
    "tuple": 1.0,
    "bitvec": 0.7,
    "mu": 0.8,
}


@dataclass(frozen=True)
class TermGenConfig:
    max_defs: int = 12
    max_tuple_arity: int = 3
    op_weights: tuple[tuple[str, float], ...] = tuple(sorted(DEFAULT_OP_WEIGHTS.items()))
    seed: int = 0
    max_unknown_ints: int = 2
    max_nondets: int = 4
    max_mus: int = 1
    mu_body_defs: int = 4

    def weights(self) -> dict[str, float]:
        return dict(self.op_weights)


def gen_term(cfg: TermGenConfig) -> Term:
    """Deterministic (per seed) well-formed closed term."""
    rng = random.Random(cfg.seed)
    g = _Gen(rng, cfg)
    b = Builder()
    n_defs = rng.randint(max(2, cfg.max_defs // 2), cfg.max_defs)
    scope = g.fill(b, n_defs, toplevel=True)
    result = rng.choice(scope)
    return b.term(result)


class _Gen:
    def __init__(self, rng: random.Random, cfg: TermGenConfig) -> None:
        self.rng = rng
        self.cfg = cfg
        self.weights = cfg.weights()
        self.unknown_ints = 0
        self.nondets = 0
        self.mus = 0
        self.counter = 0
        self.scopes: list[list[Var]] = []

    def _name(self, stem: str) -> str:
        self.counter += 1
        return f"{stem}{self.counter}"

    def _vars_of(self, scope: list[Var], pred) -> list[Var]:
        return [v for v in scope if pred(v.sort)]

    def fill(self, b: Builder, n_defs: int, toplevel: bool,
             scope: list[Var] | None = None) -> list[Var]:
        """Emit ~n_defs definitions into `b`; returns the local scope list."""
        rng = self.rng
        scope = list(scope or [])
        self.scopes.append(scope)
        emitted = 0
        # make sure something is in scope to build on
        if not any(v.sort == INT for v in scope):
            scope.append(b.let_int(self._name("k"), rng.randint(-4, 4)))
            emitted += 1
        while emitted < n_defs:
            kind = self._pick_kind(toplevel)
            v = self._emit(b, scope, kind)
            if v is not None:
                scope.append(v)
                emitted += 1
        return self.scopes.pop()

    def _pick_kind(self, toplevel: bool) -> str:
        w = dict(self.weights)
        if self.unknown_ints >= self.cfg.max_unknown_ints:
            w["unknown"] = 0.0
        if self.nondets >= self.cfg.max_nondets:
            w["nondet"] = 0.0
        if self.mus >= self.cfg.max_mus or not toplevel:
            w["mu"] = 0.0
        kinds = [k for k, x in w.items() if x > 0]
        weights = [w[k] for k in kinds]
        return self.rng.choices(kinds, weights)[0]

    def _emit(self, b: Builder, scope: list[Var], kind: str) -> Var | None:
        rng = self.rng
        ints = self._vars_of(scope, lambda s: s == INT)
        bools = self._vars_of(scope, lambda s: s == BOOL)
        if kind == "lit":
            if rng.random() < 0.3:
                return b.let_bool(self._name("b"), rng.random() < 0.5)
            return b.let_int(self._name("k"), rng.randint(-4, 4))
        if kind == "unknown":
            self.unknown_ints += 1
            return b.let_unknown(self._name("u"), INT)
        if kind == "arith":
            if not ints:
                return None
            op = rng.choice(["add", "sub", "mul", "div", "neg"])
            if op == "neg":
                return b.let_op(self._name("t"), INT, op, [rng.choice(ints)])
            return b.let_op(self._name("t"), INT, op,
                            [rng.choice(ints), rng.choice(ints)])
        if kind == "cmp":
            if not ints:
                return None
            op = rng.choice(["lt", "le", "eq"])
            return b.let_op(self._name("c"), BOOL, op,
                            [rng.choice(ints), rng.choice(ints)])
        if kind == "bool":
            if not bools:
                return None
            op = rng.choice(["and", "or", "not"])
            if op == "not":
                return b.let_op(self._name("c"), BOOL, op, [rng.choice(bools)])
            return b.let_op(self._name("c"), BOOL, op,
                            [rng.choice(bools), rng.choice(bools)])
        if kind == "nondet":
            pools: dict[Sort, list[Var]] = {}
            for v in scope:
                pools.setdefault(v.sort, []).append(v)
            sort = rng.choice(list(pools))
            self.nondets += 1
            return b.let_nondet(self._name("n"), rng.choice(pools[sort]),
                                rng.choice(pools[sort]))
        if kind == "assume":
            if not bools:
                return None
            val = rng.choice(scope)
            return b.let_assume(self._name("a"), rng.choice(bools), val)
        if kind == "tuple":
            tuples = self._vars_of(scope, lambda s: isinstance(s, TupleSort))
            if tuples and rng.random() < 0.5:
                t = rng.choice(tuples)
                i = rng.randrange(len(t.sort.elements))
                return b.let_op(self._name("g"), t.sort.elements[i],
                                Op("get", (i,)), [t])
            arity = rng.randint(1, self.cfg.max_tuple_arity)
            items = [rng.choice(scope) for _ in range(arity)]
            sort = TupleSort(tuple(v.sort for v in items))
            return b.let_op(self._name("p"), sort, "mk", items)
        if kind == "bitvec":
            bvs = self._vars_of(scope, lambda s: getattr(s, "width", 0) == 4)
            if not bvs:
                return b.let_lit(self._name("w"), bv(4), rng.randrange(16))
            choice = rng.choice(["extract", "concat", "eq", "lit"])
            if choice == "extract":
                x = rng.choice(bvs)
                lo = rng.randrange(4)
                hi = rng.randrange(lo, 4)
                return b.let_op(self._name("w"), bv(hi - lo + 1),
                                Op("extract", (hi, lo)), [x])
            if choice == "concat":
                return b.let_op(self._name("w"), bv(8), "concat",
                                [rng.choice(bvs), rng.choice(bvs)])
            if choice == "eq":
                return b.let_op(self._name("c"), BOOL, "eq",
                                [rng.choice(bvs), rng.choice(bvs)])
            return b.let_lit(self._name("w"), bv(4), rng.randrange(16))
        if kind == "mu":
            inits = [v for v in scope if v.sort == INT]
            if not inits:
                return None
            self.mus += 1
            init = rng.choice(inits)
            body_defs = rng.randint(1, self.cfg.mu_body_defs)

            def build(child: Builder, loopvar: Var) -> Var:
                inner = self.fill(child, body_defs, toplevel=False,
                                  scope=scope + [loopvar])
                candidates = [v for v in inner + [loopvar] if v.sort == INT]
                return self.rng.choice(candidates)

            return b.let_mu(self._name("m"), init, build)
        return None
