"""Relational lift: evaluating terms with a classic relational lattice.

Each variable is mapped to an element describing affine equalities (unit
coefficients, integer offsets) between it and everything it transitively
depends on.  Paths are variables or tuple components one level deep;
booleans and bitvectors are 0/1- and bits-encoded.  Elements are canonical
union-find-with-offset partitions, so structurally equal relation sets
compare equal; meet is conjunction with closure (contradictions collapse to
⊥), join keeps the atoms entailed by both sides, and the ordering is
entailment.  Joins only coarsen a finite partition, so widening can simply
be the join.

The concretization is per-binding: every binding of the environment must be
individually consistent with every stored element (components of one tuple
binding are checked jointly; distinct variables are not)."""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    AssumeDef, BitVecSort, BoolSort, Context, Def, IntSort, MuDef, NondetDef,
    OpDef, Sort, TupleSort, UnknownDef, Var, iter_defs,
)
from .domain import AbstractDomain
from .semantics import BitVecV, BoolV, BottomV, Env, IntV, TupleV, Value

Path = tuple[int, ...]          # (var id,) or (var id, component)
ZERO: Path = (-1,)              # distinguished constant anchor: ZERO = 0

Atom = tuple[Path, Path, int]   # (p, root, k): p = root + k


class _UF:
    """Union-find with offsets: parent[p] = (q, k) meaning p = q + k."""

    def __init__(self) -> None:
        self.parent: dict[Path, tuple[Path, int]] = {}
        self.bottom = False

    def add(self, p: Path) -> None:
        if p not in self.parent:
            self.parent[p] = (p, 0)

    def find(self, p: Path) -> tuple[Path, int]:
        self.add(p)
        root, off = self.parent[p]
        if root == p:
            return p, 0
        r, k = self.find(root)
        self.parent[p] = (r, off + k)
        return r, off + k

    def union(self, p: Path, q: Path, k: int) -> None:
        """Assert p = q + k."""
        rp, op_ = self.find(p)
        rq, oq = self.find(q)
        if rp == rq:
            if op_ != oq + k:
                self.bottom = True
            return
        # attach larger root under smaller so ZERO stays a root
        if rq < rp:
            self.parent[rp] = (rq, oq + k - op_)
        else:
            self.parent[rq] = (rp, op_ - k - oq)

    def atoms(self) -> frozenset[Atom]:
        out = set()
        for p in self.parent:
            r, k = self.find(p)
            if p != r:
                out.add((p, r, k))
        return frozenset(out)


@dataclass(frozen=True)
class EqRel:
    """Canonical conjunction of affine-equality atoms; bottom is the
    contradictory element, the empty conjunction is top."""

    atoms: frozenset[Atom] = frozenset()
    bottom: bool = False

    @staticmethod
    def top() -> "EqRel":
        return EqRel()

    @staticmethod
    def bot() -> "EqRel":
        return EqRel(frozenset(), True)

    def _uf(self) -> _UF:
        uf = _UF()
        uf.add(ZERO)
        for (p, r, k) in self.atoms:
            uf.union(p, r, k)
        return uf

    @staticmethod
    def _canon(uf: _UF) -> "EqRel":
        if uf.bottom:
            return EqRel.bot()
        return EqRel(uf.atoms())

    def paths(self) -> set[Path]:
        out = {ZERO}
        for (p, r, _k) in self.atoms:
            out.add(p)
            out.add(r)
        return out

    # -- lattice -------------------------------------------------------------

    def meet(self, other: "EqRel") -> "EqRel":
        if self.bottom or other.bottom:
            return EqRel.bot()
        uf = self._uf()
        for (p, r, k) in other.atoms:
            uf.union(p, r, k)
        return self._canon(uf)

    def join(self, other: "EqRel") -> "EqRel":
        """Atoms entailed by both sides."""
        if self.bottom:
            return other
        if other.bottom:
            return self
        ua, ub = self._uf(), other._uf()
        groups: dict[tuple[Path, Path, int], list[tuple[Path, int]]] = {}
        for p in sorted(self.paths() & other.paths()):
            ra, ka = ua.find(p)
            rb, kb = ub.find(p)
            groups.setdefault((ra, rb, ka - kb), []).append((p, ka))
        uf = _UF()
        uf.add(ZERO)
        for members in groups.values():
            members.sort()
            anchor, k0 = members[0]
            for (p, k) in members[1:]:
                uf.union(p, anchor, k - k0)
        return self._canon(uf)

    def widen(self, other: "EqRel") -> "EqRel":
        return self.join(other)

    def leq(self, other: "EqRel") -> bool:
        """Entailment: self proves every atom of other."""
        if self.bottom:
            return True
        if other.bottom:
            return False
        uf = self._uf()
        for (p, r, k) in other.atoms:
            rp, kp = uf.find(p)
            rr, kr = uf.find(r)
            if rp != rr or kp != kr + k:
                return False
        return True

    # -- assertions and queries ------------------------------------------------

    def with_atom(self, p: Path, q: Path, k: int = 0) -> "EqRel":
        if self.bottom:
            return self
        uf = self._uf()
        uf.union(p, q, k)
        return self._canon(uf)

    def with_const(self, p: Path, value: int) -> "EqRel":
        return self.with_atom(p, ZERO, value)

    def forget(self, paths: set[Path]) -> "EqRel":
        """Drop all atoms about `paths`, keeping relations among the rest."""
        if self.bottom or not paths:
            return self
        uf = self._uf()
        keep = [p for p in self.paths() if p not in paths and p != ZERO]
        out = _UF()
        out.add(ZERO)
        anchors: dict[Path, tuple[Path, int]] = {}
        for p in sorted(keep):
            r, k = uf.find(p)
            if r == ZERO:
                out.union(p, ZERO, k)
                continue
            if r in paths:
                # re-anchor the class on its first surviving member
                if r not in anchors:
                    anchors[r] = (p, k)
                    continue
                q, kq = anchors[r]
                out.union(p, q, k - kq)
            else:
                out.union(p, r, k)
        return self._canon(out)

    def const_of(self, p: Path) -> int | None:
        if self.bottom:
            return None
        uf = self._uf()
        r, k = uf.find(p)
        if r == ZERO:
            return k
        rz, kz = uf.find(ZERO)
        return k - kz if r == rz else None

    def entails_eq(self, p: Path, q: Path) -> bool:
        if self.bottom:
            return True
        uf = self._uf()
        rp, kp = uf.find(p)
        rq, kq = uf.find(q)
        return rp == rq and kp == kq

    def difference(self, p: Path, q: Path) -> int | None:
        """k with p = q + k entailed, else None."""
        if self.bottom:
            return None
        uf = self._uf()
        rp, kp = uf.find(p)
        rq, kq = uf.find(q)
        return kp - kq if rp == rq else None

    def __str__(self) -> str:
        if self.bottom:
            return "bot"
        if not self.atoms:
            return "top"
        parts = []
        for (p, r, k) in sorted(self.atoms):
            rhs = str(k) if r == ZERO else (f"{_path_str(r)}+{k}" if k else _path_str(r))
            parts.append(f"{_path_str(p)}={rhs}")
        return " ∧ ".join(parts)


def _path_str(p: Path) -> str:
    if p == ZERO:
        return "0"
    return f"v{p[0]}" + (f".{p[1]}" if len(p) > 1 else "")


# ---------------------------------------------------------------------------
# Value encoding
# ---------------------------------------------------------------------------

def encode_scalar(v: Value) -> int | None:
    if isinstance(v, IntV):
        return v.value
    if isinstance(v, BoolV):
        return 1 if v.value else 0
    if isinstance(v, BitVecV):
        return v.bits
    return None


def _scalar_sort(s: Sort) -> bool:
    return isinstance(s, (IntSort, BoolSort, BitVecSort))


def binding_points(var_id: int, value: Value, sort: Sort) -> list[tuple[Path, int]] | None:
    """Concrete (path, encoding) points of one binding; None when ⊥."""
    if isinstance(value, BottomV):
        return None
    if isinstance(value, TupleV):
        points = []
        assert isinstance(sort, TupleSort)
        for i, (item, s) in enumerate(zip(value.items, sort.elements)):
            if isinstance(item, BottomV):
                return None  # strict tuples: a dead component kills the tuple
            enc = encode_scalar(item)
            if enc is not None:
                points.append(((var_id, i), enc))
        return points
    enc = encode_scalar(value)
    return [((var_id,), enc)] if enc is not None else []


def consistent(d: EqRel, points: list[tuple[Path, int]]) -> bool:
    """Can some concretization of `d` take these values at these paths?"""
    if d.bottom:
        return False
    for i, (p, u) in enumerate(points):
        k = d.const_of(p)
        if k is not None and k != u:
            return False
        for (q, w) in points[i + 1:]:
            diff = d.difference(p, q)
            if diff is not None and diff != u - w:
                return False
    return True


# ---------------------------------------------------------------------------
# Evaluation (the lift)
# ---------------------------------------------------------------------------

class RelEnv:
    """Array from var id to relational element."""

    def __init__(self, size: int) -> None:
        self.slots: list[EqRel | None] = [None] * size

    def get(self, v: Var) -> EqRel:
        e = self.slots[v.id]
        assert e is not None, f"{v.name} not evaluated"
        return e

    def set(self, v: Var, e: EqRel) -> None:
        self.slots[v.id] = e

    def copy(self) -> "RelEnv":
        c = RelEnv(0)
        c.slots = list(self.slots)
        return c


def _paths_of_var(v: Var) -> set[Path]:
    out = {(v.id,)}
    if isinstance(v.sort, TupleSort):
        for i in range(len(v.sort.elements)):
            out.add((v.id, i))
    return out


def assign_transfer(d: EqRel, target: Var, rhs: Def) -> EqRel:
    """Add target = rhs when the right side is affine in one path, a tuple
    make/get, or a whole-value copy; havoc (no atom) otherwise."""
    d = d.forget(_paths_of_var(target))
    t: Path = (target.id,)
    if isinstance(rhs, OpDef):
        op, args = rhs.op, rhs.args
        if op.name == "lit":
            enc = encode_scalar(_lit_to_value(op.params[0], target.sort))
            return d.with_const(t, enc) if enc is not None else d
        if op.name == "add":
            for a, b in ((args[0], args[1]), (args[1], args[0])):
                k = d.const_of((b.id,))
                if k is not None and _scalar_sort(a.sort):
                    return d.with_atom(t, (a.id,), k)
            return d
        if op.name == "sub":
            k = d.const_of((args[1].id,))
            if k is not None and _scalar_sort(args[0].sort):
                return d.with_atom(t, (args[0].id,), -k)
            return d
        if op.name == "get":
            i = op.params[0]
            if _scalar_sort(target.sort):
                return d.with_atom(t, (args[0].id, i), 0)
            return d
        if op.name == "mk":
            for i, a in enumerate(args):
                if _scalar_sort(a.sort):
                    d = d.with_atom((target.id, i), (a.id,), 0)
            return d
        if op.name == "eq":
            diff = d.difference((args[0].id,), (args[1].id,))
            if diff is not None:
                return d.with_const(t, 1 if diff == 0 else 0)
            return d
        return d
    if isinstance(rhs, (NondetDef, AssumeDef, UnknownDef, MuDef)):
        return d
    raise TypeError(f"bad rhs {rhs!r}")


def _copy_transfer(d: EqRel, target: Var, source: Var) -> EqRel:
    """target := source, componentwise for tuples."""
    d = d.forget(_paths_of_var(target))
    if isinstance(target.sort, TupleSort):
        for i, s in enumerate(target.sort.elements):
            if _scalar_sort(s):
                d = d.with_atom((target.id, i), (source.id, i), 0)
        return d
    if _scalar_sort(target.sort):
        return d.with_atom((target.id,), (source.id,), 0)
    return d


def _lit_to_value(payload, sort: Sort) -> Value:
    if isinstance(sort, BoolSort):
        return BoolV(payload)
    if isinstance(sort, BitVecSort):
        return BitVecV(sort.width, payload)
    return IntV(payload)


def eval_rel(ctx: Context, env: RelEnv, defs_table: dict[int, Def] | None = None) -> RelEnv:
    table = defs_table if defs_table is not None else {}
    for d in ctx.defs:
        _eval_def(d, env, table)
    return env


def _eval_def(d: Def, env: RelEnv, table: dict[int, Def]) -> None:
    table[d.var.id] = d
    if isinstance(d, OpDef):
        base = EqRel.top()
        for a in d.args:
            base = base.meet(env.get(a))
        env.set(d.var, assign_transfer(base, d.var, d))
    elif isinstance(d, UnknownDef):
        env.set(d.var, EqRel.top())
    elif isinstance(d, NondetDef):
        d1 = _copy_transfer(env.get(d.a), d.var, d.a)
        d2 = _copy_transfer(env.get(d.b), d.var, d.b)
        env.set(d.var, d1.join(d2))
    elif isinstance(d, AssumeDef):
        # No guard atom: a fact about the guard variable would be valid only
        # while this definition is live, but the per-binding concretization
        # checks every element against every binding unconditionally.
        base = env.get(d.cond).meet(env.get(d.value))
        env.set(d.var, _copy_transfer(base, d.var, d.value))
    elif isinstance(d, MuDef):
        _eval_mu(d, env, table)
    else:
        raise TypeError(f"unknown def {d!r}")


def _eval_mu(d: MuDef, env: RelEnv, table: dict[int, Def]) -> None:
    body_paths: set[Path] = set()
    for bd in iter_defs(d.body):
        body_paths |= _paths_of_var(bd.var)
    body_paths |= _paths_of_var(d.loopvar)

    d_init = _copy_transfer(env.get(d.init), d.var, d.init)
    current = d_init
    for _ in range(100):
        body_env = env.copy()
        body_env.set(d.loopvar, _copy_transfer(current, d.loopvar, d.var))
        for bd in d.body.defs:
            _eval_def(bd, body_env, table)
        d_exit = _copy_transfer(body_env.get(d.exit), d.var, d.exit)
        candidate = d_init.join(d_exit.forget(body_paths))
        if candidate.leq(current):
            break
        current = current.widen(candidate)
    env.set(d.var, current)


# ---------------------------------------------------------------------------
# Concretization and domain adapter
# ---------------------------------------------------------------------------

def gamma_rel(env: RelEnv, sorts: dict[int, Sort], concrete: Env) -> int | None:
    """Id of the first binding inconsistent with some element; None if all
    bindings are accepted (⊥ bindings vacuously are)."""
    bindings = []
    for var_id, value in concrete.items():
        pts = binding_points(var_id, value, sorts[var_id])
        if pts:
            bindings.append((var_id, pts))
    for element in env.slots:
        if element is None or element.bottom:
            # a bottom element records "this variable is never live";
            # it constrains nothing about other bindings
            continue
        for var_id, pts in bindings:
            if not consistent(element, pts):
                return var_id
    return None


class RelationalDomain(AbstractDomain):
    name = "relational"

    def __init__(self, size: int, sorts: dict[int, Sort],
                 vars_by_id: dict[int, Var] | None = None) -> None:
        self.size = size
        self.sorts = sorts
        self.vars_by_id = vars_by_id or {}

    @classmethod
    def for_term(cls, term) -> "RelationalDomain":
        from .core import iter_vars
        table = {v.id: v for v in iter_vars(term)}
        sorts = {i: v.sort for i, v in table.items()}
        return cls(max(table, default=-1) + 1, sorts, table)

    def initial(self) -> RelEnv:
        return RelEnv(self.size)

    def eval_abs(self, ctx: Context, state: RelEnv) -> RelEnv:
        return eval_rel(ctx, state.copy(), {})

    def gamma_contains(self, state: RelEnv, env: Env) -> bool:
        return gamma_rel(state, self.sorts, env) is None

    def rejection_witness(self, state: RelEnv, env: Env) -> Var | None:
        var_id = gamma_rel(state, self.sorts, env)
        return self.vars_by_id.get(var_id) if var_id is not None else None
