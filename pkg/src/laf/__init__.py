"""Static-analysis toolkit around a single-assignment term IR.

The IR represents programs as ordered sequences of named definitions with
explicit nondeterminism (`nondet`), loop folding (`mu`), path killing
(`assume`) and free inputs (`unknown`).  A concrete collecting semantics
serves as the testing oracle for several abstract domains (intervals,
constants, term rewriting, whole-program constraint propagation, and a
relational lift), plus exporters to SMT and Horn-clause form and a small
WHILE-language frontend.
"""

from .core import (  # noqa: F401
    BOOL, EMPTY, INT, AssumeDef, BitVecSort, BoolSort, Builder, Context, Def,
    Diagnostic, DuplicateBinderError, IntSort, LafError, MuDef, NondetDef, Op,
    OpDef, ScopeError, Sort, SortError, Term, TupleSort, UnknownDef, Var,
    append, bv, check_wf, extract_op, get_op, iter_defs, iter_vars, lit_op,
    sort_of, tup, var_count,
)
from .semantics import (  # noqa: F401
    BOTTOM, BitVecV, BoolV, BottomV, BudgetExceededError, EnumBudget, Env,
    IntV, MachineState, TupleV, Value, collect, collect_term, initial_state,
    reachable_results, result_values, step,
)
from .text import ParseError, parse_term, print_context, print_term  # noqa: F401

__version__ = "0.1.0"
