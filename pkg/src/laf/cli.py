"""Command-line front end: analyze programs, compare propagation limits,
evaluate the concrete semantics, validate rulesets."""

from __future__ import annotations

import sys
import time
from pathlib import Path

import click

from .constraint import ConstraintAnalysis, PropConfig
from .core import BoolSort, iter_defs, iter_vars
from .export import emit_horn_smtlib, emit_smtlib, run_solver, to_fo, to_horn
from .lang import Translation, parse_while, simplify_translation, translate
from .nonrel import NonRelDomain
from .relational import RelationalDomain
from .report import (
    PROVED, REFUTED, UNKNOWN, AnalysisReport, AssertionResult, CompareRow,
    CompareTable, render_compare_figure, render_interval_figure,
)
from .rewrite import (
    EMPTY_STATE, check_rules, default_rulesets, eval_rewrite, load_ruleset,
)
from .semantics import BoolV, BudgetExceededError, EnumBudget, result_values
from .text import ParseError, parse_term, print_term
from .values import BoolSet, ConstFamily, Interval, IntervalFamily

DOMAINS = ("interval", "constants", "rewrite", "constraint", "relational")


class ToolError(Exception):
    pass


def _load(path: str, unroll: int, simplify: bool = True) -> Translation:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".laf"):
        term = parse_term(text)
        assertions = []
        if isinstance(term.result.sort, BoolSort):
            assertions = [("result", term.result)]
        return Translation(term, tuple(assertions), term.result, ())
    ast = parse_while(text)
    tr = translate(ast, unroll=unroll)
    return simplify_translation(tr) if simplify else tr


def _parse_window(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition("..")
    return int(lo), int(hi)


def _status_of_boolset(v) -> str:
    if isinstance(v, BoolSet):
        if v.values == frozenset({True}):
            return PROVED
        if v.values == frozenset({False}):
            return REFUTED
    return UNKNOWN


def _run_nonrel(tr: Translation, family, widen_delay: int,
                report: AnalysisReport) -> None:
    dom = NonRelDomain.for_term(family, tr.term, widen_delay)
    state = dom.eval_abs(tr.term.ctx, dom.initial())
    rows = []
    for v in iter_vars(tr.term):
        val = state.slots[v.id]
        if val is not None:
            rows.append((v.name, str(val)))
    report.expressions[family.name] = rows
    for name, var in tr.assertions:
        status = _status_of_boolset(state.slots[var.id])
        report.merge_assertion(AssertionResult(name, status, family.name))


def _run_rewrite(tr: Translation, rules, report: AnalysisReport) -> None:
    state = eval_rewrite(tr.term.ctx, EMPTY_STATE, rules)
    mapping = dict(state.mapping)
    from .core import OpDef
    defs = {d.var.id: d for d in iter_defs(state.out)}
    rows = []
    for name, var in tr.assertions:
        img = mapping[var.id]
        d = defs.get(img.id)
        status = UNKNOWN
        if isinstance(d, OpDef) and d.op.name == "lit":
            status = PROVED if d.op.params[0] else REFUTED
        report.merge_assertion(AssertionResult(name, status, "rewrite",
                                               detail=f"image {img.name}"))
        rows.append((name, img.name))
    report.expressions.setdefault("rewrite", []).extend(rows)


def _run_constraint(tr: Translation, cfg: PropConfig,
                    report: AnalysisReport) -> ConstraintAnalysis:
    an = ConstraintAnalysis(cfg=cfg)
    an.run(tr.term.ctx)
    for name, var in tr.assertions:
        img = an.val[var.id]
        cond = an.cond[var.id]
        status = _status_of_boolset(an.query(img, cond))
        detail = f"under {an.cond_str(cond)}" if not cond.is_true else ""
        report.merge_assertion(AssertionResult(name, status, "constraint",
                                               detail=detail))
    report.store_dump = an.dump_store()
    return an


def _run_relational(tr: Translation, report: AnalysisReport) -> None:
    dom = RelationalDomain.for_term(tr.term)
    state = dom.eval_abs(tr.term.ctx, dom.initial())
    rows = []
    for v in iter_vars(tr.term):
        e = state.slots[v.id]
        if e is not None and str(e) != "top":
            rows.append((v.name, str(e)))
    report.expressions["relational"] = rows
    for name, var in tr.assertions:
        e = state.slots[var.id]
        status = UNKNOWN
        if e is not None and not e.bottom:
            k = e.const_of((var.id,))
            if k == 1:
                status = PROVED
            elif k == 0:
                status = REFUTED
        report.merge_assertion(AssertionResult(name, status, "relational"))


@click.group()
def main() -> None:
    """Static analysis over a term IR with interval, constant, rewriting,
    constraint-propagation and relational domains."""


@main.command()
@click.argument("file", type=click.Path(exists=True))
@click.option("--domain", "domains", default="constraint",
              help="interval, constants, rewrite, constraint, relational, "
                   "or all (comma-separated lists accepted)")
@click.option("--prop-limit", default="inf",
              help="distinct variables refined per propagation seed "
                   "(0, 1, 2, ... or inf)")
@click.option("--prop-direction", type=click.Choice(["backward", "both"]),
              default="both")
@click.option("--widen-delay", default=0, type=int,
              help="joins before widening kicks in")
@click.option("--widen-thresholds", default="",
              help="comma-separated interval widening thresholds, "
                   "e.g. -1,0,1,8 (default: plain jumps to infinity)")
@click.option("--unroll", default=0, type=int, help="peel N loop iterations")
@click.option("--rules", "rules_file", type=click.Path(exists=True),
              default=None, help="extra rewrite rules (lhs => rhs kind)")
@click.option("--emit-laf", type=click.Path(), default=None)
@click.option("--emit-smt", type=click.Path(), default=None)
@click.option("--emit-horn", type=click.Path(), default=None)
@click.option("--report", "report_format", type=click.Choice(["text", "structured"]),
              default="text")
@click.option("--report-out", type=click.Path(), default=None,
              help="write the report here as well as stdout")
@click.option("--plot", type=click.Path(), default=None,
              help="render interval ranges to an image file")
@click.option("--solver-cmd", default=None,
              help="external solver template, e.g. 'z3 {file}'")
@click.option("--solver-timeout", default=10.0, type=float)
@click.option("--no-simplify", is_flag=True, default=False)
def analyze(file, domains, prop_limit, prop_direction, widen_delay,
            widen_thresholds, unroll, rules_file, emit_laf, emit_smt,
            emit_horn, report_format, report_out, plot, solver_cmd,
            solver_timeout, no_simplify) -> None:
    """Parse, translate, simplify and analyze FILE (.while or .laf)."""
    from .lang import WhileSyntaxError

    t0 = time.monotonic()
    try:
        tr = _load(file, unroll, simplify=not no_simplify)
    except (ParseError, WhileSyntaxError, OSError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(3)
    report = AnalysisReport(source=file)
    report.timings["frontend"] = time.monotonic() - t0

    if emit_laf:
        Path(emit_laf).write_text(print_term(tr.term), encoding="utf-8")

    selected = DOMAINS if domains == "all" else tuple(
        d.strip() for d in domains.split(","))
    bad = [d for d in selected if d not in DOMAINS]
    if bad:
        click.echo(f"error: unknown domain {bad[0]}", err=True)
        sys.exit(3)

    exact, approx = default_rulesets()
    rules = exact + approx
    if rules_file:
        rules = rules + load_ruleset(Path(rules_file).read_text(encoding="utf-8"))

    thresholds = tuple(int(t) for t in widen_thresholds.split(",") if t.strip())
    interval_family = IntervalFamily(widen_thresholds=thresholds)
    for name in selected:
        t1 = time.monotonic()
        if name == "interval":
            _run_nonrel(tr, interval_family, widen_delay, report)
        elif name == "constants":
            _run_nonrel(tr, ConstFamily(), widen_delay, report)
        elif name == "rewrite":
            _run_rewrite(tr, rules, report)
        elif name == "constraint":
            limit = None if prop_limit == "inf" else int(prop_limit)
            _run_constraint(tr, PropConfig(limit=limit, direction=prop_direction),
                            report)
        elif name == "relational":
            _run_relational(tr, report)
        report.timings[name] = time.monotonic() - t1

    goal_list = list(tr.assertions)
    if emit_smt:
        formula = to_fo(tr.term)
        for i, (name, var) in enumerate(goal_list):
            path = emit_smt if len(goal_list) == 1 else \
                f"{emit_smt}.{i + 1}.smt2"
            Path(path).write_text(emit_smtlib(formula, var, BoolV(False)),
                                  encoding="utf-8")
            if solver_cmd:
                res = run_solver(solver_cmd, path, solver_timeout)
                report.notes.append(f"smt {name}: {res.status}")
                if res.status == "unsat":
                    report.merge_assertion(
                        AssertionResult(name, PROVED, "smt", "solver unsat"))
    if emit_horn:
        system = to_horn(tr.term)
        for i, (name, var) in enumerate(goal_list):
            path = emit_horn if len(goal_list) == 1 else \
                f"{emit_horn}.{i + 1}.horn.smt2"
            Path(path).write_text(emit_horn_smtlib(system, var, BoolV(False)),
                                  encoding="utf-8")
            if solver_cmd:
                res = run_solver(solver_cmd, path, solver_timeout)
                report.notes.append(f"horn {name}: {res.status}")
                if res.status == "unsat":
                    report.merge_assertion(
                        AssertionResult(name, PROVED, "horn", "solver unsat"))

    if plot and "interval" in report.expressions:
        rows = []
        dom = NonRelDomain.for_term(interval_family, tr.term, widen_delay)
        state = dom.eval_abs(tr.term.ctx, dom.initial())
        for v in iter_vars(tr.term):
            val = state.slots[v.id]
            if isinstance(val, Interval) and not val.empty:
                rows.append((v.name, val.lo, val.hi))
        render_interval_figure(rows, plot)
        report.notes.append(f"figure written to {plot}")

    out = report.to_json() if report_format == "structured" else report.to_text()
    click.echo(out, nl=False)
    if report_out:
        Path(report_out).write_text(out, encoding="utf-8")
    sys.exit(report.exit_code if tr.assertions else 0)


@main.command()
@click.argument("file", type=click.Path(exists=True))
@click.option("--limits", default="0,1,2,inf",
              help="comma-separated propagation limits")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="write the table as TSV")
@click.option("--plot", type=click.Path(), default=None,
              help="render the comparison chart to an image file")
@click.option("--unroll", default=0, type=int)
def compare(file, limits, out_path, plot, unroll) -> None:
    """Analyze FILE under several propagation limits and tabulate precision."""
    try:
        tr = _load(file, unroll)
    except ParseError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(3)
    table = CompareTable(source=file)
    previous: dict[int, object] | None = None
    for item in limits.split(","):
        item = item.strip()
        limit = None if item == "inf" else int(item)
        t0 = time.monotonic()
        an = ConstraintAnalysis(cfg=PropConfig(limit=limit))
        an.run(tr.term.ctx)
        elapsed = time.monotonic() - t0
        unproved = 0
        for name, var in tr.assertions:
            img = an.val[var.id]
            if _status_of_boolset(an.query(img, an.cond[var.id])) == UNKNOWN:
                unproved += 1
        # summary value per input expression: query at its own condition
        current = {}
        for input_id, var in an.val.items():
            current[input_id] = an.query(var, an.cond[input_id])
        improved = 0
        if previous is not None:
            for input_id, value in current.items():
                prev = previous.get(input_id)
                if prev is not None and value.leq(prev) and not prev.leq(value):
                    improved += 1
        table.rows.append(CompareRow(item, unproved, improved, elapsed))
        previous = current
    click.echo(table.to_text(), nl=False)
    if out_path:
        Path(out_path).write_text(table.to_tsv(), encoding="utf-8")
    if plot:
        render_compare_figure(table, plot)


@main.command("eval")
@click.argument("file", type=click.Path(exists=True))
@click.option("--int-window", default="-8..8",
              help="enumeration window for unknown integers (LO..HI)")
@click.option("--max-mu-iters", default=64, type=int)
@click.option("--unroll", default=0, type=int)
def eval_cmd(file, int_window, max_mu_iters, unroll) -> None:
    """Concrete (oracle) evaluation: print the result-variable value set."""
    try:
        tr = _load(file, unroll)
    except ParseError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(3)
    lo, hi = _parse_window(int_window)
    budget = EnumBudget(int_lo=lo, int_hi=hi, max_mu_iters=max_mu_iters)
    try:
        values = result_values(tr.term, budget)
    except BudgetExceededError as e:
        click.echo(f"budget exceeded: {e}", err=True)
        sys.exit(3)
    for v in sorted(str(x) for x in values):
        click.echo(v)


@main.command("check-rules")
@click.option("--rules", "rules_file", type=click.Path(exists=True),
              default=None, help="validate these rules instead of the builtins")
def check_rules_cmd(rules_file) -> None:
    """Run the rewrite-rule validity checker."""
    if rules_file:
        rules = load_ruleset(Path(rules_file).read_text(encoding="utf-8"))
    else:
        exact, approx = default_rulesets()
        rules = exact + approx
    failures = 0
    for rep in check_rules(rules):
        ok = "ok" if rep.valid else "INVALID"
        click.echo(f"{rep.rule:30s} {rep.kind:7s} {ok:8s}"
                   f" ({rep.instances} instances)"
                   + (f" {rep.failure}" if not rep.valid else ""))
        failures += 0 if rep.valid else 1
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
