"""Analysis reports: assertion verdicts, per-expression values, timings.

Renders as human text or a versioned JSON structure; the comparison table
(one row per propagation limit) is written as TSV, optionally with a
matplotlib chart next to it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

REPORT_SCHEMA_VERSION = 1

PROVED = "proved-true"
REFUTED = "proved-false"
UNKNOWN = "unknown"


@dataclass
class AssertionResult:
    name: str
    status: str
    domain: str | None = None
    detail: str = ""


@dataclass
class AnalysisReport:
    source: str
    assertions: list[AssertionResult] = field(default_factory=list)
    expressions: dict[str, list[tuple[str, str]]] = field(default_factory=dict)
    store_dump: str | None = None
    timings: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        statuses = [a.status for a in self.assertions]
        if any(s == REFUTED for s in statuses):
            return 2
        if any(s == UNKNOWN for s in statuses):
            return 1
        return 0

    def merge_assertion(self, result: AssertionResult) -> None:
        """Keep the most decided status per assertion (product of domains)."""
        for i, existing in enumerate(self.assertions):
            if existing.name == result.name:
                if existing.status == UNKNOWN and result.status != UNKNOWN:
                    self.assertions[i] = result
                return
        self.assertions.append(result)

    def to_text(self) -> str:
        lines = [f"analysis of {self.source}"]
        if self.assertions:
            lines.append("")
            lines.append("assertions:")
            for a in self.assertions:
                extra = f" [{a.domain}]" if a.domain else ""
                detail = f" ({a.detail})" if a.detail else ""
                lines.append(f"  {a.name}: {a.status}{extra}{detail}")
        for domain, rows in self.expressions.items():
            lines.append("")
            lines.append(f"{domain} values:")
            for name, value in rows:
                lines.append(f"  {name} = {value}")
        if self.store_dump:
            lines.append("")
            lines.append("condition maps:")
            for row in self.store_dump.splitlines():
                lines.append("  " + row)
        if self.timings:
            lines.append("")
            lines.append("timings:")
            for phase, secs in self.timings.items():
                lines.append(f"  {phase}: {secs * 1000:.1f} ms")
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "version": REPORT_SCHEMA_VERSION,
            "source": self.source,
            "assertions": [
                {"name": a.name, "status": a.status, "domain": a.domain,
                 "detail": a.detail}
                for a in self.assertions
            ],
            "expressions": {
                domain: [{"name": n, "value": v} for n, v in rows]
                for domain, rows in self.expressions.items()
            },
            "store": self.store_dump,
            "timings": self.timings,
            "notes": self.notes,
            "exit_code": self.exit_code,
        }
        return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


@dataclass
class CompareRow:
    limit: str
    unproved: int
    improved: int  # expressions strictly refined vs the previous limit
    seconds: float


@dataclass
class CompareTable:
    source: str
    rows: list[CompareRow] = field(default_factory=list)

    def to_tsv(self) -> str:
        lines = ["limit\tunproved\timproved\tseconds"]
        for r in self.rows:
            lines.append(f"{r.limit}\t{r.unproved}\t{r.improved}\t{r.seconds:.3f}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        header = f"{'limit':>8} {'unproved':>9} {'improved':>9} {'seconds':>8}"
        lines = [f"propagation-limit comparison for {self.source}", header]
        for r in self.rows:
            lines.append(f"{r.limit:>8} {r.unproved:>9} {r.improved:>9} "
                         f"{r.seconds:>8.3f}")
        return "\n".join(lines) + "\n"


def render_compare_figure(table: CompareTable, path: str) -> None:
    """Bar chart of unproved assertions and refined expressions per limit."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    limits = [r.limit for r in table.rows]
    x = range(len(limits))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
    ax1.bar(x, [r.unproved for r in table.rows], color="#c44e52")
    ax1.set_xticks(list(x), limits)
    ax1.set_xlabel("propagation limit")
    ax1.set_ylabel("unproved assertions")
    ax2.bar(x, [r.improved for r in table.rows], color="#4c72b0")
    ax2.set_xticks(list(x), limits)
    ax2.set_xlabel("propagation limit")
    ax2.set_ylabel("refined vs previous")
    fig.suptitle(table.source)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_interval_figure(rows: list[tuple[str, int | None, int | None]],
                           path: str, clip: int = 64) -> None:
    """Horizontal range chart of interval values (infinite bounds clipped)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = rows[:40]
    names = [r[0] for r in rows]
    los = [max(-clip, r[1]) if r[1] is not None else -clip for r in rows]
    his = [min(clip, r[2]) if r[2] is not None else clip for r in rows]
    fig, ax = plt.subplots(figsize=(7, 0.35 * max(4, len(rows))))
    y = range(len(rows))
    ax.hlines(list(y), los, his, color="#4c72b0", lw=4)
    for i, (lo, hi) in enumerate(zip(los, his)):
        ax.plot([lo, hi], [i, i], "|", color="#2a4d69", ms=10)
    ax.set_yticks(list(y), names)
    ax.invert_yaxis()
    ax.set_xlabel(f"value range (clipped to ±{clip})")
    ax.grid(axis="x", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
