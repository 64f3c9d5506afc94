from __future__ import annotations

from typing import Any, Iterable, Mapping, Sequence

from rich.console import Console
from rich.table import Table
from jinja2 import Template

from params import ModelParams

STATUS_STYLES = {"pass": "green", "fail": "red", "error": "bold red", "skipped": "yellow"}


def format_value(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.3e}"
    return str(value)


def get_recommendation(finding: Mapping[str, Any]) -> str:
    check = finding.get("check", "")
    if finding.get("status") == "error":
        return "The check raised; inspect the parameters for non-generic values."
    if check in ("recursion", "dual", "band"):
        return "Compare the block entries against the basis-change oracle level by level."
    if check in ("recurrence", "qdiff", "orthogonality", "closed_form"):
        return "Move alpha, alpha* away from zeros of the overlap coefficients U."
    if check == "aw":
        return "Use a larger |phi|; the N = 2 misfit shrinks with the deformation."
    return "Review the residual against the tolerance profile."


def generate_rich_report(findings: Iterable[Mapping[str, Any]], title: str = "Tridiagonal Pair Verification Report",
                         console: Console | None = None) -> None:
    console = console or Console()
    table = Table(title=title, show_lines=True)
    table.add_column("Check", style="cyan", no_wrap=True)
    table.add_column("N", justify="center", style="magenta")
    table.add_column("Metric", style="white")
    table.add_column("Value", justify="right", style="yellow")
    table.add_column("Tolerance", justify="right")
    table.add_column("Status")
    for f in findings:
        status = f.get("status", "unknown")
        comparison = f.get("comparison") or ""
        table.add_row(
            f.get("check", "unknown"),
            str(f.get("N", "N/A")),
            f.get("metric", ""),
            format_value(f.get("value")),
            f"{comparison} {format_value(f.get('tolerance'))}".strip(),
            f"[{STATUS_STYLES.get(status, 'white')}]{status}[/]",
        )
    console.print(table)


def generate_value_table(title: str, columns: Sequence[str], rows: Iterable[Sequence[Any]],
                         console: Console | None = None) -> None:
    """Plain table of labelled values, e.g. closed-form overlaps."""
    console = console or Console()
    table = Table(title=title, show_lines=True)
    for name in columns:
        table.add_column(name)
    for row in rows:
        table.add_row(*(format_value(cell) for cell in row))
    console.print(table)


def generate_final_report(findings: Sequence[Mapping[str, Any]], params: ModelParams) -> str:
    counts = {status: sum(1 for f in findings if f.get("status") == status)
              for status in ("pass", "fail", "error", "skipped")}
    problems = [f for f in findings if f.get("status") in ("fail", "error")]
    template_str = """
==================== Verification Summary ====================

Parameters                 : N={{ params.N }}, alpha={{ params.alpha }}, alpha*={{ params.alpha_star }}, phi={{ params.phi }}, theta={{ params.theta }}
Findings                   : {{ total }}
Passed / failed / errors   : {{ counts.pass }} / {{ counts.fail }} / {{ counts.error }}
Skipped                    : {{ counts.skipped }}
{% if problems %}
-------------------- Breaches --------------------
{% for f in problems %}
Check: {{ f.check }} (N={{ f.N }})
Metric: {{ f.metric }}
Value: {{ format_value(f.value) }} (required {{ f.comparison or '' }} {{ format_value(f.tolerance) }})
Recommendation: {{ recommendation(f) }}
-------------------------------------------------------
{% endfor %}{% else %}
All checks are within tolerance.
{% endif %}
===============================================================
"""
    template = Template(template_str)
    return template.render(
        params=params,
        total=len(findings),
        counts=counts,
        problems=problems,
        format_value=format_value,
        recommendation=get_recommendation,
    )


def build_summary(findings: Sequence[Mapping[str, Any]], params: ModelParams,
                  tolerances: Mapping[str, float]) -> dict[str, Any]:
    return {
        "params": params.to_dict(),
        "tolerances": tolerances,
        "findings": findings,
        "passed": not any(f.get("status") in ("fail", "error") for f in findings),
    }
