"""
Report writers and console tables for radiallf
"""

import csv
import io
import json
import os
import tempfile
from typing import Any, Dict, Iterable, List, Optional, Sequence

from rich.console import Console
from rich.table import Table

from .runner import ApproxReport, ComparisonResult, SolutionTable
from .solvers import SolveReport

TRAJECTORY_HEADER = ("iter", "f", "grad_norm", "max_dv", "step", "time_ms")


def write_atomic(path: str, text: str):
    """Write text to a temporary file beside `path`, then rename it into place"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    handle, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as tmp:
            tmp.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def trajectory_csv(report: SolveReport) -> str:
    rows = [
        (r.iteration, repr(r.f), repr(r.grad_norm), repr(r.max_dv), repr(r.step), f"{r.time_ms:.3f}")
        for r in report.trajectory
    ]
    return _csv_text(TRAJECTORY_HEADER, rows)


def solution_json(table: SolutionTable, report: SolveReport) -> str:
    doc = table.to_dict(report)
    if report.failure is not None:
        doc["failure"] = report.failure_reason
    return json.dumps(doc, indent=2)


def comparison_rows(result: ComparisonResult) -> List[Dict[str, Any]]:
    return [
        {
            "method": row.method,
            "converged": row.converged,
            "iterations": row.iterations,
            "max_diff": row.max_diff,
            "failure": row.failure or "",
        }
        for row in result.rows
    ]


def approx_rows(report: ApproxReport) -> List[Dict[str, Any]]:
    return [
        {"node": node, "err_lindistflow": float(a), "err_approx1": float(b)}
        for node, a, b in zip(report.node_ids, report.lindistflow, report.first_iteration)
    ]


def records_text(rows: List[Dict[str, Any]], fmt: str, extra: Optional[Dict[str, Any]] = None) -> str:
    """Render dict rows as CSV or as a JSON document"""
    if fmt == "json":
        doc: Dict[str, Any] = {"rows": rows}
        if extra:
            doc.update(extra)
        return json.dumps(doc, indent=2)
    header = list(rows[0]) if rows else []
    return _csv_text(header, ([row[key] for key in header] for row in rows))


def comparison_table(result: ComparisonResult) -> Table:
    table = Table(title=f"Comparison against {result.reference}")
    table.add_column("method")
    table.add_column("converged")
    table.add_column("iterations", justify="right")
    table.add_column("max |dV| (p.u.)", justify="right")
    table.add_column("failure")
    for row in result.rows:
        table.add_row(
            row.method,
            "yes" if row.converged else "no",
            str(row.iterations),
            f"{row.max_diff:.3e}",
            row.failure or "",
        )
    return table


def approx_table(report: ApproxReport) -> Table:
    summary = report.summary
    table = Table(title="Approximant voltage errors (p.u.)")
    table.add_column("approximant")
    table.add_column("mean", justify="right")
    table.add_column("max", justify="right")
    table.add_row("lindistflow", f"{summary['lindistflow_mean']:.3e}", f"{summary['lindistflow_max']:.3e}")
    table.add_row("approx1", f"{summary['approx1_mean']:.3e}", f"{summary['approx1_max']:.3e}")
    return table


def solve_table(report: SolveReport) -> Table:
    table = Table(title=f"{report.method}: {'converged' if report.converged else 'not converged'}")
    for name in TRAJECTORY_HEADER:
        table.add_column(name, justify="right")
    for r in report.trajectory:
        table.add_row(str(r.iteration), f"{r.f:.3e}", f"{r.grad_norm:.3e}", f"{r.max_dv:.3e}",
                      f"{r.step:.3g}", f"{r.time_ms:.2f}")
    return table


def show(table: Table, console: Optional[Console] = None):
    (console or Console()).print(table)
