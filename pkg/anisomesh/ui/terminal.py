"""
Terminal UI - Rich terminal presentation of runs, reports and diagnostics.
"""

import math
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.table import Table


def _num(value: Any, spec: str = ".4g") -> str:
    if value is None:
        return "-"
    if isinstance(value, float) and math.isnan(value):
        return "n/a"
    return format(value, spec)


class TerminalUI:
    """Rich terminal user interface."""

    def __init__(self, console: Optional[Console] = None) -> None:
        self.console = console or Console()

    def show_banner(self, title: str, details: str) -> None:
        self.console.print(Panel(escape(details), title=escape(title), border_style="blue"))

    @contextmanager
    def iteration_progress(self, total: int, description: str) -> Iterator[Any]:
        """Progress bar yielding an ``advance(record)`` callable."""
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            console=self.console,
            transient=True,
        ) as progress:
            task = progress.add_task(description, total=total)

            def advance(record: Any = None) -> None:
                if record is not None:
                    progress.update(task, description=f"{description} nbt={record.nbt}")
                progress.advance(task)

            yield advance

    def show_report(self, report: Any, title: Optional[str] = None) -> None:
        """One table row per adaptive iteration."""
        table = Table(title=escape(title or f"{report.problem} [{report.metric}] N={report.n_target}"))
        for column, style in (("iter", "cyan"), ("nbt", "white"), ("nv", "white"), ("|e|_H1", "green"),
                              ("|e|_H2", "green"), ("eta", "magenta"), ("cv(e_K^2)", "yellow"),
                              ("unit edges", "blue")):
            table.add_column(column, style=style, justify="right")
        for r in report.records:
            table.add_row(
                str(r.iteration), str(r.nbt), str(r.nv), _num(r.h1_err), _num(r.h2_err),
                _num(r.eta), _num(r.cv_eta, ".3f"), f"{100.0 * r.edge_lengths.in_band:.1f}%",
            )
        self.console.print(table)

    def show_comparison(self, finals: Dict[str, Any], improvement: float) -> None:
        table = Table(title="Final iteration per metric")
        table.add_column("metric", style="cyan")
        for column in ("nbt", "|e|_H1", "|e|_H2", "eta"):
            table.add_column(column, justify="right")
        for name, r in finals.items():
            table.add_row(name, str(r.nbt), _num(r.h1_err), _num(r.h2_err), _num(r.eta))
        self.console.print(table)
        style = "green" if improvement > 0 else "red"
        self.console.print(f"[{style}]Relative H1 improvement: {_num(100.0 * improvement, '.1f')}%[/{style}]")

    def show_sweep(self, rows: Sequence[Sequence[Any]], slope: Optional[float] = None) -> None:
        table = Table(title="Error against element count")
        for column in ("n_target", "nbt", "|e|_H1", "|e|_H2", "eta"):
            table.add_column(column, justify="right")
        for n, nbt, h1, h2, eta in rows:
            table.add_row(str(n), str(nbt), _num(h1), _num(h2), _num(eta))
        self.console.print(table)
        if slope is not None:
            self.console.print(f"[blue]log-log slope of |e|_H1 against nbt: {slope:.3f}[/blue]")

    def show_formula_check(self, check: Any, tolerance: float) -> None:
        table = Table(title=f"Closed forms against quadrature ({check.trials} random trials)")
        table.add_column("formula", style="cyan")
        table.add_column("max relative deviation", justify="right")
        table.add_column("status")
        for name, value in check.to_dict().items():
            if name == "trials":
                continue
            if name == "l2_nadler_printed":
                status = "[yellow]diagnostic[/yellow]"
            else:
                status = "[green]ok[/green]" if value <= tolerance else "[red]deviates[/red]"
            table.add_row(name, f"{value:.3e}", status)
        self.console.print(table)

    def show_config(self, values: Dict[str, Any], source: str) -> None:
        table = Table(title=f"Configuration ({source})")
        table.add_column("key", style="cyan")
        table.add_column("value", style="white")
        for key, value in values.items():
            table.add_row(key, str(value))
        self.console.print(table)

    def show_diagnostics(self, rows: List[Tuple[str, bool, str]]) -> None:
        table = Table(title="System Diagnostics")
        table.add_column("check", style="cyan")
        table.add_column("status")
        table.add_column("detail", style="white")
        for name, ok, detail in rows:
            table.add_row(name, "[green]ok[/green]" if ok else "[red]missing[/red]", escape(detail))
        self.console.print(table)

    def show_history(self, entries: List[Dict[str, Any]]) -> None:
        if not entries:
            self.console.print("[yellow]No history entries found[/yellow]")
            return

        table = Table(title="Run History")
        table.add_column("Time", style="cyan")
        table.add_column("Command")
        table.add_column("Example")
        table.add_column("Metric")
        table.add_column("N", justify="right")
        table.add_column("nbt", justify="right")
        table.add_column("|e|_H1", justify="right", style="green")
        table.add_column("Status")

        for entry in entries:
            table.add_row(
                entry.get("timestamp", ""),
                entry.get("command", ""),
                entry.get("example", ""),
                entry.get("metric", ""),
                str(entry.get("n_target", "")),
                str(entry.get("nbt") if entry.get("nbt") is not None else "-"),
                _num(entry.get("h1_err")),
                escape(str(entry.get("status", ""))),
            )
        self.console.print(table)

    def show_error(self, message: str) -> None:
        self.console.print(f"[red]Error: {escape(message)}[/red]")

    def show_warning(self, message: str) -> None:
        self.console.print(f"[yellow]Warning: {escape(message)}[/yellow]")

    def show_info(self, message: str) -> None:
        self.console.print(f"[blue]{escape(message)}[/blue]")

    def show_success(self, message: str) -> None:
        self.console.print(f"[green]{escape(message)}[/green]")
