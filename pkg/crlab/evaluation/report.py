"""
Grid reports: one row per (task, constraint) cell, metrics as mean and
standard deviation over seeds.

>>> rows = [
...     {"task": "Reconstruction", "constraint": "vae_kl", "seed": s,
...      "mcc": m, "r2": 0.9, "method": "pearson", "status": "ok"}
...     for s, m in enumerate([0.4, 0.6])
... ]
>>> table = aggregate_results(rows)
>>> print(emit_report(table, "md"))
| task | constraint | MCC | R² | seeds | method |
|---|---|---|---|---|---|
| Reconstruction | vae_kl | 0.50 ± 0.14 | 0.90 ± 0.00 | 2 | pearson |
"""

import io
from typing import Any, Dict, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from astropy.io import registry
from astropy.table import Table

__all__ = ["ResultTable", "REPORT_COLUMNS", "aggregate_results", "emit_report"]

#: Column order of the written reports
REPORT_COLUMNS = (
    "task",
    "constraint",
    "mcc_mean",
    "mcc_std",
    "r2_mean",
    "r2_std",
    "seeds",
    "method",
)

ReportFormat = Literal["csv", "md", "markdown"]


class ResultTable(Table):
    """`~astropy.table.Table` of aggregated grid cells.

    Besides `REPORT_COLUMNS` it carries ``status`` (``ok``, ``partial`` or
    ``failed``) and the number of ``failed`` seeds of each cell.
    """

    def markdown(self, precision: int = 2) -> str:
        def cell(mean, std) -> str:
            if mean is None or not np.isfinite(mean):
                return "failed"
            std = 0.0 if std is None or not np.isfinite(std) else std
            return f"{mean:.{precision}f} ± {std:.{precision}f}"

        lines = [
            "| task | constraint | MCC | R² | seeds | method |",
            "|---|---|---|---|---|---|",
        ]
        for row in self:
            lines.append(
                f"| {row['task']} | {row['constraint']} "
                f"| {cell(row['mcc_mean'], row['mcc_std'])} "
                f"| {cell(row['r2_mean'], row['r2_std'])} "
                f"| {row['seeds']} | {row['method']} |"
            )
        return "\n".join(lines)


def _cell_order(frame: pd.DataFrame) -> List[Tuple[str, str]]:
    return sorted(set(zip(frame["task"], frame["constraint"])))


def aggregate_results(
    rows: Iterable[Dict[str, Any]],
    order: Optional[Sequence[Tuple[str, str]]] = None,
) -> ResultTable:
    """
    Aggregate per-seed results into a `ResultTable`.

    :param rows: Mappings with ``task``, ``constraint``, ``mcc``, ``r2``,
        ``method`` and ``status``; failed seeds have ``status == "failed"``
    :param order: Row order as ``(task, constraint)`` pairs, sorted when omitted
    :raises ValueError: No rows
    """
    frame = pd.DataFrame(list(rows))
    if frame.empty:
        raise ValueError("Cannot report an empty grid")
    if "status" not in frame:
        frame["status"] = "ok"
    frame["r2"] = pd.to_numeric(frame["r2"], errors="coerce")
    ok = frame[frame["status"] == "ok"]
    stats = ok.groupby(["task", "constraint"], sort=False).agg(
        mcc_mean=("mcc", "mean"),
        mcc_std=("mcc", "std"),
        r2_mean=("r2", "mean"),
        r2_std=("r2", "std"),
        seeds=("mcc", "size"),
    )
    methods = frame.groupby(["task", "constraint"], sort=False)["method"].first()
    failed = (
        (frame["status"] != "ok").groupby([frame["task"], frame["constraint"]]).sum()
    )

    names = [*REPORT_COLUMNS, "status", "failed"]
    columns: Dict[str, list] = {name: [] for name in names}
    for key in order if order is not None else _cell_order(frame):
        if key not in methods.index:
            continue
        n_failed = int(failed.get(key, 0))
        if key in stats.index:
            s = stats.loc[key]
            seeds = int(s["seeds"])
            values = [s["mcc_mean"], s["mcc_std"], s["r2_mean"], s["r2_std"]]
            # a single seed has no spread
            values = [0.0 if seeds == 1 and i % 2 else v for i, v in enumerate(values)]
        else:
            seeds, values = 0, [np.nan] * 4
        status = "ok" if not n_failed else ("partial" if seeds else "failed")
        for name, v in zip(REPORT_COLUMNS, (*key, *values, seeds, methods[key])):
            columns[name].append(v)
        columns["status"].append(status)
        columns["failed"].append(n_failed)
    return ResultTable(columns, names=names)


def emit_report(table: ResultTable, format: ReportFormat = "csv") -> str:
    """Render `table` as CSV (header `REPORT_COLUMNS`) or Markdown text"""
    if len(table) == 0:
        raise ValueError("Cannot report an empty grid")
    if format in ("md", "markdown"):
        return table.markdown()
    if format != "csv":
        raise ValueError(f"Unknown report format {format}")
    buffer = io.StringIO()
    Table(table[list(REPORT_COLUMNS)]).write(buffer, format="ascii.csv")
    return buffer.getvalue()


def write_markdown(table: ResultTable, output, overwrite: bool = False):
    text = table.markdown() + "\n"
    if hasattr(output, "write"):
        output.write(text)
        return
    mode = "w" if overwrite else "x"
    with open(output, mode) as f:
        f.write(text)


registry.register_writer("markdown", ResultTable, write_markdown)
