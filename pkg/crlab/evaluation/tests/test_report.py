import io
import math

import numpy as np
import pytest
from astropy.table import Table

from crlab.evaluation import REPORT_COLUMNS, ResultTable, aggregate_results, emit_report

VIDEO_ROWS = [
    ("Reconstruction (TDRL)", 0.25, 0.82),
    ("Contrastive Learning", 0.36, 0.92),
    ("Next-Frame Prediction", 0.24, 0.82),
    ("Mid-Latent Reconstruction", 0.08, 0.69),
    ("Prototype-based Learning", 0.16, 0.80),
    ("Masked Reconstruction", 0.08, 0.72),
]


def rows_for(cells, seeds=1, status="ok"):
    return [
        {
            "task": task,
            "constraint": "temporal_prior",
            "seed": s,
            "mcc": mcc,
            "r2": r2,
            "method": "pearson",
            "status": status,
        }
        for task, mcc, r2 in cells
        for s in range(seeds)
    ]


def video_table():
    order = [(task, "temporal_prior") for task, _, _ in VIDEO_ROWS]
    return aggregate_results(rows_for(VIDEO_ROWS), order)


class TestAggregate:
    def test_video_layout(self):
        table = video_table()
        assert isinstance(table, ResultTable)
        assert list(table["task"]) == [task for task, _, _ in VIDEO_ROWS]
        assert list(table["seeds"]) == [1] * 6
        assert list(table["mcc_std"]) == [0.0] * 6

    def test_markdown(self):
        lines = emit_report(video_table(), "md").splitlines()
        assert lines[0] == "| task | constraint | MCC | R² | seeds | method |"
        assert len(lines) == 8
        assert lines[2] == (
            "| Reconstruction (TDRL) | temporal_prior | 0.25 ± 0.00 | 0.82 ± 0.00 "
            "| 1 | pearson |"
        )
        assert lines[5].startswith(
            "| Mid-Latent Reconstruction | temporal_prior | 0.08 ± 0.00 | 0.69"
        )

    def test_csv_round_trip(self):
        table = video_table()
        text = emit_report(table, "csv")
        assert text.splitlines()[0] == ",".join(REPORT_COLUMNS)
        back = Table.read(text, format="ascii.csv")
        assert list(back["task"]) == list(table["task"])
        assert np.allclose(back["mcc_mean"], table["mcc_mean"])
        assert np.allclose(back["r2_mean"], table["r2_mean"])

    def test_single_cell(self):
        table = aggregate_results(rows_for(VIDEO_ROWS[:1]))
        assert len(table) == 1
        assert len(emit_report(table, "md").splitlines()) == 3

    def test_seed_spread(self):
        rows = rows_for([("Reconstruction", 0.2, 0.5)], seeds=1)
        rows += rows_for([("Reconstruction", 0.4, 0.7)], seeds=1)
        table = aggregate_results(rows)
        assert table["mcc_mean"][0] == pytest.approx(0.3)
        assert table["mcc_std"][0] == pytest.approx(math.sqrt(0.02))
        assert table["seeds"][0] == 2

    def test_order_independent(self):
        rows = rows_for(VIDEO_ROWS, seeds=2)
        a = aggregate_results(rows)
        b = aggregate_results(rows[::-1])
        assert emit_report(a) == emit_report(b)

    def test_failed_cells(self):
        rows = rows_for(VIDEO_ROWS[:1]) + rows_for(VIDEO_ROWS[1:2], status="failed")
        rows.append(dict(rows_for(VIDEO_ROWS[:1])[0], seed=1, status="failed"))
        table = aggregate_results(rows)
        by_task = {row["task"]: row for row in table}
        assert by_task["Contrastive Learning"]["status"] == "failed"
        assert by_task["Contrastive Learning"]["seeds"] == 0
        assert by_task["Reconstruction (TDRL)"]["status"] == "partial"
        assert "failed" in emit_report(table, "md")

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate_results([])

    def test_markdown_writer(self):
        buffer = io.StringIO()
        video_table().write(buffer, format="markdown")
        assert buffer.getvalue().startswith("| task |")
