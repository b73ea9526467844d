"""
`RunRecord`: what a training run leaves behind, persisted as JSON.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from crlab.evaluation import EvalReport
from crlab.utils.files import PathLike, atomic_write
from crlab.utils.types import GridRow

__all__ = ["RunRecord", "RECORD_SCHEMA", "RecordSchemaError"]

#: Version of the record layout
RECORD_SCHEMA = 1


class RecordSchemaError(ValueError):
    pass


@dataclass
class RunRecord:
    """
    :param traces: ``step``, ``total`` and one column per loss term, one
        entry per logged step
    :param evaluations: Evaluation reports with the ``step`` they were taken at
    :param checkpoints: Checkpoint files written by the run
    :param steps: Number of optimisation steps completed
    :param task: Task label of the run in reports
    :param constraint: Constraint label of the run in reports
    """

    config_hash: str
    seed: int
    data_seed: int
    steps: int = 0
    task: str = ""
    constraint: str = ""
    traces: Dict[str, List[float]] = field(default_factory=dict)
    evaluations: List[Dict[str, Any]] = field(default_factory=list)
    checkpoints: List[str] = field(default_factory=list)
    schema_version: int = RECORD_SCHEMA

    def log(self, step: int, breakdown: Dict[str, float]):
        """Append one traced step, ``breakdown`` holding the total and terms"""
        self.traces.setdefault("step", []).append(step)
        for name, value in breakdown.items():
            self.traces.setdefault(name, []).append(float(value))

    def add_evaluation(self, step: int, report: EvalReport):
        self.evaluations.append(dict(report.to_dict(), step=step))

    @property
    def final(self) -> Optional[EvalReport]:
        """Last evaluation report"""
        if not self.evaluations:
            return None
        d = dict(self.evaluations[-1])
        d.pop("step")
        return EvalReport.from_dict(d)

    def result_row(self) -> GridRow:
        """Grid report row of the final evaluation"""
        report = self.final
        if report is None:
            raise ValueError("The run has not been evaluated")
        return {
            "task": self.task,
            "constraint": self.constraint,
            "seed": self.seed,
            "mcc": report.mcc,
            "r2": report.r2,
            "method": report.method,
            "status": "ok",
        }

    @property
    def logged_steps(self) -> int:
        return len(self.traces.get("step", []))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "RunRecord":
        version = d.get("schema_version")
        if version != RECORD_SCHEMA:
            raise RecordSchemaError(
                f"Record schema version {version}, expected {RECORD_SCHEMA}"
            )
        return cls(**d)

    def write(self, path: PathLike):
        atomic_write(path, json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def read(cls, path: PathLike) -> "RunRecord":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_pandas(self) -> pd.DataFrame:
        """Loss traces indexed by step"""
        frame = pd.DataFrame(self.traces)
        return frame.set_index("step") if "step" in frame else frame

    def plot_traces(self, terms: Optional[List[str]] = None, *args, **kwargs):
        """
        Plot the traced loss terms against the step.
        Uses the same arguments as `matplotlib.pyplot.plot`.
        """
        from matplotlib import pyplot as plt

        frame = self.to_pandas()
        lines = []
        for name in terms or list(frame.columns):
            lines += plt.plot(frame.index, frame[name], *args, label=name, **kwargs)
        plt.xlabel("step")
        plt.ylabel("loss")
        plt.legend()
        return lines
