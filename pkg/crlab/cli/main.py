"""
``crlab`` command line.

Exit codes: 0 on success, 2 for configuration and schema errors, 3 for
I/O errors, 4 when training diverges or fails otherwise, or every grid
cell fails.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from crlab.evaluation import ResultTable, aggregate_results, emit_report
from crlab.nets import UnknownEnvironmentError
from crlab.scm import Dataset, save_dataset
from crlab.training import (
    GRID_NAME,
    RECORD_NAME,
    ExperimentConfig,
    GridResult,
    RecordSchemaError,
    RunRecord,
    build_dataset,
    grid_run,
    read_grid_rows,
    train_run,
)
from crlab.utils.files import PathLike, atomic_write
from crlab.utils.types import GridRow

from .config import ConfigError, load_config

__all__ = [
    "main",
    "build_parser",
    "cmd_generate",
    "cmd_train",
    "cmd_grid",
    "cmd_report",
    "EXIT_CONFIG",
    "EXIT_IO",
    "EXIT_RUN",
]

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_RUN = 4

REPORT_FORMATS = ("csv", "md")


def _default_out(config: ExperimentConfig) -> Path:
    return Path("runs") / config.config_hash[:12]


def _write_reports(table: ResultTable, out: Path):
    for fmt, suffix in (("csv", "csv"), ("md", "md")):
        atomic_write(out / f"report.{suffix}", emit_report(table, fmt))


def cmd_generate(config: ExperimentConfig, out: PathLike) -> Dataset:
    """Generate the dataset of `config` into the file `out`"""
    ds = build_dataset(config.data, config.data_seed)
    save_dataset(out, ds)
    print(json.dumps(dict(ds.summary(), path=str(out)), sort_keys=True))
    return ds


def cmd_train(config: ExperimentConfig, out: Optional[PathLike] = None) -> RunRecord:
    """
    Train `config` into the run directory `out`, which receives the record,
    the final checkpoint and a one-row report.
    """
    target = Path(out) if out is not None else _default_out(config)
    record = train_run(config, target)
    _write_reports(aggregate_results([record.result_row()]), target)
    report = record.final
    assert report is not None
    print(f"mcc {report.mcc:.6f}")
    print(f"r2 {'nan' if report.r2 is None else f'{report.r2:.6f}'}")
    return record


def cmd_grid(
    config: ExperimentConfig,
    out: Optional[PathLike] = None,
    jobs: Optional[int] = None,
    format: str = "md",
) -> GridResult:
    """Run the grid of `config`, writing per-cell runs and both reports"""
    if config.grid is None:
        raise ConfigError("The configuration has no grid section")
    target = Path(out) if out is not None else _default_out(config)
    result = grid_run(config, target, jobs)
    _write_reports(result.table, target)
    print(emit_report(result.table, format))
    return result


def _rows_of(path: Path) -> List[GridRow]:
    if path.is_file():
        if path.name == GRID_NAME:
            return read_grid_rows(path)
        return [RunRecord.read(path).result_row()]
    if (path / GRID_NAME).is_file():
        return read_grid_rows(path / GRID_NAME)
    records = sorted(path.rglob(RECORD_NAME))
    if not records:
        raise FileNotFoundError(f"No {RECORD_NAME} or {GRID_NAME} under {path}")
    return [RunRecord.read(r).result_row() for r in records]


def cmd_report(paths: Iterable[PathLike], format: str = "md") -> ResultTable:
    """
    Merge the runs and grids found under `paths` into one table, in an order
    independent of the order of `paths`.

    :raises RecordSchemaError: A record or grid has another layout version
    """
    rows: List[GridRow] = []
    for path in paths:
        rows += _rows_of(Path(path))
    rows.sort(key=lambda r: (r["task"], r["constraint"], r["seed"]))
    table = aggregate_results(rows)
    print(emit_report(table, format))
    return table


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crlab",
        description="Task × constraint representation learning experiments.",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def configured(name: str, help: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help)
        sub.add_argument(
            "--config", required=True, help="JSON configuration file or preset name"
        )
        sub.add_argument("--out", default=None, help="Output file or directory")
        sub.add_argument("--seed", type=int, default=None, help="Override run.seed")
        return sub

    configured("generate", "Generate the dataset of a configuration")
    configured("train", "Train and evaluate one configuration")
    grid = configured("grid", "Run the task × constraint grid of a configuration")
    grid.add_argument("--jobs", type=int, default=None, help="Parallel grid cells")
    grid.add_argument("--format", choices=REPORT_FORMATS, default="md")
    report = commands.add_parser("report", help="Merge run directories")
    report.add_argument("paths", nargs="+", help="Run or grid directories")
    report.add_argument("--format", choices=REPORT_FORMATS, default="md")
    return parser


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "report":
        cmd_report(args.paths, args.format)
        return 0
    config = load_config(args.config, args.seed)
    if args.command == "generate":
        if args.out is None:
            raise ConfigError("generate needs --out")
        cmd_generate(config, args.out)
    elif args.command == "train":
        cmd_train(config, args.out)
    elif args.command == "grid":
        result = cmd_grid(config, args.out, args.jobs, args.format)
        if not result.succeeded:
            logger.error("Every grid cell failed")
            return EXIT_RUN
    return 0


_LEVELS: Dict[int, int] = {0: logging.WARNING, 1: logging.INFO}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=_LEVELS.get(args.verbose, logging.DEBUG),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return _dispatch(args)
    except (ConfigError, RecordSchemaError) as err:
        logger.error("%s", err)
        return EXIT_CONFIG
    except OSError as err:
        logger.error("%s", err)
        return EXIT_IO
    except FloatingPointError as err:
        logger.error("%s", err)
        return EXIT_RUN
    except (ValueError, UnknownEnvironmentError) as err:
        logger.error("Invalid configuration: %s", err)
        return EXIT_CONFIG
    except Exception as err:
        logger.error("Run failed: %s: %s", type(err).__name__, err)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
