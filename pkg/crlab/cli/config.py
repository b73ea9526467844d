"""
JSON experiment configurations.

A configuration document has the sections ``data``, ``model``,
``objective``, ``optimizer``, ``run``, ``eval`` and optionally ``grid``,
plus its ``schema_version``. Every key is checked before anything runs;
unknown keys are reported with their dotted path.

>>> config = parse_config({
...     "schema_version": 1,
...     "objective": {
...         "task": {"kind": "denoising", "view": {"kind": "corrupt", "noise": 0.2}}
...     },
...     "run": {"steps": 10},
... })
>>> config.objective.task.view.noise, config.run.steps
(0.2, 10)
>>> parse_config({"schema_version": 1, "run": {"step": 10}})
Traceback (most recent call last):
...
crlab.cli.config.ConfigError: Unknown key run.step
"""

import json
import logging
import os
from dataclasses import fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Type, TypeVar

from astropy.utils.data import get_pkg_data_path

from crlab.constraints import ConstraintSpec
from crlab.tasks import TaskSpec, ViewSpec
from crlab.training import (
    ConstraintVariant,
    DataSpec,
    EvalSpec,
    ExperimentConfig,
    GridSpec,
    ModelSpec,
    ObjectiveSpec,
    OptimizerSpec,
    RunSpec,
    TaskVariant,
)
from crlab.utils.files import PathLike
from crlab.utils.types import ConfigDocument

__all__ = [
    "ConfigError",
    "SCHEMA_VERSION",
    "PRESET_ENV",
    "PRESETS",
    "parse_config",
    "load_config",
    "find_preset",
]

logger = logging.getLogger(__name__)

#: Version of the configuration layout
SCHEMA_VERSION = 1

#: Environment variable naming a directory searched before the bundled presets
PRESET_ENV = "CRL_PRESET_DIR"

PRESETS = (
    "smoke_static",
    "identifiability_static",
    "tdrl_video_tasks",
    "imsda_image_tasks",
    "sparsity_tasks",
    "generic_constraints",
)

_SECTIONS = {
    "data": DataSpec,
    "model": ModelSpec,
    "optimizer": OptimizerSpec,
    "run": RunSpec,
    "eval": EvalSpec,
}

T = TypeVar("T")


class ConfigError(ValueError):
    pass


def _mapping(value: Any, where: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise ConfigError(f"{where} must be an object")
    return value


def _check_keys(d: Mapping[str, Any], allowed, where: str):
    for key in d:
        if key not in allowed:
            raise ConfigError(f"Unknown key {where + '.' if where else ''}{key}")


def _build(cls: Type[T], value: Any, where: str, **nested) -> T:
    d = dict(_mapping(value, where))
    _check_keys(d, {f.name for f in fields(cls)}, where)  # type: ignore
    d.update({k: v for k, v in nested.items() if v is not None})
    try:
        return cls(**d)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{where}: {err}") from err


def _task(value: Any, where: str) -> TaskSpec:
    d = _mapping(value, where)
    view = None
    if d.get("view") is not None:
        view = _build(ViewSpec, d["view"], f"{where}.view")
    return _build(TaskSpec, d, where, view=view)


def _constraints(value: Any, where: str) -> List[ConstraintSpec]:
    if not isinstance(value, list):
        raise ConfigError(f"{where} must be a list")
    return [
        _build(ConstraintSpec, c, f"{where}[{i}]") for i, c in enumerate(value)
    ]


def _objective(value: Any) -> ObjectiveSpec:
    d = _mapping(value, "objective")
    _check_keys(d, {"task", "constraints", "pipeline"}, "objective")
    task = _task(d.get("task", {}), "objective.task")
    constraints = _constraints(d.get("constraints", []), "objective.constraints")
    try:
        return ObjectiveSpec(task, constraints, d.get("pipeline", "static_image"))
    except ValueError as err:
        raise ConfigError(f"objective: {err}") from err


def _grid(value: Any) -> GridSpec:
    d = _mapping(value, "grid")
    _check_keys(d, {"tasks", "constraints", "seeds", "jobs"}, "grid")
    tasks = []
    for i, t in enumerate(d.get("tasks", [])):
        where = f"grid.tasks[{i}]"
        _check_keys(_mapping(t, where), {"name", "task"}, where)
        task = _task(t.get("task", {}), f"{where}.task")
        tasks.append(TaskVariant(str(t.get("name", task.kind)), task))
    variants = []
    for i, c in enumerate(d.get("constraints", [])):
        where = f"grid.constraints[{i}]"
        _check_keys(_mapping(c, where), {"name", "constraints"}, where)
        specs = _constraints(c.get("constraints", []), f"{where}.constraints")
        name = c.get("name") or "+".join(s.kind for s in specs) or "none"
        variants.append(ConstraintVariant(str(name), specs))
    try:
        return GridSpec(
            tuple(tasks), tuple(variants), d.get("seeds", 5), d.get("jobs", 1)
        )
    except ValueError as err:
        raise ConfigError(f"grid: {err}") from err


def parse_config(doc: ConfigDocument, seed: Optional[int] = None) -> ExperimentConfig:
    """
    Experiment of a parsed JSON document.

    :param seed: Run seed overriding ``run.seed``
    :raises ConfigError: Unknown key, invalid value or wrong schema version
    """
    data = _mapping(doc, "configuration")
    _check_keys(data, {"schema_version", "grid", "objective", *_SECTIONS}, "")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"Configuration schema version {version}, expected {SCHEMA_VERSION}"
        )
    sections: Dict[str, Any] = {
        name: _build(cls, data.get(name, {}), name) for name, cls in _SECTIONS.items()
    }
    if seed is not None:
        sections["run"] = replace(sections["run"], seed=seed)
    sections["objective"] = _objective(data.get("objective", {}))
    if data.get("grid") is not None:
        sections["grid"] = _grid(data["grid"])
    try:
        return ExperimentConfig(**sections)
    except ValueError as err:
        raise ConfigError(str(err)) from err


def find_preset(name: str) -> Path:
    """
    Path of a configuration: an existing file, or a preset of `PRESET_ENV`
    or of the bundled presets.

    :raises FileNotFoundError: No such file or preset
    """
    path = Path(name)
    if path.is_file():
        return path
    filename = name if name.endswith(".json") else f"{name}.json"
    candidates = []
    if os.environ.get(PRESET_ENV):
        candidates.append(Path(os.environ[PRESET_ENV]) / filename)
    candidates.append(
        Path(get_pkg_data_path("presets", filename, package="crlab.training"))
    )
    for candidate in candidates:
        if candidate.is_file():
            logger.debug("Using preset %s", candidate)
            return candidate
    raise FileNotFoundError(f"No configuration file or preset named {name}")


def load_config(source: PathLike, seed: Optional[int] = None) -> ExperimentConfig:
    """
    Read the configuration `source`, a JSON file or a preset name.

    :raises ConfigError: Malformed JSON or invalid configuration
    :raises FileNotFoundError: No such file or preset
    """
    path = find_preset(str(source))
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path} is not valid JSON: {err}") from err
    return parse_config(doc, seed)
