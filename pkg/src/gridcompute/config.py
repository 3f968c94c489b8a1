"""JSON experiment configuration.

Layout::

    {
      "grid": {"upstream": [{"v_ref": .., "r_droop": .., "r_line": .., "r_load": ..}, ...],
               "downstream": {...}},
      "task": {"directions": ["clockwise", "counterclockwise"]},
      "encoding": {"amplitude": 1.0},
      "overrides": {"clockwise": {"delta_r": [...], "v_sec": [...]}}
    }

``task`` may instead hold ``{"direction": "cw"}`` or
``{"weights": [w1, .., wN], "anchor": k}``.  A missing ``grid`` means the
canonical five-bus grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .codec import Direction, RotationTask
from .grid_model import DerSpec, GridError, GridSpec, canonical_grid
from .weight_compiler import CompileError, WeightTask

CUSTOM = "custom"
_DER_FIELDS = ("v_ref", "r_droop", "r_line", "r_load")


class ConfigError(GridError):
    pass


@dataclass(frozen=True)
class TaskSpec:
    """A named weight task; rotation tasks also carry their direction."""

    name: str
    weights: tuple[float, ...]
    anchor: int
    direction: Direction | None = None

    @classmethod
    def rotation(cls, direction: Direction | str) -> "TaskSpec":
        rot = RotationTask(Direction.parse(direction) if isinstance(direction, str) else direction)
        return cls(rot.direction.value, tuple(float(w) for w in rot.weights), rot.anchor, rot.direction)

    def weight_task(self) -> WeightTask:
        return WeightTask(self.weights, self.anchor)


@dataclass(frozen=True)
class Override:
    delta_r: tuple[float, ...]
    v_sec: tuple[float, ...] | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridSpec = field(default_factory=canonical_grid)
    tasks: tuple[TaskSpec, ...] = (
        TaskSpec.rotation(Direction.CLOCKWISE),
        TaskSpec.rotation(Direction.COUNTERCLOCKWISE),
    )
    amplitude: float = 1.0
    overrides: tuple[tuple[str, Override], ...] = ()

    def task(self, name: str) -> TaskSpec:
        try:
            key = Direction.parse(name).value
        except ValueError:
            key = name
        for t in self.tasks:
            if t.name == key:
                return t
        # Rotation tasks are always available even when not listed.
        if key in {d.value for d in Direction}:
            return TaskSpec.rotation(key)
        raise ConfigError(f"no task named {name!r} in configuration")

    def override(self, name: str) -> Override | None:
        return dict(self.overrides).get(name)


def _der(doc: Any, where: str) -> DerSpec:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(doc) - set(_DER_FIELDS)
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")
    try:
        der = DerSpec(**{k: float(v) for k, v in doc.items()})
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{where}: {err}") from None
    bad = der.violations()
    if bad:
        raise ConfigError(f"{where}: " + "; ".join(bad))
    return der


def _floats(doc: Any, where: str) -> tuple[float, ...]:
    if not isinstance(doc, list):
        raise ConfigError(f"{where}: expected a list of numbers")
    try:
        return tuple(float(x) for x in doc)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a list of numbers") from None


def _tasks(doc: Any) -> tuple[TaskSpec, ...]:
    if doc is None:
        return ExperimentConfig.tasks
    if not isinstance(doc, dict):
        raise ConfigError("task: expected an object")
    try:
        if "weights" in doc:
            weights = _floats(doc["weights"], "task.weights")
            anchor = int(doc.get("anchor", 1))
            WeightTask(weights, anchor)
            return (TaskSpec(str(doc.get("name", CUSTOM)), weights, anchor),)
        if "direction" in doc:
            return (TaskSpec.rotation(doc["direction"]),)
        return tuple(TaskSpec.rotation(d) for d in doc.get("directions", []))
    except (ValueError, CompileError) as err:
        raise ConfigError(f"task: {err}") from None


def parse_config(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(doc) - {"grid", "task", "encoding", "overrides"}
    if unknown:
        raise ConfigError(f"unknown top-level sections {sorted(unknown)}")

    grid_doc = doc.get("grid")
    if grid_doc is None or grid_doc == "canonical":
        grid = canonical_grid()
    else:
        if not isinstance(grid_doc, dict) or "upstream" not in grid_doc or "downstream" not in grid_doc:
            raise ConfigError("grid: needs 'upstream' (list) and 'downstream' (object)")
        if not isinstance(grid_doc["upstream"], list) or not grid_doc["upstream"]:
            raise ConfigError("grid.upstream: expected a non-empty list")
        grid = GridSpec(
            tuple(_der(d, f"grid.upstream[{i}]") for i, d in enumerate(grid_doc["upstream"])),
            _der(grid_doc["downstream"], "grid.downstream"),
        )

    tasks = _tasks(doc.get("task"))
    for t in tasks:
        if len(t.weights) != grid.n_upstream:
            raise ConfigError(f"task {t.name}: {len(t.weights)} weights for {grid.n_upstream} upstream DERs")

    amplitude = doc.get("encoding", {}).get("amplitude", 1.0)
    try:
        amplitude = float(amplitude)
    except (TypeError, ValueError):
        raise ConfigError("encoding.amplitude: expected a number") from None
    if not amplitude > 0:
        raise ConfigError("encoding.amplitude must be positive")

    overrides = []
    for name, body in sorted((doc.get("overrides") or {}).items()):
        try:
            key = Direction.parse(name).value
        except ValueError:
            key = name
        if not isinstance(body, dict) or "delta_r" not in body:
            raise ConfigError(f"overrides.{name}: needs at least 'delta_r'")
        delta_r = _floats(body["delta_r"], f"overrides.{name}.delta_r")
        v_sec = _floats(body["v_sec"], f"overrides.{name}.v_sec") if body.get("v_sec") is not None else None
        for label, vec in (("delta_r", delta_r), ("v_sec", v_sec)):
            if vec is not None and len(vec) != grid.n_upstream + 1:
                raise ConfigError(f"overrides.{name}.{label}: expected {grid.n_upstream + 1} entries")
        overrides.append((key, Override(delta_r, v_sec)))

    return ExperimentConfig(grid, tasks, amplitude, tuple(overrides))


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path} is not valid JSON: {err}") from None
    return parse_config(doc)


def _der_doc(der: DerSpec) -> dict:
    return {k: getattr(der, k) for k in _DER_FIELDS}


def config_to_dict(config: ExperimentConfig) -> dict:
    """Inverse of :func:`parse_config`."""
    if len(config.tasks) == 1 and config.tasks[0].direction is None:
        t = config.tasks[0]
        task = {"name": t.name, "weights": list(t.weights), "anchor": t.anchor}
    else:
        task = {"directions": [t.direction.value for t in config.tasks if t.direction is not None]}
    doc = {
        "grid": {
            "upstream": [_der_doc(d) for d in config.grid.upstream],
            "downstream": _der_doc(config.grid.downstream),
        },
        "task": task,
        "encoding": {"amplitude": config.amplitude},
    }
    if config.overrides:
        doc["overrides"] = {
            name: {"delta_r": list(o.delta_r), "v_sec": None if o.v_sec is None else list(o.v_sec)}
            for name, o in config.overrides
        }
    return doc


def dump_config(config: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(config), indent=2) + "\n"
