"""Case runs and image sweeps over a configured grid."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .codec import Decoded, Image2x2, RotationTask, all_images, decode, digital_oracle, encode
from .config import ExperimentConfig, TaskSpec
from .grid_model import ControlProgram, GridError, GridSpec
from .steady_state import DEFAULT_SETTINGS, SolveSettings, delta_currents
from .weight_compiler import Calibration, calibrate, compile_program, compile_secondary_offsets

SUPERPOSITION_TOL = 1e-9


class CaseError(GridError):
    """A case failed; the message names the case and the failing module."""


@dataclass(frozen=True)
class CaseResult:
    image: Image2x2
    task: str
    delta_i: tuple[float, ...]
    decoded: int
    expected: int
    residual: float

    @property
    def ok(self) -> bool:
        return self.decoded == self.expected


@dataclass(frozen=True)
class TaskSweep:
    task: str
    weights: tuple[float, ...]
    anchor: int
    delta_r: tuple[float, ...]
    v_sec: tuple[float, ...]
    kappa: float
    cases: tuple[CaseResult, ...]

    def heatmap(self) -> np.ndarray:
        """Rows: images in sweep order; columns: DERs."""
        return np.array([c.delta_i for c in self.cases], dtype=float)


@dataclass(frozen=True)
class SweepReport:
    grid_fingerprint: str
    sections: tuple[TaskSweep, ...]

    @property
    def cases(self) -> list[CaseResult]:
        return [c for s in self.sections for c in s.cases]


def grid_fingerprint(grid: GridSpec) -> str:
    doc = [[d.v_ref, d.r_droop, d.r_line, d.r_load] for d in grid.ders]
    return hashlib.sha256(json.dumps(doc).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PreparedTask:
    spec: TaskSpec
    program: ControlProgram
    calibration: Calibration


def prepare(config: ExperimentConfig, task_name: str, settings: SolveSettings = DEFAULT_SETTINGS) -> PreparedTask:
    """Build the control program for a task (compiled, or from overrides)."""
    spec = config.task(task_name)
    grid = config.grid
    try:
        override = config.override(spec.name)
        if override is None:
            program = compile_program(grid, spec.weight_task(), settings)
        else:
            v_sec = override.v_sec
            if v_sec is None:
                v_sec = compile_secondary_offsets(grid, override.delta_r, settings)
            program = ControlProgram(override.delta_r, v_sec, (0.0,) * grid.n_upstream)
        calibration = calibrate(grid, program, spec.weight_task(), settings)
    except GridError as err:
        raise CaseError(f"task {spec.name}: {type(err).__module__}: {err}") from err
    return PreparedTask(spec, program, calibration)


def expected_value(image: Image2x2, spec: TaskSpec) -> int:
    if spec.direction is not None:
        return digital_oracle(image, RotationTask(spec.direction))
    total = sum(w * b for w, b in zip(spec.weights, image.bits))
    if total != int(total):
        raise CaseError(f"task {spec.name}: weights do not produce integer outputs")
    return int(total)


def _evaluate(config, prepared: PreparedTask, image: Image2x2, settings) -> CaseResult:
    grid = config.grid
    if grid.n_upstream != 4:
        raise CaseError(f"image {image}: 2x2 images need exactly 4 upstream DERs, grid has {grid.n_upstream}")
    program = prepared.program.with_input(encode(image, config.amplitude))
    try:
        di = delta_currents(grid, program, settings)
        # Responses scale with the step amplitude; decode in unit steps.
        decoded: Decoded = decode(di[-1] / config.amplitude, prepared.calibration)
    except GridError as err:
        raise CaseError(f"image {image}, task {prepared.spec.name}: {type(err).__module__}: {err}") from err
    return CaseResult(
        image=image,
        task=prepared.spec.name,
        delta_i=tuple(float(x) for x in di),
        decoded=decoded.value,
        expected=expected_value(image, prepared.spec),
        residual=decoded.residual,
    )


def run_case(
    config: ExperimentConfig,
    image: Image2x2 | str,
    task_name: str,
    settings: SolveSettings = DEFAULT_SETTINGS,
) -> CaseResult:
    if isinstance(image, str):
        image = Image2x2.parse(image)
    return _evaluate(config, prepare(config, task_name, settings), image, settings)


def _check_superposition(results: dict[str, CaseResult], task: str) -> None:
    one_hot = {k: np.array(results[s].delta_i) for k, s in enumerate(("1000", "0100", "0010", "0001"))}
    for bits, res in results.items():
        expected = sum((one_hot[k] for k, b in enumerate(bits) if b == "1"), np.zeros(len(res.delta_i)))
        gap = np.abs(np.array(res.delta_i) - expected).max()
        if gap > SUPERPOSITION_TOL:
            raise CaseError(f"image {bits}, task {task}: superposition gap {gap:.3e} A")


def sweep_task(
    config: ExperimentConfig,
    task_name: str,
    settings: SolveSettings = DEFAULT_SETTINGS,
) -> TaskSweep:
    """Run all 16 images, checking decode and superposition as it goes."""
    prepared = prepare(config, task_name, settings)
    results: dict[str, CaseResult] = {}
    for image in all_images():
        res = _evaluate(config, prepared, image, settings)
        if not res.ok:
            raise CaseError(f"image {image}, task {res.task}: decoded {res.decoded}, expected {res.expected}")
        results[str(image)] = res
    _check_superposition(results, prepared.spec.name)
    return TaskSweep(
        task=prepared.spec.name,
        weights=prepared.spec.weights,
        anchor=prepared.spec.anchor,
        delta_r=prepared.program.delta_r,
        v_sec=prepared.program.v_sec,
        kappa=prepared.calibration.kappa,
        cases=tuple(results.values()),
    )


def sweep(
    config: ExperimentConfig,
    task_name: str | None = None,
    settings: SolveSettings = DEFAULT_SETTINGS,
) -> SweepReport:
    """Sweep one task, or every task in the configuration when ``task_name`` is None."""
    names = [t.name for t in config.tasks] if task_name is None else [task_name]
    return SweepReport(
        grid_fingerprint=grid_fingerprint(config.grid),
        sections=tuple(sweep_task(config, n, settings) for n in names),
    )
