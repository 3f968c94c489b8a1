"""Compile target weights into droop-gain and reference offsets.

The downstream current responds to a step on upstream reference ``k`` with a
gain proportional to ``1 / (r_k * lambda_k - R_eff,k)``.  That denominator is
affine in the droop offset, so a target weight ratio can be hit exactly by
solving one linear equation per DER.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid_model import ControlProgram, GridError, GridSpec, validate, weight_denominator
from .steady_state import (
    DEFAULT_SETTINGS,
    SolveSettings,
    reduce_network,
    solve_batch,
    solve_nodal,
)


class CompileError(GridError):
    pass


class CalibrationError(GridError):
    pass


@dataclass(frozen=True)
class WeightTask:
    """Target weights for the upstream DERs.

    ``anchor`` is the 1-based upstream DER whose droop offset stays at zero;
    it fixes the overall scale of the compiled weights.
    """

    weights: tuple[float, ...]
    anchor: int = 1

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if not w:
            raise CompileError("weight vector is empty")
        bad = [k for k, x in enumerate(w, start=1) if not (np.isfinite(x) and x > 0)]
        if bad:
            raise CompileError(f"weights must be strictly positive; offending DERs {bad}")
        if not 1 <= self.anchor <= len(w):
            raise CompileError(f"anchor {self.anchor} outside 1..{len(w)}")

    @property
    def anchor_weight(self) -> float:
        return self.weights[self.anchor - 1]


@dataclass(frozen=True)
class Calibration:
    """Downstream current change per unit weight for a unit input step."""

    kappa: float
    anchor: int

    def __post_init__(self):
        if self.kappa == 0 or not np.isfinite(self.kappa):
            raise CalibrationError(f"calibration constant must be finite and non-zero, got {self.kappa}")


def compile_droop_offsets(grid: GridSpec, task: WeightTask) -> tuple[float, ...]:
    """Droop-gain offsets realising ``task.weights`` (downstream entry is 0)."""
    n = grid.n_upstream
    if len(task.weights) != n:
        raise CompileError(f"task has {len(task.weights)} weights for {n} upstream DERs")
    anchor = grid.upstream[task.anchor - 1]
    base = weight_denominator(anchor, 0.0)
    if abs(base) <= 1e-9:
        raise CompileError(f"anchor DER {task.anchor} has a vanishing weight denominator")

    offsets = []
    for k, (der, w) in enumerate(zip(grid.upstream, task.weights), start=1):
        if k == task.anchor:
            offsets.append(0.0)
            continue
        target = base * (task.anchor_weight / w)
        # The denominator falls by (1 + r_line/r_load) per ohm of offset.
        slope = 1.0 + der.r_line / der.r_load
        offsets.append((weight_denominator(der, 0.0) - target) / slope)
    offsets.append(0.0)

    report = validate(grid, ControlProgram(offsets, (0.0,) * (n + 1), (0.0,) * n))
    if not report.ok:
        raise CompileError("compiled offsets are infeasible: " + "; ".join(v.message for v in report.violations))
    return tuple(offsets)


def compile_secondary_offsets(
    grid: GridSpec,
    delta_r: Sequence[float],
    settings: SolveSettings = DEFAULT_SETTINGS,
) -> tuple[float, ...]:
    """Reference offsets ``-delta_r_k * i_k0`` that keep the rated power flow.

    ``i_k0`` is the DER current of the unprogrammed grid.
    """
    n = grid.n_upstream
    programmed = ControlProgram(delta_r, (0.0,) * (n + 1), (0.0,) * n)
    validate(grid, programmed).raise_for_violations()
    baseline = solve_nodal(grid, ControlProgram.zero(grid), settings)
    return tuple(float(x) + 0.0 for x in -np.asarray(programmed.delta_r) * baseline.i)


def compile_program(
    grid: GridSpec,
    task: WeightTask,
    settings: SolveSettings = DEFAULT_SETTINGS,
) -> ControlProgram:
    """Full program (droop and secondary offsets) with no input applied."""
    delta_r = compile_droop_offsets(grid, task)
    v_sec = compile_secondary_offsets(grid, delta_r, settings)
    return ControlProgram(delta_r, v_sec, (0.0,) * grid.n_upstream)


def equivalent_admittance(grid: GridSpec, program: ControlProgram, k: int) -> float:
    """Closed-form sensitivity of the downstream line current to reference ``k``.

    Includes the virtual admittance contributed by every droop gain.  ``k``
    is the 1-based upstream DER number.
    """
    if not 1 <= k <= grid.n_upstream:
        raise IndexError(f"upstream DER index {k} outside 1..{grid.n_upstream}")
    return float(equivalent_admittances(grid, program)[k - 1])


def equivalent_admittances(grid: GridSpec, program: ControlProgram) -> np.ndarray:
    """:func:`equivalent_admittance` for every upstream DER at once."""
    red = reduce_network(grid, program)
    return red.inv_den / red.output_scaling


def unit_responses(
    grid: GridSpec,
    program: ControlProgram,
    settings: SolveSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """Downstream DER current change for a 1 V step on each upstream DER."""
    n = grid.n_upstream
    ops = solve_batch(grid, program, np.vstack([np.zeros(n), np.eye(n)]), settings)
    return np.array([op.i_down for op in ops[1:]]) - ops[0].i_down


def measure_effective_weights(
    grid: GridSpec,
    program: ControlProgram,
    anchor: int = 1,
    anchor_weight: float = 1.0,
    settings: SolveSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """Weights the programmed grid actually applies, scaled so the anchor
    DER reads ``anchor_weight``."""
    resp = unit_responses(grid, program, settings)
    ref = resp[anchor - 1]
    if ref == 0 or not np.isfinite(ref):
        raise CalibrationError(f"anchor DER {anchor} produces no downstream response")
    return resp / ref * anchor_weight


def calibrate(
    grid: GridSpec,
    program: ControlProgram,
    task: WeightTask,
    settings: SolveSettings = DEFAULT_SETTINGS,
) -> Calibration:
    validate(grid, program).raise_for_violations()
    step = np.zeros(grid.n_upstream)
    step[task.anchor - 1] = 1.0
    rated, stepped = solve_batch(grid, program, [np.zeros(grid.n_upstream), step], settings)
    response = stepped.i_down - rated.i_down
    if response == 0:
        raise CalibrationError(f"anchor DER {task.anchor} produces no downstream response")
    return Calibration(float(response) / task.anchor_weight, task.anchor)
