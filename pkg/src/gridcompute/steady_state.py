"""Steady-state solution of the programmed microgrid.

Two independent routes are provided: a dense nodal solve over the unknown
bus voltages and the PCC voltage, and the closed-form downstream current
obtained by eliminating everything but the PCC.  They must agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .grid_model import (
    ControlProgram,
    DerSpec,
    GridError,
    GridSpec,
    OperatingPoint,
    ValidationError,
    ValidationReport,
    Violation,
    validate,
)

# Pivot magnitude, relative to the largest matrix entry, below which the
# nodal matrix is reported as singular.
PIVOT_TOL = 1e-13


class SingularSystemError(GridError):
    pass


class ConsistencyError(GridError):
    pass


@dataclass(frozen=True)
class SolveSettings:
    residual_tol: float = 1e-9

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError(f"residual_tol must be > 0, got {self.residual_tol}")


DEFAULT_SETTINGS = SolveSettings()


def lambda_of(der: DerSpec, delta_r: float) -> float:
    """Droop/load interaction factor ``1 - (r_droop + delta_r) / r_load``."""
    return 1.0 - (der.r_droop + delta_r) / der.r_load


def effective_reference(grid: GridSpec, program: ControlProgram) -> np.ndarray:
    """Per-DER reference after adding secondary offsets and input steps."""
    v_ref = grid.column("v_ref") + program.array("v_sec")
    v_ref[:-1] += program.array("dv_ref")
    return v_ref


def _assemble(grid: GridSpec, program: ControlProgram) -> np.ndarray:
    # Unknowns: x = [V_1..V_N, V_down, V_pcc].
    n = grid.n_upstream
    r_eff = grid.column("r_droop") + program.array("delta_r")
    r_line = grid.column("r_line")
    r_load = grid.column("r_load")

    a = np.zeros((n + 2, n + 2))
    pcc = n + 1
    # Droop rows.  Upstream: i_k = (V_k - V_pcc)/r_k + V_k/R_load,k.
    # Downstream: i_5 = -(V_pcc - V_5)/r_5 + V_5/R_load,5, the same form.
    rows = np.arange(n + 1)
    a[rows, rows] = 1.0 - r_eff / r_line - r_eff / r_load
    a[rows, pcc] = r_eff / r_line
    # KCL at the PCC, in conductance form.
    g = 1.0 / r_line
    a[pcc, : n + 1] = g
    a[pcc, pcc] = -g.sum()
    return a


def solve_batch(
    grid: GridSpec,
    program: ControlProgram,
    inputs: Sequence[Sequence[float]],
    settings: SolveSettings = DEFAULT_SETTINGS,
) -> list[OperatingPoint]:
    """Solve one programmed grid under several input-step vectors.

    The input steps only enter the right-hand side, so every row of
    ``inputs`` (replacing ``program.dv_ref``) shares a single factorisation.
    """
    programs = [program.with_input(dv) for dv in inputs]
    if not programs:
        return []
    # Only the first program needs the full check; the others differ in dv_ref alone.
    validate(grid, programs[0]).raise_for_violations()
    for p in programs[1:]:
        if len(p.dv_ref) != grid.n_upstream or not np.all(np.isfinite(p.dv_ref)):
            raise ValidationError(
                ValidationReport((Violation("dimension", None, f"bad input vector {p.dv_ref}"),))
            )
    a = _assemble(grid, program)
    lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    scale = np.abs(a).max()
    worst = int(np.argmin(pivots))
    if pivots[worst] <= PIVOT_TOL * scale:
        raise SingularSystemError(
            f"nodal matrix is singular: pivot {worst} is {pivots[worst]:.3e} (scale {scale:.3e})"
        )

    n = grid.n_upstream
    refs = np.array([effective_reference(grid, p) for p in programs])
    rhs = np.zeros((n + 2, len(programs)))
    rhs[: n + 1] = refs.T
    x = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)

    r_line = grid.column("r_line")
    r_load = grid.column("r_load")
    out = []
    for j, p in enumerate(programs):
        v = x[: n + 1, j]
        v_pcc = float(x[n + 1, j])
        line = (v - v_pcc) / r_line  # positive towards the PCC
        op = OperatingPoint(v=v, i=line + v / r_load, i_in=line[:n], i_out_down=float(-line[n]), v_pcc=v_pcc)
        check_residuals(grid, p, op, settings)
        out.append(op)
    return out


def solve_nodal(
    grid: GridSpec,
    program: ControlProgram,
    settings: SolveSettings = DEFAULT_SETTINGS,
) -> OperatingPoint:
    """Solve the full steady state with a pivoted LU factorisation.

    Raises:
        ValidationError: the program violates a grid/program invariant.
        SingularSystemError: the nodal matrix has a near-zero pivot.
        ConsistencyError: the solution fails the residual checks.
    """
    return solve_batch(grid, program, [program.dv_ref], settings)[0]


def residuals(grid: GridSpec, program: ControlProgram, op: OperatingPoint) -> dict[str, float]:
    """Scaled worst-case residual of each physical law at ``op``."""
    r_line = grid.column("r_line")
    r_load = grid.column("r_load")
    r_eff = grid.column("r_droop") + program.array("delta_r")
    v_ref = effective_reference(grid, program)

    # Line currents signed towards the PCC, downstream included.
    line = np.append(op.i_in, -op.i_out_down)
    i_scale = max(1.0, float(np.abs(op.i).max()))

    kcl = abs(op.i_in.sum() - op.i_out_down) / max(1.0, abs(op.i_out_down))
    ohm = float(np.abs((op.v - op.v_pcc) / r_line - line).max()) / i_scale
    droop = float(np.abs(op.v - v_ref - r_eff * op.i).max()) / max(1.0, float(np.abs(v_ref).max()))
    load = float(np.abs(line - (op.i - op.v / r_load)).max()) / i_scale
    return {"kcl": kcl, "ohm": ohm, "droop": droop, "load": load}


def check_residuals(
    grid: GridSpec,
    program: ControlProgram,
    op: OperatingPoint,
    settings: SolveSettings = DEFAULT_SETTINGS,
) -> None:
    bad = {k: r for k, r in residuals(grid, program, op).items() if not r <= settings.residual_tol}
    if bad:
        detail = ", ".join(f"{k}={r:.3e}" for k, r in bad.items())
        raise ConsistencyError(f"solution violates residual tolerance {settings.residual_tol:g}: {detail}")


@dataclass(frozen=True)
class ReducedNetwork:
    inv_den: np.ndarray  # 1 / (r_k lambda_k - R_eff,k), upstream
    lam: np.ndarray  # lambda_k, upstream
    lam_down: float
    den_down: float  # r_5 lambda_5 - R_eff,5
    output_scaling: float  # 1 + sum(lambda_k / den_k) * den_5 / lambda_5


def reduce_network(grid: GridSpec, program: ControlProgram) -> ReducedNetwork:
    """Collapse every branch onto the PCC; shared by the closed-form routes."""
    validate(grid, program).raise_for_violations()
    n = grid.n_upstream
    r_eff = grid.column("r_droop") + program.array("delta_r")
    lam = 1.0 - r_eff / grid.column("r_load")
    den = grid.column("r_line") * lam - r_eff
    inv_den = 1.0 / den[:n]
    total = float(np.sum(lam[:n] * inv_den))
    output_scaling = 1.0 + total * den[n] / lam[n]
    if abs(output_scaling) <= 1e-12 * max(1.0, abs(total * den[n] / lam[n])):
        raise SingularSystemError(f"closed-form denominator vanishes ({output_scaling:.3e})")
    return ReducedNetwork(inv_den, lam[:n], float(lam[n]), float(den[n]), output_scaling)


def closed_form_downstream(grid: GridSpec, program: ControlProgram) -> tuple[float, float]:
    """Downstream line current and downstream DER current in closed form.

    Returns ``(i_out_down, i_down)``.
    """
    red = reduce_network(grid, program)
    n = grid.n_upstream
    v_ref = effective_reference(grid, program)
    v_down = v_ref[n]
    numerator = float(np.dot(red.inv_den, v_ref[:n])) - float(
        np.sum(red.lam * red.inv_den)
    ) * v_down / red.lam_down
    i_out_down = numerator / red.output_scaling
    i_down = (-i_out_down + v_down / grid.downstream.r_load) / red.lam_down
    return i_out_down, i_down


def delta_currents(
    grid: GridSpec,
    program: ControlProgram,
    settings: SolveSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """DER current deviations caused by the program's input steps."""
    stepped, rated = solve_batch(grid, program, [program.dv_ref, np.zeros(grid.n_upstream)], settings)
    return stepped.i - rated.i
