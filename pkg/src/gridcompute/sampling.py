"""Random valid grids and programs for property checks."""

from __future__ import annotations

import numpy as np

from .grid_model import ControlProgram, DerSpec, GridSpec, validate

R_LINE = (0.01, 2.0)
R_LOAD = (10.0, 1000.0)
R_EFF = (-0.5, 1.0)
R_DROOP = (0.0, 0.5)
V_REF = (200.0, 400.0)


def random_grid(rng: np.random.Generator, n_upstream: int = 4) -> GridSpec:
    size = n_upstream + 1
    columns = zip(
        rng.uniform(*V_REF, size).tolist(),
        rng.uniform(*R_DROOP, size).tolist(),
        rng.uniform(*R_LINE, size).tolist(),
        rng.uniform(*R_LOAD, size).tolist(),
    )
    ders = [DerSpec(*row) for row in columns]
    return GridSpec(tuple(ders[:-1]), ders[-1])


def random_program(rng: np.random.Generator, grid: GridSpec, with_input: bool = True) -> ControlProgram:
    """Offsets chosen so the effective droop gain spans ``R_EFF``."""
    r_eff = rng.uniform(*R_EFF, size=grid.n_upstream + 1)
    delta_r = r_eff - grid.column("r_droop")
    v_sec = rng.uniform(-5.0, 5.0, size=grid.n_upstream + 1)
    dv_ref = rng.uniform(-2.0, 2.0, size=grid.n_upstream) if with_input else np.zeros(grid.n_upstream)
    return ControlProgram(delta_r, v_sec, dv_ref)


def random_valid_case(
    rng: np.random.Generator, n_upstream: int = 4, with_input: bool = True
) -> tuple[GridSpec, ControlProgram]:
    while True:
        grid = random_grid(rng, n_upstream)
        program = random_program(rng, grid, with_input)
        if validate(grid, program).ok:
            return grid, program


def random_weights(rng: np.random.Generator, n: int = 4) -> np.ndarray:
    return rng.uniform(0.2, 10.0, size=n)
