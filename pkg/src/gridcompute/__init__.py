"""Steady-state DC microgrid that computes weighted sums through droop control."""

from .codec import Direction, Image2x2, RotationTask, decode, digital_oracle, encode
from .config import ExperimentConfig, load_config, parse_config
from .experiment import run_case, sweep
from .grid_model import (
    ControlProgram,
    DerSpec,
    GridError,
    GridSpec,
    OperatingPoint,
    canonical_grid,
    validate,
)
from .steady_state import (
    SolveSettings,
    closed_form_downstream,
    delta_currents,
    lambda_of,
    solve_batch,
    solve_nodal,
)
from .verify import verify_paper
from .weight_compiler import (
    Calibration,
    WeightTask,
    calibrate,
    compile_droop_offsets,
    compile_program,
    compile_secondary_offsets,
    equivalent_admittance,
    measure_effective_weights,
)

__version__ = "0.1.0"
