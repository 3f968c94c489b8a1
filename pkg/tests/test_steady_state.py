import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridcompute.grid_model import ControlProgram, DerSpec, GridSpec, ValidationError
from gridcompute.sampling import random_valid_case
from gridcompute.steady_state import (
    ConsistencyError,
    SingularSystemError,
    SolveSettings,
    check_residuals,
    closed_form_downstream,
    delta_currents,
    lambda_of,
    residuals,
    solve_batch,
    solve_nodal,
)

from oracles import branch_solve_program

BASELINE_V = 315.31851
BASELINE_I = 3.185035


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b))


@pytest.mark.parametrize(
    "delta_r, expected, tol",
    [(0.0, 0.998990, 1e-6), (-0.1, 1.0, 0.0), (0.4688, 0.994254, 1e-6)],
)
def test_lambda_of(delta_r, expected, tol):
    der = DerSpec(v_ref=315, r_droop=0.1, r_line=0.67, r_load=99)
    assert lambda_of(der, delta_r) == pytest.approx(expected, abs=tol)


def test_baseline_matches_symmetry_and_dense_oracle(grid):
    op = solve_nodal(grid, ControlProgram.zero(grid))
    # Symmetry: every bus sits at V_ref / (1 - R_d / R_load).
    v_sym = 315.0 / (1 - 0.1 / 99.0)
    np.testing.assert_allclose(op.v, v_sym, rtol=1e-12)
    assert op.v_pcc == pytest.approx(BASELINE_V, abs=1e-4)
    np.testing.assert_allclose(op.v, BASELINE_V, atol=1e-4)
    np.testing.assert_allclose(op.i, BASELINE_I, atol=1e-6)
    np.testing.assert_allclose(op.i_in, 0.0, atol=1e-9)
    assert op.i_out_down == pytest.approx(0.0, abs=1e-9)

    v, v_pcc, i = branch_solve_program(grid, ControlProgram.zero(grid))
    np.testing.assert_allclose(op.v, v, rtol=1e-12)
    np.testing.assert_allclose(op.i, i, rtol=1e-10)
    assert op.v_pcc == pytest.approx(v_pcc, rel=1e-12)


def test_identical_buses_carry_no_line_current(uniform_grid):
    op = solve_nodal(uniform_grid, ControlProgram.zero(uniform_grid))
    np.testing.assert_allclose(op.i_in, 0.0, atol=1e-9)
    assert abs(op.i_out_down) < 1e-9


def test_compiled_program_preserves_baseline(grid, cw_program, ccw_program):
    base = solve_nodal(grid, ControlProgram.zero(grid)).i
    for program in (cw_program, ccw_program):
        np.testing.assert_allclose(solve_nodal(grid, program).i, base, rtol=1e-9, atol=0)


def test_nodal_matches_dense_oracle_on_programmed_inputs(grid, cw_program):
    program = cw_program.with_input((1, 0, 1, 1))
    op = solve_nodal(grid, program)
    v, v_pcc, i = branch_solve_program(grid, program)
    np.testing.assert_allclose(op.v, v, rtol=1e-12)
    np.testing.assert_allclose(op.i, i, rtol=1e-10)


def test_closed_form_on_baseline(grid):
    i_out, i_down = closed_form_downstream(grid, ControlProgram.zero(grid))
    assert i_out == pytest.approx(0.0, abs=1e-9)
    assert i_down == pytest.approx(BASELINE_I, abs=1e-6)


def test_closed_form_with_all_inputs(grid):
    program = ControlProgram.zero(grid).with_input((1, 1, 1, 1))
    op = solve_nodal(grid, program)
    i_out, i_down = closed_form_downstream(grid, program)
    assert rel(i_out, op.i_out_down) < 1e-9
    assert rel(i_down, op.i_down) < 1e-9


def test_closed_form_matches_printed_four_input_formula(grid, cw_program):
    # Term-by-term transcription for N = 4, written out longhand.
    program = cw_program.with_input((1, 0, 0, 1))
    ders = grid.ders
    reff = [d.r_droop + dr for d, dr in zip(ders, program.delta_r)]
    lam = [1 - reff[k] / ders[k].r_load for k in range(5)]
    vref = [ders[k].v_ref + program.v_sec[k] + (program.dv_ref[k] if k < 4 else 0) for k in range(5)]
    scale_in = [1 / (ders[k].r_line * lam[k] - reff[k]) for k in range(4)]
    offset = [lam[k] / (ders[k].r_line * lam[k] - reff[k]) for k in range(4)]
    num = sum(scale_in[k] * vref[k] for k in range(4)) - sum(offset) * vref[4] / lam[4]
    den = 1 + sum(offset) * (ders[4].r_line * lam[4] - reff[4]) / lam[4]
    i_out = num / den
    i5 = (-i_out + vref[4] / ders[4].r_load) / lam[4]
    got = closed_form_downstream(grid, program)
    assert got[0] == pytest.approx(i_out, rel=1e-12)
    assert got[1] == pytest.approx(i5, rel=1e-12)


def test_dual_solver_random_property():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        g, p = random_valid_case(rng)
        op = solve_nodal(g, p)
        i_out, i_down = closed_form_downstream(g, p)
        assert rel(i_out, op.i_out_down) < 1e-9
        assert rel(i_down, op.i_down) < 1e-9


def test_general_upstream_count():
    rng = np.random.default_rng(3)
    for n in (1, 2, 7):
        g, p = random_valid_case(rng, n_upstream=n)
        op = solve_nodal(g, p)
        v, _, i = branch_solve_program(g, p)
        np.testing.assert_allclose(op.i, i, rtol=1e-9, atol=1e-9)
        assert rel(closed_form_downstream(g, p)[1], op.i_down) < 1e-9


def test_residual_invariants_hold(grid, cw_program):
    op = solve_nodal(grid, cw_program.with_input((0, 1, 1, 0)))
    res = residuals(grid, cw_program.with_input((0, 1, 1, 0)), op)
    assert max(res.values()) < 1e-9
    assert abs(op.i_in.sum() - op.i_out_down) <= 1e-9 * max(1, abs(op.i_out_down))
    r_load = np.array([d.r_load for d in grid.ders])
    np.testing.assert_allclose(op.i_in, op.i[:4] - op.v[:4] / r_load[:4], atol=1e-9)
    assert op.i_out_down == pytest.approx(-op.i[4] + op.v[4] / r_load[4], abs=1e-9)


def test_residual_check_rejects_perturbed_point(grid):
    program = ControlProgram.zero(grid)
    op = solve_nodal(grid, program)
    from gridcompute.grid_model import OperatingPoint

    bad = OperatingPoint(op.v + 1e-3, op.i, op.i_in, op.i_out_down, op.v_pcc)
    with pytest.raises(ConsistencyError, match="droop"):
        check_residuals(grid, program, bad)


def test_invalid_program_is_rejected(grid):
    with pytest.raises(ValidationError):
        solve_nodal(grid, ControlProgram([98.9, 0, 0, 0, 0], [0] * 5, [0] * 4))


def test_singular_system_reported():
    # Two branches that cancel: a singular nodal matrix that still passes
    # the per-DER checks.  Search for an effective droop on the downstream DER
    # that zeroes the closed-form denominator.
    from scipy.optimize import brentq

    up = DerSpec(v_ref=300, r_droop=0.0, r_line=1.0, r_load=100.0)
    down0 = DerSpec(v_ref=300, r_droop=0.0, r_line=1.0, r_load=100.0)
    grid = GridSpec((up,), down0)

    def denominator(dr):
        reff_u, reff_d = 0.0, dr
        lam_u, lam_d = 1.0, 1 - reff_d / 100.0
        s = lam_u / (1.0 * lam_u - reff_u)
        return 1 + s * (1.0 * lam_d - reff_d) / lam_d

    root = brentq(denominator, 0.5, 5.0, xtol=1e-15)
    program = ControlProgram([0.0, root], [0.0, 0.0], [0.0])
    with pytest.raises(SingularSystemError):
        solve_nodal(grid, program)
    with pytest.raises(SingularSystemError):
        closed_form_downstream(grid, program)


def test_settings_validation():
    with pytest.raises(ValueError):
        SolveSettings(0.0)


def test_delta_currents_zero_without_input(grid, cw_program):
    np.testing.assert_array_equal(delta_currents(grid, cw_program), np.zeros(5))


def test_delta_currents_frozen_values(grid, cw_program, ccw_program):
    # Frozen from the dense branch-equation oracle in tests/oracles.py.
    np.testing.assert_allclose(
        delta_currents(grid, cw_program.with_input((0, 0, 1, 0))),
        [-5.312215392414, -1.328053848104, 10.086650359333, -2.656107696207, -0.729409113315],
        rtol=1e-9,
    )
    np.testing.assert_allclose(
        delta_currents(grid, ccw_program.with_input((1, 1, 1, 1))),
        [0.189040081132, 0.736212134411, 0.096736506135, 0.342616713167, -1.32243561127],
        rtol=1e-9,
    )


def test_one_hot_ratios_clockwise(grid, cw_program):
    resp = [delta_currents(grid, cw_program.with_input(np.eye(4)[k]))[-1] for k in range(4)]
    np.testing.assert_allclose(np.array(resp) / resp[1], [4, 1, 8, 2], rtol=1e-6)


def test_superposition_pair(grid, cw_program):
    both = delta_currents(grid, cw_program.with_input((1, 1, 0, 0)))
    one = delta_currents(grid, cw_program.with_input((1, 0, 0, 0)))
    two = delta_currents(grid, cw_program.with_input((0, 1, 0, 0)))
    np.testing.assert_allclose(both, one + two, atol=1e-9)


def test_solve_batch_matches_individual_solves(grid, cw_program):
    inputs = np.vstack([np.zeros(4), np.eye(4), np.ones(4)])
    batch = solve_batch(grid, cw_program, inputs)
    for dv, op in zip(inputs, batch):
        single = solve_nodal(grid, cw_program.with_input(dv))
        np.testing.assert_allclose(op.i, single.i, rtol=1e-10)
    assert solve_batch(grid, cw_program, []) == []
    with pytest.raises(ValidationError):
        solve_batch(grid, cw_program, [np.zeros(4), [np.nan, 0, 0, 0]])


inputs = st.lists(st.floats(-5, 5, allow_nan=False), min_size=4, max_size=4)
scalars = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(inputs, inputs, scalars, scalars, st.integers(0, 2**32 - 1))
def test_exact_linearity(x, y, alpha, beta, seed):
    g, p = random_valid_case(np.random.default_rng(seed), with_input=False)
    x, y = np.array(x), np.array(y)
    lhs = delta_currents(g, p.with_input(alpha * x + beta * y))
    rhs = alpha * delta_currents(g, p.with_input(x)) + beta * delta_currents(g, p.with_input(y))
    scale = max(1.0, np.abs(lhs).max(), np.abs(rhs).max())
    assert np.abs(lhs - rhs).max() <= 1e-9 * scale


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_baseline_preservation_property(seed):
    g, p = random_valid_case(np.random.default_rng(seed), with_input=False)
    i0 = solve_nodal(g, ControlProgram.zero(g)).i
    programmed = ControlProgram(p.delta_r, -np.array(p.delta_r) * i0, np.zeros(g.n_upstream))
    got = solve_nodal(g, programmed).i
    np.testing.assert_allclose(got, i0, rtol=1e-9, atol=1e-9 * np.abs(i0).max())
