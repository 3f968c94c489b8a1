"""Independent reference computations used only by the tests.

Nothing here imports the package's solver code.
"""

import numpy as np


def branch_solve(v_ref, r_eff, r_line, r_load):
    """Steady state from the unreduced equations.

    Unknowns are every bus voltage, the PCC voltage and every DER current
    (2N + 3 of them); each physical law gets its own row.  Returns
    ``(v, v_pcc, i)``.
    """
    v_ref, r_eff, r_line, r_load = (np.asarray(x, dtype=float) for x in (v_ref, r_eff, r_line, r_load))
    m = len(v_ref)
    size = 2 * m + 1
    a = np.zeros((size, size))
    b = np.zeros(size)
    V = lambda k: k
    PCC = m
    I = lambda k: m + 1 + k
    row = 0
    for k in range(m):
        # Droop law with the control dynamics settled: V_k - R_eff i_k = V_ref.
        a[row, V(k)] = 1.0
        a[row, I(k)] = -r_eff[k]
        b[row] = v_ref[k]
        row += 1
        # DER current feeds its own load and its line towards the PCC.
        a[row, I(k)] = 1.0
        a[row, V(k)] = -(1.0 / r_load[k] + 1.0 / r_line[k])
        a[row, PCC] = 1.0 / r_line[k]
        row += 1
    for k in range(m):
        a[row, V(k)] += 1.0 / r_line[k]
        a[row, PCC] -= 1.0 / r_line[k]
    x = np.linalg.solve(a, b)
    return x[:m], x[PCC], x[m + 1 :]


def branch_solve_program(grid, program):
    v_ref = np.array([d.v_ref for d in grid.ders]) + np.array(program.v_sec)
    v_ref[:-1] += np.array(program.dv_ref)
    r_eff = np.array([d.r_droop for d in grid.ders]) + np.array(program.delta_r)
    return branch_solve(
        v_ref, r_eff, [d.r_line for d in grid.ders], [d.r_load for d in grid.ders]
    )


def rotate_grid(bits, clockwise):
    """Rotate a row-major 2x2 bit tuple with numpy."""
    img = np.array(bits).reshape(2, 2)
    return tuple(np.rot90(img, k=-1 if clockwise else 1).ravel().tolist())


def decimal(bits):
    return int("".join(str(b) for b in bits), 2)
