"""Value types for the star-topology DC microgrid and its control program.

Indexing follows the physical layout: DERs ``1..N`` feed the point of common
coupling (PCC) through their own lines and act as inputs; DER ``N+1`` sits
behind the downstream line and acts as the output.  Arrays are stored
0-based, so upstream DER ``k`` lives at position ``k - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Below this magnitude a droop/load factor or a weight denominator is
# treated as singular.
SINGULAR_TOL = 1e-9


class GridError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GridError):
    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("invalid grid/program: " + "; ".join(v.message for v in report.violations))


@dataclass(frozen=True)
class DerSpec:
    """One DER bus: converter reference, droop gain, line and local load."""

    v_ref: float = 315.0
    r_droop: float = 0.1
    r_line: float = 1.0
    r_load: float = 99.0

    def violations(self) -> list[str]:
        bad = []
        if not self.v_ref > 0:
            bad.append(f"v_ref must be > 0 (got {self.v_ref})")
        if not self.r_droop >= 0:
            bad.append(f"r_droop must be >= 0 (got {self.r_droop})")
        if not self.r_line > 0:
            bad.append(f"r_line must be > 0 (got {self.r_line})")
        if not self.r_load > 0:
            bad.append(f"r_load must be > 0 (got {self.r_load})")
        return bad


@dataclass(frozen=True)
class GridSpec:
    upstream: tuple[DerSpec, ...]
    downstream: DerSpec
    _columns: dict = field(init=False, repr=False, compare=False, hash=False)
    _der_violations: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "upstream", tuple(self.upstream))
        columns = {}
        for name in ("v_ref", "r_droop", "r_line", "r_load"):
            col = np.array([getattr(d, name) for d in self.ders], dtype=float)
            col.setflags(write=False)
            columns[name] = col
        object.__setattr__(self, "_columns", columns)
        bad = tuple(
            Violation("der", k, f"DER {k}: {msg}")
            for k, der in enumerate(self.ders, start=1)
            for msg in der.violations()
        )
        object.__setattr__(self, "_der_violations", bad)

    @property
    def n_upstream(self) -> int:
        return len(self.upstream)

    @property
    def ders(self) -> tuple[DerSpec, ...]:
        """All DERs, upstream first, downstream last."""
        return self.upstream + (self.downstream,)

    def column(self, name: str) -> np.ndarray:
        """Read-only per-DER array of one DerSpec field, downstream last."""
        return self._columns[name]


def _as_tuple(values, length=None) -> tuple[float, ...]:
    if values is None:
        return tuple(0.0 for _ in range(length or 0))
    return tuple(map(float, values))


@dataclass(frozen=True)
class ControlProgram:
    """Programmable layer on top of the grid.

    ``delta_r`` and ``v_sec`` have one entry per DER (N+1); ``dv_ref`` holds
    the input steps for the N upstream DERs.
    """

    delta_r: tuple[float, ...]
    v_sec: tuple[float, ...]
    dv_ref: tuple[float, ...]
    _arrays: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        arrays = {}
        for name in ("delta_r", "v_sec", "dv_ref"):
            values = _as_tuple(getattr(self, name))
            object.__setattr__(self, name, values)
            arr = np.array(values, dtype=float)
            arr.setflags(write=False)
            arrays[name] = arr
        object.__setattr__(self, "_arrays", arrays)

    def array(self, name: str) -> np.ndarray:
        """Read-only numpy view of ``delta_r``, ``v_sec`` or ``dv_ref``."""
        return self._arrays[name]

    @classmethod
    def zero(cls, grid: GridSpec) -> "ControlProgram":
        n = grid.n_upstream
        return cls((0.0,) * (n + 1), (0.0,) * (n + 1), (0.0,) * n)

    def with_input(self, dv_ref: Sequence[float]) -> "ControlProgram":
        return ControlProgram(self.delta_r, self.v_sec, tuple(dv_ref))

    def without_input(self) -> "ControlProgram":
        return self.with_input((0.0,) * len(self.dv_ref))


@dataclass(frozen=True)
class OperatingPoint:
    """A solved steady state.

    ``v`` and ``i`` have one entry per DER (downstream last), ``i_in`` one per
    upstream DER.
    """

    v: np.ndarray
    i: np.ndarray
    i_in: np.ndarray
    i_out_down: float
    v_pcc: float

    def __post_init__(self):
        for name in ("v", "i", "i_in"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def i_down(self) -> float:
        return float(self.i[-1])

    def to_dict(self) -> dict:
        return {
            "v": self.v.tolist(),
            "i": self.i.tolist(),
            "i_in": self.i_in.tolist(),
            "i_out_down": self.i_out_down,
            "v_pcc": self.v_pcc,
        }


@dataclass(frozen=True)
class Violation:
    kind: str  # "dimension" | "der" | "lambda" | "denominator"
    index: int | None  # 1-based DER index, None for whole-program issues
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def raise_for_violations(self) -> None:
        if not self.ok:
            raise ValidationError(self)


CANONICAL_V_REF = 315.0
CANONICAL_R_DROOP = 0.1
CANONICAL_R_LOAD = 99.0
CANONICAL_R_LINE = (0.67, 0.49, 0.83, 0.03, 0.81)


def canonical_grid() -> GridSpec:
    """The five-bus reference microgrid: four input DERs and one output DER."""
    ders = [
        DerSpec(CANONICAL_V_REF, CANONICAL_R_DROOP, r, CANONICAL_R_LOAD)
        for r in CANONICAL_R_LINE
    ]
    return GridSpec(tuple(ders[:-1]), ders[-1])


def weight_denominator(der: DerSpec, delta_r: float) -> float:
    """``r_line * lambda - (r_droop + delta_r)``, the reciprocal input gain."""
    r_eff = der.r_droop + delta_r
    lam = 1.0 - r_eff / der.r_load
    return der.r_line * lam - r_eff


def validate(grid: GridSpec, program: ControlProgram) -> ValidationReport:
    """Check every grid/program invariant; never raises."""
    found: list[Violation] = []
    n = grid.n_upstream
    if n < 1:
        found.append(Violation("dimension", None, "grid needs at least one upstream DER"))
    for name, want in (("delta_r", n + 1), ("v_sec", n + 1), ("dv_ref", n)):
        got = len(getattr(program, name))
        if got != want:
            found.append(Violation("dimension", None, f"{name} has length {got}, expected {want}"))

    found.extend(grid._der_violations)

    # Program checks are meaningless on a malformed grid.
    if found:
        return ValidationReport(tuple(found))

    # Plain floats: for a handful of DERs this beats small-array numpy.
    isfinite = math.isfinite
    for k, der in enumerate(grid.ders):
        idx = k + 1
        dr = program.delta_r[k]
        if not (isfinite(dr) and isfinite(program.v_sec[k]) and (k == n or isfinite(program.dv_ref[k]))):
            found.append(Violation("der", idx, f"DER {idx}: non-finite program entry"))
            continue
        r_eff = der.r_droop + dr
        lam = 1.0 - r_eff / der.r_load
        if abs(lam) <= SINGULAR_TOL:
            found.append(Violation("lambda", idx, f"lambda_{idx} ~ 0 ({lam:.3e})"))
        den = der.r_line * lam - r_eff
        if k < n and abs(den) <= SINGULAR_TOL:
            found.append(Violation("denominator", idx, f"weight denominator ~ 0 at DER {idx} ({den:.3e})"))
    return ValidationReport(tuple(found))
