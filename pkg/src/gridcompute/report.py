"""Serialise sweep reports to CSV and JSON."""

from __future__ import annotations

import csv
import io
import json

from .codec import Image2x2
from .experiment import CaseResult, SweepReport, TaskSweep

SIG_DIGITS = 9


def fmt(x: float) -> str:
    return format(x, f".{SIG_DIGITS}g")


def _n_ders(report: SweepReport) -> int:
    for s in report.sections:
        if s.cases:
            return len(s.cases[0].delta_i)
    return 5


def to_csv(report: SweepReport) -> str:
    n = _n_ders(report)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["direction", "bits"] + [f"di_{k}" for k in range(1, n + 1)] + ["decoded", "expected", "residual"])
    for case in report.cases:
        writer.writerow(
            [case.task, str(case.image)]
            + [fmt(x) for x in case.delta_i]
            + [case.decoded, case.expected, fmt(case.residual)]
        )
    return buf.getvalue()


def to_dict(report: SweepReport) -> dict:
    return {
        "grid_fingerprint": report.grid_fingerprint,
        "tasks": [
            {
                "task": s.task,
                "weights": list(s.weights),
                "anchor": s.anchor,
                "delta_r": list(s.delta_r),
                "v_sec": list(s.v_sec),
                "kappa": s.kappa,
                "heatmap": s.heatmap().tolist(),
                "cases": [
                    {
                        "bits": str(c.image),
                        "delta_i": list(c.delta_i),
                        "decoded": c.decoded,
                        "expected": c.expected,
                        "residual": c.residual,
                    }
                    for c in s.cases
                ],
            }
            for s in report.sections
        ],
    }


def to_json(report: SweepReport) -> str:
    # Full repr precision so that parse_json is exact.
    return json.dumps(to_dict(report), indent=2) + "\n"


def from_dict(doc: dict) -> SweepReport:
    sections = []
    for s in doc["tasks"]:
        cases = tuple(
            CaseResult(
                image=Image2x2.parse(c["bits"]),
                task=s["task"],
                delta_i=tuple(float(x) for x in c["delta_i"]),
                decoded=int(c["decoded"]),
                expected=int(c["expected"]),
                residual=float(c["residual"]),
            )
            for c in s["cases"]
        )
        sections.append(
            TaskSweep(
                task=s["task"],
                weights=tuple(float(w) for w in s["weights"]),
                anchor=int(s["anchor"]),
                delta_r=tuple(float(x) for x in s["delta_r"]),
                v_sec=tuple(float(x) for x in s["v_sec"]),
                kappa=float(s["kappa"]),
                cases=cases,
            )
        )
    return SweepReport(doc["grid_fingerprint"], tuple(sections))


def parse_json(text: str) -> SweepReport:
    return from_dict(json.loads(text))


def emit(report: SweepReport, format: str) -> str:
    if format == "csv":
        return to_csv(report)
    if format == "json":
        return to_json(report)
    raise ValueError(f"unknown format {format!r}; use csv or json")
