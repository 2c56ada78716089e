"""Run reports: per-stage residuals and invariant checks, plus CSV writers.

Data CSVs are byte-deterministic for a fixed configuration; wall times
appear only in the report text, clearly marked, so that artifact
comparison can exclude them.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Check:
    name: str
    value: float
    bound: float
    passed: bool


@dataclass
class Stage:
    name: str
    wall_time: float = 0.0
    residuals: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    def check(self, name: str, value: float, bound: float,
              larger_ok: bool = False) -> bool:
        ok = (value >= bound) if larger_ok else (value <= bound)
        self.checks.append(Check(name, float(value), float(bound), bool(ok)))
        return ok


@dataclass
class RunReport:
    scenario: str
    stages: list = field(default_factory=list)

    def stage(self, name: str) -> Stage:
        if any(s.name == name for s in self.stages):
            raise ValueError(f"stage {name!r} already recorded")
        st = Stage(name)
        self.stages.append(st)
        return st

    @property
    def verdict(self) -> bool:
        return all(c.passed for s in self.stages for c in s.checks)

    def failed_checks(self) -> list:
        return [(s.name, c) for s in self.stages for c in s.checks if not c.passed]

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"scenario: {self.scenario}\n")
        for s in self.stages:
            buf.write(f"stage: {s.name}\n")
            for key in sorted(s.residuals):
                buf.write(f"  residual {key} = {s.residuals[key]:.6e}\n")
            for c in s.checks:
                word = "PASS" if c.passed else "FAIL"
                buf.write(f"  check {c.name}: value={c.value:.6e} "
                          f"bound={c.bound:.6e} {word}\n")
            buf.write(f"  # wall_time_s = {s.wall_time:.3f}\n")
        buf.write(f"verdict: {'PASS' if self.verdict else 'FAIL'}\n")
        return buf.getvalue()


def write_matrix_csv(path: str, mat: np.ndarray, header: dict) -> None:
    """Matrix CSV with complex entries written as re,im pairs."""
    mat = np.asarray(mat)
    with open(path, "w") as f:
        for k in sorted(header):
            f.write(f"# {k}={header[k]}\n")
        for row in mat:
            cells = []
            for v in row:
                cells.append(f"{np.real(v):.16e},{np.imag(v):.16e}")
            f.write(";".join(cells) + "\n")


def read_matrix_csv(path: str):
    header = {}
    rows = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                header[key.strip()] = val.strip()
                continue
            if not line:
                continue
            cells = line.split(";")
            row = []
            for c in cells:
                re, _, im = c.partition(",")
                row.append(float(re) + 1j * float(im))
            rows.append(row)
    mat = np.array(rows)
    if np.all(np.abs(mat.imag) == 0.0):
        mat = mat.real
    return mat, header


def write_rows_csv(path: str, columns: list, rows: list) -> None:
    with open(path, "w") as f:
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, complex):
        return f"{v.real:.16e}+{v.imag:.16e}j" if v.imag >= 0 \
            else f"{v.real:.16e}{v.imag:.16e}j"
    if isinstance(v, float):
        return f"{v:.16e}"
    return str(v)
