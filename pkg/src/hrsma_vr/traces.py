"""Available-CPU traces for the FoV pre-rendering server.

A trace holds, per time step, the fraction ``F_g`` of the CPU each group's
render task may use. Synthetic traces draw the CPU usage of the render
process around the quality tier's mean level and return ``1 - usage``,
floored at 0.01.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .config import QUALITY_TABLE

__all__ = ["CPU_FLOOR", "generate_cpu_trace", "save_cpu_trace", "load_cpu_trace"]

CPU_FLOOR = 0.01


def generate_cpu_trace(quality: str, num_steps: int, num_groups: int = 3, seed=0,
                       noise_std: float = 0.05, table=None) -> np.ndarray:
    """Synthetic (num_steps, num_groups) trace of available CPU fractions."""
    table = QUALITY_TABLE if table is None else table
    if quality not in table:
        raise ValueError(f"unknown quality tier {quality!r}; known: {sorted(table)}")
    mean_usage = table[quality].cpu_usage
    rng = np.random.default_rng(seed)
    usage = mean_usage + noise_std * rng.standard_normal((num_steps, num_groups))
    return np.clip(1.0 - usage, CPU_FLOOR, 1.0)


def save_cpu_trace(path, trace) -> None:
    """Write ``step,F_1,...,F_G`` rows."""
    trace = np.atleast_2d(np.asarray(trace, dtype=float))
    G = trace.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["step"] + [f"F_{g + 1}" for g in range(G)])
        for t, row in enumerate(trace):
            w.writerow([t] + [repr(float(v)) for v in row])


def load_cpu_trace(path) -> np.ndarray:
    """Read a CPU trace; every value must lie in (0, 1]."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if (header is None or len(header) < 2 or header[0] != "step"
                or header[1:] != [f"F_{g + 1}" for g in range(len(header) - 1)]):
            raise ValueError(f"{path}:1: expected header step,F_1,...,F_G")
        G = len(header) - 1
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != G + 1:
                raise ValueError(f"{path}:{lineno}: expected {G + 1} fields, got {len(row)}")
            try:
                step = int(row[0])
                vals = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if step != len(rows):
                raise ValueError(f"{path}:{lineno}: expected step {len(rows)}, got {step}")
            if not all(0.0 < v <= 1.0 for v in vals):
                raise ValueError(f"{path}:{lineno}: CPU fraction outside (0, 1]: {vals}")
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)
