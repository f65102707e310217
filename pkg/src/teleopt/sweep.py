"""Theta sweeps over the POVM family and their CSV serialization."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .analytic import (
    closed_form_optimum,
    family_extremal_angles,
    repeat_fidelity,
    repeat_protocol_fidelity,
    unitary_optimum,
)
from .fidelity import mc_average_fidelity
from .optimizer import IterationConfig, optimal_unitary_fidelity, optimize_scenario
from .scenario import family_scenario

COLUMNS = (
    "theta",
    "cos_theta",
    "f_iterative",
    "f_oracle",
    "f_closed_form",
    "f_unitary_numeric",
    "f_unitary_closed",
    "f_repeat_eq24",
    "f_repeat_first_principles",
    "f_mc",
    "mc_std_error",
    "max_residual",
    "min_choi_eigenvalue",
    "iterations_max",
)


@dataclass(frozen=True)
class SweepConfig:
    theta_min: float = 0.0
    theta_max: float = math.pi / 2
    steps: int = 101
    iteration: IterationConfig = field(default_factory=IterationConfig)
    mc_samples: int = 20_000
    seed: int = 0
    output_path: Optional[Path] = None
    jobs: int = 1

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0.0 <= self.theta_min <= self.theta_max <= math.pi / 2 + 1e-15:
            raise ValueError("need 0 <= theta_min <= theta_max <= pi/2")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")

    def thetas(self) -> np.ndarray:
        grid = np.linspace(self.theta_min, self.theta_max, self.steps)
        return np.minimum(grid, math.pi / 2)


def row_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def sweep_row(theta: float, index: int, cfg: SweepConfig) -> dict:
    sc = family_scenario(theta)
    report = optimize_scenario(sc, cfg.iteration)
    mc = mc_average_fidelity(sc, report.per_outcome_channel, cfg.mc_samples, row_seed(cfg.seed, index))
    return {
        "theta": theta,
        "cos_theta": math.cos(theta),
        "f_iterative": report.iterative_fidelity,
        "f_oracle": report.oracle_fidelity,
        "f_closed_form": closed_form_optimum(theta),
        "f_unitary_numeric": optimal_unitary_fidelity(sc),
        "f_unitary_closed": unitary_optimum(theta),
        "f_repeat_eq24": repeat_fidelity(*family_extremal_angles(theta)),
        "f_repeat_first_principles": repeat_protocol_fidelity(sc),
        "f_mc": mc.value,
        "mc_std_error": mc.mc_std_error,
        "max_residual": max(report.final_residual),
        "min_choi_eigenvalue": min(cp.min_eigenvalue for cp in report.cp_diagnostic),
        "iterations_max": max(report.iterations),
        # not written to CSV
        "_tp_residual_max": max(cp.tp_residual for cp in report.cp_diagnostic),
        "_substituted": any(report.substituted),
        "_fidelity": report.fidelity,
    }


def _row_job(args):
    return sweep_row(*args)


def run_sweep(cfg: SweepConfig) -> list[dict]:
    """Rows in theta order; identical for any ``jobs``."""
    args = [(float(th), k, cfg) for k, th in enumerate(cfg.thetas())]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_row_job, args))
    return [_row_job(a) for a in args]


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".17g")


def format_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in COLUMNS])
    return buf.getvalue()


def write_csv(rows: list[dict], path: Path) -> None:
    Path(path).write_bytes(format_csv(rows).encode("ascii"))

