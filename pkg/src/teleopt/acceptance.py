"""Acceptance criteria for the optimizer, runnable from the CLI and pytest."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np

from .analytic import (
    AppendixPoint,
    appendix_f_double,
    appendix_f_prime,
    appendix_f_triple,
    chi_operator,
    closed_form_optimum,
    composition_check,
    degenerate_family_optimum,
    unitary_optimum,
)
from .fidelity import mc_average_fidelity
from .operators import NUMERIC_ATOL
from .optimizer import IterationConfig, optimal_unitary_fidelity, oracle_search, optimize_scenario
from .scenario import FAMILY_LABELS, family_scenario, povm_family, singlet_state
from .sweep import SweepConfig, format_csv, run_sweep

KEY_COS = math.sqrt(2) - 1
KEY_FIDELITY = (3 + 8 * math.sqrt(2)) / 21
# floating-point floor for MC comparisons where every sample is identical
MC_ROUNDOFF = 1e-9


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d}. {self.name}: {self.detail} ({self.seconds:.2f} s)"


@dataclass
class AcceptanceContext:
    iteration: IterationConfig = field(default_factory=IterationConfig)
    mc_samples: int = 100_000
    seed: int = 0
    sweep_steps: int = 101
    determinism_steps: int = 12

    @cached_property
    def sweep(self) -> tuple[list, float]:
        cfg = SweepConfig(steps=self.sweep_steps, iteration=self.iteration, mc_samples=2_000, seed=self.seed)
        start = time.perf_counter()
        rows = run_sweep(cfg)
        return rows, time.perf_counter() - start


def _theta(cos_theta: float) -> float:
    return math.acos(min(max(cos_theta, 0.0), 1.0))


def perfect_limit(ctx: AcceptanceContext) -> tuple[bool, str]:
    start = time.perf_counter()
    report = optimize_scenario(family_scenario(0.0), ctx.iteration)
    elapsed = time.perf_counter() - start
    err = abs(report.fidelity - 1.0)
    return err < 1e-6 and elapsed < 1.0, f"|F - 1| = {err:.2e} (< 1e-6), runtime {elapsed:.3f} s (< 1 s)"


def key_point(ctx: AcceptanceContext) -> tuple[bool, str]:
    theta = _theta(KEY_COS)
    sc = family_scenario(theta)
    report = optimize_scenario(sc, ctx.iteration)
    oracle = 0.5 + sum(oracle_search(o, 4, ctx.seed)[1] for o in sc.o_vectors) / 12
    closed_err = abs(closed_form_optimum(theta) - KEY_FIDELITY)
    it_err = abs(report.iterative_fidelity - KEY_FIDELITY)
    or_err = abs(oracle - KEY_FIDELITY)
    ok = it_err < 1e-4 and or_err < 1e-4 and closed_err < 1e-12
    return ok, f"iterative err {it_err:.2e}, oracle err {or_err:.2e} (< 1e-4), closed form err {closed_err:.1e} (< 1e-12)"


def branch_agreement(ctx: AcceptanceContext) -> tuple[bool, str]:
    rows, elapsed = ctx.sweep
    err = max(abs(r["f_iterative"] - r["f_closed_form"]) for r in rows)
    residual = max(r["max_residual"] for r in rows)
    ok = err < 1e-6 and elapsed < 60.0 and residual < 1e-9
    return ok, (
        f"{len(rows)} points, max |f_it - f_closed| = {err:.2e} (< 1e-6), "
        f"max residual {residual:.1e} (< 1e-9), sweep {elapsed:.1f} s (< 60 s)"
    )


def unitary_region(ctx: AcceptanceContext) -> tuple[bool, str]:
    rows, _ = ctx.sweep
    upper = [r for r in rows if r["cos_theta"] >= 0.5]
    window = [r for r in rows if 0.05 < r["cos_theta"] < 0.45]
    coincide = max(abs(r["f_iterative"] - unitary_optimum(r["theta"])) for r in upper)
    gain = min(r["f_iterative"] - r["f_unitary_numeric"] for r in window)
    ok = coincide < 1e-6 and gain > 1e-4 and len(upper) > 0 and len(window) > 0
    return ok, f"cos>=1/2: max gap {coincide:.2e} (< 1e-6); 0.05<cos<0.45: min gain {gain:.2e} (> 1e-4)"


def classical_limit(ctx: AcceptanceContext) -> tuple[bool, str]:
    sc = family_scenario(math.pi / 2)
    opt = optimize_scenario(sc, ctx.iteration).fidelity
    uni = optimal_unitary_fidelity(sc)
    ok = abs(opt - 2 / 3) < 1e-6 and abs(uni - 0.5) < 1e-6
    return ok, f"optimum {opt:.10f} (2/3 within 1e-6), unitary {uni:.10f} (1/2 within 1e-6)"


def monte_carlo(ctx: AcceptanceContext) -> tuple[bool, str]:
    worst = 0.0
    ok = True
    for k, theta in enumerate(np.linspace(0.0, math.pi / 2, 10)):
        sc = family_scenario(theta)
        report = optimize_scenario(sc, ctx.iteration)
        mc = mc_average_fidelity(sc, report.per_outcome_channel, ctx.mc_samples, ctx.seed + k)
        z = abs(mc.value - report.fidelity)
        band = 3 * mc.mc_std_error + MC_ROUNDOFF
        ok &= z <= band
        worst = max(worst, z / band)
    return bool(ok), f"10 thetas, {ctx.mc_samples} samples, worst |dF| / (3 sigma) = {worst:.2f} (<= 1)"


def cp_validity(ctx: AcceptanceContext) -> tuple[bool, str]:
    rows, _ = ctx.sweep
    min_eig = min(r["min_choi_eigenvalue"] for r in rows)
    tp = max(r["_tp_residual_max"] for r in rows)
    return min_eig >= -1e-9 and tp < 1e-8, f"min Choi eigenvalue {min_eig:.2e} (>= -1e-9), TP residual {tp:.1e} (< 1e-8)"


def well_formed(ctx: AcceptanceContext) -> tuple[bool, str]:
    worst_complete, worst_psd = 0.0, 0.0
    for theta in np.linspace(0.0, math.pi / 2, 50):
        elements = povm_family(theta).elements
        worst_complete = max(worst_complete, float(np.abs(sum(elements) - np.eye(4)).max()))
        worst_psd = min(worst_psd, min(float(np.linalg.eigvalsh(e)[0]) for e in elements))
    tau = singlet_state()
    tau_ok = abs(np.trace(tau) - 1) < NUMERIC_ATOL and np.linalg.eigvalsh(tau)[0] >= -NUMERIC_ATOL
    ok = worst_complete < 1e-10 and worst_psd >= -1e-10 and tau_ok
    return ok, f"completeness {worst_complete:.1e}, min eigenvalue {worst_psd:.1e} (1e-10), singlet ok={tau_ok}"


def appendix_chain(ctx: AcceptanceContext) -> tuple[bool, str]:
    grid = np.linspace(0.0, math.pi / 2, 20)
    margin = math.inf
    for u in grid:
        for v in grid:
            for th in grid:
                p = AppendixPoint(u, v, th)
                f1, f2, f3 = appendix_f_prime(p), appendix_f_double(p), appendix_f_triple(p)
                margin = min(margin, f2 - f1, f3 - f2)
    deg = max(
        abs(degenerate_family_optimum(th)[1] - closed_form_optimum(th))
        for th in np.linspace(0.0, math.pi / 2, 50)
    )
    return margin >= -1e-12 and deg < 1e-8, f"min chain margin {margin:.1e} (>= -1e-12), family vs closed {deg:.1e} (< 1e-8)"


def chi_rank(ctx: AcceptanceContext) -> tuple[bool, str]:
    ranks = [
        chi_operator(family_scenario(th), lab)[1]
        for th in np.linspace(0.0, math.pi / 2, 20)
        for lab in FAMILY_LABELS
    ]
    return max(ranks) <= 2, f"max rank {max(ranks)} over {len(ranks)} operators (<= 2)"


def composition(ctx: AcceptanceContext) -> tuple[bool, str]:
    sc = family_scenario(0.0)
    report = optimize_scenario(sc, ctx.iteration)
    dev = composition_check(sc, report.per_outcome_channel, 100, ctx.seed)
    return dev < 1e-9, f"max trace distance {dev:.1e} over 100 probes (< 1e-9)"


def determinism(ctx: AcceptanceContext) -> tuple[bool, str]:
    cfg = SweepConfig(steps=ctx.determinism_steps, iteration=ctx.iteration, mc_samples=2_000, seed=ctx.seed)
    first = format_csv(run_sweep(cfg)).encode()
    second = format_csv(run_sweep(cfg)).encode()
    return first == second, f"{ctx.determinism_steps}-row CSV, {len(first)} bytes, identical={first == second}"


CRITERIA: tuple[tuple[int, str, Callable[[AcceptanceContext], tuple[bool, str]]], ...] = (
    (1, "perfect-teleportation limit", perfect_limit),
    (2, "key non-unitary point", key_point),
    (3, "branch agreement", branch_agreement),
    (4, "unitary coincidence region", unitary_region),
    (5, "classical limit", classical_limit),
    (6, "Monte-Carlo oracle", monte_carlo),
    (7, "CP validity", cp_validity),
    (8, "POVM/state well-formedness", well_formed),
    (9, "appendix chain", appendix_chain),
    (10, "chi-rank extremality", chi_rank),
    (11, "composition identity", composition),
    (12, "determinism", determinism),
)


def run_criterion(number: int, ctx: AcceptanceContext) -> CriterionResult:
    _, name, check = CRITERIA[number - 1]
    start = time.perf_counter()
    try:
        passed, detail = check(ctx)
    except Exception as exc:  # a crashing criterion is a failing criterion
        passed, detail = False, f"error: {exc!r}"
    return CriterionResult(number, name, bool(passed), detail, time.perf_counter() - start)


def run_acceptance(ctx: AcceptanceContext | None = None, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    ctx = ctx or AcceptanceContext()
    results = []
    for number, _, _ in CRITERIA:
        res = run_criterion(number, ctx)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results


def with_iteration(ctx: AcceptanceContext, **changes) -> AcceptanceContext:
    return replace(ctx, iteration=replace(ctx.iteration, **changes))
