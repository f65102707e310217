"""Command-line front end: ``teleopt sweep | optimize | verify``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .analytic import (
    closed_form_optimum,
    family_extremal_angles,
    repeat_fidelity,
    repeat_protocol_fidelity,
    unitary_optimum,
)
from .channels import choi_from_kraus, format_affine, is_unitary_channel
from .fidelity import mc_average_fidelity
from .optimizer import IterationConfig, optimal_unitary_fidelity, optimize_scenario
from .scenario import family_scenario, load_scenario
from .sweep import SweepConfig, format_csv, run_sweep, write_csv

DEFAULTS = {
    "theta_min": 0.0,
    "theta_max": math.pi / 2,
    "steps": 101,
    "tol": 1e-10,
    "max_iter": 100_000,
    "mixing": 0.5,
    "oracle_restarts": 2,
    "mc_samples": None,  # per-command default below
    "seed": 0,
    "out": None,
    "scenario_file": None,
    "theta": None,
    "cos_theta": None,
    "jobs": None,
    "json": None,
}
MC_DEFAULTS = {"sweep": 20_000, "optimize": 100_000, "verify": 100_000}
_INT_KEYS = {"steps", "max_iter", "oracle_restarts", "mc_samples", "seed", "jobs"}
_FLOAT_KEYS = {"theta_min", "theta_max", "tol", "mixing", "theta", "cos_theta"}


class CliError(Exception):
    pass


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in DEFAULTS:
            raise CliError(f"{path}:{lineno}: unknown key {key!r}")
        if key in _INT_KEYS:
            values[key] = int(value)
        elif key in _FLOAT_KEYS:
            values[key] = float(value)
        else:
            values[key] = value
    return values


def _resolve(args: argparse.Namespace) -> dict:
    file_values = read_config_file(args.config) if args.config else {}
    out = {}
    for key, default in DEFAULTS.items():
        cli_value = getattr(args, key, None)
        out[key] = cli_value if cli_value is not None else file_values.get(key, default)
    if out["mc_samples"] is None:
        out["mc_samples"] = MC_DEFAULTS[args.command]
    if out["jobs"] is None:
        out["jobs"] = os.cpu_count() or 1
    return out


def _iteration(opts: dict) -> IterationConfig:
    return IterationConfig(
        mixing=opts["mixing"],
        tolerance=opts["tol"],
        max_iterations=opts["max_iter"],
        oracle_restarts=opts["oracle_restarts"],
        oracle_seed=opts["seed"],
    )


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--tol", type=float, help="residual tolerance (default 1e-10)")
    p.add_argument("--max-iter", type=int, help="iteration cap per outcome (default 100000)")
    p.add_argument("--mixing", type=float, help="relaxation factor in (0, 1] (default 0.5)")
    p.add_argument("--oracle-restarts", type=int, help="Nelder-Mead restarts per outcome (default 2; 0 skips the oracle and reports f_oracle as nan)")
    p.add_argument("--mc-samples", type=int, help="Monte-Carlo input samples")
    p.add_argument("--seed", type=int, help="RNG seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="teleopt", description="Optimal receiver CP maps for qubit teleportation.")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="fidelity curves over the POVM family, written as CSV")
    _add_common(sweep)
    sweep.add_argument("--theta-min", type=float, help="radians (default 0)")
    sweep.add_argument("--theta-max", type=float, help="radians (default pi/2)")
    sweep.add_argument("--steps", type=int, help="grid points (default 101)")
    sweep.add_argument("--out", help="CSV path (default: stdout)")
    sweep.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")

    opt = sub.add_parser("optimize", help="single-point optimization with diagnostics")
    _add_common(opt)
    angle = opt.add_mutually_exclusive_group()
    angle.add_argument("--theta", type=float, help="family angle in radians")
    angle.add_argument("--cos-theta", type=float, help="family angle given as cos(theta)")
    opt.add_argument("--scenario-file", help="shared state + POVM in re,im token format")
    opt.add_argument("--json", help="write a machine-readable report here ('-' for stdout)")

    ver = sub.add_parser("verify", help="run the acceptance suite")
    _add_common(ver)
    return parser


def cmd_sweep(opts: dict) -> int:
    cfg = SweepConfig(
        theta_min=opts["theta_min"],
        theta_max=opts["theta_max"],
        steps=opts["steps"],
        iteration=_iteration(opts),
        mc_samples=opts["mc_samples"],
        seed=opts["seed"],
        output_path=Path(opts["out"]) if opts["out"] else None,
        jobs=opts["jobs"],
    )
    if cfg.output_path is not None:
        parent = cfg.output_path.resolve().parent
        if not parent.is_dir() or not os.access(parent, os.W_OK):
            raise CliError(f"cannot write to {cfg.output_path}")
    rows = run_sweep(cfg)
    if cfg.output_path is None:
        sys.stdout.write(format_csv(rows))
    else:
        write_csv(rows, cfg.output_path)
        print(f"wrote {len(rows)} rows to {cfg.output_path}", file=sys.stderr)
    return 0


def _matrix_str(m: np.ndarray, indent: str = "    ") -> str:
    with np.printoptions(precision=6, suppress=True, linewidth=120):
        return "\n".join(indent + line for line in str(np.asarray(m)).splitlines())


def cmd_optimize(opts: dict) -> int:
    theta = None
    if opts["scenario_file"]:
        scenario = load_scenario(opts["scenario_file"])
    else:
        if opts["cos_theta"] is not None:
            if not 0.0 <= opts["cos_theta"] <= 1.0:
                raise CliError("--cos-theta must lie in [0, 1]")
            theta = math.acos(opts["cos_theta"])
        else:
            theta = opts["theta"] if opts["theta"] is not None else 0.0
        if not 0.0 <= theta <= math.pi / 2 + 1e-15:
            raise CliError("theta must lie in [0, pi/2]")
        scenario = family_scenario(theta)

    report = optimize_scenario(scenario, _iteration(opts))
    mc = mc_average_fidelity(scenario, report.per_outcome_channel, opts["mc_samples"], opts["seed"])

    fidelities = {
        "f_optimal": report.fidelity,
        "f_iterative": report.iterative_fidelity,
        "f_oracle": report.oracle_fidelity,
        "f_unitary_numeric": optimal_unitary_fidelity(scenario),
        "f_repeat_first_principles": repeat_protocol_fidelity(scenario),
        "f_mc": mc.value,
        "mc_std_error": mc.mc_std_error,
    }
    if theta is not None:
        fidelities.update(
            f_closed_form=closed_form_optimum(theta),
            f_unitary_closed=unitary_optimum(theta),
            f_repeat_eq24=repeat_fidelity(*family_extremal_angles(theta)),
        )

    outcomes = []
    header = f"theta = {theta:.17g} (cos = {math.cos(theta):.17g})" if theta is not None else f"scenario {opts['scenario_file']}"
    print(header)
    for k, label in enumerate(report.labels):
        x = report.per_outcome_x[k]
        ch = report.per_outcome_channel[k]
        aff = x.affine()
        choi = choi_from_kraus(ch) if ch is not None else None
        spectrum = np.linalg.eigvalsh(choi) if choi is not None else np.full(4, np.nan)
        unitary = is_unitary_channel(aff)
        print(f"outcome {label}: converged={report.converged[k]} iterations={report.iterations[k]} "
              f"residual={report.final_residual[k]:.3e} oracle_substituted={report.substituted[k]} unitary={unitary}")
        print("  T =\n" + _matrix_str(aff.T))
        print("  t = " + np.array2string(aff.t, precision=6, suppress_small=True))
        print("  Choi spectrum = " + np.array2string(spectrum, precision=6, suppress_small=True))
        print(f"  min Choi eigenvalue = {report.cp_diagnostic[k].min_eigenvalue:.3e}, "
              f"TP residual = {report.cp_diagnostic[k].tp_residual:.3e}")
        if ch is not None:
            for j, a in enumerate(ch.operators):
                print(f"  Kraus {j} =\n" + _matrix_str(a, "    "))
        outcomes.append({
            "label": label,
            "converged": bool(report.converged[k]),
            "iterations": int(report.iterations[k]),
            "residual": float(report.final_residual[k]),
            "substituted": bool(report.substituted[k]),
            "unitary": unitary,
            "affine": format_affine(aff),
            "T": aff.T.tolist(),
            "t": aff.t.tolist(),
            "choi_spectrum": spectrum.tolist(),
            "min_choi_eigenvalue": report.cp_diagnostic[k].min_eigenvalue,
            "tp_residual": report.cp_diagnostic[k].tp_residual,
            "kraus": [[[[z.real, z.imag] for z in row] for row in a] for a in ch.operators] if ch else None,
        })
    for key, value in fidelities.items():
        print(f"{key} = {value:.17g}")

    if opts["json"]:
        payload = json.dumps({"theta": theta, "outcomes": outcomes, "fidelities": fidelities}, indent=2)
        if opts["json"] == "-":
            print(payload)
        else:
            Path(opts["json"]).write_text(payload + "\n")
    return 0 if report.all_converged else 2


def cmd_verify(opts: dict) -> int:
    from .acceptance import AcceptanceContext, run_acceptance

    ctx = AcceptanceContext(iteration=_iteration(opts), mc_samples=opts["mc_samples"], seed=opts["seed"])
    results = run_acceptance(ctx, echo=lambda line: print(line, flush=True))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


COMMANDS = {"sweep": cmd_sweep, "optimize": cmd_optimize, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        opts = _resolve(args)
        return COMMANDS[args.command](opts)
    except (CliError, ValueError, OSError) as exc:
        print(f"teleopt {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
