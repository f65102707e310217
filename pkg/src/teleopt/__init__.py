"""Optimal receiver-side CP maps for qubit teleportation."""

from .analytic import closed_form_optimum, degenerate_family_optimum, unitary_optimum
from .channels import AffineChannel, ExtremalParams, KrausChannel, XRep, extremal_affine, is_cptp
from .fidelity import average_fidelity_x, mc_average_fidelity
from .optimizer import IterationConfig, OptimizationReport, optimize_outcome, optimize_scenario
from .scenario import OVector, Povm, Scenario, family_scenario, load_scenario, povm_family, singlet_state

__all__ = [
    "AffineChannel",
    "ExtremalParams",
    "IterationConfig",
    "KrausChannel",
    "OVector",
    "OptimizationReport",
    "Povm",
    "Scenario",
    "XRep",
    "average_fidelity_x",
    "closed_form_optimum",
    "degenerate_family_optimum",
    "extremal_affine",
    "family_scenario",
    "is_cptp",
    "load_scenario",
    "mc_average_fidelity",
    "optimize_outcome",
    "optimize_scenario",
    "povm_family",
    "singlet_state",
    "unitary_optimum",
]
