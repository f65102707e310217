"""Closed-form optima, bounds and structural checks for the POVM family."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import AffineChannel, KrausChannel, XRep, choi_from_affine
from .fidelity import FIDELITY_PREFACTOR, average_fidelity_x
from .operators import IDENTITY2, PAULIS, partial_transpose, random_unit_vectors
from .scenario import OVector, Scenario, family_scenario, o_operator

RANK_CUTOFF = 1e-10
_SIGN_FRAMES = tuple(np.diag(s) for s in [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)])
_GOLDEN = (math.sqrt(5) - 1) / 2


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 <= theta <= math.pi / 2 + 1e-15:
        raise ValueError(f"theta={theta} outside [0, pi/2]")
    return theta


def closed_form_optimum(theta: float) -> float:
    c = math.cos(_check_theta(theta))
    if c < 0.5:
        return (c**4 - 4 * c**2 + 2) / (3 - 6 * c**2)
    return (c**2 + 2 * c + 3) / 6


def unitary_optimum(theta: float) -> float:
    c = math.cos(_check_theta(theta))
    return (c**2 + 2 * c + 3) / 6


def repeat_fidelity(u: float, v: float) -> float:
    """Repeat-protocol fidelity ``(cos^2 u sin^2 v + 2) / 3`` as printed.

    Kept verbatim for the sweep's ``f_repeat_eq24`` column. Repeating the
    outcome map itself (:func:`repeat_protocol_fidelity`) gives
    ``(cos^2 u cos^2 v + 2) / 3`` instead; only that value is guaranteed to
    stay below the optimum.
    """
    return (math.cos(u) ** 2 * math.sin(v) ** 2 + 2) / 3


def family_extremal_angles(theta: float) -> tuple[float, float]:
    """``(u, v)`` with ``4 O^a`` equal to the extremal map ``(u, v)`` for outcome ``a``."""
    theta = _check_theta(theta)
    return (2 * math.pi - theta) % (2 * math.pi), theta


def repeat_protocol_maps(scenario: Scenario) -> list[XRep]:
    """``X^a = s_a O^a`` with ``s_a`` the largest scale keeping the map CP."""
    maps = []
    for o in scenario.o_vectors:
        if o.is_zero:
            maps.append(XRep.zero())
            continue
        # J(s) = (1 + s K) / 4 is affine in s, so the CP range is [0, -1/lambda_min(K)]
        K = 4 * choi_from_affine(AffineChannel(o.m_matrix, o.r_vector)) - np.eye(4)
        lam = np.linalg.eigvalsh(K)[0]
        scale = -1.0 / lam if lam < 0 else 1.0
        maps.append(XRep.from_affine(AffineChannel(scale * o.m_matrix, scale * o.r_vector)))
    return maps


def repeat_protocol_fidelity(scenario: Scenario) -> float:
    return average_fidelity_x(scenario, repeat_protocol_maps(scenario)).value


# -- appendix chain -----------------------------------------------------------------

@dataclass(frozen=True)
class AppendixPoint:
    u_prime: float
    v: float
    theta: float

    def __post_init__(self):
        for name in ("u_prime", "v", "theta"):
            val = getattr(self, name)
            if not 0.0 <= val <= math.pi / 2 + 1e-15:
                raise ValueError(f"{name}={val} outside [0, pi/2]")


def appendix_f_prime(p: AppendixPoint) -> float:
    c, s = math.cos(p.theta), math.sin(p.theta)
    cu, cv = math.cos(p.u_prime), math.cos(p.v)
    return cu * c + cv * c + cu * cv * c * c + math.sin(p.u_prime) * math.sin(p.v) * s * s


def appendix_f_double(p: AppendixPoint) -> float:
    c, s = math.cos(p.theta), math.sin(p.theta)
    mc = 0.5 * (math.cos(p.u_prime) + math.cos(p.v))
    ms = 0.5 * (math.sin(p.u_prime) + math.sin(p.v))
    return 2 * mc * c + mc * mc * c * c + ms * ms * s * s


def appendix_f_triple(p: AppendixPoint) -> float:
    c, s = math.cos(p.theta), math.sin(p.theta)
    m = 0.5 * (p.u_prime + p.v)
    return 2 * math.cos(m) * c + math.cos(m) ** 2 * c * c + math.sin(m) ** 2 * s * s


# -- one-parameter family optimum -----------------------------------------------

def _degenerate_contribution(o: OVector, v: float) -> float:
    cv, sv = math.cos(v), math.sin(v)
    diag = np.array([cv, cv, cv * cv])
    t0 = np.array([0.0, 0.0, -sv * sv])
    best = -math.inf
    for P, Q in itertools.product(_SIGN_FRAMES, repeat=2):
        T = P @ np.diag(diag) @ Q
        best = max(best, 2.0 * float(np.sum(T * o.m_matrix) + (P @ t0) @ o.r_vector))
    return best


def _family_fidelity(ovecs: Sequence[OVector], v: float) -> float:
    return 0.5 + FIDELITY_PREFACTOR * sum(_degenerate_contribution(o, v) for o in ovecs)


def _golden_max(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
    candidates = [(f(a), a), (f(b), b), (f(0.5 * (a + b)), 0.5 * (a + b))]
    return max(candidates)[1]


def _is_unimodal(values: np.ndarray, atol: float = 1e-14) -> bool:
    diffs = np.diff(values)
    signs = np.sign(np.where(np.abs(diffs) < atol, 0.0, diffs))
    signs = signs[signs != 0]
    # increasing run followed by decreasing run
    return not np.any((signs[:-1] < 0) & (signs[1:] > 0))


def degenerate_family_optimum(theta: float) -> tuple[float, float]:
    """Best ``v`` on the one-parameter family ``u = 2 pi - v`` and its fidelity."""
    ovecs = family_scenario(_check_theta(theta)).o_vectors
    f = lambda v: _family_fidelity(ovecs, v)  # noqa: E731
    grid = np.linspace(0.0, math.pi / 2, 65)
    values = np.array([f(v) for v in grid])
    if _is_unimodal(values):
        k = int(np.argmax(values))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    else:
        fine = np.arange(0.0, math.pi / 2 + 1e-4, 1e-4)
        k = int(np.argmax([f(v) for v in fine]))
        lo, hi = fine[max(k - 1, 0)], min(fine[min(k + 1, len(fine) - 1)], math.pi / 2)
    v_star = _golden_max(f, lo, hi)
    return v_star, f(v_star)


# -- protocol composition and chi representation --------------------------------

def composition_deviations(
    scenario: Scenario, maps: Sequence[KrausChannel], probe_count: int, seed: int
) -> np.ndarray:
    """Trace distance between ``sum_a Phi^a(Tr_1{rho O^a})`` and ``rho`` for random pure probes."""
    if probe_count < 1:
        raise ValueError("probe_count must be >= 1")
    rng = np.random.default_rng(seed)
    bloch = random_unit_vectors(rng, probe_count)
    rho = 0.5 * (IDENTITY2 + np.einsum("ni,iab->nab", bloch, PAULIS))
    omega = np.zeros_like(rho)
    for o13, ch in zip(scenario.o_operators, maps):
        sub = np.einsum("nba,aibj->nij", rho, o13.reshape(2, 2, 2, 2))
        for a in ch.operators:
            omega += a @ sub @ a.conj().T
    evals = np.linalg.eigvalsh(omega - rho)
    return 0.5 * np.abs(evals).sum(axis=1)


def composition_check(scenario: Scenario, maps: Sequence[KrausChannel], probe_count: int = 100, seed: int = 0) -> float:
    """Max trace distance from the identity map; below 1e-9 the protocol is perfect."""
    return float(composition_deviations(scenario, maps, probe_count, seed).max())


def chi_operator(scenario: Scenario, outcome: str, cutoff: float = RANK_CUTOFF) -> tuple[np.ndarray, int]:
    """Partial transpose of ``O^a_13`` on particle 1, with its numerical rank."""
    chi = partial_transpose(o_operator(scenario, outcome), 0, (2, 2))
    spectrum = np.linalg.eigvalsh(chi)
    return chi, int(np.sum(np.abs(spectrum) > cutoff))


def chi_spectrum(scenario: Scenario, outcome: str) -> np.ndarray:
    return np.linalg.eigvalsh(chi_operator(scenario, outcome)[0])
