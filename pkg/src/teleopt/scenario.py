"""Teleportation scenarios: shared state, sender POVM and derived operators.

Particle 1 carries the unknown input, particles 2 and 3 share ``tau_23``.
The sender measures a POVM on 1 and 2; for outcome ``a`` the receiver's
particle is described through

    O^a_13 = Tr_2{ (Pi^a_12 x 1_3)(1_1 x tau_23) }

and its Pauli moments ``O_i^a = Tr_1{ sigma_i O^a_13 }``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .operators import (
    IDENTITY2,
    NUMERIC_ATOL,
    PAULIS,
    DimensionError,
    NotPhysicalError,
    density_from_bloch,
    partial_trace,
    tensor_product,
)

MAX_OUTCOMES = 16
FAMILY_LABELS = ("a", "b", "c", "d")


class UndefinedConditionalError(ValueError):
    """Conditional state requested for an outcome of (near) zero probability."""


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Povm:
    elements: tuple
    labels: tuple

    def __post_init__(self):
        elements = tuple(_frozen(e) for e in self.elements)
        labels = tuple(str(lab) for lab in self.labels)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "labels", labels)
        if not elements:
            raise ValueError("POVM needs at least one element")
        if len(elements) > MAX_OUTCOMES:
            raise ValueError(f"at most {MAX_OUTCOMES} outcomes supported")
        if len(labels) != len(elements):
            raise ValueError("one label per POVM element required")
        if len(set(labels)) != len(labels):
            raise ValueError("POVM labels must be unique")
        for lab, e in zip(labels, elements):
            if e.shape != (4, 4):
                raise DimensionError(f"POVM element {lab!r} must be 4x4")
            if np.abs(e - e.conj().T).max() > NUMERIC_ATOL:
                raise NotPhysicalError(f"POVM element {lab!r} is not Hermitian")
            if np.linalg.eigvalsh(e)[0] < -NUMERIC_ATOL:
                raise NotPhysicalError(f"POVM element {lab!r} is not PSD")
        residual = np.abs(sum(elements) - np.eye(4)).max()
        if residual > NUMERIC_ATOL:
            raise NotPhysicalError(f"POVM incomplete: |sum - 1| = {residual:.3g}")

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, label: str) -> np.ndarray:
        return self.elements[self.index(label)]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"unknown outcome label {label!r}") from None


@dataclass(frozen=True)
class OVector:
    """Pauli moments ``O_i = sum_j M_ij sigma_j + r_i 1`` of one outcome."""

    ops: np.ndarray
    m_matrix: np.ndarray
    r_vector: np.ndarray
    probability_weight: float

    @classmethod
    def from_ops(cls, ops, probability_weight: float | None = None) -> "OVector":
        ops = np.array(ops, dtype=complex)
        m = 0.5 * np.einsum("iab,jba->ij", ops, PAULIS).real
        r = 0.5 * np.einsum("iaa->i", ops).real
        if probability_weight is None:
            probability_weight = float("nan")
        ops.flags.writeable = False
        return cls(ops, m, r, float(probability_weight))

    @classmethod
    def from_affine(cls, m_matrix, r_vector, probability_weight: float = float("nan")) -> "OVector":
        m = np.asarray(m_matrix, dtype=float)
        r = np.asarray(r_vector, dtype=float)
        ops = np.einsum("ij,jab->iab", m, PAULIS) + r[:, None, None] * IDENTITY2
        ops.flags.writeable = False
        return cls(ops, m, r, probability_weight)

    @property
    def is_zero(self) -> bool:
        return bool(np.abs(self.ops).max() == 0.0)


@dataclass(frozen=True, eq=False)
class Scenario:
    shared_state: np.ndarray
    povm: Povm

    def __post_init__(self):
        tau = _frozen(self.shared_state)
        object.__setattr__(self, "shared_state", tau)
        if tau.shape != (4, 4):
            raise DimensionError("shared state must be 4x4")
        if np.abs(tau - tau.conj().T).max() > NUMERIC_ATOL:
            raise NotPhysicalError("shared state is not Hermitian")
        if abs(np.trace(tau) - 1) > NUMERIC_ATOL:
            raise NotPhysicalError(f"shared state trace {np.trace(tau).real:.12g} != 1")
        evals = np.linalg.eigvalsh(tau)
        if evals[0] < -NUMERIC_ATOL or evals[-1] > 1 + NUMERIC_ATOL:
            raise NotPhysicalError("shared state eigenvalues outside [0, 1]")

    @property
    def labels(self) -> tuple:
        return self.povm.labels

    @cached_property
    def o_operators(self) -> tuple:
        """``O^a_13`` for every outcome, in label order."""
        embedded_tau = tensor_product(IDENTITY2, self.shared_state)
        out = []
        for pi in self.povm.elements:
            joint = tensor_product(pi, IDENTITY2) @ embedded_tau
            out.append(_frozen(partial_trace(joint, 1, (2, 2, 2))))
        return tuple(out)

    @cached_property
    def o_vectors(self) -> tuple:
        return tuple(_o_vector_from_operator(o) for o in self.o_operators)


def _o_vector_from_operator(o13: np.ndarray) -> OVector:
    ops = [partial_trace(tensor_product(s, IDENTITY2) @ o13, 0, (2, 2)) for s in PAULIS]
    return OVector.from_ops(ops, probability_weight=0.5 * np.trace(o13).real)


def singlet_state() -> np.ndarray:
    """(1 - sx sx - sy sy - sz sz) / 4."""
    return 0.25 * (np.eye(4) - sum(np.kron(s, s) for s in PAULIS))


def _ket(bits: str) -> np.ndarray:
    # '+' is spin up (index 0), '-' spin down
    basis = {"+": np.array([1, 0], complex), "-": np.array([0, 1], complex)}
    out = np.ones(1, complex)
    for b in bits:
        out = np.kron(out, basis[b])
    return out


def povm_family(theta: float) -> Povm:
    """Four-outcome POVM interpolating Bell analysis (0) and a z-measurement of particle 1 (pi/2).

    The ``phi`` kets are kept unnormalized; their norms are what makes the
    set complete.
    """
    theta = float(theta)
    if not 0.0 <= theta <= np.pi / 2 + 1e-15:
        raise ValueError(f"theta={theta} outside [0, pi/2]")
    c = np.cos(theta)
    s2 = np.sin(theta) ** 2
    specs = {
        "a": ("--", c * _ket("+-") - _ket("-+")),
        "b": ("++", c * _ket("-+") + _ket("+-")),
        "c": ("+-", c * _ket("--") + _ket("++")),
        "d": ("-+", c * _ket("++") - _ket("--")),
    }
    elements = []
    for label in FAMILY_LABELS:
        proj_bits, phi = specs[label]
        k = _ket(proj_bits)
        elements.append(0.5 * s2 * np.outer(k, k.conj()) + 0.5 * np.outer(phi, phi.conj()))
    return Povm(tuple(elements), FAMILY_LABELS)


def family_scenario(theta: float) -> Scenario:
    """Singlet resource with the one-parameter POVM family."""
    return Scenario(singlet_state(), povm_family(theta))


def o_operator(scenario: Scenario, outcome: str) -> np.ndarray:
    return scenario.o_operators[scenario.povm.index(outcome)]


def o_vector(scenario: Scenario, outcome: str) -> OVector:
    return scenario.o_vectors[scenario.povm.index(outcome)]


def _unnormalized_conditional(scenario: Scenario, outcome: str, input_bloch) -> np.ndarray:
    rho1 = density_from_bloch(input_bloch)
    o13 = o_operator(scenario, outcome)
    return partial_trace(tensor_product(rho1, IDENTITY2) @ o13, 0, (2, 2))


def outcome_probability(scenario: Scenario, outcome: str, input_bloch) -> float:
    """p_a = Tr_13{ rho_1 O^a_13 } for the pure or mixed input with Bloch vector ``input_bloch``."""
    return float(np.trace(_unnormalized_conditional(scenario, outcome, input_bloch)).real)


def conditional_state(scenario: Scenario, outcome: str, input_bloch, min_probability: float = 1e-14) -> np.ndarray:
    sub = _unnormalized_conditional(scenario, outcome, input_bloch)
    p = np.trace(sub).real
    if p <= min_probability:
        raise UndefinedConditionalError(f"outcome {outcome!r} has probability {p:.3g}")
    return sub / p


# -- plain-text scenario import -------------------------------------------------

_TOKEN = re.compile(r"^([-+]?[^,\s]+),([-+]?[^,\s]+)$")


def parse_scenario_text(text: str, labels: Sequence[str] | None = None) -> Scenario:
    """Parse whitespace-separated ``re,im`` tokens: a 4x4 state then N 4x4 POVM elements."""
    tokens = text.split()
    if len(tokens) < 32 or len(tokens) % 16:
        raise ValueError(
            f"scenario file needs 16*(1+N) tokens with N >= 1, got {len(tokens)}"
        )
    values = np.empty(len(tokens), dtype=complex)
    for k, tok in enumerate(tokens):
        m = _TOKEN.match(tok)
        if m is None:
            raise ValueError(f"token {k} ({tok!r}) is not of the form re,im")
        values[k] = complex(float(m.group(1)), float(m.group(2)))
    mats = values.reshape(-1, 4, 4)
    n = len(mats) - 1
    if labels is None:
        labels = tuple(str(i) for i in range(n))
    return Scenario(mats[0], Povm(tuple(mats[1:]), tuple(labels)))


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario_text(Path(path).read_text())


def format_scenario_text(scenario: Scenario) -> str:
    """Inverse of :func:`parse_scenario_text` (17 significant digits)."""
    lines = []
    for mat in (scenario.shared_state, *scenario.povm.elements):
        for row in mat:
            lines.append(" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
        lines.append("")
    return "\n".join(lines)
