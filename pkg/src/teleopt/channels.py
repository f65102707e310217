"""Qubit channel representations and complete-positivity checks.

A trace-preserving qubit channel acts on Bloch vectors as ``w -> T w + t``.
The same ``(T, t)`` appears in the Heisenberg picture as
``X_i = Phi^dagger(sigma_i) = sum_j T_ij sigma_j + t_i 1``, which is the
optimization variable used in :mod:`teleopt.optimizer`.

Choi matrices use the normalized convention
``J = (1 x Phi)(|Omega><Omega|)``, ``|Omega> = (|00> + |11>)/sqrt(2)``,
with the input on the first factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .operators import IDENTITY2, PAULIS, DimensionError, NotPhysicalError

TP_ATOL = 1e-10
CP_ATOL = 1e-9
KRAUS_CUTOFF = 1e-10
TWO_PI = 2 * np.pi


class NotCPError(ValueError):
    """Choi matrix has a negative eigenvalue beyond tolerance."""


@dataclass(frozen=True, eq=False)
class KrausChannel:
    operators: tuple

    def __post_init__(self):
        ops = tuple(np.array(a, dtype=complex) for a in self.operators)
        if not 1 <= len(ops) <= 4:
            raise ValueError(f"qubit channel needs 1-4 Kraus operators, got {len(ops)}")
        for a in ops:
            if a.shape != (2, 2):
                raise DimensionError("Kraus operators must be 2x2")
            a.flags.writeable = False
        object.__setattr__(self, "operators", ops)
        res = self.tp_residual
        if res > TP_ATOL:
            raise NotPhysicalError(f"Kraus set not trace preserving (residual {res:.3g})")

    @property
    def tp_residual(self) -> float:
        return float(np.abs(sum(a.conj().T @ a for a in self.operators) - IDENTITY2).max())

    @classmethod
    def identity(cls) -> "KrausChannel":
        return cls((IDENTITY2,))


@dataclass(frozen=True)
class AffineChannel:
    """Bloch-ball action ``w -> T w + t``."""

    T: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        T = np.array(self.T, dtype=float).reshape(3, 3)
        t = np.array(self.t, dtype=float).reshape(3)
        T.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "t", t)

    @classmethod
    def identity(cls) -> "AffineChannel":
        return cls(np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class XRep:
    """Heisenberg images ``X_i = sum_j T_ij sigma_j + t_i 1`` of the Pauli operators."""

    ops: np.ndarray
    t_matrix: np.ndarray
    t_vector: np.ndarray

    @classmethod
    def from_ops(cls, ops) -> "XRep":
        ops = np.array(ops, dtype=complex)
        if ops.shape != (3, 2, 2):
            raise DimensionError(f"X representation must have shape (3, 2, 2), got {ops.shape}")
        T = 0.5 * np.einsum("iab,jba->ij", ops, PAULIS).real
        t = 0.5 * np.einsum("iaa->i", ops).real
        ops.flags.writeable = False
        return cls(ops, T, t)

    @classmethod
    def from_affine(cls, ch: AffineChannel) -> "XRep":
        ops = np.einsum("ij,jab->iab", ch.T, PAULIS) + ch.t[:, None, None] * IDENTITY2
        ops.flags.writeable = False
        return cls(ops, ch.T.copy(), ch.t.copy())

    @classmethod
    def zero(cls) -> "XRep":
        return cls.from_affine(AffineChannel(np.zeros((3, 3)), np.zeros(3)))

    @classmethod
    def identity(cls) -> "XRep":
        return cls.from_affine(AffineChannel.identity())

    def affine(self) -> AffineChannel:
        return AffineChannel(self.t_matrix, self.t_vector)


@dataclass(frozen=True)
class ExtremalParams:
    u: float
    v: float

    def __post_init__(self):
        if not 0.0 <= self.u < TWO_PI:
            raise ValueError(f"u={self.u} outside [0, 2pi)")
        if not 0.0 <= self.v < np.pi:
            raise ValueError(f"v={self.v} outside [0, pi)")


class CPCheck(NamedTuple):
    ok: bool
    min_eigenvalue: float
    tp_residual: float


def apply_kraus(ch: KrausChannel, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return sum(a @ rho @ a.conj().T for a in ch.operators)


def x_from_kraus(ch: KrausChannel) -> XRep:
    ops = [sum(a.conj().T @ s @ a for a in ch.operators) for s in PAULIS]
    return XRep.from_ops(ops)


def affine_from_kraus(ch: KrausChannel) -> AffineChannel:
    return x_from_kraus(ch).affine()


def affine_apply(ch: AffineChannel, w) -> np.ndarray:
    return ch.T @ np.asarray(w, dtype=float) + ch.t


def extremal_affine(p: ExtremalParams) -> AffineChannel:
    """Diagonal-frame extremal map with ``T = diag(cu, cv, cu cv)`` and ``t = (0, 0, su sv)``."""
    return _extremal(p.u, p.v)


def _extremal(u: float, v: float) -> AffineChannel:
    cu, cv = np.cos(u), np.cos(v)
    return AffineChannel(np.diag([cu, cv, cu * cv]), [0.0, 0.0, np.sin(u) * np.sin(v)])


def choi_from_affine(ch: AffineChannel) -> np.ndarray:
    J = np.kron(IDENTITY2, IDENTITY2 + np.einsum("i,iab->ab", ch.t, PAULIS))
    for j in range(3):
        J = J + np.kron(PAULIS[j].conj(), np.einsum("i,iab->ab", ch.T[:, j], PAULIS))
    return 0.25 * J


def choi_from_kraus(ch: KrausChannel) -> np.ndarray:
    omega = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    J = np.zeros((4, 4), dtype=complex)
    for a in ch.operators:
        vec = np.kron(IDENTITY2, a) @ omega
        J += np.outer(vec, vec.conj())
    return J


def choi_tp_residual(choi) -> float:
    """Deviation of the input marginal from ``1/2``."""
    choi = np.asarray(choi, dtype=complex).reshape(2, 2, 2, 2)
    marginal = np.einsum("ajbj->ab", choi)
    return float(np.abs(marginal - 0.5 * IDENTITY2).max())


def kraus_from_choi(choi, cutoff: float = KRAUS_CUTOFF, cp_atol: float = CP_ATOL) -> KrausChannel:
    """Kraus operators from scaled Choi eigenvectors; eigenvalues below ``cutoff`` are dropped."""
    choi = np.asarray(choi, dtype=complex)
    if choi.shape != (4, 4):
        raise DimensionError("qubit Choi matrix must be 4x4")
    tp = choi_tp_residual(choi)
    if tp > 1e-8:
        raise NotPhysicalError(f"Choi marginal violates trace preservation by {tp:.3g}")
    evals, evecs = np.linalg.eigh(0.5 * (choi + choi.conj().T))
    if evals[0] < -cp_atol:
        raise NotCPError(f"Choi matrix has eigenvalue {evals[0]:.3g}")
    ops = []
    for lam, vec in zip(evals[::-1], evecs.T[::-1]):
        if lam <= cutoff:
            break
        # vec[i*2 + j] = <i|<j| ; A[j, i] carries input i to output j
        ops.append(np.sqrt(2 * lam) * vec.reshape(2, 2).T)
    ops = _restore_tp(ops)
    return KrausChannel(tuple(ops))


def _restore_tp(ops: list) -> list:
    # Dropping sub-cutoff eigenvalues perturbs sum A^dag A at the 1e-10 level;
    # re-normalize with S^{-1/2} so the result is TP to machine precision.
    s = sum(a.conj().T @ a for a in ops)
    w, v = np.linalg.eigh(s)
    inv_sqrt = v @ np.diag(w ** -0.5) @ v.conj().T
    return [a @ inv_sqrt for a in ops]


def kraus_from_affine(ch: AffineChannel) -> KrausChannel:
    return kraus_from_choi(choi_from_affine(ch))


def is_cptp(ch: AffineChannel, cp_atol: float = CP_ATOL) -> CPCheck:
    J = choi_from_affine(ch)
    min_eig = float(np.linalg.eigvalsh(J)[0])
    return CPCheck(min_eig >= -cp_atol, min_eig, choi_tp_residual(J))


def is_unitary_channel(ch: AffineChannel, atol: float = 1e-8) -> bool:
    """True when ``T`` is a proper rotation and ``t`` vanishes."""
    if np.abs(ch.t).max() > atol:
        return False
    sv = np.linalg.svd(ch.T, compute_uv=False)
    return bool(np.abs(sv - 1).max() < atol and np.linalg.det(ch.T) > 0)


def format_affine(ch: AffineChannel) -> str:
    """Row-major ``T`` then ``t``, 17 significant digits, space separated."""
    return " ".join(f"{x:.17g}" for x in (*ch.T.ravel(), *ch.t))


def parse_affine(text: str) -> AffineChannel:
    vals = [float(x) for x in text.split()]
    if len(vals) != 12:
        raise ValueError(f"affine record needs 12 numbers, got {len(vals)}")
    return AffineChannel(np.reshape(vals[:9], (3, 3)), vals[9:])


def channel_outputs(maps: Sequence[KrausChannel], states: np.ndarray) -> np.ndarray:
    """Apply ``maps[a]`` to ``states[a, n]`` for a batch of 2x2 matrices."""
    out = np.zeros_like(states)
    for k, ch in enumerate(maps):
        for a in ch.operators:
            out[k] += a @ states[k] @ a.conj().T
    return out
