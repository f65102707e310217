"""Small dense operators on one to three qubits.

Operators are plain complex ``numpy`` arrays. The helpers here validate
dimensions and physicality and provide the tensor/partial-trace plumbing
used to assemble teleportation scenarios.
"""

from __future__ import annotations

import numpy as np

MAX_DIM = 8
HERMITIAN_ATOL = 1e-12
NUMERIC_ATOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)
PAULIS = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])
PAULIS.flags.writeable = False


class DimensionError(ValueError):
    """Operator dimension unsupported or incompatible."""


class NotPhysicalError(ValueError):
    """State or operator violates a physicality condition."""


def pauli_basis() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return fresh copies of ``(sigma_x, sigma_y, sigma_z)``."""
    return SIGMA_X.copy(), SIGMA_Y.copy(), SIGMA_Z.copy()


def as_operator(op) -> np.ndarray:
    """Coerce ``op`` to a square complex matrix of dimension 2, 4 or 8."""
    arr = np.asarray(op, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    if arr.shape[0] not in (2, 4, 8):
        raise DimensionError(f"dimension {arr.shape[0]} is not 2, 4 or 8")
    return arr


def is_hermitian(op, atol: float = HERMITIAN_ATOL) -> bool:
    arr = np.asarray(op)
    return bool(np.abs(arr - arr.conj().T).max() < atol)


def hermitian_part(op: np.ndarray) -> np.ndarray:
    """``(op + op^dagger) / 2``; acts on the last two axes."""
    return 0.5 * (op + np.conj(np.swapaxes(op, -1, -2)))


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product with ``a`` on the leading factor."""
    a, b = as_operator(a), as_operator(b)
    dim = a.shape[0] * b.shape[0]
    if dim > MAX_DIM:
        raise DimensionError(f"tensor product dimension {dim} exceeds {MAX_DIM}")
    return np.kron(a, b)


def partial_trace(op, subsystem_index: int, layout: tuple[int, ...]) -> np.ndarray:
    """Trace out factor ``subsystem_index`` of an operator with factor dims ``layout``.

    The layout is never inferred; ``(2, 2, 2)`` for three qubits, ``(2, 2)``
    for two.
    """
    op = np.asarray(op, dtype=complex)
    layout = tuple(int(d) for d in layout)
    if len(layout) < 2:
        raise DimensionError("partial trace needs at least two factors")
    if int(np.prod(layout)) != op.shape[0] or op.shape[0] != op.shape[1]:
        raise DimensionError(f"layout {layout} does not match shape {op.shape}")
    if not 0 <= subsystem_index < len(layout):
        raise IndexError(f"subsystem index {subsystem_index} invalid for layout {layout}")
    n = len(layout)
    tensor = op.reshape(layout + layout)
    reduced = np.trace(tensor, axis1=subsystem_index, axis2=subsystem_index + n)
    out_dim = op.shape[0] // layout[subsystem_index]
    return reduced.reshape(out_dim, out_dim)


def partial_transpose(op, subsystem_index: int, layout: tuple[int, ...]) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    layout = tuple(layout)
    n = len(layout)
    tensor = op.reshape(layout + layout)
    axes = list(range(2 * n))
    axes[subsystem_index], axes[subsystem_index + n] = axes[subsystem_index + n], axes[subsystem_index]
    return tensor.transpose(axes).reshape(op.shape)


def density_from_bloch(w) -> np.ndarray:
    """rho = (1 + w.sigma) / 2."""
    w = np.asarray(w, dtype=float)
    if w.shape != (3,):
        raise DimensionError(f"Bloch vector must have 3 components, got {w.shape}")
    if np.linalg.norm(w) > 1 + HERMITIAN_ATOL:
        raise NotPhysicalError(f"|w| = {np.linalg.norm(w):.3g} > 1")
    return 0.5 * (IDENTITY2 + np.einsum("i,iab->ab", w, PAULIS))


def bloch_from_density(rho, atol: float = NUMERIC_ATOL) -> np.ndarray:
    """Inverse of :func:`density_from_bloch` with physicality checks."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise DimensionError(f"expected a 2x2 density matrix, got {rho.shape}")
    if not is_hermitian(rho, atol):
        raise NotPhysicalError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise NotPhysicalError(f"trace {np.trace(rho).real:.3g} != 1")
    if np.linalg.eigvalsh(rho)[0] < -atol:
        raise NotPhysicalError("density matrix has a negative eigenvalue")
    return np.einsum("iab,ba->i", PAULIS, rho).real


def pauli_decompose(op) -> tuple[float, np.ndarray]:
    """Return ``(c0, c)`` with ``op = c0 * 1 + c . sigma`` for Hermitian 2x2 ``op``."""
    op = np.asarray(op, dtype=complex)
    c0 = 0.5 * np.trace(op).real
    c = 0.5 * np.einsum("iab,ba->i", PAULIS, op).real
    return c0, c


def eig_hermitian(op, atol: float = NUMERIC_ATOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns).

    LAPACK ``heevd`` through ``numpy.linalg.eigh``; deterministic for a given
    input on a given build.
    """
    op = as_operator(op)
    if not is_hermitian(op, atol):
        raise NotPhysicalError("eig_hermitian called on a non-Hermitian operator")
    return np.linalg.eigh(hermitian_part(op))


def random_unit_vectors(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` points uniform on the unit sphere (z uniform, azimuth uniform)."""
    z = rng.uniform(-1.0, 1.0, n)
    phi = rng.uniform(0.0, 2 * np.pi, n)
    s = np.sqrt(1.0 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
