"""Dense linear-algebra helpers shared across modules."""

from __future__ import annotations

import numpy as np
import scipy.linalg


def as_column_matrix(vectors, dim: int) -> np.ndarray:
    """Stack a sequence of vectors into a (dim, k) complex matrix."""
    if len(vectors) == 0:
        return np.zeros((dim, 0), dtype=complex)
    return np.column_stack([np.asarray(v, dtype=complex) for v in vectors])


def orthonormal_columns(vectors: np.ndarray, drop_tol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis of the column span, rank-revealing QR.

    Columns whose pivot magnitude falls below ``drop_tol`` relative to the
    largest pivot are dropped.
    """
    vectors = np.asarray(vectors, dtype=complex)
    if vectors.ndim != 2 or vectors.shape[1] == 0:
        return np.zeros((vectors.shape[0], 0), dtype=complex)
    q, r, _ = scipy.linalg.qr(vectors, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return np.zeros((vectors.shape[0], 0), dtype=complex)
    rank = int(np.sum(diag > drop_tol * diag[0]))
    return q[:, :rank]


def projector(vectors: np.ndarray, drop_tol: float = 1e-12) -> np.ndarray:
    """Orthogonal projector onto the column span of ``vectors``."""
    q = orthonormal_columns(vectors, drop_tol)
    return q @ q.conj().T


def reflection(vectors: np.ndarray, drop_tol: float = 1e-12) -> np.ndarray:
    """2P - I about the column span of ``vectors``."""
    n = vectors.shape[0]
    return 2.0 * projector(vectors, drop_tol) - np.eye(n, dtype=complex)


def unitarity_defect(u: np.ndarray) -> float:
    n = u.shape[0]
    return float(np.max(np.abs(u.conj().T @ u - np.eye(n))))


def eigenphases(u: np.ndarray, snap: float = 1e-12):
    """Eigenphases and orthonormal eigenvectors of a unitary matrix.

    Uses the complex Schur form, which is diagonal for normal matrices, so
    the returned vectors are orthonormal to machine precision. Phases are
    principal arguments in (-pi, pi]; values within ``snap`` of 0 are
    snapped to exactly 0.
    """
    t, z = scipy.linalg.schur(np.asarray(u, dtype=complex), output="complex")
    phases = np.angle(np.diag(t))
    phases[np.abs(phases) <= snap] = 0.0
    return phases, z


def gram_offdiag_max(vectors: np.ndarray) -> float:
    """Largest off-diagonal |<v_i|v_j>| among the columns."""
    if vectors.shape[1] < 2:
        return 0.0
    g = vectors.conj().T @ vectors
    np.fill_diagonal(g, 0.0)
    return float(np.max(np.abs(g)))


def kitaev_kernel(theta: np.ndarray, bits: int) -> np.ndarray:
    """Probability of reading phase-register outcome 0 for eigenphase theta.

    For an eigenvector with phase theta, textbook phase estimation with
    ``bits`` ancilla qubits returns outcome 0 with probability
    |2^-b sum_j e^{i j theta}|^2.
    """
    theta = np.asarray(theta, dtype=float)
    n = 2 ** bits
    half = theta / 2.0
    out = np.ones_like(theta)
    nz = np.abs(np.sin(half)) > 1e-300
    out[nz] = (np.sin(n * half[nz]) / (n * np.sin(half[nz]))) ** 2
    return out
