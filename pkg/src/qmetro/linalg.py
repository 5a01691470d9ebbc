"""Dense complex kernels for 2x2 and 4x4 matrices.

Qubit A is always the slow (leftmost) tensor index: ``kron(a, b)[2i+k, 2j+l]
= a[i, j] * b[k, l]``.  The partial transpose below uses the same convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, DimensionMismatch, NegativeEigenvalue, NotHermitian

HERMITIAN_TOL = 1e-10
LOG_EPSILON = 1e-14

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"i": I2, "x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


@dataclass(frozen=True)
class EigDecomposition:
    eigenvalues: np.ndarray  # real, descending
    eigenvectors: np.ndarray  # columns, orthonormal

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_cmat(a, dims=(2, 4)) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] not in dims:
        raise DimensionMismatch(f"expected a square matrix of size {dims}, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def hermiticity_residual(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T)))


def check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    r = hermiticity_residual(a)
    if r > tol:
        raise NotHermitian(f"matrix is not Hermitian: max |A - A^dag| = {r:.3e} > {tol:.1e}")


def hermitian_eig(a, assume_hermitian_tol: float = HERMITIAN_TOL) -> EigDecomposition:
    """Eigendecomposition of a Hermitian 2x2 or 4x4 matrix, eigenvalues descending."""
    a = as_cmat(a)
    check_hermitian(a, assume_hermitian_tol)
    h = 0.5 * (a + a.conj().T)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK essentially never fails here
        raise ConvergenceFailure(str(exc)) from exc
    return EigDecomposition(w[::-1].copy(), v[:, ::-1].copy())


def kron(a, b) -> np.ndarray:
    a = as_cmat(a, dims=(2,))
    b = as_cmat(b, dims=(2,))
    return np.kron(a, b)


def partial_transpose_A(rho) -> np.ndarray:
    """Transpose on qubit A: block (i, j) of the 2x2 block structure goes to (j, i)."""
    rho = as_cmat(rho, dims=(4,))
    return rho.reshape(2, 2, 2, 2).transpose(2, 1, 0, 3).reshape(4, 4)


def trace_norm(a, tol: float = HERMITIAN_TOL) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(hermitian_eig(a, tol).eigenvalues)))


def matrix_log2_regularized(rho, epsilon: float = LOG_EPSILON, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """log2(rho + epsilon*I) taken on the spectrum of a PSD Hermitian matrix."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    eig = hermitian_eig(rho, tol)
    lam = eig.eigenvalues
    if lam.min() < -tol:
        raise NegativeEigenvalue(f"eigenvalue {lam.min():.3e} below -{tol:.0e}")
    lam = np.clip(lam, 0.0, None)
    v = eig.eigenvectors
    out = (v * np.log2(lam + epsilon)) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def pauli_product(axis_a: str, axis_b: str) -> np.ndarray:
    return np.kron(PAULIS[axis_a], PAULIS[axis_b])
