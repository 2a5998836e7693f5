"""Dense numerical kernels for small matrices.

Everything here works on plain ``numpy.ndarray`` values with float64 entries.
Matrices are treated as immutable: every operation returns a fresh array and
never writes into its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NoConvergence, NotPositiveDefinite

SYMMETRY_TOL = 1e-12
CHOLESKY_PIVOT_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100


def as_matrix(a, name="matrix"):
    """Coerce to a float64 2-D array and check that every entry is finite."""
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.ndim != 2:
        raise DimensionMismatch(f"{name}: expected 2-D array, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name}: non-finite entries")
    return m


def as_vector(a, name="vector"):
    v = np.asarray(a, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name}: non-finite entries")
    return v


def symmetrize(m, name="matrix"):
    """Average a nearly-symmetric matrix with its transpose.

    Raises DimensionMismatch for non-square input and ValueError when the
    asymmetry exceeds SYMMETRY_TOL relative to the matrix scale.
    """
    m = as_matrix(m, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name}: not square, shape {m.shape}")
    scale = 1.0 + np.abs(m).max(initial=0.0)
    if np.abs(m - m.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise ValueError(f"{name}: not symmetric within tolerance")
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class SpdFactorization:
    """Cholesky factor L of a symmetric positive-definite H, with H = L @ L.T."""

    L: np.ndarray

    @property
    def dim(self):
        return self.L.shape[0]


def cholesky(H) -> SpdFactorization:
    """Lower-triangular Cholesky factorization of a symmetric PD matrix.

    The input is symmetrized first, which absorbs round-off from matrix
    products.  A pivot at or below CHOLESKY_PIVOT_TOL raises
    NotPositiveDefinite: the cost specification producing H is invalid.
    """
    H = symmetrize(H, "H")
    n = H.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        d = H[j, j] - L[j, :j] @ L[j, :j]
        if d <= CHOLESKY_PIVOT_TOL:
            raise NotPositiveDefinite(f"pivot {d:.3e} at column {j}")
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1 :, j] = (H[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return SpdFactorization(L)


def solve_spd(f: SpdFactorization, B) -> np.ndarray:
    """Solve H @ X = B given the Cholesky factorization of H."""
    B = np.asarray(B, dtype=float)
    vec = B.ndim == 1
    B2 = B.reshape(-1, 1) if vec else B
    if B2.shape[0] != f.dim:
        raise DimensionMismatch(f"B has {B2.shape[0]} rows, factor dimension is {f.dim}")
    Z = scipy.linalg.solve_triangular(f.L, B2, lower=True)
    X = scipy.linalg.solve_triangular(f.L.T, Z, lower=False)
    return X[:, 0] if vec else X


def sym_eigenvalues(Sy) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.

    Sweeps until the off-diagonal Frobenius norm is negligible; raises
    NoConvergence after JACOBI_MAX_SWEEPS sweeps (does not happen for the
    desk-scale matrices this package handles).
    """
    A = symmetrize(Sy, "Sy").copy()
    n = A.shape[0]
    if n == 0:
        return np.zeros(0)
    fro = np.linalg.norm(A)
    tol = max(1e-12, 1e-15 * fro)
    for _ in range(JACOBI_MAX_SWEEPS):
        # norm of the off-diagonal part, summed directly: subtracting the
        # diagonal mass from the full norm would leave a cancellation floor
        # of sqrt(eps) * ||A|| that a tight tolerance can never cross
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol:
            return np.sort(np.diag(A))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                # hypot avoids overflow in theta**2 for huge rotation angles
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t**2 + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                A[[p, q], :] = rot.T @ A[[p, q], :]
                A[:, [p, q]] = A[:, [p, q]] @ rot
                A[p, q] = A[q, p] = 0.0
    raise NoConvergence(f"Jacobi sweep limit {JACOBI_MAX_SWEEPS} reached")


def kron(Al, Ar) -> np.ndarray:
    """Kronecker product with (i*p+k, j*q+l) entry Al[i,j] * Ar[k,l]."""
    return np.kron(as_matrix(Al, "Al"), as_matrix(Ar, "Ar"))
