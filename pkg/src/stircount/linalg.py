"""Exact-dimension complex linear algebra for 2x2 and 3x3 Hermitian matrices.

Eigendecomposition is closed-form for 2x2 and cyclic Jacobi for 3x3; the
matrix exponential of -i*A*dt goes through the eigendecomposition so the
result is unitary up to eigensolver roundoff.  Eigenvector phases follow a
fixed convention (largest-magnitude component real and positive) so that
downstream adiabatic-basis tracking is reproducible.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import NonHermitian

HERMITICITY_RTOL = 1e-12


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues ascending; eigenvectors as orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermiticity_defect(a: np.ndarray) -> float:
    """Relative Frobenius defect ||A - A^dag|| / ||A|| (0 for the zero matrix)."""
    nrm = np.linalg.norm(a)
    if nrm == 0.0:
        return 0.0
    return float(np.linalg.norm(a - a.conj().T) / nrm)


def unitarity_defect(u: np.ndarray) -> float:
    """Frobenius norm of U^dag U - 1."""
    d = u.shape[0]
    return float(np.linalg.norm(u.conj().T @ u - np.eye(d)))


def _check_hermitian(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] not in (2, 3):
        raise ValueError(f"expected a 2x2 or 3x3 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    defect = hermiticity_defect(a)
    if defect > HERMITICITY_RTOL:
        raise NonHermitian(defect, HERMITICITY_RTOL)
    return a


def _fix_phases(v: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real positive."""
    v = v.copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        i = int(np.argmax(np.abs(col)))
        pivot = col[i]
        mag = abs(pivot)
        if mag > 0.0:
            v[:, k] = col * (pivot.conjugate() / mag)
    return v


def _eig_flat(a: np.ndarray):
    """Dispatch to the flat kernels; returns (lams tuple, V flat tuple, dim)."""
    # Symmetrize once so tiny antihermitian roundoff never leaks in.
    if a.shape[0] == 2:
        d0 = a[0, 0].real
        d1 = a[1, 1].real
        u01 = 0.5 * (a[0, 1] + a[1, 0].conjugate())
        lams, v = K.eig2(d0, d1, u01)
        return lams, v, 2
    d0 = a[0, 0].real
    d1 = a[1, 1].real
    d2 = a[2, 2].real
    u01 = 0.5 * (a[0, 1] + a[1, 0].conjugate())
    u02 = 0.5 * (a[0, 2] + a[2, 0].conjugate())
    u12 = 0.5 * (a[1, 2] + a[2, 1].conjugate())
    lams, v = K.eig3(d0, d1, d2, u01, u02, u12)
    return lams, v, 3


def eig_hermitian(a: np.ndarray) -> EigenSystem:
    """Eigendecomposition of a 2x2 or 3x3 Hermitian matrix.

    Eigenvalues come out ascending; eigenvectors are orthonormal with the
    deterministic phase convention described in the module docstring.
    Raises :class:`NonHermitian` when the relative Hermiticity defect
    exceeds 1e-12.
    """
    a = _check_hermitian(a)
    lams, v, dim = _eig_flat(a)
    vals = np.array(lams, dtype=float)
    vecs = np.array(v, dtype=complex).reshape(dim, dim)
    order = np.argsort(vals, kind="stable")
    return EigenSystem(vals[order], _fix_phases(vecs[:, order]))


def expm_skew(a: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i * A * dt) for Hermitian A, unitary to eigensolver roundoff."""
    a = _check_hermitian(a)
    if not np.isfinite(dt):
        raise ValueError("dt must be finite")
    lams, v, dim = _eig_flat(a)
    if dim == 2:
        u = K.expm2(lams, v, dt)
    else:
        u = K.expm3(lams, v, dt)
    return np.array(u, dtype=complex).reshape(dim, dim)
