"""Eigensolver and matrix-exponential checks.

The independent oracle for the 3x3 eigenvalue examples is a characteristic-
polynomial root finder (numpy.roots on the explicit cubic), which never
touches the Jacobi code path.
"""

import numpy as np
import pytest

from stircount.errors import NonHermitian
from stircount.linalg import (
    EigenSystem,
    eig_hermitian,
    expm_skew,
    hermiticity_defect,
    unitarity_defect,
)


def char_poly_roots(h):
    """Roots of det(H - x) for a 3x3 Hermitian matrix, via numpy.roots."""
    tr = np.trace(h).real
    # sum of principal 2x2 minors
    m = 0.0
    for i in range(3):
        idx = [k for k in range(3) if k != i]
        sub = h[np.ix_(idx, idx)]
        m += (sub[0, 0] * sub[1, 1] - sub[0, 1] * sub[1, 0]).real
    det = np.linalg.det(h).real
    return np.sort(np.roots([1.0, -tr, m, -det]).real)


def test_diagonal_input():
    es = eig_hermitian(np.diag([0.0, 1.5]).astype(complex))
    assert np.allclose(es.eigenvalues, [0.0, 1.5])
    assert np.allclose(es.eigenvectors, np.eye(2))


def test_sigma_x_eigensystem():
    es = eig_hermitian(np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex))
    assert np.allclose(es.eigenvalues, [-1.0, 1.0])
    s = 1.0 / np.sqrt(2.0)
    # phase convention: largest-magnitude component (the first on a tie)
    # is real positive
    assert np.allclose(es.eigenvectors[:, 0], [s, -s])
    assert np.allclose(es.eigenvectors[:, 1], [s, s])


def test_ring_matrix_against_root_oracle():
    u, c1, c2 = 0.7, 0.05, 0.03
    h = np.array([[u, c1, c2], [c1, 0, 1], [c2, 1, 0]], dtype=complex)
    es = eig_hermitian(h)
    assert np.max(np.abs(es.eigenvalues - char_poly_roots(h))) < 1e-10


def test_non_hermitian_rejected_with_defect():
    a = np.array([[0.0, 1.0], [0.5, 0.0]], dtype=complex)
    with pytest.raises(NonHermitian) as exc:
        eig_hermitian(a)
    assert exc.value.defect > 0.1


def test_bad_shape_rejected():
    with pytest.raises(ValueError):
        eig_hermitian(np.eye(4, dtype=complex))


def test_expm_zero_matrix():
    u = expm_skew(np.zeros((3, 3), dtype=complex), 0.7)
    assert np.allclose(u, np.eye(3))


def test_expm_diagonal_pi():
    u = expm_skew(np.diag([1.0, -1.0]).astype(complex), np.pi)
    assert np.allclose(u, -np.eye(2), atol=1e-14)


def test_expm_rabi_rotation():
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    for t in (0.1, 0.9, 2.5):
        expected = np.cos(t) * np.eye(2) - 1j * np.sin(t) * sx
        assert np.max(np.abs(expm_skew(sx, t) - expected)) < 1e-14


def test_random_roundtrip_and_orthonormality():
    # spec-level property: 1e4 random Hermitian matrices reconstruct to
    # 1e-12 relative and eigenvectors stay orthonormal
    rng = np.random.default_rng(20240811)
    worst_rec = 0.0
    worst_orth = 0.0
    for k in range(10000):
        dim = 2 if k % 2 == 0 else 3
        m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        a = 0.5 * (m + m.conj().T)
        es = eig_hermitian(a)
        nrm = np.linalg.norm(a)
        if nrm > 0:
            worst_rec = max(worst_rec, np.linalg.norm(a - es.reconstruct()) / nrm)
        worst_orth = max(
            worst_orth,
            np.linalg.norm(es.eigenvectors.conj().T @ es.eigenvectors - np.eye(dim)),
        )
        assert np.all(np.diff(es.eigenvalues) >= 0.0)
    assert worst_rec < 1e-12
    assert worst_orth < 1e-12


def test_random_eigenvalues_against_numpy():
    rng = np.random.default_rng(7)
    for _ in range(400):
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        a = 0.5 * (m + m.conj().T)
        es = eig_hermitian(a)
        assert np.max(np.abs(es.eigenvalues - np.linalg.eigvalsh(a))) < 1e-12


def test_expm_unitarity_property():
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(300):
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        a = 0.5 * (m + m.conj().T)
        nrm = np.linalg.norm(a, 2)
        dt = 1.0 / max(nrm, 1.0)  # keep ||A|| dt <= 1
        worst = max(worst, unitarity_defect(expm_skew(a, dt)))
    assert worst < 1e-13


def test_phase_convention_deterministic():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    a = 0.5 * (m + m.conj().T)
    v1 = eig_hermitian(a).eigenvectors
    v2 = eig_hermitian(a.copy()).eigenvectors
    assert np.array_equal(v1, v2)
    for k in range(3):
        i = int(np.argmax(np.abs(v1[:, k])))
        assert v1[i, k].imag == pytest.approx(0.0, abs=1e-15)
        assert v1[i, k].real > 0


def test_defect_helpers():
    assert hermiticity_defect(np.zeros((2, 2), dtype=complex)) == 0.0
    assert unitarity_defect(np.eye(3, dtype=complex)) == 0.0
    es = EigenSystem(np.array([1.0, 2.0]), np.eye(2, dtype=complex))
    assert es.dim == 2
