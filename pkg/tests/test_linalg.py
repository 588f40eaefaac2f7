"""Dense Hermitian kernels against naive loop oracles."""

import numpy as np
import pytest

from sicancel.linalg import (
    SingularMatrixError,
    dot_h,
    hermitian_solve,
    hermitianize,
    matvec,
)


def random_hermitian(rng, k, eig_lo=0.1, eig_hi=10.0):
    """Haar-rotated spectrum drawn uniformly from [eig_lo, eig_hi]."""
    g = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    q, _ = np.linalg.qr(g)
    evals = rng.uniform(eig_lo, eig_hi, size=k)
    return hermitianize(q @ np.diag(evals) @ q.conj().T)


def random_vector(rng, k):
    return rng.standard_normal(k) + 1j * rng.standard_normal(k)


def test_matvec_identity():
    v = np.array([1.0, 1.0j, -2.0])
    assert np.array_equal(matvec(np.eye(3), v), v)


def test_matvec_diagonal():
    out = matvec(np.diag([2.0, 4.0]), np.array([1.0, 1.0j]))
    assert np.array_equal(out, np.array([2.0, 4.0j]))


def test_matvec_matches_double_loop_oracle():
    rng = np.random.default_rng(101)
    for _ in range(5):
        a = random_hermitian(rng, 8)
        v = random_vector(rng, 8)
        expect = np.array([sum(a[i, j] * v[j] for j in range(8)) for i in range(8)])
        assert np.allclose(matvec(a, v), expect, rtol=0, atol=1e-12 * np.abs(expect).max())


def test_matvec_dimension_mismatch():
    with pytest.raises(ValueError):
        matvec(np.eye(3), np.ones(4, dtype=complex))
    with pytest.raises(ValueError):
        matvec(np.ones((2, 3)), np.ones(3, dtype=complex))


def test_dot_h_self_is_squared_norm():
    x = np.array([1.0, 1.0j])
    assert dot_h(x, x) == 2.0 + 0.0j


def test_dot_h_orthogonal():
    assert dot_h(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_dot_h_conjugate_symmetry():
    rng = np.random.default_rng(7)
    for _ in range(100):
        x = random_vector(rng, 6)
        y = random_vector(rng, 6)
        assert abs(dot_h(x, y) - np.conj(dot_h(y, x))) < 1e-12


def test_dot_h_dimension_mismatch():
    with pytest.raises(ValueError):
        dot_h(np.ones(3, dtype=complex), np.ones(4, dtype=complex))


def test_hermitianize_produces_exact_hermitian():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    h = hermitianize(a)
    assert np.array_equal(h, h.conj().T)
    # (A + A^H)/2 cancels the diagonal imaginary part exactly in IEEE arithmetic
    assert np.all(np.diag(h).imag == 0.0)


def test_hermitianize_fixed_point_on_hermitian_input():
    rng = np.random.default_rng(12)
    a = random_hermitian(rng, 5)
    assert np.array_equal(hermitianize(a), a)


def test_solve_identity():
    b = random_vector(np.random.default_rng(1), 4)
    assert np.allclose(hermitian_solve(np.eye(4), b), b, rtol=0, atol=1e-14)


def test_solve_diagonal():
    x = hermitian_solve(np.diag([2.0, 4.0]), np.array([2.0, 8.0j]))
    assert np.allclose(x, np.array([1.0, 2.0j]), rtol=1e-14, atol=0)


def gaussian_elimination(a, b):
    """Partial-pivot elimination, written independently of the eigensolve."""
    a = a.astype(np.complex128).copy()
    b = b.astype(np.complex128).copy()
    n = b.size
    for col in range(n):
        piv = col + np.argmax(np.abs(a[col:, col]))
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        for row in range(col + 1, n):
            f = a[row, col] / a[col, col]
            a[row, col:] -= f * a[col, col:]
            b[row] -= f * b[col]
    x = np.zeros(n, dtype=np.complex128)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x


def test_solve_residual_and_elimination_oracle():
    rng = np.random.default_rng(42)
    for _ in range(5):
        g = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        a = hermitianize(g.conj().T @ g) + 0.1 * np.eye(16)
        b = random_vector(rng, 16)
        x = hermitian_solve(a, b)
        assert np.linalg.norm(a @ x - b) < 1e-10 * np.linalg.norm(b)
        ge = gaussian_elimination(a, b)
        assert np.linalg.norm(x - ge) < 1e-9 * np.linalg.norm(ge)


def test_solve_rejects_indefinite():
    with pytest.raises(SingularMatrixError, match="eigenvalue"):
        hermitian_solve(np.diag([1.0, -1.0]), np.ones(2, dtype=complex))


def test_solve_rejects_singular():
    with pytest.raises(SingularMatrixError):
        hermitian_solve(np.diag([1.0, 0.0]), np.ones(2, dtype=complex))


def test_solve_rejects_extreme_conditioning():
    with pytest.raises(SingularMatrixError, match="condition number"):
        hermitian_solve(np.diag([1e16, 1.0]), np.ones(2, dtype=complex))


def test_solve_error_names_offending_eigenvalue():
    try:
        hermitian_solve(np.diag([1e16, 2.0]), np.ones(2, dtype=complex))
    except SingularMatrixError as exc:
        assert "2.0" in str(exc) or "2.000000e+00" in str(exc)
    else:
        pytest.fail("expected a singularity error")


def test_matvec_adjoint_property():
    rng = np.random.default_rng(21)
    for _ in range(20):
        a = random_hermitian(rng, 7)
        u = random_vector(rng, 7)
        v = random_vector(rng, 7)
        lhs = dot_h(u, matvec(a, v))
        rhs = np.conj(dot_h(v, matvec(a, u)))
        assert abs(lhs - rhs) < 1e-10 * max(abs(lhs), 1.0)


def test_solve_inverts_matvec():
    rng = np.random.default_rng(22)
    for _ in range(10):
        a = random_hermitian(rng, 9)
        v = random_vector(rng, 9)
        back = hermitian_solve(a, matvec(a, v))
        assert np.linalg.norm(back - v) < 1e-8 * np.linalg.norm(v)


def test_eigendecomposition_reconstructs():
    # the solve routes through np.linalg.eigh; pin the backing assumption
    rng = np.random.default_rng(23)
    a = random_hermitian(rng, 12)
    evals, evecs = np.linalg.eigh(a)
    recon = evecs @ np.diag(evals) @ evecs.conj().T
    assert np.linalg.norm(recon - a) <= 1e-10 * np.linalg.norm(a)
