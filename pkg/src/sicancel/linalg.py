"""Dense complex Hermitian linear algebra for the Newton-type trainers.

Vectors are 1-D complex128 arrays and Hermitian matrices are square
complex128 arrays produced by :func:`hermitianize`. The solve goes
through an eigendecomposition instead of Cholesky: the factorization
doubles as the positivity and conditioning check, and its cubic cost is
what the complexity model charges for a full Newton update anyway.
"""

from __future__ import annotations

import numpy as np

COND_LIMIT = 1e14


class SingularMatrixError(ValueError):
    """Hermitian solve rejected the matrix spectrum."""


def _as_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    return v


def _as_square(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


def hermitianize(a) -> np.ndarray:
    """Return (A + A^H)/2.

    The averaging cancels the imaginary part of the diagonal exactly in
    IEEE arithmetic, so the result can be fed to ``np.linalg.eigh``
    without further cleanup.
    """
    a = _as_square(a, "a")
    return 0.5 * (a + a.conj().T)


def matvec(a, v) -> np.ndarray:
    """Matrix-vector product A v."""
    a = _as_square(a, "a")
    v = _as_vector(v, "v")
    if a.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {v.shape}")
    return a @ v


def dot_h(x, y) -> complex:
    """Hermitian inner product sum_i conj(x_i) y_i."""
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return complex(np.vdot(x, y))


def hermitian_solve(a, b) -> np.ndarray:
    """Solve A x = b for Hermitian positive definite A.

    Raises :class:`SingularMatrixError` when the smallest eigenvalue is
    not positive or the spectral condition number exceeds
    ``COND_LIMIT``. Callers are expected to have added their ridge term
    (see ``optim.regularize``) beforehand.
    """
    a = _as_square(a, "a")
    b = _as_vector(b, "b")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    evals, evecs = np.linalg.eigh(a)
    if evals[0] <= 0.0:
        raise SingularMatrixError(
            f"matrix is not positive definite: smallest eigenvalue {evals[0]:.6e}"
        )
    cond = evals[-1] / evals[0]
    if cond > COND_LIMIT:
        raise SingularMatrixError(
            f"matrix is numerically singular: smallest eigenvalue {evals[0]:.6e} "
            f"gives condition number {cond:.3e} > {COND_LIMIT:.0e}"
        )
    return evecs @ ((evecs.conj().T @ b) / evals)
