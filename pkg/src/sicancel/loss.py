r"""Squared-error metrics and the local quadratic model behind Newton steps.

For residual e(z) = d - y(z) with y holomorphic in z, the squared error
J = e^H e has Wirtinger gradient b = (D_z e)^H e and mixed Hessian
(D_z e)^H (D_z e); the second-derivative term vanishes because the
conjugated Jacobian is anti-holomorphic. :func:`build_quadratic` takes
the Jacobian of the model output y, applies D_z e = -D_z y internally,
and returns the pair (M, b) those formulas produce. The sign squares
away in M, so M = jac_y^H jac_y and b = -jac_y^H e.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log10

import numpy as np

from .linalg import hermitianize


@dataclass
class QuadraticModel:
    """Local model f(x) = x^H hess x + grad^H x + x^H grad, offset c_const."""

    hess: np.ndarray
    grad: np.ndarray
    c_const: float


def mse(e) -> float:
    """Total squared error e^H e (a sum, not an average)."""
    e = np.asarray(e, dtype=np.complex128)
    return float(np.vdot(e, e).real)


def nmse_db(d, e) -> float:
    """10 log10 of residual energy over reference energy."""
    ref = mse(d)
    if ref <= 0.0:
        raise ValueError("reference signal has no energy")
    return 10.0 * log10(mse(e) / ref)


def build_quadratic(jac_y, e) -> QuadraticModel:
    """Quadratic expansion of the block squared error around the current z."""
    jac_y = np.asarray(jac_y, dtype=np.complex128)
    e = np.asarray(e, dtype=np.complex128)
    if jac_y.ndim != 2 or e.ndim != 1 or jac_y.shape[0] != e.shape[0]:
        raise ValueError(f"shape mismatch: jacobian {jac_y.shape}, residual {e.shape}")
    jh = jac_y.conj().T
    return QuadraticModel(
        hess=hermitianize(jh @ jac_y),
        grad=-(jh @ e),
        c_const=mse(e),
    )


def quadratic_value(q: QuadraticModel, x) -> float:
    """Evaluate f(x); equals |e + (D_z e) x|^2 - c_const for exact inputs."""
    x = np.asarray(x, dtype=np.complex128)
    return float((np.vdot(x, q.hess @ x) + 2.0 * np.vdot(q.grad, x).real).real)


def grad_norm(q: QuadraticModel) -> float:
    return float(np.linalg.norm(q.grad))
