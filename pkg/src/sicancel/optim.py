r"""Parameter update rules: mixed Newton, truncated conjugate gradient, Adam.

The mixed Newton step solves (H + gamma I) delta = -b and moves
z <- z + mu * delta. The CG variant replaces the solve by L iterations
of conjugate gradient on the quadratic f(x) = x^H M x + b^H x + x^H b
started from x = 0, which reproduces the Newton step exactly when L
reaches the rank and costs O(L K^2) otherwise. Both consume curvature
through an exponential moving average so that short blocks still see a
well-populated Hessian. Adam is the first-order baseline, run on the
stacked real representation (Re z, Im z); the Wirtinger factor 2 that
relates b to the real gradient is folded into the learning rate, where
Adam's normalized update makes it immaterial anyway.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .linalg import hermitian_solve
from .loss import QuadraticModel

logger = logging.getLogger(__name__)

CG_RESIDUAL_RTOL = 1e-14


@dataclass
class EmaState:
    """Exponential moving average of (Hessian, gradient) pairs.

    The first update copies its inputs instead of blending them into
    zeros, so early steps are not shrunk by the warm-up bias.
    """

    lam: float
    hess: np.ndarray | None = None
    grad: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"forgetting factor must lie in [0, 1], got {self.lam}")

    @property
    def initialized(self) -> bool:
        return self.hess is not None


def ema_update(state: EmaState, hess, grad) -> EmaState:
    hess = np.asarray(hess, dtype=np.complex128)
    grad = np.asarray(grad, dtype=np.complex128)
    if not state.initialized:
        return EmaState(state.lam, hess.copy(), grad.copy())
    lam = state.lam
    return EmaState(
        lam,
        lam * state.hess + (1.0 - lam) * hess,
        lam * state.grad + (1.0 - lam) * grad,
    )


def regularize(hess, gamma: float) -> np.ndarray:
    """Add the ridge gamma I that keeps rank-deficient curvature solvable."""
    hess = np.asarray(hess, dtype=np.complex128)
    if gamma < 0.0:
        raise ValueError(f"ridge must be nonnegative, got {gamma}")
    return hess + gamma * np.eye(hess.shape[0])


def mnm_step(z, q: QuadraticModel, mu: float, gamma: float) -> np.ndarray:
    """One damped mixed Newton update z + mu * delta, delta = -(H+gamma I)^{-1} b."""
    z = np.asarray(z, dtype=np.complex128)
    delta = -hermitian_solve(regularize(q.hess, gamma), q.grad)
    return z + mu * delta


@dataclass(frozen=True)
class CgConfig:
    iters: int = 20
    mu: float = 1.0
    gamma: float = 1e-4
    breakdown_tol: float = 1e-14

    def __post_init__(self) -> None:
        if self.iters < 1:
            raise ValueError(f"need at least one CG iteration, got {self.iters}")
        if self.breakdown_tol <= 0.0:
            raise ValueError(f"breakdown tolerance must be positive, got {self.breakdown_tol}")


@dataclass
class OptStepReport:
    step_norm: float
    grad_norm: float
    inner_iters_used: int
    flops_charged: int


def cg_solve(mat, b, x0, iters: int, breakdown_tol: float = 1e-14, callback=None):
    """Minimize x^H M x + b^H x + x^H b by conjugate gradient.

    Runs at most ``iters`` iterations from ``x0``, stopping early when
    the residual M x + b has dropped below 1e-14 of |b| or the curvature
    p^H M p underflows the breakdown guard. Returns (x, iterations_used).

    ``callback(k, x, r, p_used)`` is invoked after iteration k with the
    new iterate, the new residual and the direction just consumed, which
    is what the conjugacy and orthogonality checks hook into.
    """
    mat = np.asarray(mat, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    x = np.asarray(x0, dtype=np.complex128).copy()
    r = mat @ x + b
    p = r.copy()
    b_norm = np.linalg.norm(b)
    used = 0
    for k in range(iters):
        if np.linalg.norm(r) <= CG_RESIDUAL_RTOL * b_norm:
            break
        xi = mat @ p
        curv = np.vdot(p, xi)
        if abs(curv) <= breakdown_tol * np.vdot(p, p).real:
            break
        alpha = -np.vdot(p, r) / curv
        x = x + alpha * p
        r = r + alpha * xi
        beta = -np.vdot(xi, r) / curv
        p_used = p
        p = r + beta * p
        used += 1
        if callback is not None:
            callback(k, x, r, p_used)
    return x, used


def cg_step(z, q: QuadraticModel, cfg: CgConfig) -> tuple[np.ndarray, OptStepReport]:
    """Approximate mixed Newton update via a truncated CG inner solve."""
    z = np.asarray(z, dtype=np.complex128)
    k = q.grad.shape[0]
    mat = regularize(q.hess, cfg.gamma)
    x, used = cg_solve(mat, q.grad, np.zeros(k, dtype=np.complex128), cfg.iters, cfg.breakdown_tol)
    step = cfg.mu * x
    report = OptStepReport(
        step_norm=float(np.linalg.norm(step)),
        grad_norm=float(np.linalg.norm(q.grad)),
        inner_iters_used=used,
        flops_charged=(used + 1) * k * k,
    )
    return z + step, report


@dataclass
class AdamConfig:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    mu0: float = 1e-4
    alpha_start: float = 1.0
    alpha_end: float = 1e-4
    total_steps: int = 1

    def __post_init__(self) -> None:
        if self.total_steps < 1:
            raise ValueError(f"schedule needs at least one step, got {self.total_steps}")


def lr_schedule(t: int, cfg: AdamConfig) -> float:
    """Linear decay from mu0*alpha_start at t=0 to mu0*alpha_end at t=T-1.

    Out-of-range step indices are clamped to the endpoints and logged;
    the endpoints themselves evaluate exactly.
    """
    last = cfg.total_steps - 1
    if t < 0 or t > last:
        logger.warning("schedule step %d outside [0, %d], clamping", t, last)
        t = min(max(t, 0), last)
    frac = t / last if last > 0 else 0.0
    return (1.0 - frac) * (cfg.mu0 * cfg.alpha_start) + frac * (cfg.mu0 * cfg.alpha_end)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def fresh(cls, n_params: int) -> "AdamState":
        return cls(m=np.zeros(2 * n_params), v=np.zeros(2 * n_params))


def adam_step(z, grad, state: AdamState, cfg: AdamConfig, t: int) -> np.ndarray:
    """One Adam update on the stacked real view of z, descending the gradient b.

    ``state`` is advanced in place; ``t`` only selects the scheduled
    learning rate.
    """
    z = np.asarray(z, dtype=np.complex128)
    grad = np.asarray(grad, dtype=np.complex128)
    n = z.shape[0]
    g = np.concatenate([grad.real, grad.imag])
    state.step += 1
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g * g
    m_hat = state.m / (1.0 - cfg.beta1**state.step)
    v_hat = state.v / (1.0 - cfg.beta2**state.step)
    zr = np.concatenate([z.real, z.imag])
    zr = zr - lr_schedule(t, cfg) * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return zr[:n] + 1j * zr[n:]
