r"""Hammerstein canceller model: spline gain table feeding a centered FIR.

The model output is

    y_n = sum_{m=-D}^{D} w_m * g(x_{n-m}),    g(u) = u * sum_k h_k phi_k(|u|)

where phi_k are degree-1 B-spline hats on a uniform amplitude grid and
the FIR taps w_m span lags -D..D with M = 2D+1 taps. The gain table is
a partition of unity, so an all-ones h is the identity nonlinearity.
Samples referenced outside the given sequence are treated as zero.

Parameters are handled as one complex vector z = [h_0..h_{P-1},
w_{-D}..w_{D}] of length K = P + M. The output is holomorphic in z
(no conjugates appear anywhere), which is what makes the mixed Newton
Hessian of the squared error exactly J^H J.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@dataclass(frozen=True)
class SplineBasis:
    """Uniform grid of degree-1 B-spline hats on [0, a_max].

    Above a_max the basis is clamped to its boundary value rather than
    extrapolated, so amplitudes past the calibration range keep a
    bounded gain.
    """

    size: int
    a_max: float

    def __post_init__(self) -> None:
        if self.size < 2:
            raise ValueError(f"need at least 2 basis functions, got {self.size}")
        if not self.a_max > 0.0:
            raise ValueError(f"a_max must be positive, got {self.a_max}")

    @property
    def knots(self) -> np.ndarray:
        return np.linspace(0.0, self.a_max, self.size)

    def matrix(self, amps) -> np.ndarray:
        """Evaluate all hats at the given amplitudes, shape (len(amps), size)."""
        a = np.asarray(amps, dtype=np.float64)
        if a.ndim != 1:
            raise ValueError(f"amplitudes must be 1-D, got shape {a.shape}")
        if a.size and a.min() < 0.0:
            raise ValueError("amplitudes must be nonnegative")
        step = self.a_max / (self.size - 1)
        u = np.minimum(a, self.a_max) / step
        left = np.minimum(u.astype(np.intp), self.size - 2)
        frac = u - left
        out = np.zeros((a.size, self.size))
        rows = np.arange(a.size)
        out[rows, left] = 1.0 - frac
        out[rows, left + 1] = frac
        return out


def basis_eval(a: float, basis: SplineBasis) -> np.ndarray:
    """Evaluate the basis at one amplitude, returning a length-P vector."""
    if a < 0.0:
        raise ValueError(f"amplitude must be nonnegative, got {a}")
    return basis.matrix(np.array([float(a)]))[0]


@dataclass
class HammersteinModel:
    h: np.ndarray
    w: np.ndarray
    basis: SplineBasis

    def __post_init__(self) -> None:
        self.h = np.asarray(self.h, dtype=np.complex128)
        self.w = np.asarray(self.w, dtype=np.complex128)
        if self.h.ndim != 1 or self.h.size != self.basis.size:
            raise ValueError(
                f"h must have one entry per basis function ({self.basis.size}), "
                f"got shape {self.h.shape}"
            )
        if self.w.ndim != 1 or self.w.size % 2 == 0:
            raise ValueError(f"w must hold an odd number of taps, got shape {self.w.shape}")

    @property
    def n_basis(self) -> int:
        return self.h.size

    @property
    def n_taps(self) -> int:
        return self.w.size

    @property
    def half_span(self) -> int:
        return (self.w.size - 1) // 2

    @property
    def n_params(self) -> int:
        return self.h.size + self.w.size


def pack(h, w) -> np.ndarray:
    """Stack gain-table and FIR parameters into one complex vector."""
    return np.concatenate(
        [np.asarray(h, dtype=np.complex128), np.asarray(w, dtype=np.complex128)]
    )


def unpack(z, n_basis: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a parameter vector back into (h, w)."""
    z = np.asarray(z, dtype=np.complex128)
    if z.ndim != 1 or z.size <= n_basis:
        raise ValueError(f"parameter vector of shape {z.shape} cannot hold {n_basis} gains")
    return z[:n_basis].copy(), z[n_basis:].copy()


def nonlinear_branch(model: HammersteinModel, x) -> np.ndarray:
    """Apply the memoryless gain table: s_n = x_n * sum_k h_k phi_k(|x_n|)."""
    x = np.asarray(x, dtype=np.complex128)
    return x * (model.basis.matrix(np.abs(x)) @ model.h)


def hammerstein_forward(model: HammersteinModel, x) -> np.ndarray:
    """Full model output over a sequence, zero padded at its edges."""
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1:
        raise ValueError(f"input must be 1-D, got shape {x.shape}")
    if x.size < model.n_taps:
        raise ValueError(f"need at least {model.n_taps} samples, got {x.size}")
    s = nonlinear_branch(model, x)
    d = model.half_span
    return np.convolve(s, model.w)[d : d + x.size]


def jacobian(model: HammersteinModel, x, offset: int = 0, length: int | None = None) -> np.ndarray:
    """Jacobian D_z y of the model output rows [offset, offset+length).

    ``x`` is the sequence the rows are embedded in; the FIR window of a
    row may reach up to D samples beyond the row range and those samples
    are taken from ``x`` where it covers them, zero otherwise. Passing a
    bare block with offset 0 therefore pads at the block edges, while
    passing the full sequence plus an offset reproduces the streaming
    behaviour of ``hammerstein_forward`` exactly.

    Columns follow the pack() layout: P gain-table columns, then M tap
    columns. The matvec of the tap columns with w reproduces the block
    output, a consequence of the model being bilinear in (h, w).
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1:
        raise ValueError(f"input must be 1-D, got shape {x.shape}")
    if length is None:
        length = x.size - offset
    if length < 1:
        raise ValueError(f"need at least one row, got length {length}")
    if offset < 0 or offset + length > x.size:
        raise ValueError(
            f"rows [{offset}, {offset + length}) fall outside a {x.size}-sample sequence"
        )
    p = model.n_basis
    m = model.n_taps
    d = model.half_span

    # Context slice [offset-D, offset+length+D), zero where outside x.
    ext = np.zeros(length + 2 * d, dtype=np.complex128)
    lo = offset - d
    src_lo = max(lo, 0)
    src_hi = min(offset + length + d, x.size)
    ext[src_lo - lo : src_hi - lo] = x[src_lo:src_hi]

    v = ext[:, None] * model.basis.matrix(np.abs(ext))
    s = v @ model.h

    jac = np.empty((length, p + m), dtype=np.complex128)
    for k in range(p):
        jac[:, k] = np.convolve(v[:, k], model.w)[2 * d : 2 * d + length]
    # Tap column for lag m_j = j - D is s delayed by m_j.
    windows = sliding_window_view(s, length)
    jac[:, p:] = windows[::-1].T
    return jac


def save_model(model: HammersteinModel, path) -> None:
    """Write the model as plain text: P, M, a_max, then K lines of re im."""
    lines = [str(model.n_basis), str(model.n_taps), repr(float(model.basis.a_max))]
    for val in np.concatenate([model.h, model.w]):
        # float() strips the numpy scalar type so repr stays parseable
        lines.append(f"{float(val.real)!r} {float(val.imag)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> HammersteinModel:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) < 3:
        raise ValueError(f"model file {path} is truncated")
    p, m = int(lines[0]), int(lines[1])
    a_max = float(lines[2])
    if len(lines) != 3 + p + m:
        raise ValueError(f"model file {path} holds {len(lines) - 3} parameters, expected {p + m}")
    vals = np.array(
        [complex(float(re), float(im)) for re, im in (ln.split() for ln in lines[3:])]
    )
    return HammersteinModel(h=vals[:p], w=vals[p:], basis=SplineBasis(p, a_max))
