"""Synthetic full-duplex bench: OFDM transmitter, polynomial PA, FIR leakage.

The default chain builds a unit-power QAM-16 OFDM waveform, distorts it
with a memoryless odd-order polynomial amplifier, passes it through a
random 51-tap leakage channel and adds white noise well below the
distortion floor. Everything is seeded, so a (config, seed) pair pins
every sample.

Datasets go to disk in a small binary container: the magic ``SICD``,
a u32 format version, a u64 sample count, then x and d as little-endian
interleaved float64 re/im pairs, then a UTF-8 JSON metadata trailer.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .model import HammersteinModel, SplineBasis, hammerstein_forward

MAGIC = b"SICD"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class WaveformConfig:
    bandwidth_hz: float = 60e6
    sample_rate_hz: float = 484e6
    n_samples: int = 78960
    qam_order: int = 16
    fft_size: int = 1024
    cp_len: int = 72
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.bandwidth_hz < self.sample_rate_hz:
            raise ValueError(
                f"bandwidth {self.bandwidth_hz} must lie in (0, {self.sample_rate_hz})"
            )
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be positive, got {self.n_samples}")
        side = math.isqrt(self.qam_order)
        if side * side != self.qam_order or side < 2:
            raise ValueError(f"qam_order must be a square constellation, got {self.qam_order}")
        if self.fft_size < 8:
            raise ValueError(f"fft_size too small: {self.fft_size}")
        if self.cp_len < 0 or self.cp_len >= self.fft_size:
            raise ValueError(f"cp_len must lie in [0, fft_size), got {self.cp_len}")


def gen_ofdm(cfg: WaveformConfig) -> np.ndarray:
    """Seeded OFDM burst: loaded center tones, cyclic prefixes, unit power."""
    n_tones = math.ceil(cfg.fft_size * cfg.bandwidth_hz / cfg.sample_rate_hz)
    n_pos = n_tones // 2
    n_neg = n_tones - n_pos
    if n_neg > cfg.fft_size // 2 - 1:
        raise ValueError(f"{n_tones} tones do not fit an fft of {cfg.fft_size}")

    side = math.isqrt(cfg.qam_order)
    sym_len = cfg.fft_size + cfg.cp_len
    n_sym = -(-cfg.n_samples // sym_len)

    rng = np.random.default_rng(cfg.seed)
    axes = rng.integers(0, side, size=(n_sym, n_tones, 2))
    levels = 2 * axes - (side - 1)
    scale = math.sqrt(3.0 / (2.0 * (side * side - 1)))
    symbols = (levels[..., 0] + 1j * levels[..., 1]) * scale

    grid = np.zeros((n_sym, cfg.fft_size), dtype=np.complex128)
    grid[:, 1 : n_pos + 1] = symbols[:, :n_pos]
    grid[:, cfg.fft_size - n_neg :] = symbols[:, n_pos:]
    time = np.fft.ifft(grid, axis=1)
    with_cp = np.concatenate([time[:, cfg.fft_size - cfg.cp_len :], time], axis=1)
    x = with_cp.reshape(-1)[: cfg.n_samples]
    return x / math.sqrt(float(np.mean(np.abs(x) ** 2)))


@dataclass(frozen=True)
class PaSimModel:
    """Memoryless odd-order polynomial amplifier y = sum c_{2k+1} x |x|^{2k}."""

    c1: complex = 1.0 + 0.0j
    c3: complex = 0.0j
    c5: complex = 0.0j
    c7: complex = 0.0j
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.c1 == 0:
            raise ValueError("linear gain c1 must be nonzero")

    @classmethod
    def default(cls) -> "PaSimModel":
        """Mild compressive nonlinearity a few tens of dB under the carrier."""
        return cls(c1=1.0 + 0.0j, c3=-0.05 + 0.01j, c5=0.002 - 0.001j, c7=0.0j)


def pa_apply(x, pa: PaSimModel) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    a2 = np.abs(x) ** 2
    return pa.scale * (x * (pa.c1 + a2 * (pa.c3 + a2 * (pa.c5 + a2 * pa.c7))))


@dataclass(frozen=True)
class LeakageChannel:
    """FIR leakage path, taps indexed by causal lag 0..len-1."""

    taps: np.ndarray

    def __post_init__(self) -> None:
        taps = np.asarray(self.taps, dtype=np.complex128)
        if taps.ndim != 1 or taps.size < 1:
            raise ValueError(f"taps must be a nonempty vector, got shape {taps.shape}")
        object.__setattr__(self, "taps", taps)

    @classmethod
    def from_seed(cls, seed: int, n_taps: int = 51, decay_db_per_tap: float = 0.5) -> "LeakageChannel":
        """Random complex taps with exponential power decay, unit total energy."""
        rng = np.random.default_rng(seed)
        g = (rng.standard_normal(n_taps) + 1j * rng.standard_normal(n_taps)) / math.sqrt(2.0)
        profile = 10.0 ** (-decay_db_per_tap * np.arange(n_taps) / 20.0)
        taps = g * profile
        return cls(taps / np.linalg.norm(taps))


def fir_filter(x, ch: LeakageChannel) -> np.ndarray:
    """Causal zero-state convolution, output trimmed to the input length."""
    x = np.asarray(x, dtype=np.complex128)
    return np.convolve(x, ch.taps)[: x.size]


@dataclass
class Dataset:
    x: np.ndarray
    d: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=np.complex128)
        self.d = np.asarray(self.d, dtype=np.complex128)
        if self.x.shape != self.d.shape or self.x.ndim != 1:
            raise ValueError(
                f"x and d must be 1-D and equal length, got {self.x.shape} and {self.d.shape}"
            )

    def __len__(self) -> int:
        return self.x.size


def _add_noise(d: np.ndarray, noise_db: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    sigma2 = 10.0 ** (noise_db / 10.0) * float(np.mean(np.abs(d) ** 2))
    noise = (rng.standard_normal(d.size) + 1j * rng.standard_normal(d.size)) * math.sqrt(
        sigma2 / 2.0
    )
    return d + noise


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def make_dataset(
    wcfg: WaveformConfig,
    pa: PaSimModel,
    ch: LeakageChannel,
    noise_db: float | None = -60.0,
    noise_seed: int | None = None,
) -> Dataset:
    """Transmit chain dataset: d is the PA output through the leakage path.

    The PA output is renormalized to unit average power before the
    channel. The channel is applied center-aligned, i.e. causal
    filtering followed by removal of the (len-1)/2 sample bulk delay,
    the alignment any receive capture performs before model fitting;
    without it a canceller whose FIR is centered on lag zero could not
    span the leakage response at all.
    """
    if noise_seed is None:
        noise_seed = wcfg.seed + 1
    x = gen_ofdm(wcfg)
    u = pa_apply(x, pa)
    pa_norm = 1.0 / math.sqrt(float(np.mean(np.abs(u) ** 2)))
    u = u * pa_norm
    half = (ch.taps.size - 1) // 2
    d = np.convolve(u, ch.taps)[half : half + x.size]
    if noise_db is not None:
        d = _add_noise(d, noise_db, noise_seed)
    meta = {
        "kind": "pipeline",
        "waveform": _jsonable(wcfg.__dict__),
        "pa": _jsonable(pa.__dict__),
        "pa_output_norm": pa_norm,
        "channel_taps": _jsonable(ch.taps),
        "noise_db": noise_db,
        "noise_seed": noise_seed if noise_db is not None else None,
    }
    return Dataset(x=x, d=d, metadata=meta)


def make_matched_dataset(
    wcfg: WaveformConfig,
    n_taps: int = 51,
    basis_size: int = 8,
    noise_db: float | None = -60.0,
    truth_seed: int | None = None,
    noise_seed: int | None = None,
    gain_ripple: float = 0.02,
    echo_level: float = 0.05,
) -> Dataset:
    """Dataset generated by a model inside the canceller's own family.

    The ground truth uses the same spline grid the trainer will derive
    from x (1.05 times the amplitude peak). It is a mild deviation from
    the identity canceller: the gain table sits within `gain_ripple` of
    one, and the FIR is a unit direct path at lag zero plus centered
    echoes carrying `echo_level` of its amplitude with a half dB per tap
    decay. That shape mirrors a short leakage path driven by a backed
    off amplifier, and it keeps the curvature of the fit nearly constant
    along the training trajectory, so any residual above the noise floor
    is attributable to the optimizer alone.
    """
    if truth_seed is None:
        truth_seed = wcfg.seed + 2
    if noise_seed is None:
        noise_seed = wcfg.seed + 1
    x = gen_ofdm(wcfg)
    basis = SplineBasis(basis_size, 1.05 * float(np.max(np.abs(x))))
    rng = np.random.default_rng(truth_seed)
    h = 1.0 + gain_ripple * (rng.standard_normal(basis_size) + 1j * rng.standard_normal(basis_size)) / math.sqrt(2.0)
    half = (n_taps - 1) // 2
    profile = 10.0 ** (-0.5 * np.abs(np.arange(n_taps) - half) / 20.0)
    echoes = (rng.standard_normal(n_taps) + 1j * rng.standard_normal(n_taps)) / math.sqrt(2.0) * profile
    echoes[half] = 0.0
    echoes = echoes / np.linalg.norm(echoes)
    w = np.zeros(n_taps, dtype=np.complex128)
    w[half] = 1.0
    w = w + echo_level * echoes
    truth = HammersteinModel(h=h, w=w, basis=basis)
    d = hammerstein_forward(truth, x)
    if noise_db is not None:
        d = _add_noise(d, noise_db, noise_seed)
    meta = {
        "kind": "matched",
        "waveform": _jsonable(wcfg.__dict__),
        "truth_h": _jsonable(truth.h),
        "truth_w": _jsonable(truth.w),
        "basis_size": basis_size,
        "a_max": basis.a_max,
        "truth_seed": truth_seed,
        "gain_ripple": gain_ripple,
        "echo_level": echo_level,
        "noise_db": noise_db,
        "noise_seed": noise_seed if noise_db is not None else None,
    }
    return Dataset(x=x, d=d, metadata=meta)


def block_iter(ds: Dataset, n_block: int) -> Iterator[tuple[np.ndarray, np.ndarray, int]]:
    """Contiguous non-overlapping (x, d, offset) blocks; a final partial one is dropped."""
    if n_block <= 0:
        raise ValueError(f"block length must be positive, got {n_block}")
    if n_block > len(ds):
        raise ValueError(f"block length {n_block} exceeds the {len(ds)}-sample dataset")
    for offset in range(0, len(ds) - n_block + 1, n_block):
        yield ds.x[offset : offset + n_block], ds.d[offset : offset + n_block], offset


def save_dataset(ds: Dataset, path) -> None:
    payload = json.dumps(_jsonable(ds.metadata), sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(ds)))
        fh.write(ds.x.astype("<c16").tobytes())
        fh.write(ds.d.astype("<c16").tobytes())
        fh.write(payload)


def load_dataset(path) -> Dataset:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise ValueError(f"{path} is not a dataset container (bad magic {blob[:4]!r})")
    version = struct.unpack("<I", blob[4:8])[0]
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported dataset format version {version}")
    n = struct.unpack("<Q", blob[8:16])[0]
    need = 16 + 2 * 16 * n
    if len(blob) < need:
        raise ValueError(f"{path} is truncated: {len(blob)} bytes for {n} samples")
    x = np.frombuffer(blob, dtype="<c16", count=n, offset=16).astype(np.complex128)
    d = np.frombuffer(blob, dtype="<c16", count=n, offset=16 + 16 * n).astype(np.complex128)
    metadata = json.loads(blob[need:].decode("utf-8")) if len(blob) > need else {}
    return Dataset(x=x, d=d, metadata=metadata)
