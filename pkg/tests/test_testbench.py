"""Waveform, amplifier, channel and dataset plumbing of the synthetic bench."""

import numpy as np
import pytest

from sicancel.model import HammersteinModel, SplineBasis, hammerstein_forward
from sicancel.loss import nmse_db
from sicancel.testbench import (
    Dataset,
    LeakageChannel,
    PaSimModel,
    WaveformConfig,
    block_iter,
    fir_filter,
    gen_ofdm,
    load_dataset,
    make_dataset,
    make_matched_dataset,
    pa_apply,
    save_dataset,
)

SMALL = WaveformConfig(n_samples=8192, seed=5)


def band_power(x, fs, f_lo, f_hi):
    """Total periodogram power with |f| inside (f_lo, f_hi]."""
    spec = np.abs(np.fft.fft(x)) ** 2
    f = np.abs(np.fft.fftfreq(x.size, d=1.0 / fs))
    return float(spec[(f > f_lo) & (f <= f_hi)].sum())


def test_ofdm_unit_power():
    x = gen_ofdm(SMALL)
    assert abs(np.mean(np.abs(x) ** 2) - 1.0) < 1e-3
    assert x.size == SMALL.n_samples


def test_ofdm_deterministic_per_seed():
    assert np.array_equal(gen_ofdm(SMALL), gen_ofdm(SMALL))


def test_ofdm_seeds_decorrelated():
    # 8x oversampling leaves ~n/8 effective degrees of freedom, so the
    # cross correlation of independent draws sits near 1/sqrt(n/8)
    for seed in range(10):
        a = gen_ofdm(WaveformConfig(n_samples=8192, seed=seed))
        b = gen_ofdm(WaveformConfig(n_samples=8192, seed=seed + 100))
        corr = abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
        assert corr < 0.15


def test_ofdm_occupied_bandwidth():
    x = gen_ofdm(WaveformConfig(n_samples=32768, seed=2))
    fs = SMALL.sample_rate_hz
    spec = np.abs(np.fft.fft(x)) ** 2
    f = np.abs(np.fft.fftfreq(x.size, d=1.0 / fs))
    order = np.argsort(f)
    cum = np.cumsum(spec[order])
    idx = int(np.searchsorted(cum, 0.99 * cum[-1]))
    bw99 = 2.0 * f[order][min(idx, x.size - 1)]
    assert 0.9 * 60e6 <= bw99 <= 1.1 * 60e6


def test_ofdm_config_validation():
    with pytest.raises(ValueError):
        WaveformConfig(bandwidth_hz=500e6, sample_rate_hz=484e6)
    with pytest.raises(ValueError):
        WaveformConfig(qam_order=12)
    with pytest.raises(ValueError):
        WaveformConfig(cp_len=1024, fft_size=1024)
    with pytest.raises(ValueError):
        WaveformConfig(n_samples=0)


def test_pa_linear_identity():
    rng = np.random.default_rng(71)
    x = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    assert np.array_equal(pa_apply(x, PaSimModel(c1=1.0)), x)


def test_pa_unit_amplitude_evaluation():
    x = np.exp(1j * np.linspace(0, 2, 5))  # unit magnitude samples
    out = pa_apply(x, PaSimModel(c1=1.0, c3=-0.1))
    assert np.allclose(out, 0.9 * x, rtol=1e-14, atol=0)


def test_pa_gain_depends_only_on_magnitude():
    pa = PaSimModel.default()
    mags = np.array([0.3, 0.8, 1.7])
    a = pa_apply(mags.astype(complex), pa) / mags
    b = pa_apply(mags * np.exp(0.9j), pa) / (mags * np.exp(0.9j))
    assert np.allclose(a, b, rtol=1e-14, atol=0)


def test_pa_rejects_zero_linear_gain():
    with pytest.raises(ValueError):
        PaSimModel(c1=0.0)


def test_pa_spectral_regrowth():
    # probe with a strictly band-limited Gaussian signal: unlike OFDM it
    # has no symbol-boundary leakage, so any adjacent-band energy after
    # the amplifier is produced by the odd-order terms
    rng = np.random.default_rng(3)
    n = 32768
    fs = SMALL.sample_rate_hz
    f = np.fft.fftfreq(n, d=1.0 / fs)
    spec = (np.abs(f) <= 30e6) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    x = np.fft.ifft(spec)
    x = x / np.sqrt(np.mean(np.abs(x) ** 2))
    adj_lin = band_power(pa_apply(x, PaSimModel(c1=1.0)), fs, 30e6, 90e6)
    adj_pa = band_power(pa_apply(x, PaSimModel.default()), fs, 30e6, 90e6)
    assert 10.0 * np.log10(adj_pa / (adj_lin + 1e-300)) >= 20.0


def test_fir_impulse_identity():
    rng = np.random.default_rng(72)
    x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    out = fir_filter(x, LeakageChannel(taps=np.array([1.0 + 0j])))
    assert np.array_equal(out, x)


def test_fir_pure_delay():
    rng = np.random.default_rng(73)
    x = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    taps = np.zeros(4, dtype=np.complex128)
    taps[3] = 1.0
    out = fir_filter(x, LeakageChannel(taps=taps))
    assert np.array_equal(out[:3], np.zeros(3))
    assert np.array_equal(out[3:], x[:-3])


def test_fir_matches_direct_convolution_oracle():
    rng = np.random.default_rng(74)
    ch = LeakageChannel.from_seed(9)
    x = rng.standard_normal(300) + 1j * rng.standard_normal(300)
    out = fir_filter(x, ch)
    ref = np.zeros(300, dtype=np.complex128)
    for n in range(300):
        for m in range(min(51, n + 1)):
            ref[n] += ch.taps[m] * x[n - m]
    assert np.allclose(out, ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())


def test_fir_linearity():
    rng = np.random.default_rng(75)
    ch = LeakageChannel.from_seed(10)
    x = rng.standard_normal(128) + 1j * rng.standard_normal(128)
    y = rng.standard_normal(128) + 1j * rng.standard_normal(128)
    a, b = 1.5 - 0.5j, -0.3 + 2.0j
    combined = fir_filter(a * x + b * y, ch)
    split = a * fir_filter(x, ch) + b * fir_filter(y, ch)
    assert np.allclose(combined, split, rtol=1e-12, atol=1e-12)


def test_channel_from_seed_normalized():
    ch = LeakageChannel.from_seed(0)
    assert ch.taps.size == 51
    assert abs(np.linalg.norm(ch.taps) - 1.0) < 1e-12
    assert np.array_equal(ch.taps, LeakageChannel.from_seed(0).taps)


def test_channel_rejects_empty():
    with pytest.raises(ValueError):
        LeakageChannel(taps=np.array([]))


def test_dataset_passthrough_chain():
    ds = make_dataset(
        SMALL,
        PaSimModel(c1=1.0),
        LeakageChannel(taps=np.array([1.0 + 0j])),
        noise_db=None,
    )
    assert np.allclose(ds.d, ds.x, rtol=1e-12, atol=1e-13)


def test_dataset_noise_level():
    clean = make_dataset(SMALL, PaSimModel.default(), LeakageChannel.from_seed(8), noise_db=None)
    noisy = make_dataset(SMALL, PaSimModel.default(), LeakageChannel.from_seed(8), noise_db=-60.0)
    noise = noisy.d - clean.d
    assert nmse_db(clean.d, noise) == pytest.approx(-60.0, abs=0.5)


def test_dataset_paper_scale_shape():
    x = gen_ofdm(WaveformConfig())
    assert x.size == 78960
    ds = Dataset(x=x, d=x.copy())
    blocks = list(block_iter(ds, 60))
    assert len(blocks) == 1316


def test_block_iter_drops_partial_tail():
    ds = Dataset(x=np.ones(100, dtype=np.complex128), d=np.ones(100, dtype=np.complex128))
    blocks = list(block_iter(ds, 60))
    assert len(blocks) == 1
    assert blocks[0][2] == 0


def test_block_iter_partitions_prefix():
    rng = np.random.default_rng(76)
    x = rng.standard_normal(130) + 1j * rng.standard_normal(130)
    ds = Dataset(x=x, d=x.copy())
    xs = [blk for blk, _, _ in block_iter(ds, 25)]
    assert np.array_equal(np.concatenate(xs), x[:125])
    offsets = [off for _, _, off in block_iter(ds, 25)]
    assert offsets == [0, 25, 50, 75, 100]


def test_block_iter_validation():
    ds = Dataset(x=np.ones(10, dtype=np.complex128), d=np.ones(10, dtype=np.complex128))
    with pytest.raises(ValueError):
        list(block_iter(ds, 0))
    with pytest.raises(ValueError):
        list(block_iter(ds, 11))


def test_dataset_shape_guard():
    with pytest.raises(ValueError):
        Dataset(x=np.ones(4, dtype=np.complex128), d=np.ones(5, dtype=np.complex128))


def test_dataset_generation_bit_reproducible():
    a = make_dataset(SMALL, PaSimModel.default(), LeakageChannel.from_seed(8))
    b = make_dataset(SMALL, PaSimModel.default(), LeakageChannel.from_seed(8))
    assert np.array_equal(a.x, b.x) and np.array_equal(a.d, b.d)


def test_dataset_save_load_round_trip(tmp_path):
    ds = make_dataset(SMALL, PaSimModel.default(), LeakageChannel.from_seed(8))
    path = tmp_path / "a.sicd"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert np.array_equal(back.x, ds.x) and np.array_equal(back.d, ds.d)
    # the container round trips to identical bytes
    save_dataset(back, tmp_path / "b.sicd")
    assert (tmp_path / "a.sicd").read_bytes() == (tmp_path / "b.sicd").read_bytes()


def test_dataset_load_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.sicd"
    path.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(ValueError, match="magic"):
        load_dataset(path)


def test_dataset_load_rejects_truncation(tmp_path):
    ds = make_dataset(SMALL, PaSimModel.default(), LeakageChannel.from_seed(8))
    path = tmp_path / "t.sicd"
    save_dataset(ds, path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(ValueError, match="truncated"):
        load_dataset(path)


def test_dataset_load_rejects_unknown_version(tmp_path):
    ds = make_dataset(SMALL, PaSimModel.default(), LeakageChannel.from_seed(8))
    path = tmp_path / "v.sicd"
    save_dataset(ds, path)
    blob = bytearray(path.read_bytes())
    blob[4] = 99
    path.write_bytes(bytes(blob))
    with pytest.raises(ValueError, match="version"):
        load_dataset(path)


def test_matched_dataset_reproducible_from_metadata():
    ds = make_matched_dataset(SMALL, noise_db=None)
    meta = ds.metadata
    truth = HammersteinModel(
        h=np.array([complex(re, im) for re, im in meta["truth_h"]]),
        w=np.array([complex(re, im) for re, im in meta["truth_w"]]),
        basis=SplineBasis(meta["basis_size"], meta["a_max"]),
    )
    y = hammerstein_forward(truth, ds.x)
    assert np.allclose(y, ds.d, rtol=1e-12, atol=1e-13)


def test_matched_dataset_truth_shape():
    ds = make_matched_dataset(SMALL, noise_db=None, gain_ripple=0.02, echo_level=0.05)
    h = np.array([complex(re, im) for re, im in ds.metadata["truth_h"]])
    w = np.array([complex(re, im) for re, im in ds.metadata["truth_w"]])
    assert h.size == 8 and w.size == 51
    assert np.abs(h - 1.0).max() < 5 * 0.02  # gains stay near one
    center = (w.size - 1) // 2
    assert abs(w[center] - 1.0) < 1e-12  # unit direct path
    off = np.delete(w, center)
    assert abs(np.linalg.norm(off) - 0.05) < 1e-12  # echoes carry the configured level


def test_matched_dataset_noise_level():
    clean = make_matched_dataset(SMALL, noise_db=None)
    noisy = make_matched_dataset(SMALL, noise_db=-60.0)
    assert nmse_db(clean.d, noisy.d - clean.d) == pytest.approx(-60.0, abs=0.5)
