"""Experiment harness: block-wise training loop, learning curves, summaries.

One experiment trains the canceller on a dataset with one of three
update rules (``mnm``, ``cg:<L>``, ``adam``), evaluates NMSE over the
whole sequence after updates and reports epochs-to-target together with
the per-update cost relative to a full Newton update. Configs come from
flat ``key = value`` files; every key is checked against the schema and
unknown keys are hard errors, because silently ignored knobs are how
benchmark numbers go wrong.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import complexity
from .loss import build_quadratic, mse, QuadraticModel
from .model import HammersteinModel, SplineBasis, jacobian, pack, unpack
from .optim import (
    AdamConfig,
    AdamState,
    CgConfig,
    EmaState,
    adam_step,
    cg_step,
    ema_update,
    mnm_step,
)
from .testbench import (
    Dataset,
    LeakageChannel,
    PaSimModel,
    WaveformConfig,
    block_iter,
    load_dataset,
    make_dataset,
    make_matched_dataset,
)

NOT_REACHED = math.inf


class ConfigError(ValueError):
    """Configuration file or value rejected."""


class NumericalAbortError(RuntimeError):
    """Training produced non-finite parameters."""

    def __init__(self, update_index: int):
        super().__init__(f"non-finite model parameters after update {update_index}")
        self.update_index = update_index


@dataclass
class DataConfig:
    kind: str = "pipeline"
    n_samples: int = 15792
    bandwidth_hz: float = 60e6
    sample_rate_hz: float = 484e6
    qam_order: int = 16
    fft_size: int = 1024
    cp_len: int = 72
    noise_db: float | None = -60.0
    seed: int | None = None
    noise_seed: int | None = None
    channel_seed: int | None = None
    truth_seed: int | None = None
    gain_ripple: float = 0.02
    echo_level: float = 0.05

    def __post_init__(self) -> None:
        if self.kind not in ("pipeline", "matched"):
            raise ConfigError(f"unknown dataset kind {self.kind!r}")


@dataclass
class ExperimentConfig:
    method: str = "mnm"
    methods: tuple[str, ...] = ()
    epochs: int = 5
    block_len: int = 60
    mu: float = 1.0
    gamma: float = 1e-4
    ema_lambda: float = 0.9
    cg_iters: int = 20
    breakdown_tol: float = 1e-14
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    adam_mu0: float = 1e-4
    adam_alpha_start: float = 1.0
    adam_alpha_end: float = 1e-4
    fir_taps: int = 51
    basis_size: int = 8
    nmse_eval_stride: int = 1
    target_db: float = -40.0
    stop_at_db: float | None = None
    seed: int = 0
    dataset_path: str | None = None
    data: DataConfig = field(default_factory=DataConfig)

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be positive, got {self.epochs}")
        if self.block_len < 1:
            raise ConfigError(f"block_len must be positive, got {self.block_len}")
        if self.nmse_eval_stride < 1:
            raise ConfigError(f"nmse_eval_stride must be positive, got {self.nmse_eval_stride}")
        if self.fir_taps < 1 or self.fir_taps % 2 == 0:
            raise ConfigError(f"fir_taps must be odd, got {self.fir_taps}")
        if self.basis_size < 2:
            raise ConfigError(f"basis_size must be at least 2, got {self.basis_size}")
        parse_method(self.method, self.cg_iters)
        for token in self.methods:
            parse_method(token, self.cg_iters)


def parse_method(token: str, default_cg_iters: int = 20) -> tuple[str, int]:
    """Parse a method token: ``mnm``, ``adam``, ``cg`` or ``cg:<L>``."""
    token = token.strip()
    if token in ("mnm", "adam"):
        return token, 0
    if token == "cg":
        return "cg", default_cg_iters
    if token.startswith("cg:"):
        try:
            iters = int(token[3:])
        except ValueError:
            raise ConfigError(f"bad CG iteration count in method token {token!r}") from None
        if iters < 1:
            raise ConfigError(f"CG iteration count must be positive in {token!r}")
        return "cg", iters
    raise ConfigError(f"unknown method {token!r} (expected mnm, cg, cg:<L> or adam)")


def method_label(token: str, default_cg_iters: int = 20) -> str:
    name, iters = parse_method(token, default_cg_iters)
    return f"cg L={iters}" if name == "cg" else name


# Config file schema: key -> (attribute path, parser).


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None


def _parse_opt_float(text: str) -> float | None:
    return None if text.lower() in ("none", "off") else _parse_float(text)


def _parse_opt_int(text: str) -> int | None:
    return None if text.lower() in ("none",) else _parse_int(text)


def _parse_str(text: str) -> str:
    return text


def _parse_methods(text: str) -> tuple[str, ...]:
    tokens = tuple(tok.strip() for tok in text.split(",") if tok.strip())
    if not tokens:
        raise ConfigError("methods list is empty")
    return tokens


_SCHEMA = {
    "method": ("method", _parse_str),
    "methods": ("methods", _parse_methods),
    "epochs": ("epochs", _parse_int),
    "block_len": ("block_len", _parse_int),
    "mu": ("mu", _parse_float),
    "gamma": ("gamma", _parse_float),
    "lambda": ("ema_lambda", _parse_float),
    "cg_iters": ("cg_iters", _parse_int),
    "breakdown_tol": ("breakdown_tol", _parse_float),
    "adam_beta1": ("adam_beta1", _parse_float),
    "adam_beta2": ("adam_beta2", _parse_float),
    "adam_eps": ("adam_eps", _parse_float),
    "adam_mu0": ("adam_mu0", _parse_float),
    "adam_alpha_start": ("adam_alpha_start", _parse_float),
    "adam_alpha_end": ("adam_alpha_end", _parse_float),
    "fir_taps": ("fir_taps", _parse_int),
    "basis_size": ("basis_size", _parse_int),
    "nmse_eval_stride": ("nmse_eval_stride", _parse_int),
    "target_db": ("target_db", _parse_float),
    "stop_at_db": ("stop_at_db", _parse_opt_float),
    "seed": ("seed", _parse_int),
    "dataset": ("dataset_path", _parse_str),
    "data.kind": ("data.kind", _parse_str),
    "data.n_samples": ("data.n_samples", _parse_int),
    "data.bandwidth_hz": ("data.bandwidth_hz", _parse_float),
    "data.sample_rate_hz": ("data.sample_rate_hz", _parse_float),
    "data.qam_order": ("data.qam_order", _parse_int),
    "data.fft_size": ("data.fft_size", _parse_int),
    "data.cp_len": ("data.cp_len", _parse_int),
    "data.noise_db": ("data.noise_db", _parse_opt_float),
    "data.seed": ("data.seed", _parse_opt_int),
    "data.noise_seed": ("data.noise_seed", _parse_opt_int),
    "data.channel_seed": ("data.channel_seed", _parse_opt_int),
    "data.truth_seed": ("data.truth_seed", _parse_opt_int),
    "data.gain_ripple": ("data.gain_ripple", _parse_float),
    "data.echo_level": ("data.echo_level", _parse_float),
}


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if not val:
            raise ConfigError(f"{source}:{lineno}: empty value for {key!r}")
        attr, parser = _SCHEMA[key]
        try:
            values[attr] = parser(val)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from None

    data_kwargs = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("data.")}
    top_kwargs = {k: v for k, v in values.items() if not k.startswith("data.")}
    try:
        return ExperimentConfig(data=DataConfig(**data_kwargs), **top_kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, source=str(path))


def resolve_dataset(cfg: ExperimentConfig) -> Dataset:
    """Load the configured dataset file or synthesize one from the data block."""
    if cfg.dataset_path is not None:
        return load_dataset(cfg.dataset_path)
    dc = cfg.data
    seed = cfg.seed if dc.seed is None else dc.seed
    wcfg = WaveformConfig(
        bandwidth_hz=dc.bandwidth_hz,
        sample_rate_hz=dc.sample_rate_hz,
        n_samples=dc.n_samples,
        qam_order=dc.qam_order,
        fft_size=dc.fft_size,
        cp_len=dc.cp_len,
        seed=seed,
    )
    if dc.kind == "matched":
        return make_matched_dataset(
            wcfg,
            n_taps=cfg.fir_taps,
            basis_size=cfg.basis_size,
            noise_db=dc.noise_db,
            truth_seed=dc.truth_seed,
            noise_seed=dc.noise_seed,
            gain_ripple=dc.gain_ripple,
            echo_level=dc.echo_level,
        )
    channel_seed = seed + 3 if dc.channel_seed is None else dc.channel_seed
    return make_dataset(
        wcfg,
        PaSimModel.default(),
        LeakageChannel.from_seed(channel_seed, n_taps=cfg.fir_taps),
        noise_db=dc.noise_db,
        noise_seed=dc.noise_seed,
    )


@dataclass
class LearningCurve:
    """NMSE trajectory sampled after parameter updates.

    ``epochs[i] = updates[i] * block_len / len(dataset)`` so curves from
    different methods share an x axis, and ``cum_cost[i]`` charges the
    per-update cost of the method times the update count.
    """

    updates: list[int] = field(default_factory=list)
    epochs: list[float] = field(default_factory=list)
    nmse_db: list[float] = field(default_factory=list)
    cum_cost: list[int] = field(default_factory=list)

    CSV_HEADER = "update,epoch,nmse_db,cum_cost"

    def append(self, update: int, epoch: float, nmse: float, cost: int) -> None:
        if self.updates and update <= self.updates[-1]:
            raise ValueError(f"update indices must increase, got {update} after {self.updates[-1]}")
        self.updates.append(update)
        self.epochs.append(epoch)
        self.nmse_db.append(nmse)
        self.cum_cost.append(cost)

    def __len__(self) -> int:
        return len(self.updates)

    @property
    def final_nmse_db(self) -> float:
        if not self.updates:
            raise ValueError("curve is empty")
        return self.nmse_db[-1]

    def to_csv(self, path) -> None:
        lines = [self.CSV_HEADER]
        for u, ep, nm, cc in zip(self.updates, self.epochs, self.nmse_db, self.cum_cost):
            lines.append(f"{u},{ep!r},{nm!r},{cc}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path) -> "LearningCurve":
        lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
        if not lines or lines[0] != cls.CSV_HEADER:
            raise ValueError(f"{path} does not start with the header {cls.CSV_HEADER!r}")
        curve = cls()
        for line in lines[1:]:
            u, ep, nm, cc = line.split(",")
            curve.append(int(u), float(ep), float(nm), int(cc))
        return curve


@dataclass
class SummaryRow:
    label: str
    epochs_to_target: float
    relative_complexity: float
    final_nmse_db: float


def epochs_to_target(curve: LearningCurve, target_db: float) -> float:
    """Epoch coordinate of the first recorded NMSE at or below target, else inf."""
    for ep, nm in zip(curve.epochs, curve.nmse_db):
        if nm <= target_db:
            return ep
    return NOT_REACHED


def _fmt_epochs(value: float) -> str:
    return "not reached" if math.isinf(value) else f"{value:.2f}"


def summary_table(rows: list[SummaryRow], target_db: float) -> str:
    """Aligned text table: method, epochs to target, relative cost, final NMSE."""
    header = ("method", f"epochs to {target_db:g} dB", "rel. complexity", "final NMSE [dB]")
    cells = [header]
    for row in rows:
        cells.append(
            (
                row.label,
                _fmt_epochs(row.epochs_to_target),
                f"{row.relative_complexity:.3g}",
                f"{row.final_nmse_db:.1f}",
            )
        )
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = []
    for i, row in enumerate(cells):
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * width for width in widths))
    return "\n".join(lines) + "\n"


SUMMARY_CSV_HEADER = "method,epochs_to_target,relative_complexity,final_nmse_db"


def write_summary_csv(rows: list[SummaryRow], path) -> None:
    lines = [SUMMARY_CSV_HEADER]
    for row in rows:
        lines.append(
            f"{row.label},{row.epochs_to_target!r},{row.relative_complexity!r},{row.final_nmse_db!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def total_updates(epochs: int, n_samples: int, block_len: int) -> int:
    """Update count of a full run: epochs times whole blocks per epoch."""
    blocks = n_samples // block_len
    if blocks < 1:
        raise ConfigError(f"block length {block_len} exceeds the {n_samples}-sample dataset")
    return epochs * blocks


def init_model(ds: Dataset, basis_size: int, fir_taps: int) -> HammersteinModel:
    """Identity canceller with the amplitude grid calibrated on this dataset.

    Unit gain table plus a unit tap at lag zero, i.e. y = x. The all-zero
    parameter point is a stationary saddle of the bilinear model, and a
    zero FIR would also zero every gain-table column of the first
    Jacobian, feeding rank-deficient curvature into the averaging state;
    the identity point keeps both parameter blocks observable from the
    first update on.
    """
    a_max = 1.05 * float(np.max(np.abs(ds.x)))
    basis = SplineBasis(basis_size, a_max)
    w = np.zeros(fir_taps, dtype=np.complex128)
    w[(fir_taps - 1) // 2] = 1.0
    return HammersteinModel(
        h=np.ones(basis_size, dtype=np.complex128),
        w=w,
        basis=basis,
    )


def run_experiment(
    cfg: ExperimentConfig, dataset: Dataset | None = None, method: str | None = None
) -> tuple[LearningCurve, SummaryRow]:
    """Train one method on one dataset and report its learning curve.

    NMSE is measured over the entire sequence after every
    ``nmse_eval_stride``-th update (and after the last one). When
    ``stop_at_db`` is set the run halts at the first evaluation at or
    below it, which shortens sweeps whose only question is when a target
    is crossed.
    """
    ds = resolve_dataset(cfg) if dataset is None else dataset
    token = cfg.method if method is None else method
    name, cg_iters = parse_method(token, cfg.cg_iters)
    label = method_label(token, cfg.cg_iters)

    n = cfg.block_len
    n_updates = total_updates(cfg.epochs, len(ds), n)
    mdl = init_model(ds, cfg.basis_size, cfg.fir_taps)
    p, m, d_half = mdl.n_basis, mdl.n_taps, mdl.half_span
    k = mdl.n_params

    cost = complexity.CostModel(n_params=k, block_len=n)
    if name == "mnm":
        cost_per_update = complexity.cost_mnm(cost)
    elif name == "cg":
        cost_per_update = complexity.cost_cg(cost, cg_iters)
    else:
        cost_per_update = complexity.cost_grad(cost)
    rel_complexity = cost_per_update / complexity.cost_mnm(cost)

    x, d = ds.x, ds.d
    d_energy = mse(d)
    if d_energy <= 0.0:
        raise ConfigError("dataset reference signal has no energy")
    # The basis matrix of the full sequence is parameter independent, so
    # the per-evaluation forward pass reduces to a matvec and one FIR.
    v_full = x[:, None] * mdl.basis.matrix(np.abs(x))

    ema = EmaState(cfg.ema_lambda)
    cg_cfg = None
    if name == "cg":
        cg_cfg = CgConfig(
            iters=cg_iters, mu=cfg.mu, gamma=cfg.gamma, breakdown_tol=cfg.breakdown_tol
        )
    adam_cfg = AdamConfig(
        beta1=cfg.adam_beta1,
        beta2=cfg.adam_beta2,
        eps=cfg.adam_eps,
        mu0=cfg.adam_mu0,
        alpha_start=cfg.adam_alpha_start,
        alpha_end=cfg.adam_alpha_end,
        total_steps=n_updates,
    )
    adam_state = AdamState.fresh(k)
    z = pack(mdl.h, mdl.w)

    curve = LearningCurve()
    t = 0
    stopped = False
    for _ in range(cfg.epochs):
        for _xb, d_blk, offset in block_iter(ds, n):
            jac = jacobian(mdl, x, offset, n)
            e_blk = d_blk - jac[:, p:] @ mdl.w
            if name == "adam":
                grad = -(jac.conj().T @ e_blk)
                z = adam_step(z, grad, adam_state, adam_cfg, t)
            else:
                q = build_quadratic(jac, e_blk)
                ema = ema_update(ema, q.hess, q.grad)
                q_avg = QuadraticModel(hess=ema.hess, grad=ema.grad, c_const=q.c_const)
                if name == "mnm":
                    z = mnm_step(z, q_avg, cfg.mu, cfg.gamma)
                else:
                    z, _ = cg_step(z, q_avg, cg_cfg)
            t += 1
            if not np.isfinite(z).all():
                raise NumericalAbortError(t)
            mdl.h, mdl.w = unpack(z, p)
            if t % cfg.nmse_eval_stride == 0 or t == n_updates:
                y = np.convolve(v_full @ mdl.h, mdl.w)[d_half : d_half + len(ds)]
                # a perfect noiseless fit would hit log10(0)
                nmse = 10.0 * math.log10(max(mse(d - y), 1e-300) / d_energy)
                curve.append(t, t * n / len(ds), nmse, t * cost_per_update)
                if cfg.stop_at_db is not None and nmse <= cfg.stop_at_db:
                    stopped = True
                    break
        if stopped:
            break

    row = SummaryRow(
        label=label,
        epochs_to_target=epochs_to_target(curve, cfg.target_db),
        relative_complexity=rel_complexity,
        final_nmse_db=curve.final_nmse_db,
    )
    return curve, row


def run_comparison(
    cfg: ExperimentConfig, dataset: Dataset | None = None
) -> tuple[dict[str, LearningCurve], list[SummaryRow]]:
    """Run every method in cfg.methods on one shared dataset."""
    if not cfg.methods:
        raise ConfigError("comparison needs a 'methods' list in the config")
    ds = resolve_dataset(cfg) if dataset is None else dataset
    curves: dict[str, LearningCurve] = {}
    rows: list[SummaryRow] = []
    for token in cfg.methods:
        curve, row = run_experiment(cfg, dataset=ds, method=token)
        curves[row.label] = curve
        rows.append(row)
    return curves, rows
