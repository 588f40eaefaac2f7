"""Command line front end.

Subcommands: ``gen-data`` writes a dataset container, ``train`` runs one
method and ``compare`` runs a sweep, both emitting learning-curve CSVs,
a summary table and a rendered figure; ``complexity-table`` prints the
per-update cost ratios for a given problem size. Exit codes: 0 on
success, 2 for configuration problems, 3 when training aborts
numerically.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import complexity
from .harness import (
    ConfigError,
    ExperimentConfig,
    NumericalAbortError,
    load_config,
    method_label,
    resolve_dataset,
    run_comparison,
    run_experiment,
    summary_table,
    write_summary_csv,
)
from .linalg import SingularMatrixError
from .testbench import save_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _slug(label: str) -> str:
    return label.replace(" ", "_").replace("=", "")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sicancel",
        description="Train and benchmark a spline Hammerstein self-interference canceller.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
        p.add_argument("--config", required=config_required, help="flat key = value config file")
        p.add_argument("--seed", type=int, default=None, help="override the experiment seed")
        p.add_argument(
            "--out",
            default=os.environ.get("SICANCEL_OUT", "."),
            help="output directory (default: $SICANCEL_OUT or the working directory)",
        )

    add_common(sub.add_parser("gen-data", help="generate and store a dataset"))
    add_common(sub.add_parser("train", help="train one method and report its curve"))
    add_common(sub.add_parser("compare", help="run the configured method sweep"))

    ct = sub.add_parser("complexity-table", help="print per-update cost ratios")
    ct.add_argument("--K", type=int, required=True, help="parameter count")
    ct.add_argument("--N", type=int, required=True, help="block length")
    ct.add_argument("--L", default="1,5,10,20,30,50", help="comma list of CG iteration counts")
    ct.add_argument("--out", default=None, help="also write complexity.csv here")
    return parser


def _load(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _outdir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_gen_data(args: argparse.Namespace) -> int:
    cfg = _load(args)
    ds = resolve_dataset(cfg)
    out = _outdir(args) / "dataset.sicd"
    save_dataset(ds, out)
    print(f"wrote {len(ds)} samples to {out}")
    return EXIT_OK


def _cmd_train(args: argparse.Namespace) -> int:
    from .report import save_learning_curves

    cfg = _load(args)
    out = _outdir(args)
    curve, row = run_experiment(cfg)
    curve.to_csv(out / f"curve_{_slug(row.label)}.csv")
    table = summary_table([row], cfg.target_db)
    (out / "summary.txt").write_text(table, encoding="utf-8")
    write_summary_csv([row], out / "summary.csv")
    save_learning_curves({row.label: curve}, out / "learning_curve.png", target_db=cfg.target_db)
    print(table, end="")
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace) -> int:
    from .report import save_learning_curves

    cfg = _load(args)
    out = _outdir(args)
    curves, rows = run_comparison(cfg)
    for label, curve in curves.items():
        curve.to_csv(out / f"curve_{_slug(label)}.csv")
    table = summary_table(rows, cfg.target_db)
    (out / "summary.txt").write_text(table, encoding="utf-8")
    write_summary_csv(rows, out / "summary.csv")
    save_learning_curves(curves, out / "comparison.png", target_db=cfg.target_db)
    print(table, end="")
    return EXIT_OK


def _cmd_complexity_table(args: argparse.Namespace) -> int:
    try:
        iters = [int(tok) for tok in args.L.split(",") if tok.strip()]
        cost = complexity.CostModel(n_params=args.K, block_len=args.N)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not iters or min(iters) < 1:
        raise ConfigError(f"bad CG iteration list {args.L!r}")

    full = complexity.cost_mnm(cost)
    lines = [
        f"per-update cost, K={args.K} params, N={args.N} samples per block",
        f"{'method':<10}{'cost':>12}{'vs newton':>12}",
        f"{'newton':<10}{full:>12}{1.0:>12.2f}",
    ]
    rows = [("newton", full, 1.0)]
    for it in sorted(iters, reverse=True):
        c = complexity.cost_cg(cost, it)
        lines.append(f"{f'cg L={it}':<10}{c:>12}{c / full:>12.2f}")
        rows.append((f"cg L={it}", c, c / full))
    g = complexity.cost_grad(cost)
    lines.append(f"{'gradient':<10}{g:>12}{g / full:>12.2e}")
    rows.append(("gradient", g, g / full))
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        csv_lines = ["method,cost,relative_complexity"]
        csv_lines += [f"{name},{c},{rel!r}" for name, c, rel in rows]
        (out / "complexity.csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
    return EXIT_OK


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "compare": _cmd_compare,
    "complexity-table": _cmd_complexity_table,
}


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularMatrixError, NumericalAbortError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(cli_main())
