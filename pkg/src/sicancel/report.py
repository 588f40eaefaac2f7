"""Learning-curve figures rendered next to the delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import LearningCurve


def save_learning_curves(
    curves: dict[str, LearningCurve],
    path,
    target_db: float | None = None,
    title: str | None = None,
) -> None:
    """Plot NMSE against the epoch coordinate for one or more runs.

    The epoch axis is logarithmic because methods of interest differ by
    orders of magnitude in epochs-to-target.
    """
    if not curves:
        raise ValueError("nothing to plot")
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, curve in curves.items():
        ax.semilogx(curve.epochs, curve.nmse_db, label=label, linewidth=1.3)
    if target_db is not None:
        ax.axhline(target_db, color="gray", linestyle="--", linewidth=0.9, label=f"target {target_db:g} dB")
    ax.set_xlabel("epoch")
    ax.set_ylabel("NMSE [dB]")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
