"""Per-update floating-point cost model for the three trainers.

Leading-order terms only, charged with unit constants: a full mixed
Newton update pays K^3 for the solve, K^2 N for forming J^H J and K N
for the gradient; the CG variant swaps the cubic solve for L K^2 worth
of matrix-vector products; a first-order step pays the gradient alone.
All counts are exact integers so ratios are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CostModel:
    n_params: int
    block_len: int

    def __post_init__(self) -> None:
        if self.n_params < 1 or self.block_len < 1:
            raise ValueError(
                f"sizes must be positive, got K={self.n_params}, N={self.block_len}"
            )


def cost_mnm(c: CostModel) -> int:
    k, n = c.n_params, c.block_len
    return k**3 + k * k * n + k * n


def cost_grad(c: CostModel) -> int:
    return c.n_params * c.block_len


def cost_cg(c: CostModel, iters: int) -> int:
    if iters < 1:
        raise ValueError(f"need at least one CG iteration, got {iters}")
    k, n = c.n_params, c.block_len
    return k * n + k * k * n + iters * k * k
