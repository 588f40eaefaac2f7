"""Complex-valued Hammerstein self-interference canceller toolkit.

Identifies a spline-gain-table-plus-FIR model of a nonlinear leakage
path with second-order (mixed Newton, truncated conjugate gradient) and
first-order (Adam) trainers, and benchmarks their convergence against
per-update cost on a synthetic full-duplex bench.
"""

from .complexity import CostModel, cost_cg, cost_grad, cost_mnm
from .harness import (
    ConfigError,
    DataConfig,
    ExperimentConfig,
    LearningCurve,
    NumericalAbortError,
    SummaryRow,
    epochs_to_target,
    load_config,
    run_comparison,
    run_experiment,
    summary_table,
    total_updates,
)
from .linalg import SingularMatrixError, dot_h, hermitian_solve, hermitianize, matvec
from .loss import QuadraticModel, build_quadratic, grad_norm, mse, nmse_db, quadratic_value
from .model import (
    HammersteinModel,
    SplineBasis,
    basis_eval,
    hammerstein_forward,
    jacobian,
    load_model,
    nonlinear_branch,
    pack,
    save_model,
    unpack,
)
from .optim import (
    AdamConfig,
    AdamState,
    CgConfig,
    EmaState,
    OptStepReport,
    adam_step,
    cg_solve,
    cg_step,
    ema_update,
    lr_schedule,
    mnm_step,
    regularize,
)
from .testbench import (
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

__version__ = "0.1.0"
