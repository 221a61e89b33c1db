"""Monte Carlo oracle for the regime-switching surplus under barrier strategies."""
from .engine import (
    BankruptcySummary,
    Estimate,
    PathBatch,
    SimConfig,
    default_workers,
    dt_halving,
    run_paths,
    simulate_bankruptcy,
    simulate_exit,
    simulate_moment,
    simulate_value,
)
from .kernels import BANKRUPT, REACHED, RUINED, TRUNCATED
from .paths import PathTrace, sample_path
