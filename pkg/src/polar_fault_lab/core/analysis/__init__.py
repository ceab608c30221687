from .polarization import (
    ZTable,
    compute_z_table,
    expected_epsilon,
    faulty_levels,
    iter_z_tables,
    rate_loss,
    sample_epsilon_path,
    t_minus,
    t_minus_faulty,
    t_plus,
    t_plus_faulty,
    t_plus_fixed_points,
)
from .construction import (
    CodeSpec,
    InfoSet,
    ProtectionReport,
    construct_code,
    good_channels,
    k_from_rate,
    protected_fraction_limit,
    protection_report,
    select_info_set,
)
from .bounds import (
    CovarianceMatrix,
    FerBounds,
    bounds_sweep_blocklength,
    bounds_sweep_rate,
    compute_covariance,
    covariance_step,
    exhaustive_statistics,
    fer_bounds,
    iter_covariance,
)
from .optimizer import BlocklengthDecision, optimal_blocklength

__all__ = [
    "ZTable", "compute_z_table", "expected_epsilon", "faulty_levels", "iter_z_tables",
    "rate_loss", "sample_epsilon_path", "t_minus", "t_minus_faulty", "t_plus",
    "t_plus_faulty", "t_plus_fixed_points",
    "CodeSpec", "InfoSet", "ProtectionReport", "construct_code", "good_channels",
    "k_from_rate", "protected_fraction_limit", "protection_report", "select_info_set",
    "CovarianceMatrix", "FerBounds", "bounds_sweep_blocklength", "bounds_sweep_rate",
    "compute_covariance", "covariance_step", "exhaustive_statistics", "fer_bounds",
    "iter_covariance",
    "BlocklengthDecision", "optimal_blocklength",
]
