from .channel import (
    ChainReport,
    MutualInformationEstimate,
    capacity_bound,
    complex_covariance,
    conditional_entropy_estimate,
    hadamard_bound,
    log_det,
    mi_estimate,
    noise_entropy_bound,
    output_entropy_chain,
)
from .entropy import (
    EntropyEstimate,
    EpiGap,
    Estimator,
    entropy_power,
    epi_gap,
    gaussian_entropy,
    knn_entropy,
    noise_entropy_constant,
)
from .geometry import (
    BmiReport,
    GridSet,
    Pmf,
    bmi_check,
    convolve,
    discrete_entropy,
    exhaustive_sumset_check,
    full_pairs,
    minkowski_sum,
    restricted_sum,
    restricted_sum_report,
    sumset_entropy_check,
)
