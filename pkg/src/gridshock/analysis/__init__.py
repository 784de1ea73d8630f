from gridshock.analysis.aggregate import (
    AnnualLos,
    BinnedDistribution,
    bin_samples,
    convolve_annual,
    default_bin_width,
)
from gridshock.analysis.clustering import Clustering, DayFeatureMatrix, kmeans_days
from gridshock.analysis.smoothing import savitzky_golay
from gridshock.analysis.stats import MannWhitneyResult, format_p_value, mann_whitney_u, midranks

__all__ = [
    "AnnualLos",
    "BinnedDistribution",
    "Clustering",
    "DayFeatureMatrix",
    "MannWhitneyResult",
    "bin_samples",
    "convolve_annual",
    "default_bin_width",
    "format_p_value",
    "kmeans_days",
    "mann_whitney_u",
    "midranks",
    "savitzky_golay",
]
