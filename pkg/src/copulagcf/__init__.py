"""Empirical density measurement for zero-inflated non-negative samples.

The pipeline: rank-transform raw samples onto (-1, 1) with training-fitted
empirical CDFs (the copula view), accumulate orthogonal sample moments,
and reconstruct or compare interdependence densities from those moments.
Parametric marginal fits and dense histograms serve as baselines.
"""

from .basis import BasisFamily, BasisSpec, basis_table, eval_basis, legendre_l2_norm, legendre_raw
from .copula import CopulaMatrix, EmpiricalCdf, build_copula, fit_cdf, transform
from .gcf import (
    CLAMP_FLOOR,
    GcdReport,
    GcfDensity,
    cross_entropy,
    density_grid,
    eval_density,
    gcd,
    gci,
    gci_report,
)
from .histogram import HistogramDensity, HistogramGrid, fit_hist, merge_hist
from .marginal import (
    Family,
    FitReport,
    MarginalModel,
    SaSchedule,
    fit_marginal,
    fit_report,
    fit_sa,
    kl_fit,
    zero_split,
)
from .moments import (
    MomentTensor,
    Truncation,
    accumulate,
    empty_moments,
    enumerate_indices,
    load_moments,
    merge,
    save_moments,
)
from .tensorio import (
    FeatureSample,
    FeatureTensorFile,
    SynthSpec,
    flatten_filter,
    parse_synth,
    read_tensor,
    synth_sample,
    write_tensor,
    zero_inflated,
)

__version__ = "0.1.0"

__all__ = [
    "BasisFamily",
    "BasisSpec",
    "CLAMP_FLOOR",
    "CopulaMatrix",
    "EmpiricalCdf",
    "Family",
    "FeatureSample",
    "FeatureTensorFile",
    "FitReport",
    "GcdReport",
    "GcfDensity",
    "HistogramDensity",
    "HistogramGrid",
    "MarginalModel",
    "MomentTensor",
    "SaSchedule",
    "SynthSpec",
    "Truncation",
    "accumulate",
    "basis_table",
    "build_copula",
    "cross_entropy",
    "density_grid",
    "empty_moments",
    "enumerate_indices",
    "eval_basis",
    "eval_density",
    "fit_cdf",
    "fit_hist",
    "fit_marginal",
    "fit_report",
    "fit_sa",
    "flatten_filter",
    "gcd",
    "gci",
    "gci_report",
    "kl_fit",
    "legendre_l2_norm",
    "legendre_raw",
    "load_moments",
    "merge",
    "merge_hist",
    "parse_synth",
    "read_tensor",
    "save_moments",
    "synth_sample",
    "transform",
    "write_tensor",
    "zero_inflated",
    "zero_split",
]
