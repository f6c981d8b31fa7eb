"""Density ridge estimation with bootstrap uncertainty and confidence sets."""

__version__ = "0.1.0"

from .experiments import Scenario, check_lu2, generate, oracle_ridge, rate_check, run_coverage
from .finder import EmptyRidgeError, FinderConfig, GridSpec, RidgePoint, RidgeSet, find_ridge, scms_step
from .geometry import (
    EigenFrame,
    GeometryError,
    NormalFrame,
    condition_report,
    eigen_frame,
    is_ridge_point,
    normal_frame,
    projected_gradient,
    sigma_matrix,
)
from .inference import (
    BootstrapPlan,
    ConfidenceSet,
    UncertaintyField,
    bootstrap,
    bootstrap_resample,
    confidence_set,
    local_uncertainty,
    upper_quantile,
)
from .kde import DensityJet, InputError, KdeModel, Sample, kde_jet, load_sample, silverman_bandwidth, sup_norm_diff
from .metrics import hausdorff, nearest, project, quasi_hausdorff
