"""Right-censored survival estimation and mixture cure models."""

from .data_model import (
    DataError,
    PatientRecord,
    StudyWindow,
    SummaryStats,
    SurvivalSample,
    derive_survival_times,
    jitter_times,
    load_csv,
    read_sample_csv,
    save_csv,
    summary_stats,
    write_sample_csv,
)
from .estimators import StepCurve, beran_fit, curve_eval, km_fit
from .hypotests import TestReport, covariate_cure_test, maller_zhou_test
from .kernels import (
    Bandwidth,
    EmptyNeighborhoodError,
    Kernel,
    binary_weights,
    kernel_eval,
    nw_weights,
)
from .nonparametric import (
    CureEstimate,
    DegenerateLatencyError,
    LatencyCurve,
    bootstrap_bandwidth,
    bootstrap_criterion,
    cure_rate_conditional,
    cure_rate_unconditional,
    default_bandwidth_grid,
    default_eval_points,
    latency_estimate,
    reference_bandwidth,
)
from .parametric import (
    LikelihoodError,
    LinkFunction,
    ParametricCureFit,
    PromotionTimeModel,
    fit_mle,
    link_eval,
    link_inverse,
    log_likelihood_gradient_fd,
    mixture_log_likelihood,
    population_survival,
    promotion_time_survival,
    weibull_aft_survival,
)
from .simulate import (
    CensoringSpec,
    IncidenceSpec,
    LatencySpec,
    SimulationSpec,
    SimulationTruth,
    simulate,
    true_population_survival,
)

__version__ = "0.1.0"

__all__ = [
    "Bandwidth",
    "CensoringSpec",
    "CureEstimate",
    "DataError",
    "DegenerateLatencyError",
    "EmptyNeighborhoodError",
    "IncidenceSpec",
    "Kernel",
    "LatencyCurve",
    "LatencySpec",
    "LikelihoodError",
    "LinkFunction",
    "ParametricCureFit",
    "PatientRecord",
    "PromotionTimeModel",
    "SimulationSpec",
    "SimulationTruth",
    "StepCurve",
    "StudyWindow",
    "SummaryStats",
    "SurvivalSample",
    "TestReport",
    "beran_fit",
    "binary_weights",
    "bootstrap_bandwidth",
    "bootstrap_criterion",
    "covariate_cure_test",
    "cure_rate_conditional",
    "cure_rate_unconditional",
    "curve_eval",
    "default_bandwidth_grid",
    "default_eval_points",
    "derive_survival_times",
    "fit_mle",
    "jitter_times",
    "kernel_eval",
    "km_fit",
    "latency_estimate",
    "link_eval",
    "link_inverse",
    "load_csv",
    "log_likelihood_gradient_fd",
    "maller_zhou_test",
    "mixture_log_likelihood",
    "nw_weights",
    "population_survival",
    "promotion_time_survival",
    "read_sample_csv",
    "reference_bandwidth",
    "save_csv",
    "simulate",
    "summary_stats",
    "true_population_survival",
    "weibull_aft_survival",
    "write_sample_csv",
]
