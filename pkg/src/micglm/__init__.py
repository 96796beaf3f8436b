"""Sparse estimation of generalized linear models by minimizing a smooth
approximation of the Bayesian information criterion, with selection-free
Wald inference, exhaustive best-subset baselines, and a Monte Carlo
simulation harness."""

from .baselines import SubsetSearchResult, best_subset, full_mle, oracle_fit
from .dent import (ConverseMollifier, DentFunction, HyperbolicTangent,
                   ModifiedMcp, ModifiedScad, TruncatedLr, dent_d1, dent_d2,
                   dent_power, dent_value)
from .estimator import MicGlm
from .glm import (Dataset, Family, MleFit, SingularDesignError, fit_mle,
                  information_criterion, log_likelihood, make_dataset,
                  neg_hessian, score, standardize_columns)
from .inference import (InferenceReport, confidence_interval,
                        inference_report, se_beta_nonzero, se_gamma,
                        wald_test)
from .mic import (AnnealerConfig, MicConfig, MicFit, PolishConfig,
                  TheoryDiagnostics, mic_gradient, mic_objective, solve_mic,
                  theory_diagnostics)
from .reparam import (ReparamPoint, SingularityAtZeroError, beta_of_gamma,
                      dbeta_dgamma, gamma_of_beta, penalty_d2beta,
                      penalty_dbeta, reparam_point)
from .simlab import (ARobustnessResult, CoefCalibration, MethodMetrics,
                     PoissonOverflowError, SimDesign, SimReport,
                     SizePowerResult, a_robustness_study, default_beta0,
                     draw_dataset, gen_covariates, gen_response,
                     model_error, run_simulation, size_power_study)

__version__ = "0.1.0"

__all__ = [
    "ARobustnessResult", "AnnealerConfig", "CoefCalibration",
    "ConverseMollifier", "Dataset", "DentFunction", "Family",
    "HyperbolicTangent", "InferenceReport", "MethodMetrics", "MicConfig",
    "MicFit", "MicGlm", "MleFit", "ModifiedMcp", "ModifiedScad",
    "PoissonOverflowError", "PolishConfig", "ReparamPoint", "SimDesign",
    "SimReport", "SingularDesignError", "SingularityAtZeroError",
    "SizePowerResult", "SubsetSearchResult", "TheoryDiagnostics",
    "TruncatedLr",
    "a_robustness_study", "best_subset", "beta_of_gamma",
    "confidence_interval", "dbeta_dgamma", "default_beta0", "dent_d1",
    "dent_d2", "dent_power", "dent_value", "draw_dataset", "fit_mle",
    "full_mle", "gamma_of_beta", "gen_covariates", "gen_response",
    "inference_report", "information_criterion", "log_likelihood",
    "make_dataset", "mic_gradient", "mic_objective", "model_error",
    "neg_hessian", "oracle_fit", "penalty_d2beta", "penalty_dbeta",
    "reparam_point", "run_simulation", "score", "se_beta_nonzero",
    "se_gamma", "size_power_study", "solve_mic", "standardize_columns",
    "theory_diagnostics", "wald_test",
]
