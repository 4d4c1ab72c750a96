"""Adaptive interpolating polynomial chaos expansions on weighted Leja grids."""

from .distributions import (
    Gumbel,
    Normal,
    ProductDistribution,
    TruncatedNormal,
    Uniform,
    distribution_from_dict,
    sample,
)
from .estimators import InterpolatingPCE, LejaInterpolator
from .exceptions import (
    ConfigurationError,
    ContractError,
    LejaPceError,
    ModelEvaluationError,
    NumericalError,
    ProtocolError,
)
from .harness import ExperimentConfig, cv_rms, reference_oracles, rel_error, run_experiment
from .hierarchical import HierSurrogate, adapt_hier, eval_hier, hier_from_set, newton_eval
from .leja import LejaSequence, leja_nodes, leja_sequence
from .models import BUILTIN_MODELS, Model, external_model, get_model
from .multiindex import MultiIndexSet, admissible, td_set
from .orthopoly import RecurrenceTable, build_recurrence, eval_orthonormal, gauss_rule
from .pce import PceSurrogate, adapt_pce, eval_pce, pce_from_set, transform_to_pce
from .postprocess import SensitivityReport, mean, sobol_indices, variance
from .serialization import load_surrogate, save_surrogate

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_MODELS", "ConfigurationError", "ContractError", "ExperimentConfig", "Gumbel",
    "HierSurrogate", "InterpolatingPCE", "LejaInterpolator", "LejaPceError", "LejaSequence",
    "Model", "ModelEvaluationError", "MultiIndexSet", "Normal", "NumericalError", "PceSurrogate",
    "ProductDistribution", "ProtocolError", "RecurrenceTable", "SensitivityReport",
    "TruncatedNormal", "Uniform", "adapt_hier", "adapt_pce", "admissible", "build_recurrence",
    "cv_rms", "distribution_from_dict", "eval_hier", "eval_orthonormal", "eval_pce",
    "external_model", "gauss_rule", "get_model", "hier_from_set", "leja_nodes", "leja_sequence",
    "load_surrogate", "mean", "newton_eval", "pce_from_set", "reference_oracles", "rel_error",
    "run_experiment", "sample", "save_surrogate", "sobol_indices", "td_set", "transform_to_pce",
    "variance",
]
