"""Listwise ranking for depth: exact ranking probabilities, scorer training,
metric depth recovery, and the matching evaluation suite.

The pieces compose into one pipeline: synthesize or load a depth map, draw
informative pixel rankings from it, train a scorer by ranking likelihood,
align the learned scores to metric depth with one affine fit, and score the
result on ordinal and metric criteria. Each stage is importable on its own;
the `plrank` command line wires them together.
"""

__version__ = "0.1.0"

from .depth import SCENE_KINDS, DepthMap, SceneSpec, generate_scene
from .errors import (
    CapacityError,
    DegenerateFitError,
    FormatError,
    UndefinedMetricError,
)
from .metrics import (
    EvalReport,
    delta_metric,
    evaluate,
    format_report_table,
    ndcg,
    ordinal_error,
    ordinal_relation,
    rmse,
    sample_eval_pairs,
    sample_eval_ranking_sets,
)
from .pfm import read_pfm, read_pfm_values, write_pfm, write_pfm_values
from .plackett_luce import (
    enumerate_rankings,
    log_probability,
    mode_ranking,
    nll_and_gradient_matrix,
    nll_gradient,
)
from .random_utility import NOISE_KINDS, LatentUtilities, sample_dataset
from .recovery import (
    AffineFit,
    RecoveryResult,
    fit_affine,
    recover_depth,
    rum_recovery_experiment,
)
from .sampling import (
    RankingSample,
    SamplerConfig,
    read_samples,
    sample_rankings,
    score_candidate,
    write_samples,
)
from .training import (
    LinearFeatureScorer,
    TabularScorer,
    TrainConfig,
    TrainResult,
    load_scorer,
    save_scorer,
    train,
    train_resampled,
)

__all__ = [
    "AffineFit",
    "CapacityError",
    "DegenerateFitError",
    "DepthMap",
    "EvalReport",
    "FormatError",
    "LatentUtilities",
    "LinearFeatureScorer",
    "NOISE_KINDS",
    "RankingSample",
    "RecoveryResult",
    "SCENE_KINDS",
    "SamplerConfig",
    "SceneSpec",
    "TabularScorer",
    "TrainConfig",
    "TrainResult",
    "UndefinedMetricError",
    "delta_metric",
    "enumerate_rankings",
    "evaluate",
    "fit_affine",
    "format_report_table",
    "generate_scene",
    "load_scorer",
    "log_probability",
    "mode_ranking",
    "ndcg",
    "nll_and_gradient_matrix",
    "nll_gradient",
    "ordinal_error",
    "ordinal_relation",
    "read_pfm",
    "read_pfm_values",
    "read_samples",
    "recover_depth",
    "rmse",
    "rum_recovery_experiment",
    "sample_dataset",
    "sample_eval_pairs",
    "sample_eval_ranking_sets",
    "sample_rankings",
    "save_scorer",
    "score_candidate",
    "train",
    "train_resampled",
    "write_pfm",
    "write_pfm_values",
    "write_samples",
]
