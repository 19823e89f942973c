"""changebench: a workbench for change-proneness prediction experiments.

Library surface: dataset ingestion and synthesis, statistical primitives,
the four-stage PFST metric validation pipeline, ten further feature
selectors, an eighteen-classifier zoo with three ensembles, a cross-validated
experiment grid, and Bonferroni-corrected pairwise comparison reports.
"""

from .config import PipelineConfig, load_config
from .cv import FoldPlan, make_folds
from .dataset import (
    CANONICAL_METRICS,
    DatasetSummary,
    MetricDataset,
    load_csv,
    summarize,
    synthesize,
    synthesize_rings,
    write_csv,
)
from .ensembles import ENSEMBLE_KINDS, EnsembleModel, ensemble_predict, fit_ensemble
from .errors import (
    ChangebenchError,
    ConfigError,
    DatasetError,
    ModelError,
    StatsError,
)
from .grid import (
    ALL_CLASSIFIER_KINDS,
    EvalRecord,
    ExperimentGrid,
    compare_classifiers,
    compare_feature_sets,
    evaluate_cell,
    run_grid,
)
from .pfst import FeatureSet, PfstTrace, run_pfst
from .ranking import PcaLoadings, RankedFeatures, pca_select
from .reports import emit_reports, load_results
from .selection import FEATURE_SET_LABELS, compute_feature_set
from .stats import (
    CorrelationMatrix,
    DescriptiveStats,
    MeanCI,
    PairwiseTestReport,
    RankTestResult,
    UlrResult,
    descriptive,
    mean_ci,
    pairwise_bonferroni,
    pearson_matrix,
    rank_test,
    signed_rank_test,
    ulr_fit,
)
from .subset import GaConfig, SubsetSearchResult

__version__ = "0.1.0"

__all__ = [
    "ALL_CLASSIFIER_KINDS", "CANONICAL_METRICS", "ChangebenchError",
    "ConfigError", "CorrelationMatrix", "DatasetError", "DatasetSummary",
    "DescriptiveStats", "ENSEMBLE_KINDS", "EnsembleModel", "EvalRecord",
    "ExperimentGrid", "FEATURE_SET_LABELS", "FeatureSet", "FoldPlan",
    "GaConfig", "MeanCI", "MetricDataset", "ModelError", "PairwiseTestReport",
    "PcaLoadings", "PfstTrace", "PipelineConfig", "RankTestResult",
    "RankedFeatures", "StatsError", "SubsetSearchResult", "UlrResult",
    "compare_classifiers", "compare_feature_sets", "compute_feature_set",
    "descriptive", "emit_reports", "ensemble_predict", "evaluate_cell",
    "fit_ensemble", "load_config", "load_csv", "load_results", "make_folds",
    "mean_ci", "pairwise_bonferroni", "pca_select", "pearson_matrix",
    "rank_test", "run_grid", "run_pfst", "signed_rank_test", "summarize",
    "synthesize", "synthesize_rings", "ulr_fit", "write_csv",
]
