"""Registry mapping the 12 feature-set labels (AM, FR1-FR5, FS1-FS5, PFST) to
their selectors, with per-dataset diagnostics kept for report emission."""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import PipelineConfig
from .dataset import MetricDataset
from .errors import ChangebenchError
from .pfst import FeatureSet, PfstTrace, run_pfst
from .ranking import (
    PcaLoadings,
    chi_squared_rank,
    gain_ratio_rank,
    info_gain_rank,
    oner_rank,
    pca_select,
)
from .subset import (
    GaConfig,
    cfs_select,
    consistency_select,
    filtered_subset_select,
    genetic_select,
    rough_set_select,
)

FEATURE_SET_LABELS: tuple[str, ...] = (
    "AM", "FR1", "FR2", "FR3", "FR4", "FR5",
    "FS1", "FS2", "FS3", "FS4", "FS5", "PFST",
)


def feature_set_index(label: str) -> int:
    try:
        return FEATURE_SET_LABELS.index(label)
    except ValueError:
        raise ChangebenchError(f"unknown feature set label {label!r}") from None


@dataclass
class FeatureSetResult:
    feature_set: FeatureSet
    diagnostics: dict = field(default_factory=dict)  # JSON-able extras
    pfst_trace: PfstTrace | None = None
    pca_loadings: PcaLoadings | None = None


def _from_ranker(label: str, ranked) -> FeatureSetResult:
    members = ranked.selected()
    provenance = {m: f"rank {ranked.order.index(m) + 1} (score {ranked.scores[m]:.4g})"
                  for m in members}
    diagnostics = {"scores": {m: ranked.scores[m] for m in ranked.order},
                   "k": ranked.k, "flags": list(ranked.flags)}
    return FeatureSetResult(FeatureSet(label, members, provenance), diagnostics)


def _from_subset(label: str, result) -> FeatureSetResult:
    provenance = {m: f"subset search (merit {result.merit:.4g})" for m in result.members}
    diagnostics = {"merit": result.merit, "evaluations": result.evaluations,
                   "flag": result.flag}
    return FeatureSetResult(FeatureSet(label, result.members, provenance), diagnostics)


def compute_feature_set(label: str, ds: MetricDataset, cfg: PipelineConfig | None = None,
                        seed: int = 0) -> FeatureSetResult:
    """Run one selector on a dataset. ``seed`` drives the stochastic selectors
    (PFST's stage-3 CV and the genetic search)."""
    cfg = cfg or PipelineConfig()
    if label == "AM":
        fs = FeatureSet("AM", ds.columns, {m: "all metrics" for m in ds.columns})
        return FeatureSetResult(fs, {"note": "all metrics"})
    if label == "FR1":
        return _from_ranker(label, chi_squared_rank(ds, bins=cfg.bins))
    if label == "FR2":
        return _from_ranker(label, gain_ratio_rank(ds, bins=cfg.bins))
    if label == "FR3":
        return _from_ranker(label, oner_rank(ds, bins=cfg.bins))
    if label == "FR4":
        return _from_ranker(label, info_gain_rank(ds, bins=cfg.bins))
    if label == "FR5":
        fs, loadings = pca_select(ds)
        diagnostics = {
            "eigenvalues": loadings.eigenvalues.tolist(),
            "n_retained": loadings.n_retained,
            "warnings": list(loadings.warnings),
        }
        return FeatureSetResult(fs, diagnostics, pca_loadings=loadings)
    if label == "FS1":
        return _from_subset(label, cfs_select(ds, stale_limit=cfg.cfs_stale_limit))
    if label == "FS2":
        return _from_subset(label, consistency_select(ds, bins=cfg.bins))
    if label == "FS3":
        return _from_subset(label, filtered_subset_select(
            ds, alpha=cfg.alpha, stale_limit=cfg.cfs_stale_limit))
    if label == "FS4":
        return _from_subset(label, rough_set_select(ds, bins=cfg.bins))
    if label == "FS5":
        ga = GaConfig(population=cfg.ga_population, generations=cfg.ga_generations,
                      crossover_rate=cfg.ga_crossover_rate,
                      mutation_rate=cfg.ga_mutation_rate, elitism=cfg.ga_elitism,
                      tournament=cfg.ga_tournament, seed=seed)
        return _from_subset(label, genetic_select(ds, ga))
    if label == "PFST":
        fs, trace = run_pfst(ds, seed=seed, alpha=cfg.alpha)
        return FeatureSetResult(fs, trace.to_json(), pfst_trace=trace)
    raise ChangebenchError(f"unknown feature set label {label!r}")
