"""Experiment grid: evaluate every (dataset, feature set, classifier) cell
under stratified k-fold cross-validation, with an on-disk cell cache,
per-cell failure isolation, and the two pairwise comparison stages.

Feature selection runs once per (dataset, feature set) and is shared by all
classifiers, so the reported per-dataset selections are the ones evaluated;
``nested=True`` instead reruns the
selector inside each training fold for selection-bias-free estimates.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .classifiers import BASE_CLASSIFIER_KINDS, MajorityModel, fit_classifier
from .config import PipelineConfig
from .cv import FoldPlan, make_folds
from .dataset import MetricDataset, summarize
from .ensembles import ENSEMBLE_KINDS, fit_ensemble
from .errors import ChangebenchError
from .pfst import FeatureSet
from .selection import FEATURE_SET_LABELS, FeatureSetResult, compute_feature_set
from .stats import PairwiseTestReport, pairwise_bonferroni

ALL_CLASSIFIER_KINDS: tuple[str, ...] = BASE_CLASSIFIER_KINDS + ENSEMBLE_KINDS


def derive_seed(*parts) -> int:
    """Stable 32-bit seed from arbitrary key parts (never Python's salted hash)."""
    message = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(message.encode()).digest()[:4], "big")


def confusion_metrics(tp: int, fp: int, tn: int, fn: int) -> tuple[float, float]:
    """(accuracy percent, F-measure); F is 0 when there are no true positives."""
    total = tp + fp + tn + fn
    accuracy = 100.0 * (tp + tn) / total if total else 0.0
    if tp == 0:
        return accuracy, 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return accuracy, 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class EvalRecord:
    """Pooled 5-fold performance of one grid cell."""

    dataset_id: str
    feature_set_label: str
    classifier_kind: str
    accuracy: float
    f_measure: float
    per_fold: tuple
    confusion: tuple  # (tp, fp, tn, fn) summed over test folds
    flags: tuple = ()

    def to_json(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "feature_set_label": self.feature_set_label,
            "classifier_kind": self.classifier_kind,
            "accuracy": self.accuracy,
            "f_measure": self.f_measure,
            "per_fold": [list(pair) for pair in self.per_fold],
            "confusion": list(self.confusion),
            "flags": list(self.flags),
        }


def record_from_json(d: dict) -> EvalRecord:
    return EvalRecord(
        dataset_id=d["dataset_id"],
        feature_set_label=d["feature_set_label"],
        classifier_kind=d["classifier_kind"],
        accuracy=d["accuracy"],
        f_measure=d["f_measure"],
        per_fold=tuple(tuple(pair) for pair in d["per_fold"]),
        confusion=tuple(d["confusion"]),
        flags=tuple(d["flags"]),
    )


@dataclass(frozen=True)
class FailedCell:
    dataset_id: str
    feature_set_label: str
    classifier_kind: str
    error: str

    def to_json(self) -> dict:
        return {"dataset_id": self.dataset_id, "feature_set_label": self.feature_set_label,
                "classifier_kind": self.classifier_kind, "error": self.error}


@dataclass
class ExperimentGrid:
    dataset_ids: tuple[str, ...]
    summaries: dict  # dataset_id -> DatasetSummary
    feature_sets: dict  # (dataset_id, label) -> FeatureSetResult
    feature_set_labels: tuple[str, ...]
    classifier_kinds: tuple[str, ...]
    records: list
    failures: list
    seed: int
    config: PipelineConfig
    nested: bool = False

    @property
    def config_hash(self) -> str:
        return self.config.config_hash()

    def record_map(self) -> dict:
        return {(r.dataset_id, r.feature_set_label, r.classifier_kind): r
                for r in self.records}

    def complete(self) -> bool:
        return not self.failures and len(self.records) == (
            len(self.dataset_ids) * len(self.feature_set_labels) * len(self.classifier_kinds)
        )

    def observations(self, axis: str, measure: str) -> dict:
        """Scores keyed by method -> {observation key -> value} for the
        pairwise stages. Axis 'classifiers' observes (dataset, feature set)
        cells; axis 'feature-sets' observes (dataset, classifier) cells.
        Only observation keys complete across every method are kept."""
        if axis == "classifiers":
            methods = self.classifier_kinds
            key_of = lambda r: (r.dataset_id, r.feature_set_label)
            method_of = lambda r: r.classifier_kind
        elif axis == "feature-sets":
            methods = self.feature_set_labels
            key_of = lambda r: (r.dataset_id, r.classifier_kind)
            method_of = lambda r: r.feature_set_label
        else:
            raise ChangebenchError(f"unknown axis {axis!r}")
        value_of = {
            "accuracy": lambda r: r.accuracy,
            "f_measure": lambda r: r.f_measure,
        }[measure]
        per_method: dict = {m: {} for m in methods}
        for r in self.records:
            if method_of(r) in per_method:
                per_method[method_of(r)][key_of(r)] = value_of(r)
        complete_keys = None
        for m in methods:
            keys = set(per_method[m])
            complete_keys = keys if complete_keys is None else complete_keys & keys
        complete_keys = complete_keys or set()
        return {m: {k: per_method[m][k] for k in complete_keys} for m in methods}


# ---------------------------------------------------------------------------
# Cell evaluation


def _cell_seed(master_seed: int, ds: MetricDataset, label: str, kind: str, fold: int) -> int:
    return derive_seed(master_seed, ds.id, ds.content_digest(), label, kind, fold)


def _fit_fold_models(ds, label, members, kinds, train_idx, cfg, master_seed, fold):
    """Fit the needed base models (and ensembles) for one fold; returns
    kind -> model plus per-kind errors."""
    X = ds.matrix(members)
    y = ds.labels
    X_train, y_train = X[train_idx], y[train_idx]
    models: dict = {}
    errors: dict = {}
    fold_flags: list[str] = []

    wanted_ensembles = [k for k in kinds if k in ENSEMBLE_KINDS]
    base_needed = list(BASE_CLASSIFIER_KINDS) if wanted_ensembles else [
        k for k in BASE_CLASSIFIER_KINDS if k in kinds
    ]

    if y_train.min() == y_train.max():
        majority = MajorityModel(X_train.shape[1], int(y_train[0]))
        for kind in kinds:
            models[kind] = majority
        fold_flags.append(f"fold {fold}: single-class training fold; majority fallback")
        return models, errors, fold_flags, X

    for kind in base_needed:
        try:
            models[kind] = fit_classifier(
                kind, X_train, y_train, cfg,
                seed=_cell_seed(master_seed, ds, label, kind, fold),
            )
        except Exception as exc:  # isolate the cell, never abort the grid
            errors[kind] = f"{type(exc).__name__}: {exc}"
    for kind in wanted_ensembles:
        missing = [k for k in BASE_CLASSIFIER_KINDS if k not in models]
        if missing:
            errors[kind] = f"base classifiers failed: {', '.join(missing)}"
            continue
        try:
            base_models = [models[k] for k in BASE_CLASSIFIER_KINDS]
            models[kind] = fit_ensemble(
                kind, X_train, y_train, base_models,
                seed=_cell_seed(master_seed, ds, label, kind, fold),
                n_trees=cfg.forest_trees,
            )
        except Exception as exc:
            errors[kind] = f"{type(exc).__name__}: {exc}"
    return models, errors, fold_flags, X


def evaluate_feature_set(ds: MetricDataset, label: str, members: Sequence[str] | None,
                         kinds: Sequence[str], plan: FoldPlan, cfg: PipelineConfig,
                         seed: int, nested: bool = False):
    """Evaluate all requested classifiers on one feature set, sharing the
    per-fold base fits. Returns (records, failures)."""
    kinds = list(kinds)
    confusions = {k: np.zeros(4, dtype=int) for k in kinds}
    per_fold: dict = {k: [] for k in kinds}
    flags: dict = {k: [] for k in kinds}
    dead: dict = {}

    for fold in range(plan.k):
        train_idx = plan.train_indices(fold)
        test_idx = plan.test_indices(fold)
        fold_members = tuple(members) if members is not None else None
        if nested:
            try:
                sub = MetricDataset(
                    id=ds.id, columns=ds.columns,
                    rows=ds.rows[train_idx], labels=ds.labels[train_idx], name=ds.name,
                )
                fold_members = compute_feature_set(
                    label, sub, cfg, seed=derive_seed(seed, ds.id, label, "nested", fold)
                ).feature_set.members
            except ChangebenchError as exc:
                fold_members = tuple(ds.columns)
                for k in kinds:
                    flags[k].append(f"fold {fold}: nested selection failed ({exc}); all metrics")
        models, errors, fold_flags, X = _fit_fold_models(
            ds, label, fold_members, kinds, train_idx, cfg, seed, fold)
        dead.update(errors)
        truth = ds.labels[test_idx]
        for kind in kinds:
            if kind in dead:
                continue
            model = models.get(kind)
            if model is None:
                continue
            try:
                pred = model.predict(X[test_idx])
            except Exception as exc:
                dead[kind] = f"{type(exc).__name__}: {exc}"
                continue
            tp = int(((pred == 1) & (truth == 1)).sum())
            fp = int(((pred == 1) & (truth == 0)).sum())
            tn = int(((pred == 0) & (truth == 0)).sum())
            fn = int(((pred == 0) & (truth == 1)).sum())
            confusions[kind] += (tp, fp, tn, fn)
            per_fold[kind].append(confusion_metrics(tp, fp, tn, fn))
            flags[kind].extend(fold_flags)
            model_flags = getattr(model, "flags", ())
            flags[kind].extend(f"fold {fold}: {f}" for f in model_flags)

    records, failures = [], []
    for kind in kinds:
        if kind in dead:
            failures.append(FailedCell(ds.id, label, kind, dead[kind]))
            continue
        tp, fp, tn, fn = (int(v) for v in confusions[kind])
        accuracy, f_measure = confusion_metrics(tp, fp, tn, fn)
        records.append(EvalRecord(
            dataset_id=ds.id, feature_set_label=label, classifier_kind=kind,
            accuracy=accuracy, f_measure=f_measure,
            per_fold=tuple(per_fold[kind]), confusion=(tp, fp, tn, fn),
            flags=tuple(dict.fromkeys(flags[kind])),
        ))
    return records, failures


def evaluate_cell(ds: MetricDataset, feature_set: FeatureSet, classifier_kind: str,
                  folds: FoldPlan, cfg: PipelineConfig | None = None,
                  seed: int = 0) -> EvalRecord:
    """Evaluate a single (dataset, feature set, classifier) cell."""
    cfg = cfg or PipelineConfig()
    missing = [m for m in feature_set.members if m not in ds.columns]
    if missing:
        raise ChangebenchError(f"feature set members not in dataset: {missing}")
    records, failures = evaluate_feature_set(
        ds, feature_set.label, feature_set.members, [classifier_kind], folds, cfg, seed)
    if failures:
        raise ChangebenchError(failures[0].error)
    return records[0]


# ---------------------------------------------------------------------------
# Cell cache


class CellCache:
    """One JSON file per cell; concurrent writers of distinct keys are safe
    because keys map to distinct files and writes go through a temp rename."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        digest = hashlib.sha256(key.encode()).hexdigest()[:32]
        return self.root / f"{digest}.json"

    @staticmethod
    def cell_key(ds: MetricDataset, label: str, kind: str, seed: int,
                 config_hash: str, nested: bool) -> str:
        return "|".join([ds.id, ds.content_digest(), label, kind, str(seed),
                         config_hash, "nested" if nested else "flat"])

    def load(self, key: str) -> EvalRecord | None:
        path = self._path(key)
        if not path.exists():
            return None
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None
        if payload.get("key") != key:
            return None
        return record_from_json(payload["record"])

    def store(self, key: str, record: EvalRecord) -> None:
        path = self._path(key)
        tmp = path.with_suffix(f".tmp{id(record) & 0xffff:x}")
        tmp.write_text(json.dumps({"key": key, "record": record.to_json()},
                                  sort_keys=True), encoding="utf-8")
        tmp.replace(path)


# ---------------------------------------------------------------------------
# Grid orchestration


def _evaluate_unit(args):
    """Worker: one (dataset, feature set) unit covering its classifier kinds."""
    ds, label, members, kinds, plan, cfg, seed, nested, cache_dir = args
    cache = CellCache(cache_dir) if cache_dir else None
    config_hash = cfg.config_hash()
    records, failures, to_compute = [], [], []
    for kind in kinds:
        if cache:
            key = CellCache.cell_key(ds, label, kind, seed, config_hash, nested)
            hit = cache.load(key)
            if hit is not None:
                records.append(hit)
                continue
        to_compute.append(kind)
    if to_compute:
        fresh, failed = evaluate_feature_set(ds, label, members, to_compute,
                                             plan, cfg, seed, nested)
        failures.extend(failed)
        for record in fresh:
            if cache:
                key = CellCache.cell_key(ds, label, record.classifier_kind,
                                         seed, config_hash, nested)
                cache.store(key, record)
            records.append(record)
    return records, failures


def run_grid(datasets: Sequence[MetricDataset], cfg: PipelineConfig | None = None,
             seed: int = 0, feature_sets: Sequence[str] | None = None,
             classifiers: Sequence[str] | None = None, jobs: int = 1,
             cache_dir: str | Path | None = None, nested: bool = False) -> ExperimentGrid:
    """Compute feature sets per dataset, then every classifier evaluation.

    Deterministic for fixed inputs and seed regardless of ``jobs``; per-cell
    failures are collected, never raised.
    """
    cfg = cfg or PipelineConfig()
    if not datasets:
        raise ChangebenchError("run_grid needs at least one dataset")
    ids = [ds.id for ds in datasets]
    if len(set(ids)) != len(ids):
        raise ChangebenchError("duplicate dataset ids")
    labels = tuple(feature_sets) if feature_sets else FEATURE_SET_LABELS
    for label in labels:
        if label not in FEATURE_SET_LABELS:
            raise ChangebenchError(f"unknown feature set label {label!r}")
    kinds = tuple(classifiers) if classifiers else ALL_CLASSIFIER_KINDS
    for kind in kinds:
        if kind not in ALL_CLASSIFIER_KINDS:
            raise ChangebenchError(f"unknown classifier kind {kind!r}")

    summaries: dict = {}
    selections: dict = {}
    units = []
    failures: list = []
    for ds in datasets:
        summaries[ds.id] = summarize(ds)
        plan = make_folds(ds.labels, k=cfg.folds,
                          seed=derive_seed(seed, ds.id, ds.content_digest(), "folds"))
        for label in labels:
            try:
                selection = compute_feature_set(
                    label, ds, cfg,
                    seed=derive_seed(seed, ds.id, ds.content_digest(), label, "selection"),
                )
            except ChangebenchError as exc:
                for kind in kinds:
                    failures.append(FailedCell(ds.id, label, kind, f"selection failed: {exc}"))
                continue
            selections[(ds.id, label)] = selection
            units.append((ds, label, selection.feature_set.members, kinds, plan,
                          cfg, seed, nested, str(cache_dir) if cache_dir else None))

    records: list = []
    if jobs > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for unit_records, unit_failures in pool.map(_evaluate_unit, units):
                records.extend(unit_records)
                failures.extend(unit_failures)
    else:
        for unit in units:
            unit_records, unit_failures = _evaluate_unit(unit)
            records.extend(unit_records)
            failures.extend(unit_failures)

    label_index = {lab: i for i, lab in enumerate(FEATURE_SET_LABELS)}
    kind_index = {k: i for i, k in enumerate(ALL_CLASSIFIER_KINDS)}
    records.sort(key=lambda r: (ids.index(r.dataset_id),
                                label_index[r.feature_set_label],
                                kind_index[r.classifier_kind]))
    failures.sort(key=lambda f: (ids.index(f.dataset_id),
                                 label_index[f.feature_set_label],
                                 kind_index[f.classifier_kind]))
    return ExperimentGrid(
        dataset_ids=tuple(ids), summaries=summaries, feature_sets=selections,
        feature_set_labels=labels, classifier_kinds=kinds,
        records=records, failures=failures, seed=seed, config=cfg, nested=nested,
    )


# ---------------------------------------------------------------------------
# Pairwise comparison stages


def _compare(grid: ExperimentGrid, axis: str) -> dict:
    methods = grid.classifier_kinds if axis == "classifiers" else grid.feature_set_labels
    if len(methods) < 2:
        raise ChangebenchError(f"need at least 2 {axis} to compare")
    out = {}
    for measure in ("accuracy", "f_measure"):
        scores = grid.observations(axis, measure)
        n_obs = len(next(iter(scores.values())))
        expected = (len(grid.dataset_ids) * len(grid.feature_set_labels)
                    if axis == "classifiers"
                    else len(grid.dataset_ids) * len(grid.classifier_kinds))
        flags = ()
        if n_obs < expected:
            flags = (f"incomplete grid: {n_obs} of {expected} observations per method",)
        out[measure] = pairwise_bonferroni(scores, alpha=grid.config.alpha,
                                           measure=measure, flags=flags)
    return out


def compare_classifiers(grid: ExperimentGrid) -> dict:
    """Per measure: 21-method paired comparison over (dataset x feature set)
    observations, Bonferroni cutoff alpha / C(21, 2)."""
    return _compare(grid, "classifiers")


def compare_feature_sets(grid: ExperimentGrid) -> dict:
    """Per measure: 12-method paired comparison over (dataset x classifier)
    observations, Bonferroni cutoff alpha / C(12, 2)."""
    return _compare(grid, "feature-sets")
