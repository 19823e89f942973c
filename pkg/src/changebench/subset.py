"""Feature-subset selectors FS1-FS5: correlation-based best-first search,
consistency-rate search, a rank-test-filtered CFS, rough-set reduct search,
and a genetic search over bitmask chromosomes with CFS merit as fitness.

Every selector returns a :class:`SubsetSearchResult` whose merit re-evaluates
to the same value on the returned subset; degenerate searches fall back to all
metrics with a flag.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import MetricDataset, canonical_order
from .errors import StatsError
from .pfst import stage1_rank_filter
from .ranking import equal_frequency_codes
from .stats import pearson_from_matrix


@dataclass(frozen=True)
class SubsetSearchResult:
    members: tuple[str, ...]
    merit: float
    evaluations: int
    flag: str | None = None


def _fallback_all(ds: MetricDataset, merit: float, evaluations: int,
                  reason: str) -> SubsetSearchResult:
    return SubsetSearchResult(tuple(ds.columns), merit, evaluations,
                              flag=f"degenerate search ({reason}); fell back to all metrics")


class CfsContext:
    """Precomputed absolute correlations backing the CFS merit.

    merit(S) = k * mean|r_cf| / sqrt(k + k (k-1) mean|r_ff|) over the subset S,
    where r_cf are feature-label and r_ff pairwise feature-feature Pearson
    correlations. The empty subset has merit 0.
    """

    def __init__(self, ds: MetricDataset, columns: Sequence[str] | None = None):
        self.columns = tuple(columns) if columns is not None else ds.columns
        matrix = ds.matrix(self.columns)
        labels = ds.labels.astype(float)
        data = np.column_stack([matrix, labels])
        names = list(self.columns) + ["__label__"]
        corr = pearson_from_matrix(data, names)
        full = np.abs(corr.r)
        self.feature_feature = full[:-1, :-1]
        self.feature_label = full[:-1, -1]

    def merit(self, indices: Sequence[int]) -> float:
        k = len(indices)
        if k == 0:
            return 0.0
        idx = np.asarray(indices, dtype=int)
        r_cf = float(self.feature_label[idx].mean())
        if k == 1:
            return r_cf
        sub = self.feature_feature[np.ix_(idx, idx)]
        r_ff = float((sub.sum() - np.trace(sub)) / (k * (k - 1)))
        return k * r_cf / np.sqrt(k + k * (k - 1) * r_ff)

    def merit_of(self, members: Sequence[str]) -> float:
        return self.merit([self.columns.index(m) for m in members])


def cfs_merit(ds: MetricDataset, members: Sequence[str]) -> float:
    """Re-evaluable CFS objective for a named subset."""
    return CfsContext(ds).merit_of(members)


def cfs_select(ds: MetricDataset, stale_limit: int = 5,
               columns: Sequence[str] | None = None) -> SubsetSearchResult:
    """FS1: greedy forward best-first search on the CFS merit.

    Expands the best open node by single-feature additions; stops after
    ``stale_limit`` consecutive expansions that fail to improve the best
    merit seen.
    """
    ctx = CfsContext(ds, columns)
    n = len(ctx.columns)
    evaluations = 0
    start: frozenset = frozenset()
    best_subset, best_merit = start, 0.0
    heap = [(-0.0, 0, start)]
    counter = 1
    seen = {start}
    stale = 0
    while heap and stale < stale_limit:
        _, _, node = heapq.heappop(heap)
        improved = False
        for f in range(n):
            if f in node:
                continue
            child = node | {f}
            if child in seen:
                continue
            seen.add(child)
            merit = ctx.merit(sorted(child))
            evaluations += 1
            if merit > best_merit + 1e-12:
                best_merit = merit
                best_subset = child
                improved = True
            heapq.heappush(heap, (-merit, counter, child))
            counter += 1
        stale = 0 if improved else stale + 1
    if not best_subset:
        return _fallback_all(ds, best_merit, evaluations, "no informative feature")
    members = canonical_order(ctx.columns[i] for i in best_subset)
    return SubsetSearchResult(tuple(members), best_merit, evaluations)


# ---------------------------------------------------------------------------
# FS2: consistency


def _group_codes(codes: np.ndarray, indices: Sequence[int]) -> np.ndarray:
    if not indices:
        return np.zeros(codes.shape[0], dtype=int)
    _, inverse = np.unique(codes[:, list(indices)], axis=0, return_inverse=True)
    return inverse


def _consistency_rate(codes: np.ndarray, labels: np.ndarray,
                      indices: Sequence[int]) -> float:
    groups = _group_codes(codes, indices)
    n_groups = int(groups.max()) + 1
    total = np.bincount(groups, minlength=n_groups)
    ones = np.bincount(groups, weights=labels, minlength=n_groups)
    majority = np.maximum(ones, total - ones)
    return float(majority.sum() / labels.size)


def consistency_select(ds: MetricDataset, bins: int = 10) -> SubsetSearchResult:
    """FS2: greedy forward search maximizing the consistency rate; stops at the
    full-set consistency or when no single addition improves."""
    codes = np.column_stack(
        [equal_frequency_codes(ds.column_values(c), bins) for c in ds.columns]
    )
    labels = ds.labels
    n = len(ds.columns)
    target = _consistency_rate(codes, labels, list(range(n)))
    selected: list[int] = []
    current = _consistency_rate(codes, labels, selected)
    evaluations = 1
    while current < target:
        best_gain, best_f, best_rate = 0.0, None, current
        for f in range(n):
            if f in selected:
                continue
            rate = _consistency_rate(codes, labels, selected + [f])
            evaluations += 1
            if rate > best_rate + 1e-12:
                best_gain, best_f, best_rate = rate - current, f, rate
        if best_f is None:
            break
        selected.append(best_f)
        current = best_rate
    if not selected:
        return _fallback_all(ds, current, evaluations, "no feature improved consistency")
    members = canonical_order(ds.columns[i] for i in selected)
    return SubsetSearchResult(tuple(members), current, evaluations)


def consistency_rate_of(ds: MetricDataset, members: Sequence[str], bins: int = 10) -> float:
    """Re-evaluable FS2 objective for a named subset."""
    codes = np.column_stack(
        [equal_frequency_codes(ds.column_values(c), bins) for c in members]
    ) if members else np.zeros((ds.n_rows, 0), dtype=int)
    return _consistency_rate(codes, ds.labels, list(range(len(members))))


# ---------------------------------------------------------------------------
# FS3: rank-test filter, then CFS


def filtered_subset_select(ds: MetricDataset, alpha: float = 0.05,
                           stale_limit: int = 5) -> SubsetSearchResult:
    """FS3: restrict to rank-test survivors (p <= alpha), then run FS1."""
    survivors = stage1_rank_filter(ds, alpha=alpha)
    if not survivors:
        return _fallback_all(ds, 0.0, 0, "rank-test pre-filter removed every metric")
    result = cfs_select(ds, stale_limit=stale_limit, columns=survivors)
    flag = result.flag or f"pre-filter kept {len(survivors)} of {len(ds.columns)} metrics"
    return SubsetSearchResult(result.members, result.merit, result.evaluations, flag)


# ---------------------------------------------------------------------------
# FS4: rough-set reduct


def dependency_degree(ds: MetricDataset, members: Sequence[str], bins: int = 10) -> float:
    """gamma(S): fraction of rows whose discretized equivalence class is label-pure."""
    codes = np.column_stack(
        [equal_frequency_codes(ds.column_values(c), bins) for c in members]
    ) if members else np.zeros((ds.n_rows, 0), dtype=int)
    return _dependency(codes, ds.labels, list(range(len(members))))


def _dependency(codes: np.ndarray, labels: np.ndarray, indices: Sequence[int]) -> float:
    groups = _group_codes(codes, indices)
    n_groups = int(groups.max()) + 1
    total = np.bincount(groups, minlength=n_groups)
    ones = np.bincount(groups, weights=labels, minlength=n_groups)
    pure = (ones == 0) | (ones == total)
    return float(total[pure].sum() / labels.size)


def rough_set_select(ds: MetricDataset, bins: int = 10) -> SubsetSearchResult:
    """FS4: greedy forward reduct search on the dependency degree, then a
    backward prune dropping features whose removal leaves gamma unchanged."""
    codes = np.column_stack(
        [equal_frequency_codes(ds.column_values(c), bins) for c in ds.columns]
    )
    labels = ds.labels
    n = len(ds.columns)
    target = _dependency(codes, labels, list(range(n)))
    evaluations = 1
    selected: list[int] = []
    current = 0.0
    while current < target and len(selected) < n:
        best_f, best_gamma = None, current
        for f in range(n):
            if f in selected:
                continue
            gamma = _dependency(codes, labels, selected + [f])
            evaluations += 1
            if gamma > best_gamma + 1e-15:
                best_f, best_gamma = f, gamma
        if best_f is None:
            # plateau: admit the first unused feature to keep making progress
            remaining = [f for f in range(n) if f not in selected]
            best_f = remaining[0]
            best_gamma = current
        selected.append(best_f)
        current = best_gamma if best_gamma > current else _dependency(codes, labels, selected)
    # backward prune, most recently admitted first
    for f in list(reversed(selected)):
        if len(selected) == 1:
            break
        trial = [g for g in selected if g != f]
        gamma = _dependency(codes, labels, trial)
        evaluations += 1
        if gamma == current:
            selected = trial
    if not selected or target == 0.0:
        return _fallback_all(ds, current, evaluations, "dependency degree stayed 0")
    members = canonical_order(ds.columns[i] for i in selected)
    return SubsetSearchResult(tuple(members), current, evaluations)


# ---------------------------------------------------------------------------
# FS5: genetic search


@dataclass(frozen=True)
class GaConfig:
    population: int = 50
    generations: int = 100
    crossover_rate: float = 0.6
    mutation_rate: float = 0.0  # 0 -> 1 / n_features
    elitism: int = 2
    tournament: int = 3
    seed: int = 0

    def resolve_mutation(self, n_features: int) -> float:
        return self.mutation_rate if self.mutation_rate > 0 else 1.0 / n_features


def genetic_select(ds: MetricDataset, cfg: GaConfig | None = None) -> SubsetSearchResult:
    """FS5: bitmask chromosomes, tournament selection, single-point crossover,
    per-bit mutation; fitness is the CFS merit (empty chromosome scores 0).
    Returns the best chromosome ever seen; deterministic for a fixed seed."""
    cfg = cfg or GaConfig()
    if cfg.population < 2:
        raise StatsError("GA population must be at least 2")
    ctx = CfsContext(ds)
    n = len(ctx.columns)
    rng = np.random.default_rng(cfg.seed)
    mutation = cfg.resolve_mutation(n)
    evaluations = 0

    def fitness(mask: np.ndarray) -> float:
        nonlocal evaluations
        evaluations += 1
        return ctx.merit(np.flatnonzero(mask))

    population = rng.random((cfg.population, n)) < 0.5
    fits = np.array([fitness(ch) for ch in population])
    best_idx = int(np.argmax(fits))
    best_mask, best_fit = population[best_idx].copy(), float(fits[best_idx])

    for _ in range(cfg.generations):
        order = np.argsort(-fits, kind="stable")
        next_pop = [population[i].copy() for i in order[: cfg.elitism]]
        while len(next_pop) < cfg.population:
            contenders = rng.integers(0, cfg.population, cfg.tournament)
            p1 = population[contenders[np.argmax(fits[contenders])]]
            contenders = rng.integers(0, cfg.population, cfg.tournament)
            p2 = population[contenders[np.argmax(fits[contenders])]]
            child = p1.copy()
            if rng.random() < cfg.crossover_rate and n > 1:
                point = int(rng.integers(1, n))
                child = np.concatenate([p1[:point], p2[point:]])
            flip = rng.random(n) < mutation
            child = np.where(flip, ~child, child)
            next_pop.append(child)
        population = np.array(next_pop[: cfg.population])
        fits = np.array([fitness(ch) for ch in population])
        gen_best = int(np.argmax(fits))
        if fits[gen_best] > best_fit + 1e-15:
            best_fit = float(fits[gen_best])
            best_mask = population[gen_best].copy()

    if not best_mask.any():
        return _fallback_all(ds, best_fit, evaluations, "best chromosome is empty")
    members = canonical_order(ctx.columns[i] for i in np.flatnonzero(best_mask))
    return SubsetSearchResult(tuple(members), best_fit, evaluations)
