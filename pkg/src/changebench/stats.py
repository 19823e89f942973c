"""Statistical primitives: rank tests, univariate logistic fits, correlations,
confidence intervals, descriptive statistics, and Bonferroni-corrected
pairwise comparisons.

Everything here is a pure function of its inputs. The rank tests carry their
exact (enumeration-equivalent) small-sample distributions computed by dynamic
programming over mid-ranks, so tied data is handled exactly; large samples use
the tie-corrected normal approximation with continuity correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .distributions import norm_sf, t_ppf
from .errors import StatsError

ALPHA = 0.05

#: Below this smaller-group size the rank-sum test uses the exact distribution.
EXACT_MIN_GROUP = 8
#: DP size guard: exact rank-sum only when the pooled sample is this small.
EXACT_MAX_TOTAL = 200
#: At or below this many non-zero pairs the signed-rank test is exact.
EXACT_MAX_PAIRS = 25


def _as_finite_array(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        arr = arr.ravel()
    if not np.isfinite(arr).all():
        raise StatsError(f"{what} contains non-finite values")
    return arr


def midranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied values share the mean of their rank range."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    i = 0
    n = values.size
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _tie_term(ranks: np.ndarray) -> float:
    """Sum of t^3 - t over tie groups of the pooled ranks."""
    _, counts = np.unique(ranks, return_counts=True)
    return float(np.sum(counts.astype(float) ** 3 - counts))


def _two_sided_from_counts(c_le: int, c_ge: int, total: int) -> float:
    return min(1.0, 2.0 * min(c_le, c_ge) / total)


def _ranksum_exact_p(doubled: np.ndarray, k: int, observed: int) -> float:
    """Two-sided exact p for a k-subset rank sum over the pooled doubled ranks.

    Counts, over all C(n, k) label assignments, how many subsets have a rank
    sum at or beyond the observed one on either side. Integer DP; equivalent
    to full enumeration.
    """
    total = math.comb(len(doubled), k)
    max_sum = int(doubled.sum())
    table = np.zeros((k + 1, max_sum + 1), dtype=np.int64)
    table[0, 0] = 1
    for d in doubled:
        d = int(d)
        for j in range(k, 0, -1):
            table[j, d:] += table[j - 1, : max_sum + 1 - d]
    dist = table[k]
    c_le = int(dist[: observed + 1].sum())
    c_ge = int(dist[observed:].sum())
    return _two_sided_from_counts(c_le, c_ge, total)


@dataclass(frozen=True)
class RankTestResult:
    """Two-sample rank-sum (Mann-Whitney) test outcome."""

    statistic: float  # Mann-Whitney U for the first (changed) group
    rank_sum: float   # rank sum of the first group
    p_value: float
    significant: bool  # p_value <= alpha
    method: str        # "exact", "normal", or "degenerate"
    flag: str | None = None


def rank_test(values_changed, values_unchanged, alpha: float = ALPHA) -> RankTestResult:
    """Two-sided rank-sum test that both groups share one distribution.

    Mid-ranks for ties. Exact enumeration-equivalent p-values when the smaller
    group has fewer than ``EXACT_MIN_GROUP`` members and the pooled sample fits
    the DP guard; otherwise the tie-corrected normal approximation with a 0.5
    continuity correction. A pooled sample with all values identical carries no
    discrimination and yields p = 1.0.
    """
    a = _as_finite_array(values_changed, "values_changed")
    b = _as_finite_array(values_unchanged, "values_unchanged")
    if a.size == 0 or b.size == 0:
        raise StatsError("rank_test needs two non-empty groups")
    n1, n2 = a.size, b.size
    n = n1 + n2
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return RankTestResult(
            statistic=n1 * n2 / 2.0,
            rank_sum=n1 * (n + 1) / 2.0,
            p_value=1.0,
            significant=False,
            method="degenerate",
            flag="all pooled values identical",
        )
    ranks = midranks(pooled)
    w1 = float(ranks[:n1].sum())
    u1 = w1 - n1 * (n1 + 1) / 2.0

    if min(n1, n2) < EXACT_MIN_GROUP and n <= EXACT_MAX_TOTAL:
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        if n1 <= n2:
            k, w_small = n1, w1
        else:
            k, w_small = n2, float(ranks[n1:].sum())
        p = _ranksum_exact_p(doubled, k, int(round(2.0 * w_small)))
        method = "exact"
        flag = None
    else:
        mu = n1 * (n + 1) / 2.0
        tie = _tie_term(ranks)
        var = n1 * n2 / 12.0 * ((n + 1) - tie / (n * (n - 1)))
        if var <= 0.0:
            return RankTestResult(u1, w1, 1.0, False, "degenerate", "zero variance under ties")
        z = max(abs(w1 - mu) - 0.5, 0.0) / math.sqrt(var)
        p = min(1.0, 2.0 * norm_sf(z))
        method = "normal"
        flag = None
        if min(n1, n2) < EXACT_MIN_GROUP:
            flag = "small group but pooled sample too large for exact enumeration"
    return RankTestResult(u1, w1, p, p <= alpha, method, flag)


@dataclass(frozen=True)
class SignedRankResult:
    """Paired Wilcoxon signed-rank test outcome on a vector of differences."""

    statistic: float  # W+, rank sum of positive differences
    n_used: int       # pairs remaining after zero differences are dropped
    p_value: float
    significant: bool
    method: str
    flag: str | None = None


def signed_rank_test(differences, alpha: float = ALPHA) -> SignedRankResult:
    """Two-sided signed-rank test on paired differences.

    Zero differences are dropped; mid-ranks on |d| handle ties. Exact
    (enumeration-equivalent over all 2^m sign assignments) for m up to
    ``EXACT_MAX_PAIRS``, tie-corrected normal approximation with continuity
    correction beyond.
    """
    d = _as_finite_array(differences, "differences")
    if d.size == 0:
        raise StatsError("signed_rank_test needs at least one difference")
    nz = d[d != 0.0]
    m = nz.size
    if m == 0:
        return SignedRankResult(0.0, 0, 1.0, False, "degenerate", "all differences zero")
    ranks = midranks(np.abs(nz))
    w_plus = float(ranks[nz > 0].sum())

    if m <= EXACT_MAX_PAIRS:
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        max_sum = int(doubled.sum())
        counts = np.zeros(max_sum + 1, dtype=np.int64)
        counts[0] = 1
        for r in doubled:
            r = int(r)
            counts[r:] += counts[: max_sum + 1 - r]
        observed = int(round(2.0 * w_plus))
        c_le = int(counts[: observed + 1].sum())
        c_ge = int(counts[observed:].sum())
        p = _two_sided_from_counts(c_le, c_ge, 1 << m)
        return SignedRankResult(w_plus, m, p, p < alpha, "exact")

    mu = m * (m + 1) / 4.0
    var = m * (m + 1) * (2 * m + 1) / 24.0 - _tie_term(ranks) / 48.0
    if var <= 0.0:
        return SignedRankResult(w_plus, m, 1.0, False, "degenerate", "zero variance under ties")
    z = max(abs(w_plus - mu) - 0.5, 0.0) / math.sqrt(var)
    p = min(1.0, 2.0 * norm_sf(z))
    return SignedRankResult(w_plus, m, p, p < alpha, "normal")


# ---------------------------------------------------------------------------
# Univariate logistic regression


@dataclass(frozen=True)
class UlrResult:
    """Univariate logistic fit of P(label=1 | x) = sigmoid(intercept + coefficient * x)."""

    coefficient: float
    intercept: float
    coef_p_value: float  # two-sided Wald p-value for the slope
    significant: bool    # coef_p_value < 0.05 (strict)
    converged: bool
    flag: str | None = None


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ez = np.exp(eta[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_log_likelihood(intercept: float, coefficient: float, x, y) -> float:
    """Bernoulli log-likelihood of a univariate logistic model (for oracles/tests)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eta = intercept + coefficient * x
    # log sigmoid(eta) = -log1p(exp(-eta)), stable on both tails
    return float(np.sum(y * -np.logaddexp(0.0, -eta) + (1.0 - y) * -np.logaddexp(0.0, eta)))


def logistic_gradient(intercept: float, coefficient: float, x, y) -> np.ndarray:
    """Gradient of the log-likelihood in (intercept, coefficient)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    resid = y - _sigmoid(intercept + coefficient * x)
    return np.array([resid.sum(), (resid * x).sum()])


_SEPARATION_LIMIT = 30.0


def _irls(z: np.ndarray, y: np.ndarray, ridge: float, max_iter: int = 100) -> tuple[np.ndarray, bool]:
    """Newton/IRLS on a standardized predictor; ridge applies to the slope only."""
    beta = np.zeros(2)
    design = np.column_stack([np.ones_like(z), z])
    penalty = np.diag([0.0, ridge])
    converged = False
    for _ in range(max_iter):
        p = _sigmoid(design @ beta)
        w = p * (1.0 - p)
        grad = design.T @ (y - p) - penalty @ beta
        hess = design.T @ (design * w[:, None]) + penalty
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            hess = hess + np.eye(2) * 1e-10
            step = np.linalg.solve(hess, grad)
        beta = beta + step
        if np.max(np.abs(grad)) < 1e-10 and np.max(np.abs(step)) < 1e-10:
            converged = True
            break
        if abs(beta[1]) > _SEPARATION_LIMIT * 4:
            break
    return beta, converged


def ulr_fit(x, labels, alpha: float = ALPHA, ridge: float = 1e-6) -> UlrResult:
    """Maximum-likelihood univariate logistic fit with a Wald test on the slope.

    Fitted by iteratively reweighted least squares on the standardized
    predictor, then mapped back to the original scale and polished so the
    reported optimum has a near-zero likelihood gradient. Complete or
    quasi-complete separation (diverging slope) triggers a refit with a small
    ridge penalty and a flag. A zero-variance predictor carries no information:
    coefficient 0, p-value 1, flagged.
    """
    x = _as_finite_array(x, "x")
    y = np.asarray(labels)
    if x.size != y.size:
        raise StatsError("x and labels must have equal length")
    if x.size < 4:
        raise StatsError("ulr_fit needs at least 4 observations")
    y = y.astype(float)
    if not np.isin(y, (0.0, 1.0)).all():
        raise StatsError("labels must be 0/1")
    if y.min() == y.max():
        raise StatsError("single-class labels")

    mean = float(x.mean())
    sd = float(x.std())
    if sd == 0.0:
        ybar = float(y.mean())
        return UlrResult(
            coefficient=0.0,
            intercept=float(np.log(ybar / (1.0 - ybar))),
            coef_p_value=1.0,
            significant=False,
            converged=True,
            flag="zero-variance predictor",
        )
    z = (x - mean) / sd

    beta, converged = _irls(z, y, ridge=0.0)
    flag = None
    if not converged or abs(beta[1]) > _SEPARATION_LIMIT:
        beta, converged = _irls(z, y, ridge=ridge)
        flag = "separation detected; ridge-penalized fit"

    # Back to the original scale, then polish so the gradient is ~0 there too.
    slope = beta[1] / sd
    intercept = beta[0] - beta[1] * mean / sd
    design = np.column_stack([np.ones_like(x), x])
    params = np.array([intercept, slope])
    pen = np.diag([0.0, ridge if flag else 0.0])
    for _ in range(5):
        p = _sigmoid(design @ params)
        grad = design.T @ (y - p) - pen @ params
        if np.max(np.abs(grad)) < 1e-9:
            break
        w = p * (1.0 - p)
        hess = design.T @ (design * w[:, None]) + pen
        try:
            params = params + np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break

    p = _sigmoid(design @ params)
    w = p * (1.0 - p)
    info = design.T @ (design * w[:, None]) + pen
    try:
        cov = np.linalg.inv(info)
        se = math.sqrt(max(cov[1, 1], 0.0))
    except np.linalg.LinAlgError:
        se = math.inf
    if se == 0.0 or not math.isfinite(se):
        p_value = 1.0
    else:
        zstat = params[1] / se
        p_value = min(1.0, 2.0 * norm_sf(abs(zstat)))
    return UlrResult(
        coefficient=float(params[1]),
        intercept=float(params[0]),
        coef_p_value=p_value,
        significant=p_value < alpha,
        converged=converged,
        flag=flag,
    )


# ---------------------------------------------------------------------------
# Correlation


STRONG_THRESHOLD = 0.7
WEAK_THRESHOLD = 0.3


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pearson correlations with the strong/weak/none banding used downstream."""

    columns: tuple[str, ...]
    r: np.ndarray
    strength: np.ndarray  # string matrix over {"strong", "weak", "none"}
    flagged: tuple[str, ...] = ()  # zero-variance columns (r forced to 0)


def pearson_from_matrix(matrix: np.ndarray, columns: Sequence[str]) -> CorrelationMatrix:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise StatsError("pearson correlation needs at least 2 rows")
    centered = matrix - matrix.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    zero_var = norms == 0.0
    safe = np.where(zero_var, 1.0, norms)
    unit = centered / safe
    r = unit.T @ unit
    r[zero_var, :] = 0.0
    r[:, zero_var] = 0.0
    np.clip(r, -1.0, 1.0, out=r)
    r = 0.5 * (r + r.T)
    np.fill_diagonal(r, 1.0)
    strength = np.where(
        np.abs(r) >= STRONG_THRESHOLD, "strong",
        np.where(np.abs(r) >= WEAK_THRESHOLD, "weak", "none"),
    )
    flagged = tuple(c for c, z in zip(columns, zero_var) if z)
    return CorrelationMatrix(tuple(columns), r, strength, flagged)


def pearson_matrix(ds, columns: Sequence[str] | None = None) -> CorrelationMatrix:
    """Pairwise Pearson r over the given dataset columns (default: all)."""
    cols = list(columns) if columns is not None else list(ds.columns)
    if len(cols) < 2:
        raise StatsError("pearson_matrix needs at least 2 columns")
    return pearson_from_matrix(ds.matrix(cols), cols)


def pearson(x, y) -> float:
    """Plain sample Pearson correlation of two vectors (0 if either is constant)."""
    m = pearson_from_matrix(np.column_stack([np.asarray(x, float), np.asarray(y, float)]), ("x", "y"))
    return float(m.r[0, 1])


# ---------------------------------------------------------------------------
# Confidence intervals and descriptive statistics


@dataclass(frozen=True)
class MeanCI:
    mean: float
    lo: float
    hi: float
    level: float = 0.95


def mean_ci(values, level: float = 0.95) -> MeanCI:
    """Mean with a two-sided Student t confidence interval."""
    v = _as_finite_array(values, "values")
    n = v.size
    if n < 2:
        raise StatsError("mean_ci needs at least 2 values")
    mean = float(v.mean())
    se = float(v.std(ddof=1)) / math.sqrt(n)
    if se == 0.0:
        return MeanCI(mean, mean, mean, level)
    half = t_ppf(0.5 + level / 2.0, n - 1) * se
    return MeanCI(mean, mean - half, mean + half, level)


@dataclass(frozen=True)
class DescriptiveStats:
    min: float
    max: float
    mean: float
    median: float
    std_dev: float
    q1: float
    q3: float


def descriptive(values) -> DescriptiveStats:
    """Five-number-style summary; sample std (n-1), quartiles by linear
    interpolation between inclusive order statistics (numpy's default)."""
    v = _as_finite_array(values, "values")
    if v.size == 0:
        raise StatsError("descriptive needs at least 1 value")
    q1, median, q3 = np.percentile(v, (25.0, 50.0, 75.0))
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return DescriptiveStats(
        min=float(v.min()), max=float(v.max()), mean=float(v.mean()),
        median=float(median), std_dev=std, q1=float(q1), q3=float(q3),
    )


# ---------------------------------------------------------------------------
# Pairwise comparison with Bonferroni correction


@dataclass(frozen=True)
class PairwiseTestReport:
    """All-pairs signed-rank tests at a Bonferroni-adjusted cutoff.

    ``p_values`` is symmetric with unit diagonal; ``significant`` marks pairs
    with p below alpha / n_pairs; ``mean_difference[i, j]`` is mean(method_i)
    minus mean(method_j), an antisymmetric matrix with zero diagonal.
    """

    methods: tuple[str, ...]
    observation_keys: tuple
    alpha: float
    n_pairs: int
    cutoff: float
    p_values: np.ndarray
    significant: np.ndarray
    mean_difference: np.ndarray
    measure: str = ""
    flags: tuple[str, ...] = ()

    def significant_pair_count(self) -> int:
        m = len(self.methods)
        return int(sum(self.significant[i, j] for i in range(m) for j in range(i + 1, m)))

    def to_json(self) -> dict:
        return {
            "methods": list(self.methods),
            "n_observations": len(self.observation_keys),
            "observation_keys": [list(k) if isinstance(k, tuple) else k for k in self.observation_keys],
            "alpha": self.alpha,
            "n_pairs": self.n_pairs,
            "cutoff": self.cutoff,
            "p_values": self.p_values.tolist(),
            "significant": self.significant.astype(bool).tolist(),
            "mean_difference": self.mean_difference.tolist(),
            "measure": self.measure,
            "flags": list(self.flags),
        }


def pairwise_report_from_json(d: Mapping) -> PairwiseTestReport:
    keys = tuple(tuple(k) if isinstance(k, list) else k for k in d["observation_keys"])
    return PairwiseTestReport(
        methods=tuple(d["methods"]),
        observation_keys=keys,
        alpha=d["alpha"],
        n_pairs=d["n_pairs"],
        cutoff=d["cutoff"],
        p_values=np.asarray(d["p_values"], dtype=float),
        significant=np.asarray(d["significant"], dtype=bool),
        mean_difference=np.asarray(d["mean_difference"], dtype=float),
        measure=d.get("measure", ""),
        flags=tuple(d.get("flags", ())),
    )


def pairwise_bonferroni(
    scores: Mapping[str, Mapping],
    alpha: float = ALPHA,
    measure: str = "",
    flags: Sequence[str] = (),
) -> PairwiseTestReport:
    """Paired signed-rank tests over every unordered method pair.

    ``scores`` maps method -> {observation key -> value}; every method must
    cover the same observation keys (a paired design). The significance cutoff
    is alpha divided by the number of pairs; a difference is significant when
    its p-value falls below the cutoff.
    """
    methods = tuple(scores.keys())
    if len(methods) < 2:
        raise StatsError("pairwise comparison needs at least 2 methods")
    key_sets = {m: frozenset(scores[m].keys()) for m in methods}
    reference = key_sets[methods[0]]
    for m, ks in key_sets.items():
        if ks != reference:
            raise StatsError(
                f"mismatched observation keys: method {m!r} differs from {methods[0]!r}"
            )
    if not reference:
        raise StatsError("no observations")
    keys = tuple(sorted(reference))
    values = np.array([[float(scores[m][k]) for k in keys] for m in methods])

    m = len(methods)
    n_pairs = m * (m - 1) // 2
    cutoff = alpha / n_pairs
    p = np.ones((m, m))
    sig = np.zeros((m, m), dtype=bool)
    for i in range(m):
        for j in range(i + 1, m):
            res = signed_rank_test(values[i] - values[j])
            p[i, j] = p[j, i] = res.p_value
            sig[i, j] = sig[j, i] = res.p_value < cutoff
    means = values.mean(axis=1)
    mean_diff = means[:, None] - means[None, :]
    np.fill_diagonal(mean_diff, 0.0)
    return PairwiseTestReport(
        methods=methods,
        observation_keys=keys,
        alpha=alpha,
        n_pairs=n_pairs,
        cutoff=cutoff,
        p_values=p,
        significant=sig,
        mean_difference=mean_diff,
        measure=measure,
        flags=tuple(flags),
    )
