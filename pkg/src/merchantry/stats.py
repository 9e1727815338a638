"""One-way ANOVA and Tukey-Kramer post-hoc comparisons.

The sums of squares and the F statistic are computed directly from their
definitions; tail probabilities come from the regularized incomplete beta
function (F distribution) and the studentized-range distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from scipy.special import betainc
from scipy.stats import studentized_range

from .errors import DegenerateVarianceError, EmptyInputError


@dataclass(frozen=True)
class AnovaResult:
    f_statistic: float
    df_between: int
    df_within: int
    p_value: float
    ss_between: float
    ss_within: float
    ms_within: float

    def to_dict(self) -> dict:
        return {
            "F": self.f_statistic,
            "df_between": self.df_between,
            "df_within": self.df_within,
            "p": self.p_value,
            "ss_between": self.ss_between,
            "ss_within": self.ss_within,
            "ms_within": self.ms_within,
        }


@dataclass(frozen=True)
class PairwiseComparison:
    group_a: int
    group_b: int
    mean_diff: float
    q_statistic: float
    adjusted_p: float

    def to_dict(self) -> dict:
        return {
            "group_a": self.group_a,
            "group_b": self.group_b,
            "mean_diff": self.mean_diff,
            "q": self.q_statistic,
            "adjusted_p": self.adjusted_p,
        }


def _check_groups(groups: list[list[float]]) -> None:
    if len(groups) < 2:
        raise EmptyInputError("need at least 2 groups")
    for idx, group in enumerate(groups):
        if len(group) < 2:
            raise EmptyInputError(f"group {idx} has fewer than 2 values")


def f_distribution_sf(f: float, df1: int, df2: int) -> float:
    """Upper tail of the F distribution via the regularized incomplete beta."""
    if f <= 0:
        return 1.0
    x = df2 / (df2 + df1 * f)
    return float(betainc(df2 / 2.0, df1 / 2.0, x))


def anova_oneway(groups: list[list[float]]) -> AnovaResult:
    """Classic one-way fixed-effects ANOVA over k groups."""
    _check_groups(groups)
    k = len(groups)
    n_total = sum(len(g) for g in groups)
    grand_mean = sum(sum(g) for g in groups) / n_total
    means = [sum(g) / len(g) for g in groups]
    ss_between = sum(len(g) * (m - grand_mean) ** 2 for g, m in zip(groups, means))
    ss_within = sum(
        sum((x - m) ** 2 for x in g) for g, m in zip(groups, means)
    )
    df_between = k - 1
    df_within = n_total - k
    if ss_within <= 0:
        raise DegenerateVarianceError("zero within-group variance")
    ms_within = ss_within / df_within
    f_stat = (ss_between / df_between) / ms_within
    return AnovaResult(
        f_statistic=f_stat,
        df_between=df_between,
        df_within=df_within,
        p_value=f_distribution_sf(f_stat, df_between, df_within),
        ss_between=ss_between,
        ss_within=ss_within,
        ms_within=ms_within,
    )


def studentized_range_cdf(q: float, k: int, df: float) -> float:
    """CDF of the range of k standard normals over an independent scale.

    ``df`` may be math.inf for the known-variance limit. Monotone in q with
    CDF(0) = 0.
    """
    if k < 2:
        raise EmptyInputError("k must be >= 2")
    if q <= 0:
        return 0.0
    nu = 1e7 if math.isinf(df) else df
    value = float(studentized_range.cdf(q, k, nu))
    return min(max(value, 0.0), 1.0)


def tukey_hsd(groups: list[list[float]]) -> list[PairwiseComparison]:
    """All pairwise Tukey-Kramer comparisons (unequal group sizes allowed)."""
    anova = anova_oneway(groups)
    k = len(groups)
    means = [sum(g) / len(g) for g in groups]
    results = []
    for a, b in combinations(range(k), 2):
        diff = means[a] - means[b]
        se = math.sqrt(
            (anova.ms_within / 2.0) * (1.0 / len(groups[a]) + 1.0 / len(groups[b]))
        )
        q = abs(diff) / se
        results.append(
            PairwiseComparison(
                group_a=a,
                group_b=b,
                mean_diff=diff,
                q_statistic=q,
                adjusted_p=1.0 - studentized_range_cdf(q, k, anova.df_within),
            )
        )
    return results
