"""Cross-trial statistics over enumerated forests.

Reduces per-trial summaries to aggregate tables: error by node cardinality
with confidence intervals, groupings by minimum tree size, pairwise
accuracy comparisons between cardinalities, size-selection policies, and
path-length curves.  Comparisons and probabilities are computed in exact
integer or rational arithmetic; floats appear only in the emitted rows.

Every trial carries its own test denominator.  Aggregation of error rates
works across mixed denominators (rates are per-trial means), but pairwise
comparison and path-length pooling need one shared denominator and refuse
mixtures explicitly.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from statistics import fmean, stdev
from typing import Sequence

from .forest import CardinalityBucket, ForestSummary

Z_95 = 1.96


@dataclass(frozen=True)
class TrialRecord:
    """One enumeration trial: the sample sizes, the summary, bookkeeping."""

    trial_id: int
    seed: int
    n_train: int
    n_test: int
    min_size: int | None
    summary: ForestSummary
    accepted: bool = True
    rejections: int = 0
    wall_ms: float = 0.0

    def __post_init__(self):
        if self.min_size != self.summary.min_size:
            raise ValueError(
                f"min_size {self.min_size} disagrees with summary "
                f"{self.summary.min_size}"
            )
        if self.n_test != self.summary.test_weight:
            raise ValueError(
                f"n_test {self.n_test} disagrees with summary test weight "
                f"{self.summary.test_weight}"
            )

    def present_cardinalities(self) -> list[int]:
        return sorted(c for c, b in self.summary.buckets.items() if b.tree_count)


@dataclass(frozen=True)
class AggregateRow:
    node_cardinality: int
    trials_present: int
    mean_error: float
    ci_half_width: float
    mean_tree_count: float
    mean_correct_count: float


@dataclass(frozen=True)
class MinSizeGroup:
    min_size: int
    trial_count: int
    rows: tuple[AggregateRow, ...]


@dataclass(frozen=True)
class PairwiseRow:
    """Outcome shares for tree pairs whose cardinalities differ by `diff`.

    smaller/equal/larger counts are raw pair tallies summed over trials.
    The exact probabilities are Fractions (they sum to 1 exactly); the
    float fields are their lossy views for table output.
    """

    diff: int
    p_smaller_better: float
    p_equal: float
    p_larger_better: float
    pair_count: int
    trials_present: int
    smaller_count: int
    equal_count: int
    larger_count: int
    p_smaller_exact: Fraction
    p_equal_exact: Fraction
    p_larger_exact: Fraction


@dataclass(frozen=True)
class PolicyRow:
    min_size: int
    preferred_cardinality: int
    trial_count: int


@dataclass(frozen=True)
class PathBinRow:
    bin_center: float
    mean_error: float
    tree_count: int


def _trial_mean_error(bucket: CardinalityBucket, n_test: int) -> float:
    return bucket.misclassified_total / (bucket.tree_count * n_test)


def aggregate_by_cardinality(trials: Sequence[TrialRecord]) -> list[AggregateRow]:
    """Average per-trial mean error (and tree counts) at each cardinality.

    A trial contributes to a row only when it has trees of that size; the
    confidence half-width is 1.96 * s / sqrt(n) over the contributing
    trials' mean errors (0 when fewer than two contribute).
    """
    if not trials:
        raise ValueError("need at least one trial")
    per_c: dict[int, list[tuple[float, int, int]]] = {}
    for t in trials:
        if t.n_test <= 0:
            raise ValueError(f"trial {t.trial_id} has no test examples")
        for c, b in t.summary.buckets.items():
            if b.tree_count:
                per_c.setdefault(c, []).append(
                    (_trial_mean_error(b, t.n_test), b.tree_count, b.correct_count)
                )
    rows = []
    for c in sorted(per_c):
        errs = [e for e, _, _ in per_c[c]]
        n = len(errs)
        ci = Z_95 * stdev(errs) / n**0.5 if n >= 2 else 0.0
        rows.append(
            AggregateRow(
                node_cardinality=c,
                trials_present=n,
                mean_error=fmean(errs),
                ci_half_width=ci,
                mean_tree_count=fmean([k for _, k, _ in per_c[c]]),
                mean_correct_count=fmean([z for _, _, z in per_c[c]]),
            )
        )
    return rows


def group_by_min_size(trials: Sequence[TrialRecord]) -> dict[int, MinSizeGroup]:
    """Partition trials by minimum consistent size and aggregate each part.

    Trials whose forest is empty (min_size None) are left out.
    """
    if not trials:
        raise ValueError("need at least one trial")
    parts: dict[int, list[TrialRecord]] = {}
    for t in trials:
        if t.min_size is not None:
            parts.setdefault(t.min_size, []).append(t)
    return {
        m: MinSizeGroup(
            min_size=m,
            trial_count=len(group),
            rows=tuple(aggregate_by_cardinality(group)),
        )
        for m, group in sorted(parts.items())
    }


def _pair_counts(h1: dict[int, int], h2: dict[int, int]) -> tuple[int, int, int]:
    """Pairs from h1 x h2 where the h1 error is smaller / equal / larger.

    Linear in histogram sizes after sorting: sweep h1's keys ascending
    while advancing a cumulative count of h2 mass strictly below them.
    """
    total1 = sum(h1.values())
    total2 = sum(h2.values())
    keys2 = sorted(h2)
    smaller = equal = 0
    below = 0
    i = 0
    for k1 in sorted(h1):
        while i < len(keys2) and keys2[i] < k1:
            below += h2[keys2[i]]
            i += 1
        n1 = h1[k1]
        eq = h2.get(k1, 0)
        smaller += n1 * (total2 - below - eq)
        equal += n1 * eq
    return smaller, equal, total1 * total2 - smaller - equal


def _trial_histograms(t: TrialRecord) -> dict[int, dict[int, int]]:
    out = {}
    for c, b in t.summary.buckets.items():
        if not b.tree_count:
            continue
        if b.error_hist is None:
            raise ValueError(
                f"trial {t.trial_id} summary lacks error histograms; rerun "
                "with error_hist tracking to compare tree pairs"
            )
        out[c] = b.error_hist
    return out


def pairwise(
    trials: Sequence[TrialRecord],
    baseline: str = "all",
    min_size_in: Sequence[int] | None = None,
    pooling: str = "pair",
) -> list[PairwiseRow]:
    """Compare accuracy across tree pairs of different cardinalities.

    baseline 'all' pairs every smaller cardinality with every larger one;
    'min' fixes the smaller side to each trial's minimum size.  min_size_in
    restricts to trials whose minimum size is in the given set.  pooling
    'pair' divides summed pair counts (every pair weighs the same); 'trial'
    averages per-trial probabilities (every trial weighs the same).
    """
    if baseline not in ("all", "min"):
        raise ValueError(f"unknown baseline {baseline!r}")
    if pooling not in ("pair", "trial"):
        raise ValueError(f"unknown pooling {pooling!r}")
    allowed = set(min_size_in) if min_size_in is not None else None
    chosen = [
        t
        for t in trials
        if t.min_size is not None and (allowed is None or t.min_size in allowed)
    ]
    denoms = {t.n_test for t in chosen}
    if len(denoms) > 1:
        raise ValueError(f"mixed test denominators {sorted(denoms)}")
    counts: dict[int, list[int]] = {}
    present: Counter[int] = Counter()
    shares: dict[int, list[Fraction]] = {}
    for t in chosen:
        hists = _trial_histograms(t)
        cs = sorted(hists)
        by_diff: dict[int, list[int]] = {}
        for i, c1 in enumerate(cs):
            if baseline == "min" and c1 != t.min_size:
                break
            for c2 in cs[i + 1 :]:
                s, e, l = _pair_counts(hists[c1], hists[c2])
                slot = by_diff.setdefault(c2 - c1, [0, 0, 0])
                slot[0] += s
                slot[1] += e
                slot[2] += l
        for diff, (s, e, l) in by_diff.items():
            slot = counts.setdefault(diff, [0, 0, 0])
            slot[0] += s
            slot[1] += e
            slot[2] += l
            present[diff] += 1
            if pooling == "trial":
                n = s + e + l
                tri = shares.setdefault(diff, [Fraction(0)] * 3)
                tri[0] += Fraction(s, n)
                tri[1] += Fraction(e, n)
                tri[2] += Fraction(l, n)
    rows = []
    for diff in sorted(counts):
        s, e, l = counts[diff]
        n = s + e + l
        if pooling == "pair":
            ps, pe, pl = Fraction(s, n), Fraction(e, n), Fraction(l, n)
        else:
            k = present[diff]
            ps, pe, pl = (x / k for x in shares[diff])
        rows.append(
            PairwiseRow(
                diff=diff,
                p_smaller_better=float(ps),
                p_equal=float(pe),
                p_larger_better=float(pl),
                pair_count=n,
                trials_present=present[diff],
                smaller_count=s,
                equal_count=e,
                larger_count=l,
                p_smaller_exact=ps,
                p_equal_exact=pe,
                p_larger_exact=pl,
            )
        )
    return rows


def best_cardinality(record: TrialRecord) -> int | None:
    """Cardinality with the lowest mean error in one trial, ties small.

    Mean errors are compared by cross-multiplying misclassification sums
    with tree counts, so the result is independent of the denominator.
    """
    best_c = None
    best: tuple[int, int] | None = None  # (misclassified_total, tree_count)
    for c in record.present_cardinalities():
        b = record.summary.buckets[c]
        if best is None or b.misclassified_total * best[1] < best[0] * b.tree_count:
            best = (b.misclassified_total, b.tree_count)
            best_c = c
    return best_c


def derive_policy(trials: Sequence[TrialRecord]) -> list[PolicyRow]:
    """Per minimum size, the cardinality most often most accurate.

    Each trial votes for its best cardinality; within a minimum-size group
    the preferred cardinality is the most common vote, ties to the
    smallest.
    """
    if not trials:
        raise ValueError("need at least one trial")
    votes: dict[int, Counter[int]] = {}
    for t in trials:
        if t.min_size is None:
            continue
        c = best_cardinality(t)
        votes.setdefault(t.min_size, Counter())[c] += 1
    rows = []
    for m in sorted(votes):
        tally = votes[m]
        top = max(tally.values())
        preferred = min(c for c, k in tally.items() if k == top)
        rows.append(
            PolicyRow(
                min_size=m,
                preferred_cardinality=preferred,
                trial_count=sum(tally.values()),
            )
        )
    return rows


def bin_by_path_length(trials: Sequence[TrialRecord], bin_width: float) -> list[PathBinRow]:
    """Pool per-bin tree counts and errors over trials.

    Bins are [k*w, (k+1)*w) over per-tree average path length, fixed at
    enumeration time; every summary must carry bins of the same width, and
    trials must share a test denominator.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if not trials:
        raise ValueError("need at least one trial")
    denoms = set()
    pooled: dict[int, list[int]] = {}
    for t in trials:
        s = t.summary
        if s.path_bins is None or s.path_bin_width != bin_width:
            raise ValueError(
                f"trial {t.trial_id} has no path bins of width {bin_width}"
            )
        denoms.add(t.n_test)
        for k, (count, misc) in s.path_bins.items():
            slot = pooled.setdefault(k, [0, 0])
            slot[0] += count
            slot[1] += misc
    if len(denoms) > 1:
        raise ValueError(f"mixed test denominators {sorted(denoms)}")
    denom = denoms.pop()
    return [
        PathBinRow(
            bin_center=(k + 0.5) * bin_width,
            mean_error=misc / (count * denom),
            tree_count=count,
        )
        for k, (count, misc) in sorted(pooled.items())
        if count
    ]


# ------------------------------------------------------------ CSV output

def _write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_cardinality_csv(
    path, sections: Sequence[tuple[str, int, Sequence[AggregateRow]]]
) -> None:
    _write_csv(
        path,
        [
            "preset",
            "seed",
            "node_cardinality",
            "trials_present",
            "mean_error",
            "ci_half_width",
            "mean_tree_count",
            "mean_correct_count",
        ],
        (
            [
                label,
                seed,
                r.node_cardinality,
                r.trials_present,
                r.mean_error,
                r.ci_half_width,
                r.mean_tree_count,
                r.mean_correct_count,
            ]
            for label, seed, rows in sections
            for r in rows
        ),
    )


def write_pairwise_csv(
    path, sections: Sequence[tuple[str, int, str, str, Sequence[PairwiseRow]]]
) -> None:
    _write_csv(
        path,
        [
            "preset",
            "seed",
            "baseline",
            "min_size_condition",
            "diff",
            "p_smaller_better",
            "p_equal",
            "p_larger_better",
            "pair_count",
        ],
        (
            [
                label,
                seed,
                baseline,
                condition,
                r.diff,
                r.p_smaller_better,
                r.p_equal,
                r.p_larger_better,
                r.pair_count,
            ]
            for label, seed, baseline, condition, rows in sections
            for r in rows
        ),
    )


def write_policy_csv(
    path, sections: Sequence[tuple[str, int, Sequence[PolicyRow]]]
) -> None:
    _write_csv(
        path,
        ["preset", "seed", "min_size", "preferred_cardinality", "trial_count"],
        (
            [label, seed, r.min_size, r.preferred_cardinality, r.trial_count]
            for label, seed, rows in sections
            for r in rows
        ),
    )


def write_path_length_csv(
    path, sections: Sequence[tuple[str, int, Sequence[PathBinRow]]]
) -> None:
    _write_csv(
        path,
        ["preset", "seed", "bin_center", "mean_error", "tree_count"],
        (
            [label, seed, r.bin_center, r.mean_error, r.tree_count]
            for label, seed, rows in sections
            for r in rows
        ),
    )
