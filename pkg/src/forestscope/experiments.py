"""Seeded experiment runner: named sampling protocols over enumeration.

An ExperimentConfig binds a dataset source, one or more legs (train size,
trial count, node cap), a sampling protocol, and the analyses to emit.
Presets encode the library's named experiments; `run_trials` executes the
trials (optionally on a worker pool) and `emit_all` reduces the records to
CSV tables, a JSONL record dump, and optional SVG charts.

Determinism contract: each trial derives its seed from (master_seed,
seed_scope[:leg], trial index) alone, and per-trial randomness is consumed
in a fixed documented order (reference-tree pick, then the sample draws,
then any redraws).  Scheduling therefore cannot change any emitted byte:
wall-clock timings go to progress output only, never into the CSV tables
or the record dump.  Presets that reanalyze one underlying run share a
seed_scope so their trials are literally the same draws.
"""

from __future__ import annotations

import json
import multiprocessing
import os
import time
from dataclasses import dataclass, replace
from typing import Callable, Sequence

from . import charts, stats
from .dataset import (
    Dataset,
    apply_concept,
    bundled_dataset,
    get_concept,
    instance_space,
    leaf_coverage_sample,
    load_dataset,
    representative_filter,
    sample_with_replacement,
    split_disjoint,
)
from .forest import (
    CardinalityBucket,
    EnumerationLimits,
    ForestSummary,
    TrackOptions,
    forest_summary,
    iter_consistent,
    min_consistent_size,
)
from .rng import SplitMix64, derive_seed
from .stats import TrialRecord

RETRY_BOUND = 10_000

_SPLIT_MODES = ("disjoint", "with_replacement", "leave_one_out")
_FILTER_MODES = ("none", "redraw", "post_filter")
_ANALYSES = (
    "cardinality",
    "min_size_groups",
    "pairwise_all",
    "pairwise_min",
    "policy",
    "path_length",
)


class ExperimentError(Exception):
    """Invalid configuration, or a protocol that cannot make progress."""


@dataclass(frozen=True)
class LegSpec:
    """One arm of an experiment: sample size, repetitions, node cap."""

    label: str
    n_train: int
    trial_count: int
    max_nodes: int | None = None
    optional: bool = False  # excluded unless explicitly requested


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    source: str | None  # 'concept:NAME' | 'bundled:NAME' | 'file:PATH'
    legs: tuple[LegSpec, ...]
    split_mode: str = "disjoint"
    test_size: int | None = None  # with_replacement only
    filter_mode: str = "none"
    class_bounds: tuple[tuple[int, tuple[int, int]], ...] = ()
    value_bounds: tuple[tuple[tuple[int, int], tuple[int, int]], ...] = ()
    leaf_coverage: int | None = None
    master_seed: int = 0
    seed_scope: str = ""
    max_trees: int = 50_000_000
    error_hist: bool = True
    leaf_hist: bool = False
    path_bin_width: float | None = None
    analyses: tuple[str, ...] = ("cardinality",)
    pairwise_conditions: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.legs:
            raise ExperimentError("an experiment needs at least one leg")
        for leg in self.legs:
            if leg.trial_count < 1:
                raise ExperimentError(f"leg {leg.label!r}: trial_count must be >= 1")
            if leg.n_train < 1:
                raise ExperimentError(f"leg {leg.label!r}: n_train must be >= 1")
        if self.split_mode not in _SPLIT_MODES:
            raise ExperimentError(f"unknown split_mode {self.split_mode!r}")
        if (self.test_size is not None) != (self.split_mode == "with_replacement"):
            raise ExperimentError("test_size is required by (and only by) with_replacement")
        if self.filter_mode not in _FILTER_MODES:
            raise ExperimentError(f"unknown filter_mode {self.filter_mode!r}")
        if self.filter_mode != "none" and self.split_mode != "disjoint":
            raise ExperimentError("representative filtering needs disjoint splits")
        if self.leaf_coverage is not None:
            if self.split_mode != "disjoint" or self.filter_mode != "none":
                raise ExperimentError("leaf coverage needs plain disjoint splits")
            if self.leaf_coverage < 1:
                raise ExperimentError("leaf_coverage must be >= 1")
        for a in self.analyses:
            if a not in _ANALYSES:
                raise ExperimentError(f"unknown analysis {a!r}")
        if "path_length" in self.analyses and self.path_bin_width is None:
            raise ExperimentError("path_length analysis needs path_bin_width")
        if self.path_bin_width is not None and self.path_bin_width <= 0:
            raise ExperimentError("path_bin_width must be positive")
        needs_hist = {"pairwise_all", "pairwise_min"} & set(self.analyses)
        if needs_hist and not self.error_hist:
            raise ExperimentError("pairwise analyses need error histograms")

    @property
    def scope(self) -> str:
        return self.seed_scope or self.name


def resolve_source(source: str | None) -> Dataset:
    if source is None:
        raise ExperimentError("no dataset source; supply a data file")
    scheme, _, rest = source.partition(":")
    if scheme == "concept":
        return apply_concept(get_concept(rest))
    if scheme == "bundled":
        return bundled_dataset(rest)
    if scheme == "file":
        return load_dataset(rest)
    raise ExperimentError(f"unknown dataset source {source!r}")


@dataclass(frozen=True)
class LegResult:
    leg: LegSpec
    records: tuple[TrialRecord, ...]

    def accepted_records(self) -> tuple[TrialRecord, ...]:
        return tuple(r for r in self.records if r.accepted)


@dataclass(frozen=True)
class _RunContext:
    config: ExperimentConfig
    data: Dataset
    reference_pool: tuple | None  # minimum-size trees of the full dataset
    population: tuple | None


def _prepare(config: ExperimentConfig) -> _RunContext:
    data = resolve_source(config.source)
    n = len(data.examples)
    for leg in config.legs:
        if config.split_mode == "leave_one_out":
            if leg.trial_count != n or leg.n_train != n - 1:
                raise ExperimentError(
                    f"leave_one_out needs trial_count={n} and n_train={n - 1}, "
                    f"leg {leg.label!r} has {leg.trial_count}/{leg.n_train}"
                )
        elif config.split_mode == "disjoint" and leg.n_train >= n:
            raise ExperimentError(
                f"leg {leg.label!r}: n_train {leg.n_train} leaves no test rows"
            )
    pool = None
    if config.leaf_coverage is not None:
        m = min_consistent_size(data)
        pool = tuple(iter_consistent(data, EnumerationLimits(max_nodes=m)))
    population = None
    if config.path_bin_width is not None:
        population = tuple(instance_space(data.schema))
    return _RunContext(
        config=config, data=data, reference_pool=pool, population=population
    )


def _split_leave_one_out(data: Dataset, t: int) -> tuple[Dataset, Dataset]:
    held = data.examples[t]
    rest = tuple(ex for i, ex in enumerate(data.examples) if i != t)
    return (
        Dataset(schema=data.schema, examples=rest),
        Dataset(schema=data.schema, examples=(held,)),
    )


def _draw(ctx: _RunContext, leg: LegSpec, t: int, rng: SplitMix64):
    """Returns (train, test, accepted, rejections).  Draw order is fixed."""
    config = ctx.config
    if config.split_mode == "leave_one_out":
        train, test = _split_leave_one_out(ctx.data, t)
        return train, test, True, 0
    if config.split_mode == "with_replacement":
        train = sample_with_replacement(ctx.data, leg.n_train, rng)
        test = sample_with_replacement(ctx.data, config.test_size, rng)
        return train, test, True, 0
    if config.leaf_coverage is not None:
        reference = ctx.reference_pool[rng.below(len(ctx.reference_pool))]
        train, test = leaf_coverage_sample(
            ctx.data, reference, config.leaf_coverage, leg.n_train, rng
        )
        return train, test, True, 0
    class_bounds = dict(config.class_bounds) or None
    value_bounds = dict(config.value_bounds) or None
    if config.filter_mode == "redraw":
        rejections = 0
        while True:
            train, test = split_disjoint(ctx.data, leg.n_train, rng)
            if representative_filter(train, class_bounds, value_bounds) is None:
                return train, test, True, rejections
            rejections += 1
            if rejections > RETRY_BOUND:
                raise ExperimentError(
                    f"no representative sample within {RETRY_BOUND} redraws"
                )
    train, test = split_disjoint(ctx.data, leg.n_train, rng)
    if config.filter_mode == "post_filter":
        ok = representative_filter(train, class_bounds, value_bounds) is None
        return train, test, ok, 0 if ok else 1
    return train, test, True, 0


def _run_one(ctx: _RunContext, leg_index: int, t: int) -> TrialRecord:
    config = ctx.config
    leg = config.legs[leg_index]
    scope = config.scope + (f":{leg.label}" if leg.label else "")
    seed = derive_seed(config.master_seed, scope, t)
    rng = SplitMix64(seed)
    train, test, accepted, rejections = _draw(ctx, leg, t, rng)
    limits = EnumerationLimits(max_nodes=leg.max_nodes, max_trees=config.max_trees)
    track = TrackOptions(
        error_hist=config.error_hist,
        leaf_hist=config.leaf_hist,
        path_bins=config.path_bin_width,
    )
    population = list(ctx.population) if ctx.population is not None else None
    t0 = time.perf_counter()
    summary = forest_summary(train, test, limits, population, track)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return TrialRecord(
        trial_id=t,
        seed=seed,
        n_train=len(train.examples),
        n_test=len(test.examples),
        min_size=summary.min_size,
        summary=summary,
        accepted=accepted,
        rejections=rejections,
        wall_ms=wall_ms,
    )


_WORKER_CTX: _RunContext | None = None


def _worker_init(config: ExperimentConfig) -> None:
    global _WORKER_CTX
    _WORKER_CTX = _prepare(config)


def _worker_run(job: tuple[int, int]) -> TrialRecord:
    return _run_one(_WORKER_CTX, job[0], job[1])


def select_legs(config: ExperimentConfig, include_optional: bool = False) -> ExperimentConfig:
    legs = tuple(l for l in config.legs if include_optional or not l.optional)
    if not legs:
        raise ExperimentError("no legs left after filtering")
    return replace(config, legs=legs)


def run_trials(
    config: ExperimentConfig,
    threads: int = 1,
    progress: Callable[[str, TrialRecord], None] | None = None,
) -> tuple[LegResult, ...]:
    """Execute every leg's trials; results are identical for any `threads`."""
    ctx = _prepare(config)
    jobs = [
        (li, t)
        for li, leg in enumerate(config.legs)
        for t in range(leg.trial_count)
    ]
    if threads <= 1:
        records = (_run_one(ctx, li, t) for li, t in jobs)
        collected = _collect(config, jobs, records, progress)
    else:
        chunk = max(1, len(jobs) // (threads * 8))
        with multiprocessing.Pool(
            processes=threads, initializer=_worker_init, initargs=(config,)
        ) as pool:
            stream = pool.imap(_worker_run, jobs, chunksize=chunk)
            collected = _collect(config, jobs, stream, progress)
    return collected


def _collect(config, jobs, records, progress) -> tuple[LegResult, ...]:
    per_leg: list[list[TrialRecord]] = [[] for _ in config.legs]
    for (li, _), record in zip(jobs, records):
        per_leg[li].append(record)
        if progress is not None:
            progress(config.legs[li].label, record)
    return tuple(
        LegResult(leg=leg, records=tuple(per_leg[li]))
        for li, leg in enumerate(config.legs)
    )


# ------------------------------------------------------------- emission

def leg_table_label(config: ExperimentConfig, leg: LegSpec) -> str:
    return f"{config.name}:{leg.label}" if leg.label else config.name


def emit_all(
    config: ExperimentConfig,
    results: Sequence[LegResult],
    out_dir: str,
    with_charts: bool = False,
) -> list[str]:
    """Write every requested table (plus manifest and record dump).

    Returns the written paths.  Accepted trials feed the analyses; the
    manifest and the record dump keep every trial.
    """
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []
    seed = config.master_seed

    def out(name: str) -> str:
        path = os.path.join(out_dir, name)
        written.append(path)
        return path

    card_sections = []
    pair_sections = []
    policy_sections = []
    path_sections = []
    for res in results:
        label = leg_table_label(config, res.leg)
        used = res.accepted_records()
        if not used:
            continue
        if "cardinality" in config.analyses:
            card_sections.append((label, seed, stats.aggregate_by_cardinality(used)))
        if "min_size_groups" in config.analyses:
            for m, group in stats.group_by_min_size(used).items():
                card_sections.append((f"{label}:min{m}", seed, group.rows))
        if "pairwise_all" in config.analyses:
            pair_sections.append((label, seed, "all", "", stats.pairwise(used, "all")))
        if "pairwise_min" in config.analyses:
            if config.pairwise_conditions:
                for k in config.pairwise_conditions:
                    rows = stats.pairwise(used, "min", min_size_in=(k,))
                    pair_sections.append((label, seed, "min", str(k), rows))
            else:
                pair_sections.append((label, seed, "min", "", stats.pairwise(used, "min")))
        if "policy" in config.analyses:
            policy_sections.append((label, seed, stats.derive_policy(used)))
        if "path_length" in config.analyses:
            rows = stats.bin_by_path_length(used, config.path_bin_width)
            path_sections.append((label, seed, rows))
    if card_sections:
        stats.write_cardinality_csv(out("cardinality_stats.csv"), card_sections)
    if pair_sections:
        stats.write_pairwise_csv(out("pairwise.csv"), pair_sections)
    if policy_sections:
        stats.write_policy_csv(out("policy.csv"), policy_sections)
    if path_sections:
        stats.write_path_length_csv(out("path_length.csv"), path_sections)
    _write_manifest(out("run_manifest.csv"), config, results)
    _write_records(out("trial_records.jsonl"), config, results)
    if with_charts:
        if card_sections:
            _chart_cardinality(out("cardinality_stats.svg"), card_sections)
        if pair_sections:
            _chart_pairwise(out("pairwise.svg"), pair_sections)
        if path_sections:
            _chart_path(out("path_length.svg"), path_sections)
    return written


def _write_manifest(path, config, results) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["preset", "seed", "trial_id", "accepted", "min_size", "total_trees"])
        for res in results:
            label = leg_table_label(config, res.leg)
            for r in res.records:
                w.writerow(
                    [
                        label,
                        config.master_seed,
                        r.trial_id,
                        int(r.accepted),
                        "" if r.min_size is None else r.min_size,
                        r.summary.total_trees,
                    ]
                )


def _chart_cardinality(path, sections) -> None:
    series = [
        (label, [(r.node_cardinality, r.mean_error) for r in rows])
        for label, _, rows in sections
    ]
    charts.write_chart(path, "error by tree size", "node cardinality", "mean error", series)


def _chart_pairwise(path, sections) -> None:
    series = []
    for label, _, baseline, condition, rows in sections:
        tag = label + (f" min={condition}" if condition else "") + f" [{baseline}]"
        series.append((f"{tag} smaller wins", [(r.diff, r.p_smaller_better) for r in rows]))
        series.append((f"{tag} equal", [(r.diff, r.p_equal) for r in rows]))
        series.append((f"{tag} larger wins", [(r.diff, r.p_larger_better) for r in rows]))
    charts.write_chart(
        path, "pairwise outcome shares", "cardinality difference", "probability", series
    )


def _chart_path(path, sections) -> None:
    series = [
        (label, [(r.bin_center, r.mean_error) for r in rows])
        for label, _, rows in sections
    ]
    charts.write_chart(
        path, "error by path length", "average path length", "mean error", series
    )


# ----------------------------------------------------- record persistence

def _bucket_to_json(b: CardinalityBucket) -> dict:
    return {
        "tree_count": b.tree_count,
        "correct_count": b.correct_count,
        "misclassified_total": b.misclassified_total,
        "error_hist": None
        if b.error_hist is None
        else {str(k): v for k, v in sorted(b.error_hist.items())},
        "leaf_hist": None
        if b.leaf_hist is None
        else {str(k): v for k, v in sorted(b.leaf_hist.items())},
        "path_tests_total": b.path_tests_total,
    }


def _bucket_from_json(d: dict) -> CardinalityBucket:
    return CardinalityBucket(
        tree_count=d["tree_count"],
        correct_count=d["correct_count"],
        misclassified_total=d["misclassified_total"],
        error_hist=None
        if d["error_hist"] is None
        else {int(k): v for k, v in d["error_hist"].items()},
        leaf_hist=None
        if d["leaf_hist"] is None
        else {int(k): v for k, v in d["leaf_hist"].items()},
        path_tests_total=d["path_tests_total"],
    )


def _write_records(path, config, results) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for res in results:
            label = leg_table_label(config, res.leg)
            for r in res.records:
                s = r.summary
                row = {
                    "preset": label,
                    "trial_id": r.trial_id,
                    "seed": r.seed,
                    "accepted": r.accepted,
                    "rejections": r.rejections,
                    "n_train": r.n_train,
                    "n_test": r.n_test,
                    "min_size": r.min_size,
                    "test_weight": s.test_weight,
                    "population_size": s.population_size,
                    "path_bin_width": s.path_bin_width,
                    "path_bins": None
                    if s.path_bins is None
                    else {str(k): list(v) for k, v in sorted(s.path_bins.items())},
                    "buckets": {
                        str(c): _bucket_to_json(b) for c, b in sorted(s.buckets.items())
                    },
                }
                fh.write(json.dumps(row, sort_keys=True) + "\n")


def load_trial_records(path) -> list[tuple[str, TrialRecord]]:
    """Read back a trial_records.jsonl dump as (table label, record) pairs."""
    out: list[tuple[str, TrialRecord]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                summary = ForestSummary(
                    buckets={
                        int(c): _bucket_from_json(b) for c, b in row["buckets"].items()
                    },
                    test_weight=row["test_weight"],
                    population_size=row["population_size"],
                    path_bin_width=row["path_bin_width"],
                    path_bins=None
                    if row["path_bins"] is None
                    else {int(k): list(v) for k, v in row["path_bins"].items()},
                )
                record = TrialRecord(
                    trial_id=row["trial_id"],
                    seed=row["seed"],
                    n_train=row["n_train"],
                    n_test=row["n_test"],
                    min_size=row["min_size"],
                    summary=summary,
                    accepted=row["accepted"],
                    rejections=row["rejections"],
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as e:
                raise ExperimentError(f"{path}: line {line_no}: {e}") from None
            out.append((row["preset"], record))
    return out


# ---------------------------------------------------------------- presets

def _xyz(name: str, scope: str, trials: int, analyses: tuple[str, ...], **kw) -> ExperimentConfig:
    return ExperimentConfig(
        name=name,
        source="concept:xyz-or-ab",
        legs=(LegSpec(label="", n_train=20, trial_count=trials),),
        seed_scope=scope,
        analyses=analyses,
        **kw,
    )


def _loo(name: str, concept: str, scope: str) -> ExperimentConfig:
    # every trial holds out exactly one row of the full space
    return ExperimentConfig(
        name=name,
        source=f"concept:{concept}",
        legs=(LegSpec(label="", n_train=31, trial_count=32),),
        split_mode="leave_one_out",
        seed_scope=scope,
        analyses=("cardinality",),
    )


_REPRESENTATIVE_CLASS_BOUNDS = ((1, (5, 8)),)
_REPRESENTATIVE_VALUE_BOUNDS = tuple(((f, 1), (7, 13)) for f in range(5))

_PRESETS: dict[str, Callable[[], ExperimentConfig]] = {
    "fig1": lambda: _xyz("fig1", "xyz20x100", 100, ("cardinality",)),
    "table1": lambda: _xyz("table1", "xyz20x100", 100, ("cardinality",)),
    "fig2": lambda: _xyz(
        "fig2",
        "xyz20x100",
        100,
        ("cardinality",),
        filter_mode="post_filter",
        class_bounds=_REPRESENTATIVE_CLASS_BOUNDS,
        value_bounds=_REPRESENTATIVE_VALUE_BOUNDS,
    ),
    "fig3": lambda: _xyz("fig3", "xyz20x100", 100, ("min_size_groups",)),
    "fig4": lambda: _xyz(
        "fig4", "xyz20x100-leafcov", 100, ("cardinality",), leaf_coverage=2
    ),
    "fig5": lambda: _loo("fig5", "xyz-or-ab", "xyz-loo"),
    "fig6": lambda: _loo("fig6", "a", "a-loo"),
    "fig7": lambda: _loo("fig7", "ab", "ab-loo"),
    "fig8": lambda: ExperimentConfig(
        name="fig8",
        source="concept:xyz-or-ab",
        legs=(LegSpec(label="", n_train=31, trial_count=100),),
        split_mode="with_replacement",
        test_size=1000,
        seed_scope="xyz31wr100",
        error_hist=False,
        analyses=("cardinality",),
    ),
    "fig9": lambda: _xyz(
        "fig9",
        "xyz20x100",
        100,
        ("cardinality", "path_length"),
        path_bin_width=0.25,
    ),
    "fig10": lambda: _xyz("fig10", "xyz20x1000", 1000, ("pairwise_all",)),
    "fig11": lambda: _xyz("fig11", "xyz20x1000", 1000, ("pairwise_min",)),
    "fig12": lambda: _xyz(
        "fig12", "xyz20x1000", 1000, ("pairwise_min",), pairwise_conditions=(5, 6, 7)
    ),
    "table2": lambda: _xyz("table2", "xyz20x1000", 1000, ("policy",)),
    "fig13": lambda: ExperimentConfig(
        name="fig13",
        source="concept:mux6",
        legs=(
            LegSpec(label="cap8", n_train=20, trial_count=340, max_nodes=8),
            LegSpec(label="cap10", n_train=20, trial_count=10, max_nodes=10, optional=True),
        ),
        seed_scope="mux20",
        analyses=("cardinality",),
    ),
    "fig14": lambda: ExperimentConfig(
        name="fig14",
        source="bundled:lenses",
        legs=(
            LegSpec(label="n8", n_train=8, trial_count=50),
            LegSpec(label="n12", n_train=12, trial_count=50),
            LegSpec(label="n18", n_train=18, trial_count=50),
        ),
        seed_scope="lenses",
        analyses=("cardinality",),
    ),
    "fig15": lambda: ExperimentConfig(
        name="fig15",
        source=None,  # the shuttle file is not redistributable; pass --data
        legs=(
            LegSpec(label="n20cap7", n_train=20, trial_count=10, max_nodes=7),
            LegSpec(label="n50cap9", n_train=50, trial_count=10, max_nodes=9),
            LegSpec(label="n100cap11", n_train=100, trial_count=10, max_nodes=11),
        ),
        seed_scope="shuttle",
        analyses=("cardinality",),
    ),
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset(name: str) -> ExperimentConfig:
    try:
        build = _PRESETS[name]
    except KeyError:
        raise ExperimentError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        ) from None
    return build()
