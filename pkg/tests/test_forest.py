"""Enumeration routes agree: search enumerator, naive oracle, algebraic sums."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forestscope import (
    Dataset,
    EnumerationLimits,
    EnumerationTruncated,
    LabeledExample,
    Leaf,
    Split,
    TrackOptions,
    apply_concept,
    binary_schema,
    classify,
    enumerate_consistent,
    enumerate_naive,
    forest_summary,
    format_tree,
    get_concept,
    instance_space,
    is_consistent,
    iter_consistent,
    metrics,
    min_consistent_size,
    node_count,
    sample_with_replacement,
    split_disjoint,
)
from forestscope import FeatureSchema, check_structure
from forestscope.rng import SplitMix64

from conftest import table_dataset


def canon(trees, schema):
    return sorted(format_tree(t, schema) for t in trees)


def test_xor_forest_is_exactly_two_trees(schema2, xor2):
    got = list(iter_consistent(xor2))
    assert len(got) == 2
    assert all(node_count(t) == 3 for t in got)
    assert canon(got, schema2) == canon(enumerate_naive(xor2), schema2)


def test_single_feature_concept_has_one_minimal_tree():
    data = apply_concept(get_concept("a"))
    lim = EnumerationLimits(max_nodes=1)
    got = list(iter_consistent(data, lim))
    assert len(got) == 1
    assert got[0] == Split(0, (Leaf(0), Leaf(1)))
    assert min_consistent_size(data) == 1


def test_enumeration_order_is_sizes_then_feature(xor2):
    sizes = [node_count(t) for t in iter_consistent(xor2)]
    assert sizes == sorted(sizes)
    data = apply_concept(get_concept("ab"))
    feats = [t.feature for t in iter_consistent(data, EnumerationLimits(max_nodes=2))]
    assert feats == sorted(feats)


def test_every_enumerated_tree_passes_the_public_predicates():
    data = apply_concept(get_concept("parity5"))
    train, _ = split_disjoint(data, 12, SplitMix64(5))
    for t in iter_consistent(train, EnumerationLimits(max_nodes=6)):
        assert is_consistent(t, train)
        assert check_structure(t, train) is None


def test_conflicting_training_set_has_empty_forest():
    s = binary_schema(["p"])
    bad = Dataset(
        s,
        (
            LabeledExample((0,), 0),
            LabeledExample((0,), 1),
            LabeledExample((1,), 0),
        ),
    )
    assert list(iter_consistent(bad)) == []
    assert forest_summary(bad).buckets == {}
    assert min_consistent_size(bad) is None


def test_empty_branch_takes_parent_majority():
    schema = FeatureSchema(
        features=(("size", ("s", "m", "l")), ("hot", ("n", "y"))),
        classes=("a", "b"),
    )
    # size=l never occurs; majority over the four rows is class 0
    data = Dataset(
        schema,
        (
            LabeledExample((0, 0), 0),
            LabeledExample((0, 1), 0),
            LabeledExample((1, 0), 1),
            LabeledExample((1, 1), 0),
        ),
    )
    rooted_on_size = [t for t in iter_consistent(data) if isinstance(t, Split) and t.feature == 0]
    assert rooted_on_size
    for t in rooted_on_size:
        assert t.children[2] == Leaf(0)
    assert canon(iter_consistent(data), schema) == canon(enumerate_naive(data), schema)


def test_visitor_can_stop_early():
    data = apply_concept(get_concept("xyz-or-ab"))
    seen = []

    def visit(t):
        seen.append(t)
        return len(seen) < 3

    assert enumerate_consistent(data, EnumerationLimits(max_nodes=9), visit) == 3
    assert len(seen) == 3


def test_truncation_raises_on_both_routes():
    data = apply_concept(get_concept("xyz-or-ab"))
    train, test = split_disjoint(data, 20, SplitMix64(3))
    lim = EnumerationLimits(max_trees=10)
    with pytest.raises(EnumerationTruncated):
        list(iter_consistent(train, lim))
    with pytest.raises(EnumerationTruncated):
        forest_summary(train, test, lim, mode="algebraic")
    with pytest.raises(EnumerationTruncated):
        forest_summary(train, test, lim, mode="stream")


def test_max_nodes_cap_is_respected():
    data = apply_concept(get_concept("xyz-or-ab"))
    train, test = split_disjoint(data, 20, SplitMix64(3))
    lim = EnumerationLimits(max_nodes=8)
    assert all(node_count(t) <= 8 for t in iter_consistent(train, lim))
    summary = forest_summary(train, test, lim)
    assert summary.buckets and max(summary.buckets) <= 8


def test_min_consistent_size_honors_cap(xor2):
    assert min_consistent_size(xor2) == 3
    assert min_consistent_size(xor2, max_nodes=2) is None


def test_summary_helpers_match_direct_measurement():
    data = apply_concept(get_concept("xyz-or-ab"))
    train, test = split_disjoint(data, 20, SplitMix64(11))
    lim = EnumerationLimits(max_nodes=9)
    pop = list(instance_space(data.schema))
    summary = forest_summary(
        train, test, lim, population=pop,
        track=TrackOptions(error_hist=True, leaf_hist=True, path_length=True, path_bins=0.25),
    )
    trees = list(iter_consistent(train, lim))
    assert summary.total_trees == len(trees)
    assert summary.min_size == min(node_count(t) for t in trees)
    assert summary.max_size == max(node_count(t) for t in trees)
    by_c = {}
    for t in trees:
        by_c.setdefault(node_count(t), []).append(t)
    for c, bucket in summary.buckets.items():
        group = by_c[c]
        ms = [metrics(t, pop, test) for t in group]
        assert bucket.tree_count == len(group)
        assert bucket.misclassified_total == sum(
            round(m.error_rate * len(test.examples)) for m in ms
        )
        assert bucket.correct_count == sum(1 for m in ms if m.error_rate == 0.0)
        leaf_hist = {}
        for m in ms:
            leaf_hist[m.leaf_cardinality] = leaf_hist.get(m.leaf_cardinality, 0) + 1
        assert bucket.leaf_hist == leaf_hist


@pytest.mark.property_based
@given(st.integers(0, 2**32), st.integers(0, 4))
@settings(max_examples=100, deadline=None)
def test_oracle_equivalence_random_labelings(seed, cap):
    schema = binary_schema(["a", "b", "c"])
    r = SplitMix64(seed)
    data = table_dataset(schema, [r.below(2) for _ in range(8)])
    lim = EnumerationLimits(max_nodes=cap)
    assert canon(iter_consistent(data, lim), schema) == canon(
        enumerate_naive(data, lim), schema
    )


@pytest.mark.property_based
@given(st.integers(0, 2**32))
@settings(max_examples=100, deadline=None)
def test_stream_and_algebraic_buckets_agree(seed):
    data = apply_concept(get_concept("xyz-or-ab"))
    r = SplitMix64(seed)
    train, test = split_disjoint(data, 14 + r.below(8), r)
    lim = EnumerationLimits(max_nodes=8)
    track = TrackOptions(error_hist=True, leaf_hist=True)
    a = forest_summary(train, test, lim, mode="stream", track=track)
    b = forest_summary(train, test, lim, mode="algebraic", track=track)
    assert a == b


@pytest.mark.property_based
@given(st.integers(0, 2**32))
@settings(max_examples=100, deadline=None)
def test_feature_permutation_leaves_counts_alone(seed):
    schema = binary_schema(["a", "b", "c", "d"])
    r = SplitMix64(seed)
    labels = [r.below(2) for _ in range(16)]
    data = table_dataset(schema, labels)
    perm = r.sample_indices(4, 4)
    permuted = Dataset(
        schema,
        tuple(
            LabeledExample(tuple(ex.instance[p] for p in perm), ex.label)
            for ex in data.examples
        ),
    )
    lim = EnumerationLimits(max_nodes=5)
    base = forest_summary(data, limits=lim)
    moved = forest_summary(permuted, limits=lim)
    assert {c: b.tree_count for c, b in base.buckets.items()} == {
        c: b.tree_count for c, b in moved.buckets.items()
    }


@pytest.mark.property_based
@given(st.integers(0, 2**32))
@settings(max_examples=100, deadline=None)
def test_class_relabeling_leaves_counts_alone(seed):
    schema = binary_schema(["a", "b", "c"])
    r = SplitMix64(seed)
    labels = [r.below(2) for _ in range(8)]
    data = table_dataset(schema, labels)
    flipped = table_dataset(schema, [1 - l for l in labels])
    base = forest_summary(data)
    moved = forest_summary(flipped)
    assert {c: b.tree_count for c, b in base.buckets.items()} == {
        c: b.tree_count for c, b in moved.buckets.items()
    }


@pytest.mark.property_based
@given(st.integers(0, 2**32))
@settings(max_examples=100, deadline=None)
def test_cardinality_bounded_by_distinct_instances(seed):
    data = apply_concept(get_concept("xyz-or-ab"))
    r = SplitMix64(seed)
    train = sample_with_replacement(data, 12, r)
    distinct = len({ex.instance for ex in train.examples})
    summary = forest_summary(train, limits=EnumerationLimits(max_nodes=6))
    if summary.buckets:
        assert max(summary.buckets) <= distinct - 1


def test_no_duplicate_canonical_forms_and_classification_match():
    data = apply_concept(get_concept("xyz-or-ab"))
    train, _ = split_disjoint(data, 20, SplitMix64(3))
    seen = set()
    lim = EnumerationLimits(max_nodes=9)
    for t in iter_consistent(train, lim):
        key = format_tree(t, data.schema)
        assert key not in seen
        seen.add(key)
        for ex in train.examples:
            assert classify(t, ex.instance) == ex.label
    assert len(seen) > 1000
