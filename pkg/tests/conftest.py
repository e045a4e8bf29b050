"""Shared fixtures and builders for the test suite."""

import pytest

from forestscope import (
    Dataset,
    FeatureSchema,
    LabeledExample,
    binary_schema,
    instance_space,
)


def table_dataset(schema: FeatureSchema, labels) -> Dataset:
    """Dataset labeling the schema's full instance space, in space order."""
    rows = list(instance_space(schema))
    assert len(labels) == len(rows)
    return Dataset(schema, tuple(LabeledExample(r, l) for r, l in zip(rows, labels)))


def subset_dataset(schema: FeatureSchema, pairs) -> Dataset:
    """Dataset from explicit (instance, label) pairs."""
    return Dataset(schema, tuple(LabeledExample(tuple(i), l) for i, l in pairs))


@pytest.fixture
def schema2():
    return binary_schema(["f0", "f1"])


@pytest.fixture
def schema3():
    return binary_schema(["f0", "f1", "f2"])


@pytest.fixture
def xor2(schema2):
    # 2-feature parity: no 1-node tree fits, exactly solvable at 3 nodes
    return table_dataset(schema2, [0, 1, 1, 0])


@pytest.fixture
def and3(schema3):
    return table_dataset(schema3, [int(a and b) for a in (0, 1) for b in (0, 1) for _ in (0, 1)])
