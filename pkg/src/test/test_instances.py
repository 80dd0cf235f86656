import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from src.common.errors import ConfigError, DataError
from src.plugins.detect import (
    SlickInstance,
    group_fragments,
    instances_from_labels,
    instances_from_mask,
    labels_from_instances,
    union_mask,
)


def graph_components(bits, connectivity=8):
    graph = nx.Graph()
    rows, cols = np.nonzero(bits)
    pixels = set(zip(rows.tolist(), cols.tolist()))
    graph.add_nodes_from(pixels)
    if connectivity == 8:
        steps = [(0, 1), (1, -1), (1, 0), (1, 1)]
    else:
        steps = [(0, 1), (1, 0)]
    for r, c in pixels:
        for dr, dc in steps:
            if (r + dr, c + dc) in pixels:
                graph.add_edge((r, c), (r + dr, c + dc))
    return {frozenset(comp) for comp in nx.connected_components(graph)}


def pixel_set(inst):
    return frozenset(map(tuple, inst.pixels.tolist()))


@pytest.mark.parametrize("connectivity", [8, 4])
def test_matches_graph_components(connectivity):
    rng = np.random.default_rng(0)
    for _ in range(100):
        bits = rng.random((64, 64)) < rng.uniform(0.05, 0.5)
        instances = instances_from_mask(bits, connectivity=connectivity)
        assert {pixel_set(i) for i in instances} == graph_components(bits, connectivity)
        assert [i.instance_id for i in instances] == list(range(1, len(instances) + 1))


@given(arrays(np.bool_, (16, 16)))
@settings(max_examples=60, deadline=None)
def test_instances_partition_the_mask(bits):
    instances = instances_from_mask(bits)
    assert union_mask(instances, bits.shape).bits.tolist() == bits.tolist()
    assert sum(i.pixel_count for i in instances) == int(bits.sum())
    keys = [(i.bbox[0], i.bbox[1]) for i in instances]
    assert keys == sorted(keys)


def test_diagonal_pixels_join_only_with_8_connectivity():
    bits = np.eye(5, dtype=bool)
    assert len(instances_from_mask(bits, connectivity=8)) == 1
    assert len(instances_from_mask(bits, connectivity=4)) == 5


def test_area_and_bbox():
    bits = np.zeros((10, 10), dtype=bool)
    bits[2:5, 3:7] = True
    (inst,) = instances_from_mask(bits, pixel_spacing=20.0)
    assert inst.bbox == (2, 3, 4, 6)
    assert inst.pixel_count == 12
    assert inst.area_hm2 == pytest.approx(12 * 400 / 1e4)
    assert inst.to_dict()["source"] == "baseline"


def test_empty_mask():
    assert instances_from_mask(np.zeros((4, 4), dtype=bool)) == []
    assert instances_from_labels(np.zeros((4, 4), dtype=np.int64)) == []


def test_labels_round_trip():
    labels = np.zeros((8, 8), dtype=np.int64)
    labels[0:2, 0:2] = 3
    labels[5:8, 5] = 1
    labels[4, 0] = 3
    instances = instances_from_labels(labels, kinds={3: "seep"})
    assert [i.instance_id for i in instances] == [1, 3]
    assert instances[1].kind == "seep"
    # 标签实例不要求连通
    assert instances[1].pixel_count == 5
    np.testing.assert_array_equal(labels_from_instances(instances, labels.shape), labels)


def test_invalid_instances():
    with pytest.raises(DataError):
        SlickInstance.from_pixels(1, np.zeros((0, 2)))
    with pytest.raises(DataError):
        SlickInstance.from_pixels(1, np.array([[0, 0]]), source="oracle")
    with pytest.raises(ConfigError):
        instances_from_mask(np.ones((2, 2), dtype=bool), connectivity=6)


def test_group_fragments_merges_nearby_pieces():
    bits = np.zeros((20, 40), dtype=bool)
    bits[5:8, 2:10] = True
    bits[5:8, 12:20] = True  # 间隔 2 像素
    bits[5:8, 30:38] = True  # 间隔 10 像素
    fragments = instances_from_mask(bits)
    assert len(fragments) == 3

    grouped = group_fragments(fragments, bits.shape, gap_px=3.0)
    assert len(grouped) == 2
    assert grouped[0].pixel_count == 48
    assert all(g.source == "grouped" for g in grouped)
    assert union_mask(grouped, bits.shape) == union_mask(fragments, bits.shape)

    assert group_fragments(fragments, bits.shape, gap_px=0.0) == fragments
    assert len(group_fragments(fragments, bits.shape, gap_px=12.0)) == 1
