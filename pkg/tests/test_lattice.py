import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fkdroplet.errors import InvalidParameterError
from fkdroplet.lattice import (
    BondConfig,
    BoundaryCondition,
    cluster_count,
    load_configs,
    make_box,
    open_component,
    save_configs,
)

FREE = BoundaryCondition.FREE
WIRED = BoundaryCondition.WIRED


def test_box_counts_n1():
    box = make_box(1)
    assert box.vertex_count == 9
    assert box.edge_count == 12


def test_box_counts_n2():
    box = make_box(2)
    assert box.vertex_count == 25
    assert box.edge_count == 40


def test_interior_boundary_n1():
    box = make_box(1)
    ring = box.interior_boundary()
    assert len(ring) == 8
    assert (0, 0) not in ring


def test_make_box_rejects_small_n():
    with pytest.raises(InvalidParameterError):
        make_box(0)


def test_edge_ids_are_bijective_and_stable():
    box = make_box(2)
    seen = set()
    for eid in range(box.edge_count):
        a, b = box.edge_vertices(eid)
        assert box.edge_id(a, b) == eid
        assert box.edge_id(b, a) == eid
        seen.add((a, b))
    assert len(seen) == box.edge_count
    # x-oriented edges come first, row-major
    assert box.edge_vertices(0) == ((-2, -2), (-1, -2))
    assert box.edge_vertices(1) == ((-1, -2), (0, -2))
    assert box.edge_vertices(box.h_edge_count) == ((-2, -2), (-2, -1))


def test_cluster_count_all_closed_free():
    box = make_box(1)
    assert cluster_count(BondConfig.all_closed(box), FREE) == 9


def test_cluster_count_all_open_free():
    box = make_box(1)
    assert cluster_count(BondConfig.all_open(box), FREE) == 1


def test_cluster_count_single_edge_free():
    box = make_box(2)
    cfg = BondConfig.from_open_edges(box, [((0, 0), (1, 0))])
    assert cluster_count(cfg, FREE) == 24


def test_cluster_count_wired_excludes_boundary_components():
    box = make_box(1)
    # one open edge from the centre to the ring: that component touches
    # the interior boundary, so only the 7 isolated vertices count
    cfg = BondConfig.from_open_edges(box, [((0, 0), (1, 0))])
    assert cluster_count(cfg, WIRED) == 7
    assert cluster_count(cfg, FREE) == 8
    # isolated vertices on the ring still count
    assert cluster_count(BondConfig.all_closed(box), WIRED) == 9


def test_cluster_count_wired_interior_component_counts():
    box = make_box(2)
    # a single open edge strictly inside: component does not touch the ring
    cfg = BondConfig.from_open_edges(box, [((0, 0), (1, 0))])
    assert cluster_count(cfg, WIRED) == 24


def test_open_component_isolated():
    box = make_box(2)
    cfg = BondConfig.all_closed(box)
    comp = open_component(cfg, (0, 0))
    assert comp.vertices == frozenset({(0, 0)})
    assert not comp.edge_ids


def test_open_component_path():
    box = make_box(2)
    cfg = BondConfig.from_open_edges(box, [((0, 0), (1, 0)), ((1, 0), (1, 1))])
    comp = open_component(cfg, (0, 0))
    assert len(comp.edge_ids) == 2
    assert comp.vertices == frozenset({(0, 0), (1, 0), (1, 1)})


def test_open_component_excludes_disconnected():
    box = make_box(3)
    cfg = BondConfig.from_open_edges(box, [((0, 0), (1, 0)), ((2, 0), (3, 0))])
    comp = open_component(cfg, (0, 0))
    assert (2, 0) not in comp.vertices
    assert len(comp.edge_ids) == 1


def test_open_component_respects_region():
    box = make_box(2)
    e1 = box.edge_id((0, 0), (1, 0))
    e2 = box.edge_id((1, 0), (1, 1))
    cfg = BondConfig.from_open_edges(box, [e1, e2])
    comp = open_component(cfg, (0, 0), region=[e1])
    assert comp.vertices == frozenset({(0, 0), (1, 0)})


def test_open_component_outside_box():
    box = make_box(1)
    with pytest.raises(InvalidParameterError):
        open_component(BondConfig.all_closed(box), (5, 5))


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=1, max_value=3), st.data())
def test_opening_an_edge_never_increases_count(N, data):
    box = make_box(N)
    bits = data.draw(
        st.lists(st.integers(0, 1), min_size=box.edge_count, max_size=box.edge_count)
    )
    cfg = BondConfig(box, np.array(bits, dtype=np.uint8))
    eid = data.draw(st.integers(0, box.edge_count - 1))
    closed = cfg.copy()
    closed.bits[eid] = 0
    opened = cfg.copy()
    opened.bits[eid] = 1
    for bc in (FREE, WIRED):
        k_closed = cluster_count(closed, bc)
        k_open = cluster_count(opened, bc)
        assert k_open <= k_closed
        assert 1 <= k_open <= box.vertex_count or bc is WIRED
    # free rule: opening drops the count by one iff endpoints were split
    u, v = box.edge_vertices(eid)
    comp = open_component(closed, u)
    expected_drop = 0 if v in comp.vertices else 1
    assert cluster_count(closed, FREE) - cluster_count(opened, FREE) == expected_drop


def test_open_component_monotone_in_region():
    box = make_box(2)
    edges = [((0, 0), (1, 0)), ((1, 0), (1, 1)), ((1, 1), (0, 1))]
    cfg = BondConfig.from_open_edges(box, edges)
    small = open_component(cfg, (0, 0), region=[box.edge_id(*edges[0])])
    big = open_component(cfg, (0, 0))
    assert small.vertices <= big.vertices
    assert small.edge_ids <= big.edge_ids
    again = open_component(cfg, (0, 0))
    assert again == big


def test_config_roundtrip(tmp_path):
    box = make_box(2)
    rng = np.random.default_rng(7)
    cfgs = [BondConfig(box, (rng.random(box.edge_count) < 0.4).astype(np.uint8))
            for _ in range(5)]
    path = tmp_path / "configs.txt"
    save_configs(path, cfgs, WIRED)
    box2, bc2, cfgs2 = load_configs(path)
    assert box2 == box and bc2 == WIRED
    assert cfgs2 == cfgs
