"""Mesh construction, entity enumeration, boundary classification."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodge4d.mesh import (
    ENTITY_CLASSES,
    INTERIOR,
    LATERAL,
    T_AXIS,
    build_mesh,
    classify_boundary,
    entity_count,
)

UNIT = (1.0, 1.0, 1.0, 1.0)


def brute_force_count(divisions, dim, time_periodic=False):
    """Independent combinatorial counter: sum over axis subsets of size dim."""
    total = 0
    for axes in itertools.combinations(range(4), dim):
        prod = 1
        for a in range(4):
            if a in axes:
                prod *= divisions[a]
            elif a == T_AXIS and time_periodic:
                prod *= divisions[a]
            else:
                prod *= divisions[a] + 1
        total += prod
    return total


def test_single_cell_counts():
    mesh = build_mesh((1, 1, 1, 1), UNIT)
    assert entity_count(mesh, 0) == 16
    assert entity_count(mesh, 1) == 32
    assert entity_count(mesh, 2) == 24
    assert entity_count(mesh, 3) == 8
    assert entity_count(mesh, 4) == 1


def test_two_slab_counts():
    mesh = build_mesh((2, 1, 1, 1), (2.0, 1.0, 1.0, 1.0))
    assert entity_count(mesh, 0) == 24
    assert entity_count(mesh, 1) == 52  # 16 time-directed + 12 per spatial axis
    periodic = build_mesh((2, 1, 1, 1), (2.0, 1.0, 1.0, 1.0), time_periodic=True)
    assert entity_count(periodic, 0) == 16
    assert entity_count(periodic, 1) == 40


@settings(max_examples=20, deadline=None)
@given(
    divisions=st.tuples(*[st.integers(min_value=1, max_value=5)] * 4),
    dim=st.integers(min_value=0, max_value=4),
    periodic=st.booleans(),
)
def test_counts_match_combinatorial_oracle(divisions, dim, periodic):
    if periodic and divisions[T_AXIS] < 2:
        divisions = (2,) + divisions[1:]
    mesh = build_mesh(divisions, UNIT, time_periodic=periodic)
    assert entity_count(mesh, dim) == brute_force_count(divisions, dim, periodic)


def test_every_cell_has_16_nodes_and_32_edges():
    mesh = build_mesh((2, 3, 2, 2), UNIT)
    nodes = mesh.cell_nodes()
    edges = mesh.cell_edges()
    assert nodes.shape == (mesh.n_cells, 16)
    assert edges.shape == (mesh.n_cells, 32)
    for cell in range(mesh.n_cells):
        assert len(set(nodes[cell])) == 16
        assert len(set(edges[cell])) == 32


def test_invalid_arguments():
    with pytest.raises(ValueError):
        build_mesh((0, 1, 1, 1), UNIT)
    with pytest.raises(ValueError):
        build_mesh((1, 1, 1, 1), (1.0, -1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        build_mesh((1, 1, 1, 1), UNIT, time_periodic=True)
    with pytest.raises(ValueError):
        build_mesh((1, 1, 1), UNIT)
    mesh = build_mesh((1, 1, 1, 1), UNIT)
    with pytest.raises(ValueError):
        mesh.entity_count(5)
    with pytest.raises(ValueError):
        classify_boundary(mesh, 99, 1)


def test_h_is_max_spacing():
    mesh = build_mesh((4, 2, 5, 2), (1.0, 1.0, 1.0, 3.0))
    assert mesh.h == 1.5
    assert mesh.spacings == (0.25, 0.5, 0.2, 1.5)


def test_boundary_classification_examples():
    mesh = build_mesh((2, 2, 2, 2), UNIT)
    center_node = mesh.entity_id(0, (), np.array([1, 1, 1, 1]))
    assert classify_boundary(mesh, center_node, 0) == (INTERIOR, None)
    x0_node = mesh.entity_id(0, (), np.array([1, 0, 1, 1]))
    assert classify_boundary(mesh, x0_node, 0)[0] == LATERAL
    # time-directed edge at a corner spatial node is lateral
    corner_tedge = mesh.entity_id(1, (T_AXIS,), np.array([0, 0, 0, 0]))
    assert classify_boundary(mesh, corner_tedge, 1)[0] == LATERAL
    # time-extreme nodes are not lateral on their own
    t_end_node = mesh.entity_id(0, (), np.array([2, 1, 1, 1]))
    assert classify_boundary(mesh, t_end_node, 0) == (INTERIOR, None)


def test_lateral_mask_matches_per_entity_classification():
    mesh = build_mesh((2, 3, 2, 2), UNIT)
    for dim in range(5):
        mask = mesh.lateral_mask(dim)
        sample = np.linspace(0, mesh.entity_count(dim) - 1, 20).astype(int)
        for gid in sample:
            assert mask[gid] == mesh.is_lateral(dim, int(gid))


def test_face_edges_incident_to_face_corners():
    """The 4 boundary edges of every face touch exactly its 4 corner nodes."""
    mesh = build_mesh((2, 2, 3, 2), UNIT)
    rng = np.random.default_rng(7)
    for gid in rng.choice(mesh.entity_count(2), size=40, replace=False):
        cls, idx = mesh.entity_class_index(2, int(gid))
        a, b = cls
        corner_nodes = set()
        for da, db in itertools.product((0, 1), (0, 1)):
            j = idx.copy()
            j[a] += da
            j[b] += db
            corner_nodes.add(int(mesh.entity_id(0, (), j)))
        edge_nodes = set()
        for axis, other in ((a, b), (b, a)):
            for shift in (0, 1):
                j = idx.copy()
                j[other] += shift
                edge_nodes.add(int(mesh.entity_id(0, (), j)))
                j2 = j.copy()
                j2[axis] += 1
                edge_nodes.add(int(mesh.entity_id(0, (), j2)))
        assert edge_nodes == corner_nodes
        assert len(corner_nodes) == 4


def test_periodic_time_lookup_wraps_to_zero():
    mesh = build_mesh((3, 1, 1, 1), UNIT, time_periodic=True)
    for cls in ENTITY_CLASSES[1]:
        if T_AXIS in cls:
            continue
        idx = np.zeros(4, dtype=np.int64)
        wrapped = idx.copy()
        wrapped[T_AXIS] = mesh.divisions[T_AXIS]
        assert mesh.entity_id(1, cls, wrapped) == mesh.entity_id(1, cls, idx)


def test_region_tagging():
    regions = {"electrode": ((0.0, 1.0), (0.25, 0.75), (0.25, 0.75), (0.0, 0.0))}
    mesh = build_mesh((2, 4, 4, 4), UNIT, regions=regions)
    inside = mesh.entity_id(0, (), np.array([1, 2, 2, 0]))  # (x,y)=(0.5,0.5), z=0
    outside = mesh.entity_id(0, (), np.array([1, 0, 2, 0]))  # x=0
    assert classify_boundary(mesh, inside, 0) == (LATERAL, "electrode")
    assert classify_boundary(mesh, outside, 0) == (LATERAL, None)


def test_mesh_is_reusable_and_tables_cached():
    mesh = build_mesh((2, 2, 2, 2), UNIT)
    assert mesh.cell_edges() is mesh.cell_edges()
    assert mesh.cell_nodes() is mesh.cell_nodes()
