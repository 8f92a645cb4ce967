import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cornerscatter.geometry import (
    MeshingError,
    build_disk_domain,
    build_graph_domain,
    build_sector_domain,
    build_star_domain,
    mesh_domain,
    read_mesh,
    weak_flatness_check,
    write_mesh,
)


def corner_edge_angle(mesh):
    c = mesh.corner_vertex
    nbrs = [j if i == c else i for i, j in mesh.interface_edges if c in (i, j)]
    assert len(nbrs) == 2
    u, v = (mesh.vertices[n] - mesh.vertices[c] for n in nbrs)
    return math.acos(np.clip(u @ v / np.linalg.norm(u) / np.linalg.norm(v), -1, 1))


def test_half_plane_sector_is_not_a_corner():
    spec = build_sector_domain(math.pi, 0.5)
    assert not spec.is_corner
    assert spec.contains([[0.0, 0.2]])[0] and not spec.contains([[0.0, -0.2]])[0]


def test_sector_boundary_rays():
    spec = build_sector_domain(3 * math.pi / 4, 1.0)
    pts = spec.boundary_samples(201)
    th = np.arctan2(pts[:, 1], pts[:, 0])
    r = np.hypot(pts[:, 0], pts[:, 1])
    on_ray = (np.abs(th) < 1e-12) | (np.abs(th - 3 * math.pi / 4) < 1e-12) | (r < 1e-14)
    on_arc = np.abs(r - 1) < 1e-12
    assert np.all(on_ray | on_arc)


def test_right_angle_sector_angle_from_mesh():
    mesh = mesh_domain(build_sector_domain(math.pi / 2, 0.5), 0.08, 1.0)
    assert abs(corner_edge_angle(mesh) - math.pi / 2) < 1e-12


def test_sector_domain_rejects_bad_angle():
    with pytest.raises(ValueError):
        build_sector_domain(2 * math.pi, 0.5)


def test_disk_mesh_quality_and_area():
    mesh = mesh_domain(build_disk_domain(0.5), 0.1, 2.0)
    assert mesh.min_angles_deg().min() >= 20.0
    assert abs(mesh.areas.sum() - 4 * math.pi) / (4 * math.pi) < 10 * 0.1 ** 2
    assert np.all(mesh.areas > 0)


def test_sector_interface_follows_rays():
    h = 0.05
    theta0 = 3 * math.pi / 4
    mesh = mesh_domain(build_sector_domain(theta0, 0.5), h, 1.0)
    P = mesh.vertices[np.unique(mesh.interface_edges)]
    r = np.hypot(P[:, 0], P[:, 1])
    d_ray0 = np.abs(P[:, 1])
    d_ray1 = np.abs(-math.sin(theta0) * P[:, 0] + math.cos(theta0) * P[:, 1])
    d_arc = np.abs(r - 0.5)
    dev = np.minimum(np.minimum(d_ray0, d_ray1), d_arc)
    assert dev.max() < h ** 2
    # rays meet only at the corner vertex
    on_both = (d_ray0 < 1e-12) & (d_ray1 < 1e-12)
    assert np.flatnonzero(on_both).size == 1
    assert r[on_both][0] == 0.0


def test_refinement_scaling():
    spec = build_disk_domain(0.5)
    n1 = mesh_domain(spec, 0.08, 1.0).n_vertices
    n2 = mesh_domain(spec, 0.04, 1.0).n_vertices
    assert 3.5 <= n2 / n1 <= 4.5


def test_mesh_is_deterministic():
    spec = build_sector_domain(2 * math.pi / 3, 0.5)
    a, b = mesh_domain(spec, 0.06, 1.0), mesh_domain(spec, 0.06, 1.0)
    assert np.array_equal(a.vertices, b.vertices)
    assert np.array_equal(a.triangles, b.triangles)


def test_corner_grading_refines_near_corner():
    mesh = mesh_domain(build_sector_domain(3 * math.pi / 4, 0.5), 0.04, 1.0)
    assert mesh.local_size(mesh.vertices[mesh.corner_vertex]) < 0.5 * 0.04


def test_interface_normals_point_into_scatterer():
    spec = build_star_domain(0.6, 0.1, 3)
    mesh = mesh_domain(spec, 0.06, 1.0)
    mid = mesh.vertices[mesh.interface_edges].mean(axis=1)
    probe = mid + 1e-3 * mesh.interface_normals
    assert spec.contains(probe).mean() > 0.99


def test_mesh_errors():
    spec = build_disk_domain(0.5)
    with pytest.raises(MeshingError):
        mesh_domain(spec, 0.05, 0.4)
    with pytest.raises(MeshingError):
        mesh_domain(spec, 0.2, 1.0)


def test_mesh_roundtrip(tmp_path):
    mesh = mesh_domain(build_sector_domain(3 * math.pi / 4, 0.5), 0.08, 1.0)
    vals = np.arange(mesh.n_vertices) * (1 + 2j)
    write_mesh(mesh, tmp_path / "m.txt", vals)
    back, v = read_mesh(tmp_path / "m.txt")
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.array_equal(back.in_scatterer, mesh.in_scatterer)
    assert back.corner_vertex == mesh.corner_vertex
    assert np.array_equal(v, vals)


def test_flatness_half_plane():
    spec = build_sector_domain(math.pi, 0.5)
    for delta in (0.05, 0.3, 0.9):
        assert weak_flatness_check(spec, (0, 1), delta) == pytest.approx(0.25)


def test_flatness_genuine_corner():
    spec = build_sector_domain(3 * math.pi / 4, 0.5)
    for e in ((0, 1), (1, 0), (math.cos(1), math.sin(1))):
        assert weak_flatness_check(spec, e, 0.1) == 0.0


def test_flatness_cusp_graph():
    spec = build_graph_domain(lambda x: np.abs(x) ** 1.5, lambda x: 1.5 * np.sign(x) * np.abs(x) ** 0.5,
                              0.5, 0.5, slopes=(0.0, 0.0))
    r = weak_flatness_check(spec, (0, 1), 0.1)
    assert 0.008 < r < 0.0105


@given(st.floats(0.2, 2 * math.pi - 0.2))
def test_sector_contains_bisector(theta0):
    spec = build_sector_domain(theta0, 0.5)
    mid = 0.25 * np.array([math.cos(theta0 / 2), math.sin(theta0 / 2)])
    out = 0.25 * np.array([math.cos(theta0 / 2 + math.pi), math.sin(theta0 / 2 + math.pi)])
    assert spec.contains(mid)[0]
    assert not spec.contains(out)[0]


@given(st.floats(0.3, 1.0), st.floats(0.0, 0.2), st.integers(2, 6))
def test_star_extent_bounds(radius, eps, lobes):
    spec = build_star_domain(radius, eps, lobes)
    assert radius * (1 - eps) - 1e-9 <= spec.extent <= radius * (1 + eps) + 1e-9
