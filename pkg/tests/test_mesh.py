"""Mesh generation: grading, crack insertion, hole carving, benchmarks."""

import numpy as np
import pytest

from nanofrac.errors import MeshError
from nanofrac.pf_fem.benchmarks import (
    CASES,
    ELL,
    SEN_HEIGHT,
    SEN_NOTCH,
    SEN_WIDTH,
    benchmark_bcs,
    generate_benchmark_mesh,
    HoledGeometry,
)
from nanofrac.pf_fem.mesh import (
    Mesh,
    carve_holes,
    graded_line,
    insert_edge_crack,
    mirrored_line,
    tensor_grid,
)


class TestGradedLine:
    def test_fine_region_spacing(self):
        xs = graded_line(0.0, 10.0, 4.0, 6.0, 0.25)
        assert xs[0] == 0.0 and xs[-1] == 10.0
        fine = xs[(xs >= 4.0 - 1e-12) & (xs <= 6.0 + 1e-12)]
        assert np.max(np.diff(fine)) <= 0.25 + 1e-12

    def test_monotone(self):
        xs = graded_line(0.0, 50.0, 20.0, 30.0, 0.3, growth=1.4, h_max=4.0)
        assert np.all(np.diff(xs) > 0.0)

    def test_mirror(self):
        half = graded_line(25.0, 50.0, 25.0, 28.0, 0.4)
        ys = mirrored_line(25.0, half)
        assert np.allclose(ys + ys[::-1], 50.0)


class TestTensorGrid:
    def test_counts_and_orientation(self):
        nodes, elems = tensor_grid(np.linspace(0, 2, 3), np.linspace(0, 1, 2))
        mesh = Mesh(nodes, elems)
        mesh.validate()
        assert mesh.n_nodes == 6 and mesh.n_elements == 2

    def test_inverted_detected(self):
        nodes, elems = tensor_grid(np.linspace(0, 2, 3), np.linspace(0, 1, 2))
        with pytest.raises(MeshError):
            Mesh(nodes, elems[:, ::-1].copy()).validate()

    def test_orphan_detected(self):
        nodes, elems = tensor_grid(np.linspace(0, 2, 3), np.linspace(0, 1, 2))
        nodes = np.vstack([nodes, [99.0, 99.0]])
        with pytest.raises(MeshError, match="orphan"):
            Mesh(nodes, elems).validate()


class TestEdgeCrack:
    def test_duplicates_and_remap(self):
        nodes, elems = tensor_grid(np.linspace(0, 4, 5), np.linspace(0, 2, 3))
        n0 = nodes.shape[0]
        nodes2, elems2, lower, upper = insert_edge_crack(nodes, elems, 1.0,
                                                         0.0, 2.0)
        assert upper.size == lower.size == 2      # x = 0, 1 (tip at 2 shared)
        assert nodes2.shape[0] == n0 + 2
        Mesh(nodes2, elems2).validate()
        # crack faces can separate: elements above reference the copies
        above = nodes2[elems2].mean(axis=1)[:, 1] > 1.0
        for e in np.nonzero(above)[0]:
            assert not set(elems2[e]) & set(lower.tolist())

    def test_missing_line_rejected(self):
        nodes, elems = tensor_grid(np.linspace(0, 4, 5), np.linspace(0, 2, 3))
        with pytest.raises(MeshError):
            insert_edge_crack(nodes, elems, 0.77, 0.0, 2.0)


class TestCarveHoles:
    def test_hole_removes_and_projects(self):
        # projection band well below the cell size keeps quads valid
        xs = np.linspace(0.0, 10.0, 41)
        nodes, elems = tensor_grid(xs, xs)
        nodes2, elems2, rims = carve_holes(nodes, elems, [(5.0, 5.0, 2.0)],
                                           proj_band=0.1)
        mesh = Mesh(nodes2, elems2)
        mesh.validate()
        d = np.hypot(nodes2[:, 0] - 5.0, nodes2[:, 1] - 5.0)
        assert d.min() >= 2.0 - 1e-9
        rim = rims[0]
        assert rim.size >= 20
        assert np.allclose(np.hypot(nodes2[rim, 0] - 5.0,
                                    nodes2[rim, 1] - 5.0), 2.0, atol=1e-9)


class TestBenchmarkMeshes:
    def test_unknown_case(self):
        with pytest.raises(ValueError):
            generate_benchmark_mesh("bogus")

    @pytest.mark.parametrize("case", CASES)
    def test_valid_and_has_sets(self, case):
        mesh = generate_benchmark_mesh(case)
        mesh.validate()
        bcs, rset, rdof = benchmark_bcs(case)
        for bc in bcs:
            assert bc.node_set in mesh.node_sets
        assert rset in mesh.node_sets
        assert "band" in mesh.elem_sets and mesh.elem_sets["band"].size > 100

    def test_tension_paper_count(self):
        mesh = generate_benchmark_mesh("sen_tension", "paper")
        assert 8532 * 0.8 <= mesh.n_elements <= 8532 * 1.2

    def test_tension_standard_is_coarsened(self):
        mesh = generate_benchmark_mesh("sen_tension", "standard")
        assert 3000 <= mesh.n_elements <= 6000

    @pytest.mark.parametrize("level,limit", [("standard", 1 / 7), ("fine", 1 / 10)])
    def test_band_element_size(self, level, limit):
        mesh = generate_benchmark_mesh("sen_tension", level)
        ell = ELL["sen_tension"]
        band = mesh.elem_sets["band"]
        xy = mesh.nodes[mesh.elements[band]]
        edge1 = np.linalg.norm(xy[:, 1] - xy[:, 0], axis=1)
        edge2 = np.linalg.norm(xy[:, 3] - xy[:, 0], axis=1)
        assert np.max(np.maximum(edge1, edge2)) <= limit * ell * (1 + 1e-9)

    def test_tension_mesh_symmetric_about_crack_plane(self):
        mesh = generate_benchmark_mesh("sen_tension", "standard")
        ys = np.unique(np.round(mesh.nodes[:, 1], 9))
        assert np.allclose(ys + ys[::-1], SEN_HEIGHT)

    def test_notch_faces_duplicated(self):
        mesh = generate_benchmark_mesh("sen_tension", "standard")
        lower = mesh.node_sets["notch_lower"]
        upper = mesh.node_sets["notch_upper"]
        assert lower.size == upper.size > 10
        assert np.allclose(mesh.nodes[lower], mesh.nodes[upper])
        assert np.all(mesh.nodes[lower, 0] < SEN_NOTCH)

    def test_holed_plate_two_circular_holes(self):
        mesh = generate_benchmark_mesh("holed_plate", "standard")
        geo = HoledGeometry()
        for name, (cx, cy) in [("upper_rim", geo.upper_hole),
                               ("lower_rim", geo.lower_hole)]:
            rim = mesh.node_sets[name]
            r = np.hypot(mesh.nodes[rim, 0] - cx, mesh.nodes[rim, 1] - cy)
            assert np.allclose(r, geo.hole_radius, atol=1e-8)   # 10 mm diameter
            assert rim.size >= 16
        # no nodes inside either hole
        for cx, cy in (geo.upper_hole, geo.lower_hole):
            d = np.hypot(mesh.nodes[:, 0] - cx, mesh.nodes[:, 1] - cy)
            assert d.min() >= geo.hole_radius - 1e-9

    def test_holed_pin_sets_on_contact_arcs(self):
        mesh = generate_benchmark_mesh("holed_plate", "standard")
        geo = HoledGeometry()
        up = mesh.node_sets["upper_pin"]
        assert np.all(mesh.nodes[up, 1] >= geo.upper_hole[1])
        lo = mesh.node_sets["lower_pin"]
        assert np.all(mesh.nodes[lo, 1] <= geo.lower_hole[1])
        assert up.size >= 8 and lo.size >= 5

    def test_shear_notch_from_right_edge(self):
        mesh = generate_benchmark_mesh("sen_shear", "standard")
        lower = mesh.node_sets["notch_lower"]
        assert np.all(mesh.nodes[lower, 0] > SEN_WIDTH - SEN_NOTCH)
        assert np.allclose(mesh.nodes[lower, 1], SEN_HEIGHT / 2)
