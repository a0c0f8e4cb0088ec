"""
網格服務測試：取樣、單調插值、網格與匯出
"""

import json

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from app.core.errors import DomainError, MeshIOError, NonMonotoneInput
from app.models.schemas import InverseSource, MeshFormat, MeshKind, SampleTable
from app.services.conformal_maps import complete_constants
from app.services.ellipsoid_core import implicit_residual
from app.services.inverse_maps import u_of_x
from app.services.mesh_figure import (
    build_interpolant,
    conformality_report,
    curvature_grid,
    export_mesh,
    fritsch_carlson_slopes,
    liouville_grid,
    load_obj_vertices,
    mesh_from_grid,
    quad_faces,
    reflect_to_full_surface,
    sample_forward,
)


@pytest.fixture(scope="module")
def liouville_33(shape_321):
    return liouville_grid(shape_321, 33, 33, source=InverseSource.EXACT)


class TestSampling:
    def test_tables(self, shape_321):
        u_table, v_table = sample_forward(shape_321, 16)
        assert len(u_table.knots) == 17
        assert (u_table.knots[0], u_table.values[0]) == (0.0, 4.0)
        assert (v_table.knots[0], v_table.values[0]) == (0.0, 1.0)
        assert u_table.values[-1] == 9.0 and v_table.values[-1] == 4.0
        x_max, y_max = complete_constants(shape_321)
        assert u_table.knots[-1] == x_max and v_table.knots[-1] == y_max
        assert np.all(np.diff(u_table.knots) > 0)

    def test_frame(self, shape_321):
        frame = sample_forward(shape_321, 4)[0].to_frame()
        assert list(frame.columns) == ["x", "u"]

    def test_too_few_samples(self, shape_321):
        with pytest.raises(DomainError):
            sample_forward(shape_321, 1)


class TestMonotoneInterpolant:
    def test_passes_through_knots(self, shape_321):
        u_table, _ = sample_forward(shape_321, 16)
        interpolant = build_interpolant(u_table)
        assert_allclose(interpolant(u_table.knots), u_table.values, rtol=1e-14)

    def test_preserves_monotonicity(self):
        x = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
        y = np.array([0.0, 0.01, 0.02, 3.0, 3.01, 3.02])
        interpolant = build_interpolant(SampleTable(variable="u", knots=x, values=y))
        dense = interpolant(np.linspace(0, 5, 2001))
        assert np.all(np.diff(dense) >= 0)
        assert dense.min() >= 0 and dense.max() <= 3.02

    def test_slopes_non_negative(self):
        x = np.array([0.0, 0.5, 2.0, 2.1, 4.0])
        y = np.array([0.0, 1.0, 1.1, 5.0, 5.2])
        slopes = fritsch_carlson_slopes(x, y)
        assert slopes.shape == x.shape
        assert np.all(slopes >= 0)

    def test_two_point_table(self):
        slopes = fritsch_carlson_slopes(np.array([0.0, 2.0]), np.array([1.0, 5.0]))
        assert_allclose(slopes, [2.0, 2.0])

    @pytest.mark.parametrize(
        "knots, values",
        [([0.0, 1.0, 1.0], [0.0, 1.0, 2.0]), ([0.0, 1.0, 2.0], [0.0, 2.0, 1.0]), ([0.0], [1.0])],
    )
    def test_rejects_non_monotone(self, knots, values):
        with pytest.raises(NonMonotoneInput):
            build_interpolant(SampleTable(variable="u", knots=np.array(knots), values=np.array(values)))

    def test_error_drops_with_refinement(self, shape_321):
        x_max = complete_constants(shape_321)[0]
        targets = np.linspace(0.01, 0.99, 23) * x_max
        exact = np.array([u_of_x(x, shape_321) for x in targets])
        errors = []
        for n in (16, 32):
            interpolant = build_interpolant(sample_forward(shape_321, n)[0])
            errors.append(np.max(np.abs(interpolant(targets) - exact)))
        assert errors[0] < 1e-2
        assert errors[1] < errors[0] / 3


class TestGrids:
    def test_counts(self, liouville_33):
        assert liouville_33.vertex_count == 1089
        assert liouville_33.face_count == 1024
        assert liouville_33.grid().shape == (33, 33, 3)
        assert liouville_33.kind == MeshKind.LIOUVILLE

    def test_vertices_on_surface(self, shape_321, liouville_33):
        assert np.max(np.abs(implicit_residual(liouville_33.vertices, shape_321))) <= 1e-10

    def test_interpolant_source_on_surface(self, shape_321):
        mesh = liouville_grid(shape_321, 9, 9, eps=0.0, samples=32)
        assert np.max(np.abs(implicit_residual(mesh.vertices, shape_321))) <= 1e-10

    def test_liouville_grid_is_conformal(self, shape_321, liouville_33):
        coarse = conformality_report(liouville_grid(shape_321, 17, 17, source=InverseSource.EXACT))
        fine = conformality_report(liouville_33)
        assert fine.median_angle_error < 1.0
        assert fine.median_angle_error < coarse.median_angle_error
        assert fine.median_ratio_error < 5e-2
        assert fine.interior_cells == 31 * 31

    def test_conformality_error_is_second_order(self, shape_321, liouville_33):
        coarse = conformality_report(liouville_33)
        fine = conformality_report(liouville_grid(shape_321, 65, 65, source=InverseSource.EXACT))
        assert coarse.median_angle_error / fine.median_angle_error >= 3.0
        assert coarse.median_ratio_error / fine.median_ratio_error >= 3.0

    def test_flat_patch_has_zero_deviation(self):
        xs, ys = np.linspace(0.0, 2.0, 9), np.linspace(0.0, 1.0, 5)
        grid = np.stack(np.meshgrid(xs, ys, np.zeros(1), indexing="ij"), axis=-1)[:, :, 0, :]
        report = conformality_report(mesh_from_grid(MeshKind.LIOUVILLE, grid, (0.25, 0.25)))
        assert report.interior_cells == 6 * 2
        assert report.max_angle_error <= 1e-12
        assert report.max_ratio_error <= 1e-14

    @pytest.mark.parametrize("builder", [liouville_grid, curvature_grid])
    def test_minimal_grid(self, shape_321, builder):
        mesh = builder(shape_321, 2, 2)
        assert mesh.vertex_count == 4 and mesh.face_count == 1
        assert np.max(np.abs(implicit_residual(mesh.vertices, shape_321))) <= 1e-10
        report = conformality_report(mesh)
        assert report.cells == 1 and report.interior_cells == 0
        assert np.isfinite(report.median_angle_error)

    def test_curvature_grid_is_not_conformal(self, shape_321, liouville_33):
        curvature = conformality_report(curvature_grid(shape_321, 33, 33))
        assert curvature.median_ratio_error > conformality_report(liouville_33).median_ratio_error

    def test_face_indices(self):
        faces = quad_faces(3, 4)
        assert faces.shape == (6, 4)
        assert faces[0].tolist() == [0, 4, 5, 1]
        assert faces.max() == 11

    @pytest.mark.parametrize("eps", [-0.1, 0.5])
    def test_invalid_eps(self, shape_321, eps):
        with pytest.raises(DomainError):
            liouville_grid(shape_321, 5, 5, eps=eps)

    def test_invalid_size(self, shape_321):
        with pytest.raises(DomainError):
            curvature_grid(shape_321, 1, 5)


class TestFullSurface:
    @pytest.fixture(scope="class")
    def full(self, shape_321):
        return reflect_to_full_surface(curvature_grid(shape_321, 9, 9, eps=0.0))

    def test_vertices_symmetric_and_on_surface(self, shape_321, full):
        assert np.max(np.abs(implicit_residual(full.vertices, shape_321))) <= 1e-10
        assert_allclose(full.vertices.mean(axis=0), 0.0, atol=1e-12)
        assert full.vertex_count < 8 * 81

    def test_no_duplicate_vertices(self, full):
        rounded = np.round(full.vertices / 1e-9)
        assert len(np.unique(rounded, axis=0)) == full.vertex_count

    def test_consistent_orientation(self, full):
        corners = full.vertices[full.faces]
        rolled = np.roll(corners, -1, axis=1)
        normals = np.cross(corners, rolled).sum(axis=1)
        signs = np.sign(np.sum(normals * corners.mean(axis=1), axis=1))
        assert np.all(signs == signs[0])

    def test_diagnostics_follow_faces(self, full):
        assert full.edge_ratio.shape == (full.face_count,)
        assert full.grid_shape is None


class TestExport:
    def test_obj_roundtrip(self, liouville_33, tmp_path):
        path = export_mesh(liouville_33, MeshFormat.OBJ, tmp_path / "mesh.obj")
        assert np.array_equal(load_obj_vertices(path), liouville_33.vertices)
        face_lines = [line for line in path.read_text().splitlines() if line.startswith("f ")]
        assert len(face_lines) == 1024
        assert face_lines[0] == "f 1 34 35 2"

    def test_csv(self, liouville_33, tmp_path):
        path = export_mesh(liouville_33, "csv", tmp_path / "mesh.csv")
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["i", "j", "x", "y", "z"]
        assert len(frame) == 1089
        assert_allclose(frame[["x", "y", "z"]].to_numpy(), liouville_33.vertices, rtol=0, atol=0)

    def test_json(self, liouville_33, tmp_path):
        path = export_mesh(liouville_33, MeshFormat.JSON, tmp_path / "mesh.json")
        payload = json.loads(path.read_text())
        assert payload["kind"] == "liouville"
        assert payload["grid_shape"] == [33, 33]
        assert len(payload["faces"]) == 1024

    def test_unwritable_path(self, liouville_33, tmp_path):
        with pytest.raises(MeshIOError):
            export_mesh(liouville_33, MeshFormat.OBJ, tmp_path / "missing" / "mesh.obj")

    def test_missing_file(self, tmp_path):
        with pytest.raises(MeshIOError):
            load_obj_vertices(tmp_path / "none.obj")
