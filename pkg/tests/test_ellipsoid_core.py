"""
橢球核心測試
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.errors import DomainError, PoleError
from app.models.schemas import CurvatureCoords, Point3
from app.services.ellipsoid_core import (
    ellipsoid_point,
    ellipsoid_points,
    f_weight,
    first_fundamental_form,
    implicit_residual,
    line_element,
    make_shape,
)


class TestMakeShape:
    def test_valid_shape(self):
        shape = make_shape(3, 2, 1)
        assert (shape.a2, shape.b2, shape.c2) == (9.0, 4.0, 1.0)
        assert shape.axes == (3.0, 2.0, 1.0)

    @pytest.mark.parametrize("axes", [(1, 2, 3), (3, 2, 2), (3, 3, 1), (3, 2, 0), (3, 2, -1), (float("nan"), 2, 1)])
    def test_invalid_ordering(self, axes):
        with pytest.raises(DomainError):
            make_shape(*axes)


class TestWeight:
    def test_known_values(self, shape_321):
        assert_allclose(f_weight(2.0, shape_321), -1 / 7, rtol=1e-15)
        assert_allclose(f_weight(8.0, shape_321), 2 / 7, rtol=1e-15)

    def test_sign_on_intervals(self, shape_321):
        assert all(f_weight(u, shape_321) > 0 for u in np.linspace(4.1, 8.9, 7))
        assert all(f_weight(v, shape_321) < 0 for v in np.linspace(1.1, 3.9, 7))

    @pytest.mark.parametrize("t", [9.0, 4.0, 1.0])
    def test_poles(self, shape_321, t):
        with pytest.raises(PoleError):
            f_weight(t, shape_321)


class TestParametrization:
    @pytest.mark.parametrize(
        "u, v, expected",
        [(4.0, 1.0, (3.0, 0.0, 0.0)), (9.0, 4.0, (0.0, 0.0, 1.0)), (9.0, 1.0, (0.0, 2.0, 0.0))],
    )
    def test_rectangle_corners(self, shape_321, u, v, expected):
        point = ellipsoid_point(CurvatureCoords(u=u, v=v), shape_321)
        assert_allclose(point.as_array(), expected, atol=1e-15)

    def test_points_on_surface(self, shape_321, rng):
        u = rng.uniform(4.0, 9.0, 200)
        v = rng.uniform(1.0, 4.0, 200)
        points = ellipsoid_points(u, v, shape_321)
        assert points.shape == (200, 3)
        assert np.all(points >= 0)
        assert_allclose(implicit_residual(points, shape_321), 0.0, atol=1e-14)

    def test_broadcast_grid(self, shape_flat):
        u = np.linspace(shape_flat.b2, shape_flat.a2, 5)[:, None]
        v = np.linspace(shape_flat.c2, shape_flat.b2, 7)[None, :]
        grid = ellipsoid_points(u, v, shape_flat)
        assert grid.shape == (5, 7, 3)
        assert_allclose(implicit_residual(grid, shape_flat), 0.0, atol=1e-14)

    def test_point_residual(self, shape_321):
        point = ellipsoid_point(CurvatureCoords(u=6.5, v=2.5), shape_321)
        assert isinstance(point, Point3)
        assert abs(implicit_residual(point, shape_321)) <= 1e-14

    def test_outside_rectangle(self, shape_321):
        with pytest.raises(DomainError):
            ellipsoid_point(CurvatureCoords(u=9.5, v=2.0), shape_321)
        with pytest.raises(DomainError):
            ellipsoid_points(np.array([5.0]), np.array([0.5]), shape_321)


class TestFirstFundamentalForm:
    def test_known_value(self, shape_321):
        g = first_fundamental_form(CurvatureCoords(u=8.0, v=2.0), shape_321)
        assert_allclose(g.g11, 3 / 7, rtol=1e-15)
        assert_allclose(g.g22, 3 / 14, rtol=1e-15)
        assert g.g12 == 0

    def test_matches_finite_differences(self, shape_321):
        u, v, h = 6.0, 2.5, 1e-6
        du = (ellipsoid_points(u + h, v, shape_321) - ellipsoid_points(u - h, v, shape_321)) / (2 * h)
        dv = (ellipsoid_points(u, v + h, shape_321) - ellipsoid_points(u, v - h, shape_321)) / (2 * h)
        g = first_fundamental_form(CurvatureCoords(u=u, v=v), shape_321)
        assert_allclose(du @ du, g.g11, rtol=1e-7)
        assert_allclose(dv @ dv, g.g22, rtol=1e-7)
        assert abs(du @ dv) <= 1e-7 * g.g11

    def test_boundary_is_pole(self, shape_321):
        with pytest.raises(PoleError):
            first_fundamental_form(CurvatureCoords(u=4.0, v=2.0), shape_321)

    def test_line_element(self, shape_321):
        coords = CurvatureCoords(u=8.0, v=2.0)
        assert_allclose(line_element(coords, 1.0, 0.0, shape_321), 3 / 7, rtol=1e-15)
        assert_allclose(line_element(coords, 0.5, 2.0, shape_321), 0.25 * 3 / 7 + 4 * 3 / 14, rtol=1e-15)
