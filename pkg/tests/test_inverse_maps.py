"""
反函數測試：求根、閉式解、反演級數與微分方程
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.errors import DomainError
from app.models.schemas import InverseMapConfig, InverseMethod
from app.services.conformal_maps import complete_constants, x_of_u, y_of_v
from app.services.inverse_maps import (
    invert,
    liouville_metric,
    ode_residuals,
    u_of_x,
    u_of_x_closed,
    u_of_x_series,
    v_of_y,
    v_of_y_closed,
    v_of_y_series,
)


class TestRootInverse:
    def test_endpoints(self, shape_321):
        x_max, y_max = complete_constants(shape_321)
        assert u_of_x(0.0, shape_321) == 4.0
        assert u_of_x(x_max, shape_321) == 9.0
        assert v_of_y(0.0, shape_321) == 1.0
        assert v_of_y(y_max, shape_321) == 4.0

    @pytest.mark.parametrize("shape_name", ["shape_321", "shape_flat"])
    def test_roundtrip(self, shape_name, request, rng):
        shape = request.getfixturevalue(shape_name)
        for u in rng.uniform(shape.b2, shape.a2, 40):
            assert abs(u_of_x(x_of_u(u, shape), shape) - u) <= 1e-9 * shape.a2
        for v in rng.uniform(shape.c2, shape.b2, 40):
            assert abs(v_of_y(y_of_v(v, shape), shape) - v) <= 1e-9 * shape.a2

    def test_monotone(self, shape_321):
        x_max, y_max = complete_constants(shape_321)
        us = [u_of_x(x, shape_321) for x in np.linspace(0, x_max, 30)]
        vs = [v_of_y(y, shape_321) for y in np.linspace(0, y_max, 30)]
        assert np.all(np.diff(us) > 0)
        assert np.all(np.diff(vs) > 0)

    def test_custom_tolerance(self, shape_321):
        x = 0.4 * complete_constants(shape_321)[0]
        loose = u_of_x(x, shape_321, InverseMapConfig(tol=1e-9, max_iter=40, series_order_for_seed=2))
        assert_allclose(loose, u_of_x(x, shape_321), atol=1e-7)

    @pytest.mark.parametrize("x", [-1e-3, np.inf, np.nan])
    def test_x_outside_interval(self, shape_321, x):
        with pytest.raises(DomainError):
            u_of_x(x, shape_321)

    def test_y_above_interval(self, shape_321):
        y_max = complete_constants(shape_321)[1]
        with pytest.raises(DomainError):
            v_of_y(1.001 * y_max, shape_321)


class TestClosedInverse:
    @pytest.mark.parametrize("shape_name", ["shape_321", "shape_flat"])
    def test_agrees_with_root_solve(self, shape_name, request):
        shape = request.getfixturevalue(shape_name)
        x_max, y_max = complete_constants(shape)
        for x in np.linspace(0, x_max, 22)[1:-1]:
            assert abs(u_of_x_closed(x, shape) - u_of_x(x, shape)) <= 1e-8
        for y in np.linspace(0, y_max, 22)[1:-1]:
            assert abs(v_of_y_closed(y, shape) - v_of_y(y, shape)) <= 1e-8

    def test_origin(self, shape_321):
        assert_allclose(u_of_x_closed(0.0, shape_321), 4.0, rtol=1e-15)
        assert_allclose(v_of_y_closed(0.0, shape_321), 1.0, rtol=1e-15)


class TestSeriesInverse:
    def test_accurate_near_origin(self, shape_321):
        x_edge = x_of_u(4.0 + 0.01 * 5.0, shape_321)
        y_edge = y_of_v(1.0 + 0.01 * 3.0, shape_321)
        for t in np.linspace(0.1, 1.0, 5):
            assert abs(u_of_x_series(t * x_edge, shape_321) - u_of_x(t * x_edge, shape_321)) <= 1e-12
            assert abs(v_of_y_series(t * y_edge, shape_321) - v_of_y(t * y_edge, shape_321)) <= 1e-12

    def test_order_improves_accuracy(self, shape_321):
        x = x_of_u(5.0, shape_321)
        exact = u_of_x(x, shape_321)
        errors = [abs(u_of_x_series(x, shape_321, order) - exact) for order in (2, 4, 8)]
        assert errors[0] > errors[1] > errors[2]


class TestDifferentialEquations:
    def test_residuals_small(self, shape_321, rng):
        x_max, y_max = complete_constants(shape_321)
        for x, y in zip(rng.uniform(0.1, 0.9, 10) * x_max, rng.uniform(0.1, 0.9, 10) * y_max):
            r1, r2 = ode_residuals(x, y, shape_321, 1e-5 * x_max, 1e-5 * y_max)
            assert abs(r1) <= 1e-5
            assert abs(r2) <= 1e-5

    def test_default_steps(self, shape_flat):
        x_max, y_max = complete_constants(shape_flat)
        r1, r2 = ode_residuals(0.5 * x_max, 0.5 * y_max, shape_flat)
        assert abs(r1) <= 1e-5 and abs(r2) <= 1e-5

    def test_large_step_dominated_by_discretization(self, shape_321):
        x_max, y_max = complete_constants(shape_321)
        points = [(t * x_max, t * y_max) for t in (0.3, 0.5, 0.7)]
        small = [ode_residuals(x, y, shape_321, 1e-5 * x_max, 1e-5 * y_max) for x, y in points]
        large = [ode_residuals(x, y, shape_321, 0.1 * x_max, 0.1 * y_max) for x, y in points]
        small_max = max(abs(r) for pair in small for r in pair)
        large_max = max(abs(r) for pair in large for r in pair)
        assert large_max > 1e-5
        assert large_max > 100 * small_max

    def test_boundary_rejected(self, shape_321):
        x_max, y_max = complete_constants(shape_321)
        with pytest.raises(DomainError):
            ode_residuals(0.0, 0.5 * y_max, shape_321)
        with pytest.raises(DomainError):
            ode_residuals(0.5 * x_max, y_max, shape_321)

    def test_non_positive_step(self, shape_321):
        x_max, y_max = complete_constants(shape_321)
        with pytest.raises(DomainError):
            ode_residuals(0.5 * x_max, 0.5 * y_max, shape_321, step=0.0)


class TestLiouvilleMetric:
    def test_conformal_with_liouville_factor(self, shape_321):
        x_max, y_max = complete_constants(shape_321)
        for x in np.linspace(0, x_max, 6)[1:-1]:
            for y in np.linspace(0, y_max, 6)[1:-1]:
                g, factor = liouville_metric(x, y, shape_321)
                e = g.g11
                assert abs(g.g12) <= 1e-5 * e
                assert abs(e - g.g22) <= 1e-5 * e
                assert abs(e - factor) <= 1e-5 * e


class TestInvertDispatch:
    @pytest.mark.parametrize("method", list(InverseMethod))
    def test_methods_agree_near_origin(self, shape_321, method):
        x = 0.5 * x_of_u(4.05, shape_321)
        assert_allclose(invert(x, "x", shape_321, method), u_of_x(x, shape_321), atol=1e-9)

    def test_unknown_coordinate(self, shape_321):
        with pytest.raises(DomainError):
            invert(0.1, "z", shape_321)
