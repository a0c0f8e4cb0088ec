"""
共形映射測試：積分路徑、閉式解與完全常數
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.errors import ConstantMismatch, DomainError
from app.services import oracles
from app.services.conformal_maps import (
    ConformalMaps,
    amplitude_phi1,
    amplitude_phi2,
    complete_constants,
    jacobi_map_params,
    x_of_u,
    x_of_u_closed,
    y_of_v,
    y_of_v_closed,
)
from app.services.ellipsoid_core import f_weight


class TestJacobiParameters:
    def test_parameters_for_default_shape(self, shape_321):
        params = jacobi_map_params(shape_321)
        assert_allclose(params.n2, 3 / 4, rtol=1e-15)
        assert_allclose(params.m2, 27 / 32, rtol=1e-15)
        assert_allclose(params.n1, -3.0, rtol=1e-15)
        assert_allclose(params.m1, -27 / 5, rtol=1e-15)

    def test_amplitude_ranges(self, shape_321):
        assert amplitude_phi1(4.0, shape_321) == 0
        assert amplitude_phi1(9.0, shape_321).real == 0
        assert amplitude_phi1(9.0, shape_321).imag < 0
        assert amplitude_phi2(1.0, shape_321) == 0
        assert_allclose(amplitude_phi2(4.0, shape_321), math.pi / 2, rtol=1e-15)

    def test_amplitude_domain(self, shape_321):
        with pytest.raises(DomainError):
            amplitude_phi1(3.0, shape_321)
        with pytest.raises(DomainError):
            amplitude_phi2(5.0, shape_321)


class TestQuadraturePath:
    def test_anchored_at_zero(self, shape_321):
        assert x_of_u(4.0, shape_321) == 0
        assert y_of_v(1.0, shape_321) == 0

    @pytest.mark.parametrize("shape_name", ["shape_321", "shape_flat"])
    def test_matches_weighted_quadrature(self, shape_name, request):
        shape = request.getfixturevalue(shape_name)
        for u in np.linspace(shape.b2, shape.a2, 11):
            assert_allclose(x_of_u(u, shape), oracles.x_of_u_quadrature(u, shape), rtol=1e-11, atol=1e-13)
        for v in np.linspace(shape.c2, shape.b2, 11):
            assert_allclose(y_of_v(v, shape), oracles.y_of_v_quadrature(v, shape), rtol=1e-11, atol=1e-13)

    def test_strictly_increasing(self, shape_321):
        xs = [x_of_u(u, shape_321) for u in np.linspace(4.0, 9.0, 40)]
        ys = [y_of_v(v, shape_321) for v in np.linspace(1.0, 4.0, 40)]
        assert np.all(np.diff(xs) > 0)
        assert np.all(np.diff(ys) > 0)

    def test_derivative_is_square_root_of_weight(self, shape_321):
        h = 1e-6
        for u in (5.0, 7.5):
            slope = (x_of_u(u + h, shape_321) - x_of_u(u - h, shape_321)) / (2 * h)
            assert_allclose(slope, math.sqrt(f_weight(u, shape_321)), rtol=1e-7)
        for v in (1.5, 3.2):
            slope = (y_of_v(v + h, shape_321) - y_of_v(v - h, shape_321)) / (2 * h)
            assert_allclose(slope, math.sqrt(-f_weight(v, shape_321)), rtol=1e-7)

    @pytest.mark.parametrize("u", [3.99, 9.01, math.nan])
    def test_u_outside_interval(self, shape_321, u):
        with pytest.raises(DomainError):
            x_of_u(u, shape_321)

    @pytest.mark.parametrize("v", [0.5, 4.5])
    def test_v_outside_interval(self, shape_321, v):
        with pytest.raises(DomainError):
            y_of_v(v, shape_321)


class TestClosedForm:
    @pytest.mark.parametrize("shape_name", ["shape_321", "shape_flat"])
    def test_agrees_with_quadrature(self, shape_name, request):
        shape = request.getfixturevalue(shape_name)
        for u in np.linspace(shape.b2, shape.a2, 25):
            assert abs(x_of_u_closed(u, shape) - x_of_u(u, shape)) <= 1e-9
        for v in np.linspace(shape.c2, shape.b2, 25):
            assert abs(y_of_v_closed(v, shape) - y_of_v(v, shape)) <= 1e-9

    def test_closed_form_at_anchor(self, shape_321):
        assert x_of_u_closed(4.0, shape_321) == 0
        assert y_of_v_closed(1.0, shape_321) == 0


class TestCompleteConstants:
    def test_match_endpoint_values(self, shape_321):
        x_max, y_max = complete_constants(shape_321)
        assert x_max == x_of_u(9.0, shape_321)
        assert y_max == y_of_v(4.0, shape_321)
        assert x_max > 0 and y_max > 0

    def test_match_closed_forms(self, shape_flat):
        x_max, y_max = complete_constants(shape_flat)
        assert_allclose(x_of_u_closed(shape_flat.a2, shape_flat), x_max, atol=1e-9)
        assert_allclose(y_of_v_closed(shape_flat.b2, shape_flat), y_max, atol=1e-9)

    def test_mismatch_with_closed_form_raises(self, shape_321, monkeypatch):
        maps = ConformalMaps(shape_321)
        closed = maps.x_of_u_closed
        monkeypatch.setattr(maps, "x_of_u_closed", lambda u: closed(u) + 1e-6)
        with pytest.raises(ConstantMismatch) as info:
            maps.complete_constants()
        assert_allclose(info.value.residual, 1e-6, rtol=1e-3)
