"""
Liouville Ellipsoid - 反函數服務
U(x)、V(y)：安全牛頓法求根（權威路徑）、廣義 Jacobi 振幅閉式解、反演級數，
以及 f(U)U′² = +1、f(V)V′² = −1 與 Liouville 度量的有限差分檢查
"""

import math
from functools import cached_property, lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
import structlog

from app.core.config import Settings, get_settings
from app.core.errors import BranchError, DomainError
from app.models.schemas import (
    EllipsoidShape,
    InverseMapConfig,
    InverseMethod,
    InverseSeries,
    MetricSample,
)
from app.services.conformal_maps import ConformalMaps, get_conformal_maps
from app.services.ellipsoid_core import ellipsoid_points, f_weight
from app.services.elliptic_functions import gen_jacobi_sn
from app.services.root_solver import safeguarded_newton
from app.services.series_engine import eval_inverse_series, forward_series, inverse_series

logger = structlog.get_logger()

# 縮放變數小於此值時以反演級數作初始猜值
_SERIES_SEED_RADIUS = 0.25


class InverseMaps:
    """
    單一橢球的反函數 U = X⁻¹、V = Y⁻¹

    初始猜值表與低階反演級數在首次使用時建立，之後不再改變。
    """

    def __init__(self, shape: EllipsoidShape, config: Optional[Settings] = None):
        self.shape = shape
        self.config = config or get_settings()
        self.maps: ConformalMaps = get_conformal_maps(shape)

    @cached_property
    def _seed_tables(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        n = self.config.SEED_TABLE_SIZE
        us = np.linspace(self.shape.b2, self.shape.a2, n)
        vs = np.linspace(self.shape.c2, self.shape.b2, n)
        xs = np.array([self.maps.x_of_u(u) for u in us])
        ys = np.array([self.maps.y_of_v(v) for v in vs])
        return xs, us, ys, vs

    @cached_property
    def _seed_series(self) -> InverseSeries:
        return inverse_series(forward_series(self.shape, self.config.SERIES_SEED_ORDER, config=self.config))

    def seed_series(self, order: int) -> InverseSeries:
        if order == self.config.SERIES_SEED_ORDER:
            return self._seed_series
        return _series_for(self.shape, order)

    def _check_x(self, x: float) -> float:
        x_max = self.maps.x_max
        if not (math.isfinite(x) and 0 <= x <= x_max * (1 + 1e-14)):
            raise DomainError(f"x 必須位於 [0, X(a²)] = [0, {x_max}]: {x}", value=x)
        return min(x, x_max)

    def _check_y(self, y: float) -> float:
        y_max = self.maps.y_max
        if not (math.isfinite(y) and 0 <= y <= y_max * (1 + 1e-14)):
            raise DomainError(f"y 必須位於 [0, Y(b²)] = [0, {y_max}]: {y}", value=y)
        return min(y, y_max)

    def _solve(
        self,
        target: float,
        forward: Callable[[float], float],
        slope: Callable[[float], float],
        lo: float,
        hi: float,
        seed: float,
        options: InverseMapConfig,
    ) -> float:
        result = safeguarded_newton(
            lambda t: forward(t) - target,
            slope,
            lo,
            hi,
            x0=seed,
            ftol=options.tol * (1 + abs(target)),
            accept_tol=self.config.ROOT_ACCEPT_TOL * (1 + abs(target)),
            max_iter=options.max_iter,
        )
        if result.machine_limited:
            logger.debug(f"反函數求根在浮點解析度處停止: 殘差 {result.residual:.3e}")
        return result.root

    def u_of_x(self, x: float, options: Optional[InverseMapConfig] = None) -> float:
        """U(x)，x ∈ [0, X(a²)]"""
        options = options or InverseMapConfig(series_order_for_seed=self.config.SERIES_SEED_ORDER)
        x = self._check_x(x)
        x_max = self.maps.x_max
        snap = self.config.ENDPOINT_SNAP * x_max
        if x <= snap:
            return self.shape.b2
        if x >= x_max - snap:
            return self.shape.a2

        b2, a2 = self.shape.b2, self.shape.a2
        if x / (2 * self.shape.b) <= _SERIES_SEED_RADIUS:
            series = self.seed_series(options.series_order_for_seed)
            seed = eval_inverse_series(series, x, "x", self.config).value
        else:
            xs, us, _, _ = self._seed_tables
            seed = float(np.interp(x, xs, us))
        seed = min(max(seed, b2), a2)

        def slope(u: float) -> float:
            if u <= b2 or u >= a2:
                return math.inf
            return math.sqrt(f_weight(u, self.shape))

        return self._solve(x, self.maps.x_of_u, slope, b2, a2, seed, options)

    def v_of_y(self, y: float, options: Optional[InverseMapConfig] = None) -> float:
        """V(y)，y ∈ [0, Y(b²)]"""
        options = options or InverseMapConfig(series_order_for_seed=self.config.SERIES_SEED_ORDER)
        y = self._check_y(y)
        y_max = self.maps.y_max
        snap = self.config.ENDPOINT_SNAP * y_max
        if y <= snap:
            return self.shape.c2
        if y >= y_max - snap:
            return self.shape.b2

        c2, b2 = self.shape.c2, self.shape.b2
        if y / (2 * self.shape.c) <= _SERIES_SEED_RADIUS:
            series = self.seed_series(options.series_order_for_seed)
            seed = eval_inverse_series(series, y, "y", self.config).value
        else:
            _, _, ys, vs = self._seed_tables
            seed = float(np.interp(y, ys, vs))
        seed = min(max(seed, c2), b2)

        def slope(v: float) -> float:
            if v <= c2 or v >= b2:
                return math.inf
            return math.sqrt(-f_weight(v, self.shape))

        return self._solve(y, self.maps.y_of_v, slope, c2, b2, seed, options)

    def _real_part(self, value: complex, label: str) -> float:
        residue = abs(value.imag)
        if residue > self.config.BRANCH_TOL * (1 + abs(value.real)):
            raise BranchError(f"{label} 閉式結果的虛部殘差 {residue:.3e} 超出容差", value=value, residual=residue)
        return value.real

    def u_of_x_closed(self, x: float) -> float:
        """U(x) = b² / (1 − n₁ sn²(n₁; x c√(a²−b²) / (2i b²) | m₁))"""
        x = self._check_x(x)
        s, p = self.shape, self.maps.params
        # x / (2i) = −i·x/2，參數為純虛數
        z = complex(0.0, -x * s.c * math.sqrt(s.a2 - s.b2) / (2 * s.b2))
        sn = gen_jacobi_sn(p.n1, z, p.m1, self.config)
        return self._real_part(s.b2 / (1 - p.n1 * sn * sn), "U(x)")

    def v_of_y_closed(self, y: float) -> float:
        """V(y) = c² / (1 − n₂ sn²(n₂; y b√(a²−c²) / (2c²) | m₂))"""
        y = self._check_y(y)
        s, p = self.shape, self.maps.params
        z = y * s.b * math.sqrt(s.a2 - s.c2) / (2 * s.c2)
        sn = gen_jacobi_sn(p.n2, z, p.m2, self.config)
        return self._real_part(s.c2 / (1 - p.n2 * sn * sn), "V(y)")

    def u_of_x_series(self, x: float, order: Optional[int] = None) -> float:
        """截斷反演級數的 U(x)"""
        x = self._check_x(x)
        series = _series_for(self.shape, order or self.config.SERIES_DEFAULT_ORDER)
        return eval_inverse_series(series, x, "x", self.config).value

    def v_of_y_series(self, y: float, order: Optional[int] = None) -> float:
        """截斷反演級數的 V(y)"""
        y = self._check_y(y)
        series = _series_for(self.shape, order or self.config.SERIES_DEFAULT_ORDER)
        return eval_inverse_series(series, y, "y", self.config).value

    def _steps(self, step: Optional[float], step_y: Optional[float]) -> Tuple[float, float]:
        h_x = step if step is not None else 1e-5 * self.maps.x_max
        h_y = step_y if step_y is not None else (step if step is not None else 1e-5 * self.maps.y_max)
        if not (h_x > 0 and h_y > 0):
            raise DomainError(f"差分步長必須為正: ({h_x}, {h_y})", value=(h_x, h_y))
        return h_x, h_y

    def _check_interior(self, x: float, y: float, h_x: float, h_y: float) -> None:
        if not (0 < x - h_x and x + h_x < self.maps.x_max):
            raise DomainError(f"x = {x} 與步長 {h_x} 未落在矩形內部", value=x)
        if not (0 < y - h_y and y + h_y < self.maps.y_max):
            raise DomainError(f"y = {y} 與步長 {h_y} 未落在矩形內部", value=y)

    def ode_residuals(
        self,
        x: float,
        y: float,
        step: Optional[float] = None,
        step_y: Optional[float] = None,
    ) -> Tuple[float, float]:
        """
        r₁ = f(U(x)) U′(x)² − 1，r₂ = f(V(y)) V′(y)² + 1，導數用中央差分

        step 為 x 方向的步長（預設 1e−5·X(a²)），step_y 預設與 step 相同
        """
        h_x, h_y = self._steps(step, step_y)
        self._check_interior(x, y, h_x, h_y)

        du = (self.u_of_x(x + h_x) - self.u_of_x(x - h_x)) / (2 * h_x)
        dv = (self.v_of_y(y + h_y) - self.v_of_y(y - h_y)) / (2 * h_y)
        r1 = f_weight(self.u_of_x(x), self.shape) * du * du - 1
        r2 = f_weight(self.v_of_y(y), self.shape) * dv * dv + 1
        return r1, r2

    def liouville_metric(
        self,
        x: float,
        y: float,
        step: Optional[float] = None,
        step_y: Optional[float] = None,
    ) -> Tuple[MetricSample, float]:
        """
        S(x, y) = Ellipsoid(U(x), V(y)) 的有限差分第一基本形式，以及 ¼(U − V)
        """
        h_x, h_y = self._steps(step, step_y)
        self._check_interior(x, y, h_x, h_y)

        us = np.array([self.u_of_x(x - h_x), self.u_of_x(x), self.u_of_x(x + h_x)])
        vs = np.array([self.v_of_y(y - h_y), self.v_of_y(y), self.v_of_y(y + h_y)])
        s_x = (ellipsoid_points(us[2], vs[1], self.shape) - ellipsoid_points(us[0], vs[1], self.shape)) / (2 * h_x)
        s_y = (ellipsoid_points(us[1], vs[2], self.shape) - ellipsoid_points(us[1], vs[0], self.shape)) / (2 * h_y)

        metric = MetricSample(
            g11=float(np.dot(s_x, s_x)),
            g12=float(np.dot(s_x, s_y)),
            g22=float(np.dot(s_y, s_y)),
        )
        return metric, 0.25 * (us[1] - vs[1])


@lru_cache(maxsize=32)
def get_inverse_maps(shape: EllipsoidShape) -> InverseMaps:
    """每個橢球共用一個 InverseMaps 實例"""
    return InverseMaps(shape)


@lru_cache(maxsize=64)
def _series_for(shape: EllipsoidShape, order: int) -> InverseSeries:
    return inverse_series(forward_series(shape, order))


def u_of_x(x: float, shape: EllipsoidShape, config: Optional[InverseMapConfig] = None) -> float:
    return get_inverse_maps(shape).u_of_x(x, config)


def v_of_y(y: float, shape: EllipsoidShape, config: Optional[InverseMapConfig] = None) -> float:
    return get_inverse_maps(shape).v_of_y(y, config)


def u_of_x_closed(x: float, shape: EllipsoidShape) -> float:
    return get_inverse_maps(shape).u_of_x_closed(x)


def v_of_y_closed(y: float, shape: EllipsoidShape) -> float:
    return get_inverse_maps(shape).v_of_y_closed(y)


def u_of_x_series(x: float, shape: EllipsoidShape, order: Optional[int] = None) -> float:
    return get_inverse_maps(shape).u_of_x_series(x, order)


def v_of_y_series(y: float, shape: EllipsoidShape, order: Optional[int] = None) -> float:
    return get_inverse_maps(shape).v_of_y_series(y, order)


def ode_residuals(
    x: float,
    y: float,
    shape: EllipsoidShape,
    step: Optional[float] = None,
    step_y: Optional[float] = None,
) -> Tuple[float, float]:
    return get_inverse_maps(shape).ode_residuals(x, y, step, step_y)


def liouville_metric(
    x: float,
    y: float,
    shape: EllipsoidShape,
    step: Optional[float] = None,
    step_y: Optional[float] = None,
) -> Tuple[MetricSample, float]:
    return get_inverse_maps(shape).liouville_metric(x, y, step, step_y)


def invert(value: float, coordinate: str, shape: EllipsoidShape, method: InverseMethod = InverseMethod.ROOT) -> float:
    """依 method 求 U(x)（coordinate="x"）或 V(y)（coordinate="y"）"""
    maps = get_inverse_maps(shape)
    table = {
        ("x", InverseMethod.ROOT): maps.u_of_x,
        ("y", InverseMethod.ROOT): maps.v_of_y,
        ("x", InverseMethod.CLOSED): maps.u_of_x_closed,
        ("y", InverseMethod.CLOSED): maps.v_of_y_closed,
        ("x", InverseMethod.SERIES): maps.u_of_x_series,
        ("y", InverseMethod.SERIES): maps.v_of_y_series,
    }
    try:
        solver = table[(coordinate, InverseMethod(method))]
    except KeyError:
        raise DomainError(f"未知的座標 {coordinate}", value=coordinate)
    return solver(value)
