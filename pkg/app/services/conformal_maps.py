"""
Liouville Ellipsoid - 共形映射服務
正向座標 X(u)、Y(v)：端點奇異性消去後的自適應積分（權威路徑）與 F₁、F₂ 閉式解（交叉驗證）
"""

import math
from functools import cached_property, lru_cache
from typing import Callable, Optional, Tuple

import structlog
from scipy import integrate

from app.core.config import Settings, get_settings
from app.core.errors import BranchError, ConstantMismatch, DomainError
from app.models.schemas import EllipsoidShape, EllipticArgs, JacobiMapParams
from app.services.elliptic_functions import ellint_pi

logger = structlog.get_logger()

# 完全常數的閉式交叉驗證容差
_CLOSED_FORM_AGREEMENT = 1e-9


def jacobi_map_params(shape: EllipsoidShape) -> JacobiMapParams:
    """F₁、F₂ 的參數 n₁, m₁, n₂, m₂ 與前置係數"""
    a2, b2, c2 = shape.a2, shape.b2, shape.c2
    return JacobiMapParams(
        n1=1 - b2 / c2,
        m1=a2 * (c2 - b2) / (c2 * (a2 - b2)),
        n2=1 - c2 / b2,
        m2=a2 * (b2 - c2) / (b2 * (a2 - c2)),
        prefactor1=complex(0.0, 2 * b2 / (shape.c * math.sqrt(a2 - b2))),
        prefactor2=2 * c2 / (shape.b * math.sqrt(a2 - c2)),
        shape=shape,
    )


def _check_u(u: float, shape: EllipsoidShape) -> None:
    if not (math.isfinite(u) and shape.b2 <= u <= shape.a2):
        raise DomainError(f"u 必須位於 [b², a²] = [{shape.b2}, {shape.a2}]: {u}", value=u)


def _check_v(v: float, shape: EllipsoidShape) -> None:
    if not (math.isfinite(v) and shape.c2 <= v <= shape.b2):
        raise DomainError(f"v 必須位於 [c², b²] = [{shape.c2}, {shape.b2}]: {v}", value=v)


def amplitude_phi1(t: float, shape: EllipsoidShape) -> complex:
    """φ₁(t)，t ∈ [b², a²] 時為純虛數"""
    _check_u(t, shape)
    return jacobi_map_params(shape).phi1(t)


def amplitude_phi2(t: float, shape: EllipsoidShape) -> float:
    """φ₂(t)，t ∈ [c², b²] 時位於 [0, π/2]"""
    _check_v(t, shape)
    return jacobi_map_params(shape).phi2(t)


class ConformalMaps:
    """
    單一橢球的正向共形座標

    X(u) = ∫_{b²}^{u} √(+f(t)) dt，Y(v) = ∫_{c²}^{v} √(−f(t)) dt
    完全常數 X(a²)、Y(b²) 在首次使用時計算並快取。
    """

    def __init__(self, shape: EllipsoidShape, config: Optional[Settings] = None):
        self.shape = shape
        self.config = config or get_settings()
        self.params = jacobi_map_params(shape)

    def _quad(self, integrand: Callable[[float], float], lo: float, hi: float) -> float:
        if hi <= lo:
            return 0.0
        value, abserr = integrate.quad(
            integrand,
            lo,
            hi,
            epsabs=self.config.QUAD_EPSABS,
            epsrel=self.config.QUAD_EPSREL,
            limit=self.config.QUAD_LIMIT,
        )
        if abserr > 1e-11:
            logger.warning(f"積分誤差估計偏大: {abserr:.3e} on [{lo}, {hi}]")
        return value

    def _split_integral(
        self,
        t: float,
        start: float,
        end: float,
        near_start: Callable[[float], float],
        near_end: Callable[[float], float],
    ) -> float:
        """
        ∫_start^t，起點附近代換 t = start + s²，終點附近代換 t = end − s²，
        在中點分段
        """
        mid = 0.5 * (start + end)
        if t <= mid:
            return self._quad(near_start, 0.0, math.sqrt(t - start))
        head = self._quad(near_start, 0.0, math.sqrt(mid - start))
        return head + self._quad(near_end, math.sqrt(end - t), math.sqrt(end - mid))

    def x_of_u(self, u: float) -> float:
        """X(u)，u ∈ [b², a²]"""
        _check_u(u, self.shape)
        a2, b2, c2 = self.shape.a2, self.shape.b2, self.shape.c2

        def near_b2(s: float) -> float:
            t = b2 + s * s
            return 2.0 * math.sqrt(t / ((a2 - t) * (t - c2)))

        def near_a2(s: float) -> float:
            t = a2 - s * s
            return 2.0 * math.sqrt(t / ((t - b2) * (t - c2)))

        return self._split_integral(u, b2, a2, near_b2, near_a2)

    def y_of_v(self, v: float) -> float:
        """Y(v)，v ∈ [c², b²]"""
        _check_v(v, self.shape)
        a2, b2, c2 = self.shape.a2, self.shape.b2, self.shape.c2

        def near_c2(s: float) -> float:
            t = c2 + s * s
            return 2.0 * math.sqrt(t / ((a2 - t) * (b2 - t)))

        def near_b2(s: float) -> float:
            t = b2 - s * s
            return 2.0 * math.sqrt(t / ((a2 - t) * (t - c2)))

        return self._split_integral(v, c2, b2, near_c2, near_b2)

    def _real_part(self, value: complex, label: str) -> float:
        residue = abs(value.imag)
        if residue > self.config.BRANCH_TOL * (1 + abs(value.real)):
            raise BranchError(
                f"{label} 閉式結果的虛部殘差 {residue:.3e} 超出容差，可能選錯分支",
                value=value,
                residual=residue,
            )
        return value.real

    def x_of_u_closed(self, u: float) -> float:
        """F₁(u) = (2b²i / (c√(a²−b²))) Π(n₁; φ₁(u)|m₁)"""
        _check_u(u, self.shape)
        p = self.params
        pi_value = ellint_pi(EllipticArgs(n=p.n1, phi=p.phi1(u), m=p.m1), self.config)
        return self._real_part(p.prefactor1 * pi_value, "F₁")

    def y_of_v_closed(self, v: float) -> float:
        """F₂(v) = (2c² / (b√(a²−c²))) Π(n₂; φ₂(v)|m₂)"""
        _check_v(v, self.shape)
        p = self.params
        pi_value = ellint_pi(EllipticArgs(n=p.n2, phi=p.phi2(v), m=p.m2), self.config)
        return self._real_part(p.prefactor2 * pi_value, "F₂")

    @cached_property
    def x_max(self) -> float:
        """X(a²)"""
        return self.x_of_u(self.shape.a2)

    @cached_property
    def y_max(self) -> float:
        """Y(b²)"""
        return self.y_of_v(self.shape.b2)

    @cached_property
    def _checked_constants(self) -> Tuple[float, float]:
        x_max, y_max = self.x_max, self.y_max
        gap_x = abs(self.x_of_u_closed(self.shape.a2) - x_max)
        gap_y = abs(self.y_of_v_closed(self.shape.b2) - y_max)
        gap = max(gap_x, gap_y)
        if gap > _CLOSED_FORM_AGREEMENT:
            raise ConstantMismatch(
                f"完全常數與閉式解相差 {gap:.3e} (X: {gap_x:.3e}, Y: {gap_y:.3e}): {self.shape.axes}",
                value=(x_max, y_max),
                residual=gap,
            )
        return x_max, y_max

    def complete_constants(self) -> Tuple[float, float]:
        """(X(a²), Y(b²))，首次呼叫時與閉式完全積分比對，不一致時拋出 ConstantMismatch"""
        return self._checked_constants


@lru_cache(maxsize=32)
def get_conformal_maps(shape: EllipsoidShape) -> ConformalMaps:
    """每個橢球共用一個 ConformalMaps 實例"""
    return ConformalMaps(shape)


def x_of_u(u: float, shape: EllipsoidShape) -> float:
    return get_conformal_maps(shape).x_of_u(u)


def y_of_v(v: float, shape: EllipsoidShape) -> float:
    return get_conformal_maps(shape).y_of_v(v)


def x_of_u_closed(u: float, shape: EllipsoidShape) -> float:
    return get_conformal_maps(shape).x_of_u_closed(u)


def y_of_v_closed(v: float, shape: EllipsoidShape) -> float:
    return get_conformal_maps(shape).y_of_v_closed(v)


def complete_constants(shape: EllipsoidShape) -> Tuple[float, float]:
    """(X(a²), Y(b²))"""
    return get_conformal_maps(shape).complete_constants()
