"""
Liouville Ellipsoid - 橢球核心
曲率線參數化、權函數 f(t) 與第一基本形式
"""

from typing import Tuple

import numpy as np
from pydantic import ValidationError

from app.core.errors import DomainError, PoleError
from app.models.schemas import CurvatureCoords, EllipsoidShape, MetricSample, Point3

# 矩形邊界上根號內的捨入容差
RADICAND_CLAMP = 1e-14


def make_shape(a: float, b: float, c: float) -> EllipsoidShape:
    """
    建立並驗證橢球半軸

    Raises:
        DomainError: 不滿足 0 < c < b < a
    """
    try:
        return EllipsoidShape(a=a, b=b, c=c)
    except ValidationError as e:
        raise DomainError(f"無效的橢球半軸 ({a}, {b}, {c}): 必須滿足 0 < c < b < a", value=(a, b, c)) from e


def f_weight(t: float, shape: EllipsoidShape) -> float:
    """f(t) = t / ((a² − t)(b² − t)(c² − t))"""
    denominator = (shape.a2 - t) * (shape.b2 - t) * (shape.c2 - t)
    if denominator == 0:
        raise PoleError(f"f(t) 在 t = {t} 處有極點", value=t)
    return t / denominator


def _check_rectangle(u, v, shape: EllipsoidShape) -> None:
    u_arr, v_arr = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    if not (np.all(np.isfinite(u_arr)) and np.all(np.isfinite(v_arr))):
        raise DomainError("曲率座標必須為有限值", value=(u, v))
    if np.any(u_arr < shape.b2) or np.any(u_arr > shape.a2):
        raise DomainError(f"u 超出 [b², a²] = [{shape.b2}, {shape.a2}]", value=u)
    if np.any(v_arr < shape.c2) or np.any(v_arr > shape.b2):
        raise DomainError(f"v 超出 [c², b²] = [{shape.c2}, {shape.b2}]", value=v)


def _radicands(u, v, shape: EllipsoidShape) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    a2, b2, c2 = shape.a2, shape.b2, shape.c2
    rx = a2 * (a2 - u) * (a2 - v) / ((a2 - b2) * (a2 - c2))
    ry = b2 * (b2 - u) * (b2 - v) / ((b2 - c2) * (b2 - a2))
    rz = c2 * (c2 - u) * (c2 - v) / ((c2 - a2) * (c2 - b2))
    return tuple(np.where((r < 0) & (r > -RADICAND_CLAMP), 0.0, r) for r in (rx, ry, rz))


def ellipsoid_points(u, v, shape: EllipsoidShape) -> np.ndarray:
    """
    向量化的曲率線參數化

    Args:
        u, v: 可廣播的陣列，位於閉矩形 [b², a²] × [c², b²]
        shape: 橢球

    Returns:
        形狀為 broadcast(u, v).shape + (3,) 的正卦限座標
    """
    _check_rectangle(u, v, shape)
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    rx, ry, rz = _radicands(u, v, shape)
    # 閉矩形內的根號值恆非負，只剩捨入誤差
    return np.sqrt(np.maximum(np.stack([rx, ry, rz], axis=-1), 0.0))


def ellipsoid_point(coords: CurvatureCoords, shape: EllipsoidShape) -> Point3:
    """Ellipsoid(u, v)，正卦限"""
    x, y, z = ellipsoid_points(coords.u, coords.v, shape)
    return Point3(x=float(x), y=float(y), z=float(z))


def implicit_residual(point, shape: EllipsoidShape):
    """x²/a² + y²/b² + z²/c² − 1，可接受 Point3 或 (..., 3) 陣列"""
    p = point.as_array() if isinstance(point, Point3) else np.asarray(point, dtype=float)
    return (p[..., 0] / shape.a) ** 2 + (p[..., 1] / shape.b) ** 2 + (p[..., 2] / shape.c) ** 2 - 1


def first_fundamental_form(coords: CurvatureCoords, shape: EllipsoidShape) -> MetricSample:
    """
    g₁₁ = ¼(u − v) f(u)，g₁₂ = 0，g₂₂ = ¼(u − v)(−f(v))

    Raises:
        PoleError: 座標位於矩形邊界
    """
    u, v = coords.u, coords.v
    _check_rectangle(u, v, shape)
    g11 = 0.25 * (u - v) * f_weight(u, shape)
    g22 = -0.25 * (u - v) * f_weight(v, shape)
    return MetricSample(g11=g11, g12=0.0, g22=g22)


def line_element(coords: CurvatureCoords, du: float, dv: float, shape: EllipsoidShape) -> float:
    """ds² = ¼(u − v)(f(u) du² − f(v) dv²)"""
    g = first_fundamental_form(coords, shape)
    return g.g11 * du * du + 2 * g.g12 * du * dv + g.g22 * dv * dv
