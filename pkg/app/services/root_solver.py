"""
Liouville Ellipsoid - 安全牛頓法求根
以區間夾逼保護的 Newton-Raphson，必要時退回二分法
"""

import math
from typing import Callable, Optional

import structlog

from app.core.errors import DomainError, NonConvergence
from app.models.schemas import RootResult

logger = structlog.get_logger()


def _check_machine_limited(x: float, fx: float, resolution: float, accept_tol: float) -> None:
    """
    區間塌縮到浮點解析度時的殘差檢查

    殘差超過 accept_tol 時，只有在斜率乘上區間寬度足以解釋它（陡峭但連續）才接受；
    否則區間夾住的是跳躍或極點而不是根。
    """
    if abs(fx) <= accept_tol:
        return
    if abs(fx) <= 2 * resolution:
        logger.warning(f"求根受限於浮點解析度: 殘差 {fx:.3e} 超過可接受容差 {accept_tol:.1e}")
        return
    raise NonConvergence(f"區間已塌縮於 {x}，但殘差 {fx:.3e} 超過可接受容差", value=x, residual=fx)


def safeguarded_newton(
    func: Callable[[float], float],
    dfunc: Callable[[float], float],
    lo: float,
    hi: float,
    x0: Optional[float] = None,
    ftol: float = 1e-12,
    accept_tol: float = 1e-10,
    max_iter: int = 80,
) -> RootResult:
    """
    求遞增函數 func 在 [lo, hi] 上的根

    Args:
        func: 目標函數，須滿足 func(lo) <= 0 <= func(hi)
        dfunc: 導數（可回傳 inf，例如端點奇異處）
        lo, hi: 夾逼區間
        x0: 初始猜值，None 時取中點
        ftol: 殘差目標 |func(x)| <= ftol
        accept_tol: 迭代耗盡或區間塌縮時仍可接受的殘差
        max_iter: 最大迭代次數

    Returns:
        RootResult，machine_limited 表示區間已縮到浮點解析度
    """
    f_lo = func(lo)
    if f_lo >= 0:
        if f_lo > accept_tol:
            raise DomainError(f"根不在區間 [{lo}, {hi}] 內: f(lo) = {f_lo}", value=lo)
        return RootResult(root=lo, residual=f_lo, iterations=0)

    f_hi = func(hi)
    if f_hi <= 0:
        if f_hi < -accept_tol:
            raise DomainError(f"根不在區間 [{lo}, {hi}] 內: f(hi) = {f_hi}", value=hi)
        return RootResult(root=hi, residual=f_hi, iterations=0)

    x = 0.5 * (lo + hi) if x0 is None or not lo < x0 < hi else x0
    fx = func(x)
    step_old = hi - lo
    bisections = 0

    for iteration in range(1, max_iter + 1):
        if abs(fx) <= ftol:
            return RootResult(root=x, residual=fx, iterations=iteration, bisections=bisections)

        if fx < 0:
            lo = x
        else:
            hi = x

        if hi - lo <= 4 * math.ulp(max(abs(lo), abs(hi))):
            _check_machine_limited(x, fx, abs(dfunc(x)) * (hi - lo), accept_tol)
            return RootResult(
                root=x, residual=fx, iterations=iteration, bisections=bisections, machine_limited=True
            )

        slope = dfunc(x)
        use_newton = math.isfinite(slope) and slope > 0
        if use_newton:
            candidate = x - fx / slope
            # 牛頓步跳出區間或收斂太慢時改用二分
            use_newton = lo < candidate < hi and abs(2.0 * fx) <= abs(step_old * slope)

        if not use_newton:
            candidate = 0.5 * (lo + hi)
            bisections += 1

        step_old = abs(candidate - x)
        x = candidate
        fx = func(x)

    if abs(fx) <= accept_tol:
        logger.info(f"求根達到可接受容差但未達目標: 殘差 {fx:.3e}")
        return RootResult(root=x, residual=fx, iterations=max_iter, bisections=bisections)

    raise NonConvergence(f"求根在 {max_iter} 步內未收斂，殘差 {fx:.3e}", value=x, residual=fx)
