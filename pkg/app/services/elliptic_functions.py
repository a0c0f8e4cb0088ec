"""
Liouville Ellipsoid - 橢圓函數服務
Carlson 對稱積分、第三類不完全橢圓積分 Π(n; φ|m) 及其反函數（廣義 Jacobi 振幅）
"""

import cmath
import math
from typing import Iterable, Optional, Tuple

import structlog

from app.core.config import Settings, get_settings
from app.core.errors import DomainError, NonConvergence
from app.models.schemas import ComplexValue, EllipticArgs
from app.services.root_solver import safeguarded_newton

logger = structlog.get_logger()

# 邊界上 1 − m sin²φ 的捨入容差
_RADICAND_CLAMP = 1e-14


def _check_carlson_args(args: Iterable[complex], name: str) -> None:
    for t in args:
        if not cmath.isfinite(t):
            raise DomainError(f"{name} 參數必須為有限值: {t}", value=t)
        if t.imag == 0 and t.real < 0:
            raise DomainError(f"{name} 參數位於分支切割（負實軸）上: {t}", value=t)


def carlson_rf(x: ComplexValue, y: ComplexValue, z: ComplexValue, config: Optional[Settings] = None) -> complex:
    """
    Carlson 對稱積分 R_F(x, y, z) = ½∫₀^∞ dt / √((t+x)(t+y)(t+z))

    以倍增法計算（Carlson 1995），主分支。
    """
    config = config or get_settings()
    x, y, z = complex(x), complex(y), complex(z)
    _check_carlson_args((x, y, z), "R_F")
    if sum(1 for t in (x, y, z) if t == 0) > 1:
        raise DomainError("R_F 至多允許一個參數為零", value=(x, y, z))

    a0 = (x + y + z) / 3
    q = (3 * config.CARLSON_RTOL) ** (-1 / 6) * max(abs(a0 - t) for t in (x, y, z))

    xm, ym, zm, am = x, y, z, a0
    scale = 1.0
    for _ in range(config.CARLSON_MAX_ITER):
        if q * scale < abs(am):
            break
        sx, sy, sz = cmath.sqrt(xm), cmath.sqrt(ym), cmath.sqrt(zm)
        lam = sx * sy + sx * sz + sy * sz
        xm, ym, zm, am = (xm + lam) / 4, (ym + lam) / 4, (zm + lam) / 4, (am + lam) / 4
        scale /= 4
    else:
        raise NonConvergence(f"R_F 倍增迭代在 {config.CARLSON_MAX_ITER} 步內未收斂", value=(x, y, z))

    dx = (a0 - x) * scale / am
    dy = (a0 - y) * scale / am
    dz = -(dx + dy)
    e2 = dx * dy - dz * dz
    e3 = dx * dy * dz

    return (1 - e2 / 10 + e3 / 14 + e2 * e2 / 24 - 3 * e2 * e3 / 44) / cmath.sqrt(am)


def carlson_rc(x: ComplexValue, y: ComplexValue, config: Optional[Settings] = None) -> complex:
    """R_C(x, y) = R_F(x, y, y)，僅用於 R_J 的倍增和"""
    config = config or get_settings()
    x, y = complex(x), complex(y)
    _check_carlson_args((x, y), "R_C")
    if y == 0:
        raise DomainError("R_C 的第二個參數不可為零", value=y)

    a0 = (x + 2 * y) / 3
    q = (3 * config.CARLSON_RTOL) ** (-1 / 8) * abs(a0 - x)

    xm, ym, am = x, y, a0
    scale = 1.0
    for _ in range(config.CARLSON_MAX_ITER):
        if q * scale < abs(am):
            break
        lam = 2 * cmath.sqrt(xm) * cmath.sqrt(ym) + ym
        xm, ym, am = (xm + lam) / 4, (ym + lam) / 4, (am + lam) / 4
        scale /= 4
    else:
        raise NonConvergence(f"R_C 倍增迭代在 {config.CARLSON_MAX_ITER} 步內未收斂", value=(x, y))

    s = (y - a0) * scale / am
    poly = 1 + s * s * (3 / 10 + s * (1 / 7 + s * (3 / 8 + s * (9 / 22 + s * (159 / 208 + s * 9 / 8)))))
    return poly / cmath.sqrt(am)


def carlson_rj(
    x: ComplexValue,
    y: ComplexValue,
    z: ComplexValue,
    p: ComplexValue,
    config: Optional[Settings] = None,
) -> complex:
    """
    Carlson 對稱積分 R_J(x, y, z, p) = (3/2)∫₀^∞ dt / ((t+p)√((t+x)(t+y)(t+z)))

    倍增法，對 x, y, z 對稱；p 不可為零。
    """
    config = config or get_settings()
    x, y, z, p = complex(x), complex(y), complex(z), complex(p)
    _check_carlson_args((x, y, z, p), "R_J")
    if p == 0:
        raise DomainError("R_J 的 p 不可為零", value=p)
    if sum(1 for t in (x, y, z) if t == 0) > 1:
        raise DomainError("R_J 至多允許一個參數為零", value=(x, y, z))

    a0 = (x + y + z + 2 * p) / 5
    delta = (p - x) * (p - y) * (p - z)
    q = (config.CARLSON_RTOL / 4) ** (-1 / 6) * max(abs(a0 - t) for t in (x, y, z, p))

    xm, ym, zm, pm, am = x, y, z, p, a0
    scale = 1.0
    total = 0j
    for _ in range(config.CARLSON_MAX_ITER):
        if q * scale < abs(am):
            break
        sx, sy, sz, sp = cmath.sqrt(xm), cmath.sqrt(ym), cmath.sqrt(zm), cmath.sqrt(pm)
        lam = sx * sy + sx * sz + sy * sz
        d = (sp + sx) * (sp + sy) * (sp + sz)
        e = scale ** 3 * delta / (d * d)
        total += scale / d * carlson_rc(1, 1 + e, config)
        xm, ym, zm, pm = (xm + lam) / 4, (ym + lam) / 4, (zm + lam) / 4, (pm + lam) / 4
        am = (am + lam) / 4
        scale /= 4
    else:
        raise NonConvergence(f"R_J 倍增迭代在 {config.CARLSON_MAX_ITER} 步內未收斂", value=(x, y, z, p))

    dx = (a0 - x) * scale / am
    dy = (a0 - y) * scale / am
    dz = (a0 - z) * scale / am
    dp = -(dx + dy + dz) / 2
    e2 = dx * dy + dx * dz + dy * dz - 3 * dp * dp
    e3 = dx * dy * dz + 2 * e2 * dp + 4 * dp ** 3
    e4 = (2 * dx * dy * dz + e2 * dp + 3 * dp ** 3) * dp
    e5 = dx * dy * dz * dp * dp

    poly = (
        1
        - 3 * e2 / 14
        + e3 / 6
        + 9 * e2 * e2 / 88
        - 3 * e4 / 22
        - 9 * e2 * e3 / 52
        + 3 * e5 / 26
    )
    return scale * poly / (am * cmath.sqrt(am)) + 6 * total


def _clamp(value: float) -> float:
    """把邊界上的微小負值歸零"""
    if -_RADICAND_CLAMP < value < 0:
        return 0.0
    return value


def ellint_f(phi: float, m: float, config: Optional[Settings] = None) -> float:
    """
    第一類不完全橢圓積分 F(φ|m)，只在內部使用（經典振幅與測試基準）
    """
    if not m < 1:
        raise DomainError(f"ellint_f 需要 m < 1: {m}", value=m)
    k = round(phi / math.pi)
    r = phi - k * math.pi
    s = math.sin(r)
    value = (s * carlson_rf(math.cos(r) ** 2, 1 - m * s * s, 1, config)).real
    if k:
        value += 2 * k * carlson_rf(0, 1 - m, 1, config).real
    return value


def complete_ellint_pi(n: float, m: float, config: Optional[Settings] = None) -> float:
    """完全積分 Π(n | m) = Π(n; π/2 | m)，需要 n < 1、m < 1"""
    if not (n < 1 and m < 1):
        raise DomainError(f"完全積分需要 n < 1 且 m < 1: n={n}, m={m}", value=(n, m))
    rf = carlson_rf(0, 1 - m, 1, config)
    rj = carlson_rj(0, 1 - m, 1, 1 - n, config)
    return (rf + n / 3 * rj).real


def _pi_real(n: float, phi: float, m: float, config: Settings) -> float:
    k = round(phi / math.pi)
    r = phi - k * math.pi
    if k and not (n < 1 and m < 1):
        raise DomainError(f"振幅 {phi} 超過 π/2，需要 n < 1 且 m < 1", value=phi)

    s = math.sin(r)
    s2 = s * s
    # 路徑上 sin²θ 的最大值
    max_s2 = 1.0 if k else s2
    m_term = _clamp(1 - m * s2)
    if m_term < 0:
        raise DomainError(f"m·sin²φ 必須不大於 1: m={m}, φ={phi}", value=phi)
    c2 = math.cos(r) ** 2
    if m_term == 0 and c2 < _RADICAND_CLAMP:
        raise DomainError(f"m = 1 時 Π 在 φ = π/2 發散: φ={phi}", value=phi)
    if n > 0 and n * max_s2 >= 1:
        raise DomainError(f"被積函數的極點 n·sin²θ = 1 位於積分路徑上: n={n}, φ={phi}", value=phi)

    value = 0.0
    if s != 0:
        rf = carlson_rf(c2, m_term, 1, config)
        rj = carlson_rj(c2, m_term, 1, 1 - n * s2, config)
        value = (s * rf + n / 3 * s * s2 * rj).real
    if k:
        value += 2 * k * complete_ellint_pi(n, m, config)
    return value


def _pi_hyperbolic(n: float, psi: float, m: float, config: Settings) -> float:
    """
    I(ψ) = ∫₀^ψ dτ / ((1 + n sinh²τ)√(1 + m sinh²τ))，滿足 Π(n; iψ|m) = i·I(ψ)
    """
    if psi == 0:
        return 0.0
    sh = math.sinh(psi)
    t = sh * sh
    m_term = _clamp(1 + m * t)
    n_term = 1 + n * t
    if m_term < 0:
        raise DomainError(f"1 + m·sinh²ψ 在路徑上變號: m={m}, ψ={psi}", value=psi)
    if n_term <= 0:
        raise DomainError(f"被積函數的極點 1 + n·sinh²τ = 0 位於積分路徑上: n={n}, ψ={psi}", value=psi)

    ch2 = math.cosh(psi) ** 2
    rf = carlson_rf(ch2, m_term, 1, config)
    rj = carlson_rj(ch2, m_term, 1, n_term, config)
    return (sh * rf - n / 3 * sh * t * rj).real


def ellint_pi(args: EllipticArgs, config: Optional[Settings] = None) -> complex:
    """
    第三類不完全橢圓積分
    Π(n; φ|m) = ∫₀^φ dθ / ((1 − n sin²θ)√(1 − m sin²θ))

    支援實數振幅（超過 ±π/2 時以完全積分做準週期延拓）與純虛數振幅。

    Args:
        args: EllipticArgs(n, phi, m)

    Returns:
        complex 結果；實數路徑的虛部恰為 0
    """
    config = config or get_settings()
    n, phi, m = args.n, args.phi, args.m

    if phi.imag == 0:
        return complex(_pi_real(n, phi.real, m, config), 0.0)
    if phi.real == 0:
        return complex(0.0, _pi_hyperbolic(n, phi.imag, m, config))
    raise DomainError(f"只支援實數或純虛數振幅: {phi}", value=phi)


def _real_branch_end(n: float, m: float) -> Tuple[float, bool]:
    """
    n ≥ 1 或 m ≥ 1 時實軸單調分支的終點 φ_end，以及 Π 在該處是否發散
    """
    ends = [math.pi / 2]
    if n >= 1:
        ends.append(math.asin(1 / math.sqrt(n)))
    if m >= 1:
        ends.append(math.asin(1 / math.sqrt(m)))
    upper = min(ends)
    # 極點 n sin²φ = 1 或 m = 1 的對數奇點
    unbounded = (n >= 1 and math.asin(1 / math.sqrt(n)) <= upper) or m == 1
    return upper, unbounded


def _solve_real_branch(n: float, target: float, m: float, upper: float, config: Settings) -> float:
    def residual(phi: float) -> float:
        return _pi_real(n, phi, m, config) - target

    def slope(phi: float) -> float:
        s2 = math.sin(phi) ** 2
        m_term = 1 - m * s2
        if m_term <= 0:
            return math.inf
        return 1.0 / ((1 - n * s2) * math.sqrt(m_term))

    result = safeguarded_newton(
        residual,
        slope,
        0.0,
        upper,
        x0=min(target, upper),
        ftol=config.ROOT_TOL * (1 + target),
        accept_tol=config.ROOT_ACCEPT_TOL * (1 + target),
        max_iter=config.ROOT_MAX_ITER,
    )
    if result.bisections:
        logger.debug(f"廣義振幅求根使用了 {result.bisections} 次二分")
    return result.root


def _real_amplitude(n: float, z: float, m: float, config: Settings) -> float:
    if z == 0:
        return 0.0

    if n < 1 and m < 1:
        complete = complete_ellint_pi(n, m, config)
        # 準週期：z = 2kΠ(n|m) + r，r ∈ [−Π(n|m), Π(n|m)]
        k = round(z / (2 * complete))
        r = z - 2 * k * complete
        return k * math.pi + math.copysign(_solve_real_branch(n, abs(r), m, math.pi / 2, config), r)

    # 沒有週期延拓，只在 [0, φ_end] 上求解
    target = abs(z)
    upper, unbounded = _real_branch_end(n, m)
    if not unbounded:
        total = _pi_real(n, upper, m, config)
        if target > total + config.ROOT_ACCEPT_TOL * (1 + target):
            raise DomainError(f"|z| = {target} 超出單調分支的值域 [0, {total}]", value=z)
        if target >= total:
            return math.copysign(upper, z)
    else:
        bracket = None
        for j in range(1, 60):
            candidate = upper * (1 - 2.0 ** -j)
            if _pi_real(n, candidate, m, config) >= target:
                bracket = candidate
                break
        if bracket is None:
            raise DomainError(f"|z| = {target} 超出單調分支的可解範圍", value=z)
        upper = bracket
    return math.copysign(_solve_real_branch(n, target, m, upper, config), z)


def _hyperbolic_branch_end(n: float, m: float) -> Optional[float]:
    """1 + n sinh² 或 1 + m sinh² 第一個零點對應的 ψ；兩者皆非負時回傳 None"""
    limits = [-1.0 / p for p in (n, m) if p < 0]
    if not limits:
        return None
    return math.asinh(math.sqrt(min(limits)))


def _imaginary_amplitude(n: float, k_value: float, m: float, config: Settings) -> float:
    """解 I(ψ) = |K|，回傳帶符號的 ψ"""
    target = abs(k_value)
    if target == 0:
        return 0.0

    psi_end = _hyperbolic_branch_end(n, m)
    pole_first = n < 0 and (m >= 0 or -1.0 / n <= -1.0 / m)

    if psi_end is not None and not pole_first:
        # 分支終點為 √ 奇點，I 在該處有限
        upper = psi_end
        total = _pi_hyperbolic(n, upper, m, config)
        accept = config.ROOT_ACCEPT_TOL * (1 + target)
        if target > total + accept:
            raise DomainError(f"|z| = {target} 超出單調分支的值域 [0, {total}]", value=k_value)
        if target >= total:
            return math.copysign(upper, k_value)
    else:
        # 值域無界（極點）或需向外擴張區間
        upper = None
        for j in range(1, 60):
            candidate = psi_end * (1 - 2.0 ** -j) if psi_end is not None else 0.5 * 2.0 ** j
            if _pi_hyperbolic(n, candidate, m, config) >= target:
                upper = candidate
                break
        if upper is None:
            raise DomainError(f"|z| = {target} 超出單調分支的值域", value=k_value)

    def residual(psi: float) -> float:
        return _pi_hyperbolic(n, psi, m, config) - target

    def slope(psi: float) -> float:
        t = math.sinh(psi) ** 2
        m_term = 1 + m * t
        if m_term <= 0:
            return math.inf
        return 1.0 / ((1 + n * t) * math.sqrt(m_term))

    result = safeguarded_newton(
        residual,
        slope,
        0.0,
        upper,
        x0=min(target, upper),
        ftol=config.ROOT_TOL * (1 + target),
        accept_tol=config.ROOT_ACCEPT_TOL * (1 + target),
        max_iter=config.ROOT_MAX_ITER,
    )
    return math.copysign(result.root, k_value)


def gen_jacobi_am(n: float, z: ComplexValue, m: float, config: Optional[Settings] = None) -> complex:
    """
    廣義 Jacobi 振幅 am(n; z|m) = φ，其中 z = Π(n; φ|m)

    z 為實數時在實軸上求解；z 為純虛數時解對應的雙曲積分，結果亦為純虛數。
    n = 0 時退化為經典振幅 am(z|m)。
    """
    config = config or get_settings()
    z = complex(z)
    if not cmath.isfinite(z):
        raise DomainError(f"z 必須為有限值: {z}", value=z)

    if z.imag == 0:
        return complex(_real_amplitude(n, z.real, m, config), 0.0)
    if z.real == 0:
        return complex(0.0, _imaginary_amplitude(n, z.imag, m, config))
    raise DomainError(f"只支援實數或純虛數的 z: {z}", value=z)


def gen_jacobi_sn(n: float, z: ComplexValue, m: float, config: Optional[Settings] = None) -> complex:
    """廣義 Jacobi 橢圓函數 sn(n; z|m) = sin(am(n; z|m))"""
    return cmath.sin(gen_jacobi_am(n, z, m, config))


def jacobi_am(z: float, m: float, config: Optional[Settings] = None) -> float:
    """經典 Jacobi 振幅 am(z|m) = am(0; z|m)"""
    return gen_jacobi_am(0.0, z, m, config).real
