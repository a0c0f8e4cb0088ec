"""
Liouville Ellipsoid - 獨立參考值
直接以自適應積分與二分法計算，與正式計算路徑互不共用程式碼，供測試使用
"""

import math

from scipy import integrate, optimize

from app.models.schemas import EllipsoidShape

_QUAD = {"epsabs": 1e-14, "epsrel": 1e-13, "limit": 400}


def carlson_rf_quadrature(x: float, y: float, z: float) -> float:
    """½∫₀^∞ dt / √((t+x)(t+y)(t+z))，代換 t = s²"""

    def integrand(s: float) -> float:
        if s == 0:
            return 0.0 if x > 0 else 1.0 / math.sqrt(y * z)
        t = s * s
        return s / math.sqrt((t + x) * (t + y) * (t + z))

    value, _ = integrate.quad(integrand, 0, math.inf, **_QUAD)
    return value


def carlson_rj_quadrature(x: float, y: float, z: float, p: float) -> float:
    """(3/2)∫₀^∞ dt / ((t+p)√((t+x)(t+y)(t+z)))，代換 t = s²"""

    def integrand(s: float) -> float:
        t = s * s
        if s == 0:
            return 0.0 if x > 0 else 2.0 / (p * math.sqrt(y * z))
        return 2 * s / ((t + p) * math.sqrt((t + x) * (t + y) * (t + z)))

    value, _ = integrate.quad(integrand, 0, math.inf, **_QUAD)
    return 1.5 * value


def ellint_pi_quadrature(n: float, phi: complex, m: float) -> complex:
    """
    Π(n; φ|m) 的定義積分；φ 為純虛數 iψ 時積分
    ∫₀^ψ dτ / ((1 + n sinh²τ)√(1 + m sinh²τ)) 並乘上 i
    """
    phi = complex(phi)
    if phi.imag == 0:
        value, _ = integrate.quad(
            lambda t: 1.0 / ((1 - n * math.sin(t) ** 2) * math.sqrt(1 - m * math.sin(t) ** 2)),
            0,
            phi.real,
            **_QUAD,
        )
        return complex(value, 0.0)

    def hyperbolic(t: float) -> float:
        sh2 = math.sinh(t) ** 2
        return 1.0 / ((1 + n * sh2) * math.sqrt(max(1 + m * sh2, 0.0)))

    value, _ = integrate.quad(hyperbolic, 0, phi.imag, **_QUAD)
    return complex(0.0, value)


def ellint_f_quadrature(phi: float, m: float) -> float:
    """F(φ|m) = ∫₀^φ dθ / √(1 − m sin²θ)"""
    value, _ = integrate.quad(lambda t: 1.0 / math.sqrt(1 - m * math.sin(t) ** 2), 0, phi, **_QUAD)
    return value


def amplitude_bisection(n: float, z: float, m: float) -> float:
    """在 [0, π/2] 上二分求解 Π(n; φ|m) = z（n = 0 時即經典振幅）"""
    return optimize.bisect(
        lambda phi: ellint_pi_quadrature(n, phi, m).real - z,
        0.0,
        math.pi / 2,
        xtol=1e-15,
        rtol=4 * 2.0 ** -52,
        maxiter=200,
    )


def classical_amplitude_bisection(z: float, m: float) -> float:
    """在 [0, π/2] 上二分求解 F(φ|m) = z"""
    return optimize.bisect(
        lambda phi: ellint_f_quadrature(phi, m) - z,
        0.0,
        math.pi / 2,
        xtol=1e-15,
        rtol=4 * 2.0 ** -52,
        maxiter=200,
    )


def x_of_u_quadrature(u: float, shape: EllipsoidShape) -> float:
    """X(u)：以 QUADPACK 代數權 (t − b²)^(−1/2)(a² − t)^β 處理端點奇異"""
    a2, b2, c2 = shape.a2, shape.b2, shape.c2
    if u == b2:
        return 0.0
    if u == a2:
        value, _ = integrate.quad(
            lambda t: math.sqrt(t / (t - c2)), b2, a2, weight="alg", wvar=(-0.5, -0.5), **_QUAD
        )
        return value
    value, _ = integrate.quad(
        lambda t: math.sqrt(t / ((a2 - t) * (t - c2))), b2, u, weight="alg", wvar=(-0.5, 0.0), **_QUAD
    )
    return value


def y_of_v_quadrature(v: float, shape: EllipsoidShape) -> float:
    """Y(v)：權重 (t − c²)^(−1/2)，v = b² 時再加 (b² − t)^(−1/2)"""
    a2, b2, c2 = shape.a2, shape.b2, shape.c2
    if v == c2:
        return 0.0
    if v == b2:
        value, _ = integrate.quad(
            lambda t: math.sqrt(t / (a2 - t)), c2, b2, weight="alg", wvar=(-0.5, -0.5), **_QUAD
        )
        return value
    value, _ = integrate.quad(
        lambda t: math.sqrt(t / ((a2 - t) * (b2 - t))), c2, v, weight="alg", wvar=(-0.5, 0.0), **_QUAD
    )
    return value
