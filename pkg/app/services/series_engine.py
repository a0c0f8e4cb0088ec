"""
Liouville Ellipsoid - 級數服務
X(u)、Y(v) 的奇次冪級數、U(x)、V(y) 的反演級數，以及半正矢型正規化係數

係數由演算法展開與反演取得，支援有理數（精確）、浮點與符號三種係數域。
"""

import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog
import sympy
from sympy.polys.constructor import construct_domain
from sympy.polys.ring_series import (
    rs_asin,
    rs_cos,
    rs_integrate,
    rs_mul,
    rs_series_reversion,
    rs_square,
)
from sympy.polys.rings import ring

from app.core.config import Settings, get_settings
from app.core.errors import DomainError, OrderTooLarge, ReversionDegenerate
from app.models.schemas import (
    EllipsoidShape,
    ForwardSeries,
    InverseSeries,
    NormalizedCoefficients,
    SeriesEvaluation,
)

logger = structlog.get_logger()

FAMILIES = ("A", "B", "C", "D", "alpha", "beta", "gamma", "delta")


def _check_order(K: int, config: Settings) -> None:
    if K < 1:
        raise DomainError(f"截斷階數 K 必須至少為 1: {K}", value=K)
    if K > config.SERIES_MAX_ORDER:
        raise OrderTooLarge(f"截斷階數 K = {K} 超過上限 {config.SERIES_MAX_ORDER}", value=K)


def hav_coefficients(K: int) -> Dict[int, sympy.Rational]:
    """hav(z) = sin²(z/2) 的 Maclaurin 係數 {2k: (−1)^(k−1) / (2(2k)!)}，k = 1..K"""
    R, z = ring("z", sympy.QQ)
    series = (1 - rs_cos(z, z, 2 * K + 1)) / 2
    return {2 * k: sympy.QQ.to_sympy(series.coeff(z ** (2 * k))) for k in range(1, K + 1)}


def inverse_hav_coefficients(K: int) -> Dict[int, sympy.Rational]:
    """hav⁻¹(z) = 2 arcsin(√z) 對 √z 的係數 {2k+1: C(2k,k) / (2^(2k−1)(2k+1))}，k = 0..K"""
    R, t = ring("t", sympy.QQ)
    series = 2 * rs_asin(t, t, 2 * K + 2)
    return {2 * k + 1: sympy.QQ.to_sympy(series.coeff(t ** (2 * k + 1))) for k in range(0, K + 1)}


def _forward_factor(k: int, exact: bool):
    if exact:
        return sympy.binomial(2 * k, k) / (sympy.Integer(2) ** (2 * k - 1) * (2 * k + 1))
    return math.comb(2 * k, k) / (2.0 ** (2 * k - 1) * (2 * k + 1))


def _inverse_factor(k: int, exact: bool):
    if exact:
        return sympy.Integer(-1) ** (k - 1) / (2 * sympy.factorial(2 * k))
    return (-1) ** (k - 1) / (2.0 * math.factorial(2 * k))


class _OddSeriesBuilder:
    """
    在係數域 K 上計算
        H(w) = ∫₀^w (1 + p w²)^(1/2) (1 + q w²)^(−1/2) (1 + r w²)^(−1/2) dw
    及其反演級數的平方 w(ξ)²
    """

    def __init__(self, domain, K: int):
        self.domain = domain
        self.K = K
        self.R, self.w, self.xi = ring("w, xi", domain)
        self.half = domain.convert(sympy.Rational(1, 2))

    def _binomial(self, coeff, power):
        """(1 + coeff·w²)^power 截斷到 w^(2K)"""
        dom = self.domain
        terms = {(0, 0): dom.one}
        c = dom.one
        for k in range(1, self.K + 1):
            c = c * (power - dom.convert(k - 1)) * coeff / dom.convert(k)
            terms[(2 * k, 0)] = c
        return self.R(terms)

    def integral(self, p, q, r):
        prec = 2 * self.K + 1
        integrand = rs_mul(self._binomial(p, self.half), self._binomial(q, -self.half), self.w, prec)
        integrand = rs_mul(integrand, self._binomial(r, -self.half), self.w, prec)
        return rs_integrate(integrand, self.w)

    def reversed_square(self, h: Sequence[Any]):
        """給定 H(w) = Σ h[k] w^(2k+1)，回傳 w(ξ)² 的係數 {k: e_k}，k = 1..K"""
        dom = self.domain
        if h[0] == dom.zero:
            raise ReversionDegenerate("級數首項係數為零，無法反演")
        lead = h[0]
        series = self.R({(2 * k + 1, 0): h[k] / lead for k in range(len(h))})
        reverted = rs_series_reversion(series, self.w, 2 * self.K + 2, self.xi)
        squared = rs_square(reverted, self.xi, 2 * self.K + 1)
        # 首項非 1 時 ξ 需縮放
        scale = dom.one / lead
        return {
            k: squared.get((0, 2 * k), dom.zero) * scale ** (2 * k)
            for k in range(1, self.K + 1)
        }


def _domain_for(values: Sequence[Any]):
    domain, converted = construct_domain([sympy.sympify(v) for v in values], field=True)
    return domain, converted


def _to_output(domain, value, exact: bool):
    expr = domain.to_sympy(value)
    return sympy.cancel(expr) if exact else float(expr)


def forward_coefficients(a2: Any, b2: Any, c2: Any, K: int, config: Optional[Settings] = None) -> ForwardSeries:
    """
    係數域通用的正向級數

    Args:
        a2, b2, c2: 半軸平方，可為 sympy 有理數、浮點數或正值符號
        K: 截斷階數，產生 A[1], A[3], ..., A[2K+1]
    """
    config = config or get_settings()
    _check_order(K, config)

    exact = not all(isinstance(v, float) for v in (a2, b2, c2))
    domain, (da2, db2, dc2) = _domain_for([a2, b2, c2])
    builder = _OddSeriesBuilder(domain, K)

    big_a, big_b, big_c = da2 - db2, db2 - dc2, da2 - dc2
    # X：t = b² + P w²，P = (a²−b²)(b²−c²)
    hx = builder.integral(big_a * big_b / db2, -big_b, big_a)
    # Y：t = c² + Q w²，Q = (a²−c²)(b²−c²)
    hy = builder.integral(big_c * big_b / dc2, -big_b, -big_c)

    if exact:
        sa2, sb2, sc2 = (sympy.sympify(v) for v in (a2, b2, c2))
        b, c = sympy.sqrt(sb2), sympy.sqrt(sc2)
    else:
        sa2, sb2, sc2 = float(a2), float(b2), float(c2)
        b, c = math.sqrt(sb2), math.sqrt(sc2)

    A, B = {}, {}
    for k in range(K + 1):
        h_x = _to_output(domain, hx.get((2 * k + 1, 0), domain.zero), exact)
        h_y = _to_output(domain, hy.get((2 * k + 1, 0), domain.zero), exact)
        A[2 * k + 1] = 2 * b * h_x
        B[2 * k + 1] = 2 * c * h_y

    logger.debug(f"正向級數展開完成: K = {K}, 係數域 {domain}")
    return ForwardSeries(order=K, exact=exact, a2=sa2, b2=sb2, c2=sc2, b=b, c=c, A=A, B=B)


def forward_series(
    shape: EllipsoidShape,
    K: Optional[int] = None,
    exact: bool = False,
    config: Optional[Settings] = None,
) -> ForwardSeries:
    """
    X(u) = Σ A[2k+1] w_u^(2k+1)，Y(v) = Σ B[2k+1] w_v^(2k+1)

    exact=True 時把半軸的十進位表示轉成有理數後精確計算。
    """
    config = config or get_settings()
    K = K or config.SERIES_DEFAULT_ORDER
    if exact:
        a, b, c = (sympy.Rational(repr(s)) for s in shape.axes)
        series = forward_coefficients(a ** 2, b ** 2, c ** 2, K, config)
    else:
        series = forward_coefficients(shape.a2, shape.b2, shape.c2, K, config)
    return series.model_copy(update={"shape": shape})


def inverse_series(forward: ForwardSeries, config: Optional[Settings] = None) -> InverseSeries:
    """
    以級數反演得到
    U(x) = b² + (a²−b²)(b²−c²) Σ C[2k] x^(2k)，V(y) = c² + (c²−a²)(c²−b²) Σ D[2k] y^(2k)
    """
    K = forward.order
    # h[k] = A[2k+1] / (2b) 屬於 a², b², c² 生成的係數域
    hx = [forward.A[2 * k + 1] / (2 * forward.b) for k in range(K + 1)]
    hy = [forward.B[2 * k + 1] / (2 * forward.c) for k in range(K + 1)]
    if forward.exact:
        hx = [sympy.cancel(h) for h in hx]
        hy = [sympy.cancel(h) for h in hy]

    base = [forward.a2, forward.b2, forward.c2]
    domain, converted = _domain_for(base + hx + hy)
    db2, dc2 = converted[1], converted[2]
    dhx = converted[3:4 + K]
    dhy = converted[4 + K:]
    builder = _OddSeriesBuilder(domain, K)

    # x = 2b·H(w) → ξ = x/(2b)，w² 的係數再除以 (4b²)^k
    ex = builder.reversed_square(dhx)
    ey = builder.reversed_square(dhy)
    four = domain.convert(4)
    C = {2 * k: _to_output(domain, ex[k] / (four * db2) ** k, forward.exact) for k in ex}
    D = {2 * k: _to_output(domain, ey[k] / (four * dc2) ** k, forward.exact) for k in ey}

    return InverseSeries(
        order=K,
        exact=forward.exact,
        b2=forward.b2,
        c2=forward.c2,
        u_prefactor=forward.u_scale,
        v_prefactor=forward.v_scale,
        C=C,
        D=D,
    )


def normalized_coefficients(forward: ForwardSeries, inverse: InverseSeries) -> NormalizedCoefficients:
    """
    α, β, γ, δ：除去半正矢係數與 b、c 的冪次後的係數

    A[2k+1] = C(2k,k) α / (2^(2k−1)(2k+1) b^(2k−1))
    B[2k+1] = C(2k,k) (−1)^k β / (2^(2k−1)(2k+1) c^(2k−1))
    C[2k] = (−1)^(k−1) γ / (2(2k)! b^(2(2k−1)))
    D[2k] = δ / (2(2k)! c^(2(2k−1)))
    """
    if forward.order != inverse.order:
        raise DomainError(f"正向與反演級數的階數不一致: {forward.order} != {inverse.order}")
    exact = forward.exact
    b, c = forward.b, forward.c
    simplify = sympy.cancel if exact else (lambda value: value)

    forward_factors = {2 * k + 1: _forward_factor(k, exact) for k in range(forward.order + 1)}
    inverse_factors = {2 * k: _inverse_factor(k, exact) for k in range(1, inverse.order + 1)}

    alpha, beta, gamma, delta = {}, {}, {}, {}
    for index, factor in forward_factors.items():
        k = (index - 1) // 2
        alpha[index] = simplify(forward.A[index] * b ** (2 * k - 1) / factor)
        beta[index] = simplify(forward.B[index] * c ** (2 * k - 1) * (-1) ** k / factor)

    for index, factor in inverse_factors.items():
        k = index // 2
        sign = (-1) ** (k - 1)
        gamma[index] = simplify(inverse.C[index] * b ** (2 * (2 * k - 1)) / factor)
        delta[index] = simplify(inverse.D[index] * c ** (2 * (2 * k - 1)) * sign / factor)

    return NormalizedCoefficients(
        order=forward.order,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        delta=delta,
        forward_factors=forward_factors,
        inverse_factors=inverse_factors,
    )


def _horner(coefficients: Dict[int, Any], first: int, t: float) -> float:
    """Σ coefficients[first + 2k] t^k"""
    total = 0.0
    for index in sorted(coefficients, reverse=True):
        if index >= first:
            total = total * t + float(coefficients[index])
    return total


def _quality(w: float, config: Settings) -> bool:
    warn = abs(w) > config.SERIES_WARN_RADIUS
    if warn:
        logger.warning(f"級數在縮放變數 |w| = {abs(w):.3f} 處求值，超出 {config.SERIES_WARN_RADIUS}")
    return warn


def eval_forward_series(
    series: ForwardSeries,
    value: float,
    coordinate: str = "u",
    config: Optional[Settings] = None,
) -> SeriesEvaluation:
    """
    以 Horner 法求 X(u)（coordinate="u"）或 Y(v)（coordinate="v"）

    Raises:
        DomainError: 縮放變數的根號內為負
    """
    config = config or get_settings()
    if coordinate == "u":
        origin, scale, coefficients = float(series.b2), float(series.u_scale), series.A
    elif coordinate == "v":
        origin, scale, coefficients = float(series.c2), float(series.v_scale), series.B
    else:
        raise DomainError(f"coordinate 必須為 'u' 或 'v': {coordinate}", value=coordinate)

    radicand = value - origin
    if radicand < 0:
        raise DomainError(f"縮放變數的根號內為負: {coordinate} = {value}", value=value)
    w = math.sqrt(radicand / scale)
    result = w * _horner(coefficients, 1, w * w)
    return SeriesEvaluation(value=result, scaled_variable=w, quality_warning=_quality(w, config))


def eval_inverse_series(
    series: InverseSeries,
    value: float,
    coordinate: str = "x",
    config: Optional[Settings] = None,
) -> SeriesEvaluation:
    """
    以 Horner 法求 U(x)（coordinate="x"）或 V(y)（coordinate="y"）

    縮放變數取 x/(2b) 或 y/(2c)，與正向級數的 w 一階相同。
    """
    config = config or get_settings()
    if coordinate == "x":
        origin, prefactor, coefficients = float(series.b2), float(series.u_prefactor), series.C
    elif coordinate == "y":
        origin, prefactor, coefficients = float(series.c2), float(series.v_prefactor), series.D
    else:
        raise DomainError(f"coordinate 必須為 'x' 或 'y': {coordinate}", value=coordinate)
    if value < 0:
        raise DomainError(f"{coordinate} 必須非負: {value}", value=value)

    t = value * value
    result = origin + prefactor * t * _horner(coefficients, 2, t)
    scaled = value / (2 * math.sqrt(origin))
    return SeriesEvaluation(value=result, scaled_variable=scaled, quality_warning=_quality(scaled, config))


def series_error_curve(shape: EllipsoidShape, K: Optional[int] = None, samples: int = 20) -> pd.DataFrame:
    """
    截斷正向級數相對積分值的誤差，作為縮放變數 w 的函數

    Returns:
        欄位 w, u, series, quadrature, error 的 DataFrame
    """
    from app.services.conformal_maps import x_of_u

    series = forward_series(shape, K)
    w_max = math.sqrt((shape.a2 - shape.b2) / series.u_scale)
    rows = []
    for w in np.linspace(0.0, w_max, samples + 1)[1:]:
        u = min(shape.b2 + series.u_scale * w * w, shape.a2)
        approx = eval_forward_series(series, u).value
        exact_value = x_of_u(u, shape)
        rows.append({"w": w, "u": u, "series": approx, "quadrature": exact_value, "error": abs(approx - exact_value)})
    return pd.DataFrame(rows)


def _split_fraction(value) -> Tuple[str, str]:
    numerator, denominator = sympy.fraction(sympy.cancel(value))
    return str(numerator), str(denominator)


def coefficient_table(
    forward: ForwardSeries,
    inverse: InverseSeries,
    normalized: NormalizedCoefficients,
    exact: Optional[bool] = None,
    families: Sequence[str] = FAMILIES,
) -> pd.DataFrame:
    """
    長格式係數表：family, k, 以及 numerator/denominator（精確）或 float
    """
    exact = forward.exact if exact is None else exact
    sources = {
        "A": forward.A,
        "B": forward.B,
        "C": inverse.C,
        "D": inverse.D,
        "alpha": normalized.alpha,
        "beta": normalized.beta,
        "gamma": normalized.gamma,
        "delta": normalized.delta,
    }
    unknown = [name for name in families if name not in sources]
    if unknown:
        raise DomainError(f"未知的係數族: {', '.join(unknown)}", value=unknown)

    rows: List[Dict[str, Any]] = []
    for family in families:
        for k, value in sorted(sources[family].items()):
            if exact:
                numerator, denominator = _split_fraction(value)
                rows.append({"family": family, "k": k, "numerator": numerator, "denominator": denominator})
            else:
                rows.append({"family": family, "k": k, "float": float(value)})
    return pd.DataFrame(rows)
