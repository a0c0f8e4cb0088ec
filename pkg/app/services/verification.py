"""
Liouville Ellipsoid - 驗證套件
對單一橢球執行八項驗收檢查，回傳含最大殘差與耗時的報告
"""

import math
import time
from typing import Callable, Dict, List, Tuple

import numpy as np
import structlog
import sympy

from app.core.errors import LiouvilleError
from app.models.schemas import CheckResult, EllipsoidShape, InverseSource, VerificationReport, VerifyProfile
from app.services.conformal_maps import get_conformal_maps
from app.services.ellipsoid_core import implicit_residual
from app.services.inverse_maps import get_inverse_maps
from app.services.mesh_figure import conformality_report, liouville_grid
from app.services.series_engine import (
    eval_forward_series,
    eval_inverse_series,
    forward_series,
    inverse_series,
    normalized_coefficients,
)

logger = structlog.get_logger()

# 各項檢查的取樣規模
PROFILE_SIZES: Dict[VerifyProfile, Dict[str, int]] = {
    VerifyProfile.QUICK: {
        "closed_grid": 20,
        "roundtrip": 100,
        "closed_inverse": 10,
        "metric_grid": 8,
        "ode_points": 20,
        "mesh_grid": 65,
        "procedure_grid": 33,
    },
    VerifyProfile.FULL: {
        "closed_grid": 100,
        "roundtrip": 1000,
        "closed_inverse": 100,
        "metric_grid": 30,
        "ode_points": 100,
        "mesh_grid": 65,
        "procedure_grid": 65,
    },
}


def closed_form_coefficients(a2, b2, c2) -> Dict[str, Dict[int, sympy.Expr]]:
    """A₁..A₅、B₁..B₅、C₂..C₆、D₂..D₆ 與 α、β、γ、δ 的已知閉式"""
    a2, b2, c2 = (sympy.sympify(v) for v in (a2, b2, c2))
    a4, b4, c4 = a2 ** 2, b2 ** 2, c2 ** 2
    b, c = sympy.sqrt(b2), sympy.sqrt(c2)

    a5_top = -a4 * c4 + 4 * a4 * b2 * c2 - 10 * a2 * b4 * c2 + 4 * a2 * b2 * c4 + 3 * b4 ** 2
    b5_top = -a4 * b4 + 4 * a4 * b2 * c2 + 4 * a2 * b4 * c2 - 10 * a2 * b2 * c4 + 3 * c4 ** 2
    c6_top = 11 * a4 * c4 - 9 * a4 * b2 * c2 - 9 * a2 * b2 * c4 + 5 * a2 * b4 * c2 + 2 * b4 ** 2
    d6_top = 11 * a4 * b4 - 9 * a4 * b2 * c2 - 9 * a2 * b4 * c2 + 5 * a2 * b2 * c4 + 2 * c4 ** 2

    return {
        "A": {1: 2 * b, 3: (b4 - a2 * c2) / (3 * b), 5: a5_top / (20 * b ** 3)},
        "B": {1: 2 * c, 3: -(c4 - a2 * b2) / (3 * c), 5: b5_top / (20 * c ** 3)},
        "C": {2: 1 / (4 * b2), 4: -(b4 - a2 * c2) / (48 * b2 ** 3), 6: c6_top / (2880 * b2 ** 5)},
        "D": {2: 1 / (4 * c2), 4: (c4 - a2 * b2) / (48 * c2 ** 3), 6: d6_top / (2880 * c2 ** 5)},
        "alpha": {1: sympy.Integer(1), 3: b4 - a2 * c2, 5: a5_top / 3},
        "beta": {1: sympy.Integer(1), 3: c4 - a2 * b2, 5: b5_top / 3},
        "gamma": {2: sympy.Integer(1), 4: b4 - a2 * c2, 6: c6_top / 2},
        "delta": {2: sympy.Integer(1), 4: c4 - a2 * b2, 6: d6_top / 2},
    }


def _timed(name: str, threshold: float, check: Callable[[], Tuple[bool, float, str]]) -> CheckResult:
    start = time.perf_counter()
    try:
        passed, residual, detail = check()
    except LiouvilleError as e:
        passed, residual, detail = False, math.inf, f"{type(e).__name__}: {e}"
    seconds = time.perf_counter() - start
    result = CheckResult(
        name=name, passed=bool(passed), max_residual=float(residual), threshold=threshold, seconds=seconds, detail=detail
    )
    log = logger.info if result.passed else logger.warning
    log(f"驗證 {name}: {'通過' if result.passed else '失敗'}，最大殘差 {result.max_residual:.3e} ({seconds:.2f}s)")
    return result


class VerificationSuite:
    """
    八項驗收檢查
    """

    def __init__(self, shape: EllipsoidShape, profile: VerifyProfile = VerifyProfile.QUICK, seed: int = 20181019):
        self.shape = shape
        self.profile = VerifyProfile(profile)
        self.sizes = PROFILE_SIZES[self.profile]
        self.rng = np.random.default_rng(seed)
        self.maps = get_conformal_maps(shape)
        self.inverse = get_inverse_maps(shape)

    def _rational_axes(self) -> Tuple[sympy.Rational, sympy.Rational, sympy.Rational]:
        return tuple(sympy.Rational(repr(s)) ** 2 for s in self.shape.axes)

    def coefficient_fixtures(self) -> Tuple[bool, float, str]:
        forward = forward_series(self.shape, 3, exact=True)
        inverse = inverse_series(forward)
        normalized = normalized_coefficients(forward, inverse)
        computed = {
            "A": forward.A,
            "B": forward.B,
            "C": inverse.C,
            "D": inverse.D,
            "alpha": normalized.alpha,
            "beta": normalized.beta,
            "gamma": normalized.gamma,
            "delta": normalized.delta,
        }
        expected = closed_form_coefficients(*self._rational_axes())
        mismatches = []
        worst = 0.0
        for family, entries in expected.items():
            for k, value in entries.items():
                diff = sympy.simplify(computed[family][k] - value)
                if diff != 0:
                    mismatches.append(f"{family}[{k}]")
                    worst = max(worst, abs(float(diff)))
        return not mismatches, worst, ", ".join(mismatches)

    def closed_form_agreement(self) -> Tuple[bool, float, str]:
        self.maps.complete_constants()
        n = self.sizes["closed_grid"]
        s = self.shape
        us = np.linspace(s.b2, s.a2, n)
        vs = np.linspace(s.c2, s.b2, n)
        dx = max(abs(self.maps.x_of_u_closed(u) - self.maps.x_of_u(u)) for u in us)
        dy = max(abs(self.maps.y_of_v_closed(v) - self.maps.y_of_v(v)) for v in vs)
        worst = max(dx, dy)
        return worst <= 1e-9, worst, f"X: {dx:.3e}, Y: {dy:.3e}"

    def inversion_roundtrips(self) -> Tuple[bool, float, str]:
        s = self.shape
        n = self.sizes["roundtrip"]
        us = self.rng.uniform(s.b2, s.a2, n)
        vs = self.rng.uniform(s.c2, s.b2, n)
        du = max(abs(self.inverse.u_of_x(self.maps.x_of_u(u)) - u) for u in us)
        dv = max(abs(self.inverse.v_of_y(self.maps.y_of_v(v)) - v) for v in vs)

        m = self.sizes["closed_inverse"]
        xs = np.linspace(0, self.maps.x_max, m + 2)[1:-1]
        ys = np.linspace(0, self.maps.y_max, m + 2)[1:-1]
        dcx = max(abs(self.inverse.u_of_x_closed(x) - self.inverse.u_of_x(x)) for x in xs)
        dcy = max(abs(self.inverse.v_of_y_closed(y) - self.inverse.v_of_y(y)) for y in ys)

        roundtrip = max(du, dv) / s.a2
        passed = roundtrip <= 1e-9 and max(dcx, dcy) <= 1e-8
        detail = f"U∘X: {du:.3e}, V∘Y: {dv:.3e}, 閉式 U: {dcx:.3e}, 閉式 V: {dcy:.3e}"
        return passed, max(roundtrip, dcx, dcy), detail

    def liouville_property(self) -> Tuple[bool, float, str]:
        n = self.sizes["metric_grid"]
        xs = np.linspace(0, self.maps.x_max, n + 2)[1:-1]
        ys = np.linspace(0, self.maps.y_max, n + 2)[1:-1]
        worst = 0.0
        for x in xs:
            for y in ys:
                g, factor = self.inverse.liouville_metric(x, y)
                e = g.g11
                worst = max(worst, abs(g.g12) / e, abs(e - g.g22) / e, abs(e - factor) / e)
        return worst <= 1e-5, worst, f"{n}×{n} 內部格點"

    def differential_equations(self) -> Tuple[bool, float, str]:
        n = self.sizes["ode_points"]
        xs = self.rng.uniform(0.05, 0.95, n) * self.maps.x_max
        ys = self.rng.uniform(0.05, 0.95, n) * self.maps.y_max
        h_x, h_y = 1e-5 * self.maps.x_max, 1e-5 * self.maps.y_max
        worst_u = worst_v = 0.0
        for x, y in zip(xs, ys):
            r1, r2 = self.inverse.ode_residuals(x, y, h_x, h_y)
            worst_u, worst_v = max(worst_u, abs(r1)), max(worst_v, abs(r2))
        worst = max(worst_u, worst_v)
        return worst <= 1e-5, worst, f"r₁: {worst_u:.3e}, r₂: {worst_v:.3e}"

    def series_accuracy(self) -> Tuple[bool, float, str]:
        s = self.shape
        forward = forward_series(s, 8)
        inverse = inverse_series(forward)
        fractions = np.linspace(0.1, 1.0, 10) * 0.01

        du = max(
            abs(eval_forward_series(forward, s.b2 + t * (s.a2 - s.b2), "u").value - self.maps.x_of_u(s.b2 + t * (s.a2 - s.b2)))
            for t in fractions
        )
        dv = max(
            abs(eval_forward_series(forward, s.c2 + t * (s.b2 - s.c2), "v").value - self.maps.y_of_v(s.c2 + t * (s.b2 - s.c2)))
            for t in fractions
        )
        x_edge = self.maps.x_of_u(s.b2 + 0.01 * (s.a2 - s.b2))
        y_edge = self.maps.y_of_v(s.c2 + 0.01 * (s.b2 - s.c2))
        dx = max(abs(eval_inverse_series(inverse, t * x_edge, "x").value - self.inverse.u_of_x(t * x_edge)) for t in fractions * 100)
        dy = max(abs(eval_inverse_series(inverse, t * y_edge, "y").value - self.inverse.v_of_y(t * y_edge)) for t in fractions * 100)

        forward_worst = max(du, dv)
        inverse_worst = max(dx, dy)
        passed = forward_worst <= 1e-12 and inverse_worst <= 1e-12
        detail = f"X: {du:.3e}, Y: {dv:.3e}, U: {dx:.3e}, V: {dy:.3e}"
        return passed, max(forward_worst, inverse_worst), detail

    def mesh_conformality(self) -> Tuple[bool, float, str]:
        n = self.sizes["mesh_grid"]
        coarse = liouville_grid(self.shape, n, n, source=InverseSource.EXACT)
        fine = liouville_grid(self.shape, 2 * n - 1, 2 * n - 1, source=InverseSource.EXACT)

        on_surface = float(np.max(np.abs(implicit_residual(coarse.vertices, self.shape))))
        coarse_error = conformality_report(coarse).median_angle_error
        fine_error = conformality_report(fine).median_angle_error
        reduction = coarse_error / fine_error if fine_error > 0 else math.inf

        passed = on_surface <= 1e-10 and coarse_error <= 0.1 and reduction >= 3.0
        detail = f"隱式方程殘差 {on_surface:.3e}, 角度誤差中位數 {coarse_error:.4f}° → {fine_error:.4f}° ({reduction:.2f}×)"
        return passed, coarse_error, detail

    def procedure_fidelity(self) -> Tuple[bool, float, str]:
        n = self.sizes["procedure_grid"]
        exact = liouville_grid(self.shape, n, n, source=InverseSource.EXACT)
        errors = []
        for samples in (64, 128):
            approx = liouville_grid(self.shape, n, n, source=InverseSource.INTERPOLANT, samples=samples)
            errors.append(float(np.max(np.linalg.norm(approx.vertices - exact.vertices, axis=1))))
        reduction = errors[0] / errors[1] if errors[1] > 0 else math.inf

        passed = errors[0] <= 1e-3 and reduction >= 4.0
        detail = f"n=64: {errors[0]:.3e}, n=128: {errors[1]:.3e} ({reduction:.2f}×)"
        return passed, errors[0], detail

    def run(self) -> VerificationReport:
        checks: List[CheckResult] = [
            _timed("coefficient_fixtures", 0.0, self.coefficient_fixtures),
            _timed("closed_form_agreement", 1e-9, self.closed_form_agreement),
            _timed("inversion_roundtrips", 1e-9, self.inversion_roundtrips),
            _timed("liouville_property", 1e-5, self.liouville_property),
            _timed("differential_equations", 1e-5, self.differential_equations),
            _timed("series_accuracy", 1e-12, self.series_accuracy),
            _timed("mesh_conformality", 0.1, self.mesh_conformality),
            _timed("procedure_fidelity", 1e-3, self.procedure_fidelity),
        ]
        return VerificationReport(profile=self.profile, axes=self.shape.axes, checks=checks)


def run_verification(
    shape: EllipsoidShape,
    profile: VerifyProfile = VerifyProfile.QUICK,
    seed: int = 20181019,
) -> VerificationReport:
    """執行全部驗收檢查"""
    return VerificationSuite(shape, profile, seed).run()
