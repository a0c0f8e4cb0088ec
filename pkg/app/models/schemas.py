"""
Liouville Ellipsoid - Pydantic 模型
定義橢球、座標、級數與網格的資料結構
"""

import cmath
import math
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# 枚舉定義
class MeshKind(str, Enum):
    LIOUVILLE = "liouville"
    CURVATURE = "curvature"


class MeshFormat(str, Enum):
    OBJ = "obj"
    CSV = "csv"
    JSON = "json"


class InverseSource(str, Enum):
    INTERPOLANT = "interpolant"
    EXACT = "exact"


class InverseMethod(str, Enum):
    ROOT = "root"
    CLOSED = "closed"
    SERIES = "series"


class VerifyProfile(str, Enum):
    QUICK = "quick"
    FULL = "full"


# 基礎模型
class BaseSchema(BaseModel):
    """基礎 Pydantic 模型"""

    model_config = ConfigDict(from_attributes=True, frozen=True, arbitrary_types_allowed=True)


# 複數值直接使用內建 complex
ComplexValue = complex


# 橢圓積分相關模型
class EllipticArgs(BaseSchema):
    n: float = Field(..., description="特徵值 (characteristic)")
    phi: complex = Field(..., description="振幅（弧度），實數或純虛數")
    m: float = Field(..., description="參數 (parameter)")

    @field_validator("phi", mode="before")
    @classmethod
    def coerce_phi(cls, v):
        v = complex(v)
        if not cmath.isfinite(v):
            raise ValueError("振幅必須為有限值")
        return v


class RootResult(BaseSchema):
    """求根結果"""
    root: float
    residual: float
    iterations: int
    bisections: int = 0
    machine_limited: bool = False


# 橢球相關模型
class EllipsoidShape(BaseSchema):
    """
    三軸橢球的半軸
    建構時檢查 0 < c < b < a
    """
    a: float = Field(..., description="最長半軸")
    b: float = Field(..., description="中間半軸")
    c: float = Field(..., description="最短半軸")

    @model_validator(mode="after")
    def check_ordering(self):
        if not all(math.isfinite(s) for s in (self.a, self.b, self.c)):
            raise ValueError("半軸必須為有限值")
        if not 0 < self.c < self.b < self.a:
            raise ValueError(f"半軸必須滿足 0 < c < b < a，收到 ({self.a}, {self.b}, {self.c})")
        return self

    @property
    def a2(self) -> float:
        return self.a * self.a

    @property
    def b2(self) -> float:
        return self.b * self.b

    @property
    def c2(self) -> float:
        return self.c * self.c

    @property
    def axes(self) -> Tuple[float, float, float]:
        return (self.a, self.b, self.c)


class CurvatureCoords(BaseSchema):
    u: float = Field(..., description="u ∈ [b², a²]")
    v: float = Field(..., description="v ∈ [c², b²]")


class LiouvilleCoords(BaseSchema):
    x: float = Field(..., description="x ∈ [0, X(a²)]")
    y: float = Field(..., description="y ∈ [0, Y(b²)]")


class Point3(BaseSchema):
    x: float
    y: float
    z: float

    @model_validator(mode="after")
    def check_finite(self):
        if not all(math.isfinite(t) for t in (self.x, self.y, self.z)):
            raise ValueError("座標必須為有限值")
        return self

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


class MetricSample(BaseSchema):
    """第一基本形式係數"""
    g11: float
    g12: float
    g22: float


class JacobiMapParams(BaseSchema):
    """
    F₁、F₂ 閉式解的參數組
    n₁ < 0, m₁ < 0, n₂ ∈ (0, 1), m₂ ∈ (0, 1)
    """
    n1: float
    m1: float
    n2: float
    m2: float
    prefactor1: complex = Field(..., description="2b²i / (c√(a²−b²))")
    prefactor2: float = Field(..., description="2c² / (b√(a²−c²))")
    shape: EllipsoidShape

    def phi1(self, t: float) -> complex:
        """φ₁(t) = arcsin(−ic√((t−b²)/((b²−c²)t)))，主分支 arcsin(−iy) = −i·asinh(y)"""
        s = self.shape
        radicand = max((t - s.b2) / ((s.b2 - s.c2) * t), 0.0)
        return complex(0.0, -math.asinh(s.c * math.sqrt(radicand)))

    def phi2(self, t: float) -> float:
        """φ₂(t) = arcsin(b√((t−c²)/((b²−c²)t)))"""
        s = self.shape
        radicand = max((t - s.c2) / ((s.b2 - s.c2) * t), 0.0)
        return math.asin(min(s.b * math.sqrt(radicand), 1.0))


class InverseMapConfig(BaseSchema):
    tol: float = Field(default=1e-12, gt=0, description="殘差容差")
    max_iter: int = Field(default=80, ge=1, description="最大迭代次數")
    series_order_for_seed: int = Field(default=4, ge=1, description="初始猜值級數階數")


# 級數相關模型
class ForwardSeries(BaseSchema):
    """
    X(u)、Y(v) 在 u₀ = b²、v₀ = c² 處的奇次級數
    A[2k+1]、B[2k+1] 可為 sympy 精確數或浮點數
    """
    order: int
    exact: bool
    a2: Any
    b2: Any
    c2: Any
    b: Any = Field(..., description="√b²（精確模式下為 sympy 根式）")
    c: Any = Field(..., description="√c²")
    A: Dict[int, Any]
    B: Dict[int, Any]
    shape: Optional[EllipsoidShape] = None

    @property
    def u_scale(self) -> Any:
        """(a²−b²)(b²−c²)"""
        return (self.a2 - self.b2) * (self.b2 - self.c2)

    @property
    def v_scale(self) -> Any:
        """(a²−c²)(b²−c²)"""
        return (self.a2 - self.c2) * (self.b2 - self.c2)


class InverseSeries(BaseSchema):
    """U(x) = b² + (a²−b²)(b²−c²) Σ C[2k] x^(2k)，V(y) 同理"""
    order: int
    exact: bool
    b2: Any
    c2: Any
    u_prefactor: Any = Field(..., description="(a²−b²)(b²−c²)")
    v_prefactor: Any = Field(..., description="(c²−a²)(c²−b²)")
    C: Dict[int, Any]
    D: Dict[int, Any]


class NormalizedCoefficients(BaseSchema):
    order: int
    alpha: Dict[int, Any]
    beta: Dict[int, Any]
    gamma: Dict[int, Any]
    delta: Dict[int, Any]
    forward_factors: Dict[int, Any] = Field(..., description="binom(2k,k) / (2^(2k−1)(2k+1))")
    inverse_factors: Dict[int, Any] = Field(..., description="(−1)^(k−1) / (2(2k)!)")


class SeriesEvaluation(BaseSchema):
    value: float
    scaled_variable: float
    quality_warning: bool = False


# 網格相關模型
class SampleTable(BaseSchema):
    """(X(u_k), u_k) 取樣表，knots 為自變數、values 為函數值"""
    variable: str = Field(..., description="'u' 或 'v'")
    knots: np.ndarray
    values: np.ndarray

    def to_frame(self):
        return pd.DataFrame({"x" if self.variable == "u" else "y": self.knots, self.variable: self.values})


class MonotoneInterpolant(BaseSchema):
    """分段三次 Hermite 插值（Fritsch–Carlson 斜率）"""
    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    spline: Any

    @property
    def domain(self) -> Tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    def __call__(self, x):
        lo, hi = self.domain
        result = self.spline(np.clip(x, lo, hi))
        # 單調插值不會超出端點值，這裡只消除捨入誤差
        return np.clip(result, self.values[0], self.values[-1])


class SurfaceMesh(BaseSchema):
    """
    四邊形網格
    vertices 為 (N, 3) 陣列，grid_shape 非 None 時可重塑為 (nx, ny, 3)
    """
    kind: MeshKind
    vertices: np.ndarray
    faces: np.ndarray = Field(..., description="(F, 4) 的 0 起算頂點索引")
    grid_shape: Optional[Tuple[int, int]] = None
    steps: Optional[Tuple[float, float]] = Field(None, description="參數方向的網格間距")
    edge_ratio: np.ndarray = Field(..., description="每格 (|e₁|/h₁)/(|e₂|/h₂)")
    corner_angle: np.ndarray = Field(..., description="每格兩邊夾角（度）")
    interior: np.ndarray = Field(..., description="每格是否為內部格")

    @property
    def vertex_count(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def face_count(self) -> int:
        return int(self.faces.shape[0])

    def grid(self) -> np.ndarray:
        if self.grid_shape is None:
            raise ValueError("此網格沒有規則的頂點排列")
        nx, ny = self.grid_shape
        return self.vertices.reshape(nx, ny, 3)


class ConformalityReport(BaseSchema):
    cells: int
    interior_cells: int
    median_angle_error: float = Field(..., description="|角度 − 90°| 中位數（度）")
    max_angle_error: float
    mean_angle_error: float
    median_ratio_error: float = Field(..., description="|邊長比 − 1| 中位數")
    max_ratio_error: float
    mean_ratio_error: float


# 驗證相關模型
class CheckResult(BaseSchema):
    name: str
    passed: bool
    max_residual: float
    threshold: float
    seconds: float
    detail: str = ""


class VerificationReport(BaseSchema):
    profile: VerifyProfile
    axes: Tuple[float, float, float]
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_frame(self):
        return pd.DataFrame([check.model_dump() for check in self.checks])


# CLI 模型
class CliConfig(BaseSchema):
    axes: Tuple[float, float, float]
    subcommand: str
    grid: Optional[Tuple[int, int]] = None
    order: Optional[int] = None
    digits: int = 17
    tolerance: Optional[float] = None
    out: Optional[str] = None
    format: Optional[MeshFormat] = None
