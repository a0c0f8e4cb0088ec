"""
Liouville Ellipsoid - 資料模型模組
包含所有 Pydantic 模型與枚舉
"""

from .schemas import *

__all__ = [
    # 枚舉
    "MeshKind",
    "MeshFormat",
    "InverseSource",
    "InverseMethod",
    "VerifyProfile",

    # 幾何與座標
    "ComplexValue",
    "EllipticArgs",
    "RootResult",
    "EllipsoidShape",
    "CurvatureCoords",
    "LiouvilleCoords",
    "Point3",
    "MetricSample",
    "JacobiMapParams",
    "InverseMapConfig",

    # 級數
    "ForwardSeries",
    "InverseSeries",
    "NormalizedCoefficients",
    "SeriesEvaluation",

    # 網格與驗證
    "SampleTable",
    "MonotoneInterpolant",
    "SurfaceMesh",
    "ConformalityReport",
    "CheckResult",
    "VerificationReport",
    "CliConfig",
]
