"""
Liouville Ellipsoid - 網格服務
正向取樣、單調三次 Hermite 插值、Liouville 與曲率線網格、共形性診斷與網格匯出
"""

import itertools
import json
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
import structlog
from scipy.interpolate import CubicHermiteSpline

from app.core.config import Settings, get_settings
from app.core.errors import DomainError, MeshIOError, NonMonotoneInput
from app.models.schemas import (
    ConformalityReport,
    EllipsoidShape,
    InverseSource,
    MeshFormat,
    MeshKind,
    MonotoneInterpolant,
    SampleTable,
    SurfaceMesh,
)
from app.services.conformal_maps import get_conformal_maps
from app.services.ellipsoid_core import ellipsoid_points
from app.services.inverse_maps import get_inverse_maps

logger = structlog.get_logger()


def sample_forward(shape: EllipsoidShape, n: int) -> Tuple[SampleTable, SampleTable]:
    """
    取樣 (X(u_k), u_k) 與 (Y(v_k), v_k)，u_k = ((n−k)u₀ + k·u_n) / n

    Returns:
        (u 表, v 表)，第一列恆為 (0, b²) 與 (0, c²)
    """
    if n < 2:
        raise DomainError(f"取樣數 n 必須至少為 2: {n}", value=n)
    maps = get_conformal_maps(shape)
    k = np.arange(n + 1)
    us = ((n - k) * shape.b2 + k * shape.a2) / n
    vs = ((n - k) * shape.c2 + k * shape.b2) / n
    us[0], us[-1] = shape.b2, shape.a2
    vs[0], vs[-1] = shape.c2, shape.b2
    xs = np.array([maps.x_of_u(u) for u in us])
    ys = np.array([maps.y_of_v(v) for v in vs])
    return (
        SampleTable(variable="u", knots=xs, values=us),
        SampleTable(variable="v", knots=ys, values=vs),
    )


def fritsch_carlson_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    單調保持的 Hermite 斜率

    三點差商作初值，再以 α² + β² ≤ 9 限制每一段
    """
    h = np.diff(x)
    delta = np.diff(y) / h
    if len(h) == 1:
        return np.array([delta[0], delta[0]])

    m = np.empty_like(y)
    m[1:-1] = (h[1:] * delta[:-1] + h[:-1] * delta[1:]) / (h[:-1] + h[1:])
    m[0] = _edge_slope(h[0], h[1], delta[0], delta[1])
    m[-1] = _edge_slope(h[-1], h[-2], delta[-1], delta[-2])
    m = np.maximum(m, 0.0)

    for k in range(len(h)):
        alpha, beta = m[k] / delta[k], m[k + 1] / delta[k]
        radius = alpha * alpha + beta * beta
        if radius > 9.0:
            tau = 3.0 / np.sqrt(radius)
            m[k] = tau * alpha * delta[k]
            m[k + 1] = tau * beta * delta[k]
    return m


def _edge_slope(h0: float, h1: float, d0: float, d1: float) -> float:
    slope = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1)
    if np.sign(slope) != np.sign(d0):
        return 0.0
    if np.sign(d0) != np.sign(d1) and abs(slope) > abs(3 * d0):
        return 3 * d0
    return slope


def build_interpolant(table: SampleTable) -> MonotoneInterpolant:
    """
    Ũ(x) ≈ U(x)：過所有節點的單調 C¹ 分段三次函數

    Raises:
        NonMonotoneInput: 任一欄不是嚴格遞增
    """
    knots = np.asarray(table.knots, dtype=float)
    values = np.asarray(table.values, dtype=float)
    if knots.ndim != 1 or knots.shape != values.shape or knots.size < 2:
        raise NonMonotoneInput("取樣表至少需要兩列且兩欄長度一致")
    if np.any(np.diff(knots) <= 0) or np.any(np.diff(values) <= 0):
        raise NonMonotoneInput(f"{table.variable} 取樣表不是嚴格遞增")

    slopes = fritsch_carlson_slopes(knots, values)
    spline = CubicHermiteSpline(knots, values, slopes, extrapolate=False)
    return MonotoneInterpolant(knots=knots, values=values, slopes=slopes, spline=spline)


def cell_diagnostics(grid: np.ndarray, steps: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    每格以對邊平均的邊向量計算長度比與夾角

    e₁ = ½[(P₁₀ − P₀₀) + (P₁₁ − P₀₁)]，e₂ = ½[(P₀₁ − P₀₀) + (P₁₁ − P₁₀)]

    Returns:
        (長度比 (|e₁|/h₁)/(|e₂|/h₂)，夾角（度），是否為內部格)，皆攤平為 (nx−1)(ny−1)
    """
    dx, dy = steps
    p00, p10 = grid[:-1, :-1], grid[1:, :-1]
    p01, p11 = grid[:-1, 1:], grid[1:, 1:]
    e1 = 0.5 * ((p10 - p00) + (p11 - p01))
    e2 = 0.5 * ((p01 - p00) + (p11 - p10))
    n1 = np.linalg.norm(e1, axis=-1)
    n2 = np.linalg.norm(e2, axis=-1)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (n1 / dx) / (n2 / dy)
        cosine = np.clip(np.sum(e1 * e2, axis=-1) / (n1 * n2), -1.0, 1.0)
    angle = np.degrees(np.arccos(cosine))

    cx, cy = ratio.shape
    interior = np.zeros((cx, cy), dtype=bool)
    interior[1:-1, 1:-1] = True
    return ratio.ravel(), angle.ravel(), interior.ravel()


def quad_faces(nx: int, ny: int) -> np.ndarray:
    """規則網格的四邊形面，頂點編號 i·ny + j"""
    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    base = (i * ny + j).ravel()
    return np.stack([base, base + ny, base + ny + 1, base + 1], axis=1)


def mesh_from_grid(kind: MeshKind, grid: np.ndarray, steps: Tuple[float, float]) -> SurfaceMesh:
    """由 (nx, ny, 3) 頂點陣列建立帶診斷的網格"""
    nx, ny, _ = grid.shape
    ratio, angle, interior = cell_diagnostics(grid, steps)
    return SurfaceMesh(
        kind=kind,
        vertices=grid.reshape(nx * ny, 3),
        faces=quad_faces(nx, ny),
        grid_shape=(nx, ny),
        steps=steps,
        edge_ratio=ratio,
        corner_angle=angle,
        interior=interior,
    )


def _check_grid_args(nx: int, ny: int, eps: float) -> None:
    if nx < 2 or ny < 2:
        raise DomainError(f"網格尺寸必須至少為 2×2: {nx}×{ny}", value=(nx, ny))
    if not 0 <= eps < 0.5:
        raise DomainError(f"裁切比例 eps 必須位於 [0, 0.5): {eps}", value=eps)


def liouville_grid(
    shape: EllipsoidShape,
    nx: int,
    ny: int,
    eps: Optional[float] = None,
    source: InverseSource = InverseSource.INTERPOLANT,
    samples: Optional[int] = None,
    config: Optional[Settings] = None,
) -> SurfaceMesh:
    """
    Ellipsoid(U(x_i), V(y_j))，x、y 在裁切後的 Liouville 矩形上等距取樣

    Args:
        source: INTERPOLANT 用取樣插值 Ũ、Ṽ；EXACT 用求根反函數
        samples: 插值取樣數 n（僅 INTERPOLANT）
    """
    config = config or get_settings()
    eps = config.MESH_EPS if eps is None else eps
    _check_grid_args(nx, ny, eps)

    x_max, y_max = get_conformal_maps(shape).complete_constants()
    xs = np.linspace(eps * x_max, (1 - eps) * x_max, nx)
    ys = np.linspace(eps * y_max, (1 - eps) * y_max, ny)

    if InverseSource(source) == InverseSource.INTERPOLANT:
        u_table, v_table = sample_forward(shape, samples or config.INTERP_SAMPLES)
        us = build_interpolant(u_table)(xs)
        vs = build_interpolant(v_table)(ys)
    else:
        inverse = get_inverse_maps(shape)
        us = np.array([inverse.u_of_x(x) for x in xs])
        vs = np.array([inverse.v_of_y(y) for y in ys])

    # 座標可分離，只需 nx 個 U 值與 ny 個 V 值
    grid = ellipsoid_points(us[:, None], vs[None, :], shape)
    steps = (float(xs[1] - xs[0]), float(ys[1] - ys[0]))
    return mesh_from_grid(MeshKind.LIOUVILLE, grid, steps)


def curvature_grid(
    shape: EllipsoidShape,
    nu: int,
    nv: int,
    eps: Optional[float] = None,
    config: Optional[Settings] = None,
) -> SurfaceMesh:
    """Ellipsoid(u_i, v_j)，(u, v) 在裁切後的曲率線矩形上等距取樣"""
    config = config or get_settings()
    eps = config.MESH_EPS if eps is None else eps
    _check_grid_args(nu, nv, eps)

    du_side, dv_side = shape.a2 - shape.b2, shape.b2 - shape.c2
    us = np.linspace(shape.b2 + eps * du_side, shape.a2 - eps * du_side, nu)
    vs = np.linspace(shape.c2 + eps * dv_side, shape.b2 - eps * dv_side, nv)
    grid = ellipsoid_points(us[:, None], vs[None, :], shape)
    steps = (float(us[1] - us[0]), float(vs[1] - vs[0]))
    return mesh_from_grid(MeshKind.CURVATURE, grid, steps)


def conformality_report(mesh: SurfaceMesh) -> ConformalityReport:
    """
    |長度比 − 1| 與 |夾角 − 90°| 的統計，只計入內部格（沒有內部格時取全部）
    """
    mask = mesh.interior if np.any(mesh.interior) else np.ones_like(mesh.interior, dtype=bool)
    angle_error = np.abs(mesh.corner_angle[mask] - 90.0)
    ratio_error = np.abs(mesh.edge_ratio[mask] - 1.0)
    return ConformalityReport(
        cells=int(mesh.corner_angle.size),
        interior_cells=int(np.count_nonzero(mesh.interior)),
        median_angle_error=float(np.median(angle_error)),
        max_angle_error=float(np.max(angle_error)),
        mean_angle_error=float(np.mean(angle_error)),
        median_ratio_error=float(np.median(ratio_error)),
        max_ratio_error=float(np.max(ratio_error)),
        mean_ratio_error=float(np.mean(ratio_error)),
    )


def reflect_to_full_surface(mesh: SurfaceMesh, tol: Optional[float] = None) -> SurfaceMesh:
    """
    以 (±x, ±y, ±z) 八個鏡射組成整個橢球

    接縫上的重複頂點以 tol 的座標雜湊合併；奇數次鏡射的面反轉頂點順序以保持朝向。
    """
    tol = tol or get_settings().DEDUP_TOL
    index_of = {}
    vertices = []
    faces = []

    for signs in itertools.product((1.0, -1.0), repeat=3):
        reflected = mesh.vertices * np.array(signs)
        remap = np.empty(len(reflected), dtype=np.int64)
        for i, point in enumerate(reflected):
            key = tuple(np.round(point / tol).astype(np.int64))
            if key not in index_of:
                index_of[key] = len(vertices)
                vertices.append(point)
            remap[i] = index_of[key]
        patch = remap[mesh.faces]
        if signs.count(-1.0) % 2:
            patch = patch[:, ::-1]
        faces.append(patch)

    faces = np.concatenate(faces)
    # 退化到線段或點的面不保留
    keep = np.array([len(set(face)) >= 3 for face in faces.tolist()], dtype=bool)
    logger.info(f"全表面網格: {len(vertices)} 個頂點, {int(keep.sum())} 個面")

    return SurfaceMesh(
        kind=mesh.kind,
        vertices=np.array(vertices),
        faces=faces[keep],
        grid_shape=None,
        steps=mesh.steps,
        edge_ratio=np.tile(mesh.edge_ratio, 8)[keep],
        corner_angle=np.tile(mesh.corner_angle, 8)[keep],
        interior=np.tile(mesh.interior, 8)[keep],
    )


def _mesh_payload(mesh: SurfaceMesh) -> dict:
    return {
        "kind": mesh.kind.value,
        "grid_shape": list(mesh.grid_shape) if mesh.grid_shape else None,
        "steps": list(mesh.steps) if mesh.steps else None,
        "vertices": mesh.vertices.tolist(),
        "faces": mesh.faces.tolist(),
        "edge_ratio": mesh.edge_ratio.tolist(),
        "corner_angle": mesh.corner_angle.tolist(),
        "interior": mesh.interior.tolist(),
    }


def _grid_indices(mesh: SurfaceMesh) -> Tuple[np.ndarray, np.ndarray]:
    if mesh.grid_shape is None:
        return np.arange(mesh.vertex_count), np.zeros(mesh.vertex_count, dtype=np.int64)
    nx, ny = mesh.grid_shape
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    return i.ravel(), j.ravel()


def export_mesh(mesh: SurfaceMesh, fmt: Union[MeshFormat, str], path: Union[str, Path]) -> Path:
    """
    匯出網格

    OBJ：先 `v x y z`，再以 1 起算索引的四邊形 `f`；CSV：i,j,x,y,z；JSON：SurfaceMesh 欄位

    Raises:
        MeshIOError: 無法寫入
    """
    fmt = MeshFormat(fmt)
    path = Path(path)
    try:
        if fmt == MeshFormat.OBJ:
            with path.open("w", encoding="utf-8") as handle:
                handle.write(f"# {mesh.kind.value} mesh: {mesh.vertex_count} vertices, {mesh.face_count} faces\n")
                for x, y, z in mesh.vertices.tolist():
                    handle.write(f"v {x!r} {y!r} {z!r}\n")
                for face in (mesh.faces + 1).tolist():
                    handle.write("f " + " ".join(str(index) for index in face) + "\n")
        elif fmt == MeshFormat.CSV:
            i, j = _grid_indices(mesh)
            frame = pd.DataFrame(
                {"i": i, "j": j, "x": mesh.vertices[:, 0], "y": mesh.vertices[:, 1], "z": mesh.vertices[:, 2]}
            )
            frame.to_csv(path, index=False, float_format="%.17g")
        else:
            path.write_text(json.dumps(_mesh_payload(mesh)), encoding="utf-8")
    except OSError as e:
        raise MeshIOError(f"無法寫入網格檔案 {path}: {e}", value=str(path)) from e

    logger.info(f"匯出網格 {path} ({fmt.value}): {mesh.vertex_count} 個頂點")
    return path


def load_obj_vertices(path: Union[str, Path]) -> np.ndarray:
    """讀回 OBJ 的 `v` 列，回傳 (N, 3) 陣列"""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise MeshIOError(f"無法讀取網格檔案 {path}: {e}", value=str(path)) from e
    rows = [[float(t) for t in line.split()[1:4]] for line in lines if line.startswith("v ")]
    return np.array(rows, dtype=float).reshape(-1, 3)
