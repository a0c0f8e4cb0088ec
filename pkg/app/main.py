"""
Liouville Ellipsoid - 命令列主程式
正向/反向映射、級數係數、網格輸出與驗證套件的命令列入口
"""

import argparse
import json
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import structlog
from pydantic import ValidationError

from app.core.config import get_settings
from app.core.errors import DomainError, LiouvilleError
from app.core.logging import configure_logging
from app.models.schemas import (
    CliConfig,
    InverseMapConfig,
    InverseMethod,
    InverseSource,
    MeshFormat,
    MeshKind,
    VerifyProfile,
)
from app.services.conformal_maps import x_of_u, y_of_v
from app.services.ellipsoid_core import make_shape
from app.services.inverse_maps import get_inverse_maps, invert
from app.services.mesh_figure import curvature_grid, export_mesh, liouville_grid, reflect_to_full_surface
from app.services.series_engine import (
    FAMILIES,
    coefficient_table,
    forward_series,
    inverse_series,
    normalized_coefficients,
)
from app.services.verification import run_verification

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _parse_axes(text: str) -> Tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"--axes 需要三個以逗號分隔的數值: {text}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--axes 含有非數值: {text}")


def _parse_grid(text: str) -> Tuple[int, int]:
    try:
        nx, ny = (int(p) for p in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--grid 格式應為 NXxNY: {text}")
    return nx, ny


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"需要數值: {text}")
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"需要正的有限數值: {text}")
    return value


def _non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"需要整數: {text}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"需要非負整數: {text}")
    return value


def _parse_families(text: str) -> List[str]:
    families = [name.strip() for name in text.split(",") if name.strip()]
    unknown = [name for name in families if name not in FAMILIES]
    if unknown:
        raise argparse.ArgumentTypeError(f"未知的係數族: {', '.join(unknown)}")
    return families


def build_parser() -> argparse.ArgumentParser:
    """建立命令列解析器"""
    config = get_settings()
    parser = argparse.ArgumentParser(
        prog="liouville",
        description="三軸橢球的 Liouville 參數化：映射、反函數、級數與網格",
    )
    parser.add_argument(
        "--axes",
        type=_parse_axes,
        default=config.DEFAULT_AXES,
        help="半軸 a,b,c（a > b > c > 0），預設 3,2,1",
    )
    parser.add_argument("--digits", type=_non_negative_int, default=config.OUTPUT_DIGITS, help="輸出有效位數")
    parser.add_argument("--log-level", default=config.LOG_LEVEL, help="日誌等級")
    parser.add_argument("--log-format", choices=["json", "console"], default=config.LOG_FORMAT, help="日誌格式")

    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    forward = subparsers.add_parser("forward", help="計算 X(u) 或 Y(v)")
    group = forward.add_mutually_exclusive_group(required=True)
    group.add_argument("--u", type=float)
    group.add_argument("--v", type=float)

    inverse = subparsers.add_parser("inverse", help="計算 U(x) 或 V(y)")
    group = inverse.add_mutually_exclusive_group(required=True)
    group.add_argument("--x", type=float)
    group.add_argument("--y", type=float)
    inverse.add_argument("--method", choices=[m.value for m in InverseMethod], default=InverseMethod.ROOT.value)
    inverse.add_argument("--tol", type=_positive_float, default=None, help="求根殘差容差（僅 root）")

    coeffs = subparsers.add_parser("coeffs", help="輸出級數係數表 (JSON)")
    coeffs.add_argument("--order", type=int, default=config.SERIES_DEFAULT_ORDER, help="截斷階數 K")
    coeffs.add_argument("--exact", action="store_true", help="以有理數精確計算")
    coeffs.add_argument("--family", type=_parse_families, default=list(FAMILIES), help="以逗號分隔的係數族")

    mesh = subparsers.add_parser("mesh", help="輸出四邊形網格")
    mesh.add_argument("--kind", choices=[k.value for k in MeshKind], default=MeshKind.LIOUVILLE.value)
    mesh.add_argument("--grid", type=_parse_grid, default=(33, 33), help="網格尺寸 NXxNY")
    mesh.add_argument("--out", required=True, help="輸出檔案路徑")
    mesh.add_argument("--format", choices=[f.value for f in MeshFormat], default=None, help="預設依副檔名判斷")
    mesh.add_argument("--full-surface", action="store_true", help="鏡射成完整橢球")
    mesh.add_argument("--source", choices=[s.value for s in InverseSource], default=InverseSource.INTERPOLANT.value)
    mesh.add_argument("--samples", type=int, default=None, help="插值取樣點數 n")
    mesh.add_argument("--eps", type=float, default=None, help="矩形邊界裁切比例")

    verify = subparsers.add_parser("verify", help="執行驗收檢查")
    verify.add_argument("--profile", choices=[p.value for p in VerifyProfile], default=VerifyProfile.QUICK.value)

    return parser


def _fmt(value: float, digits: int) -> str:
    return f"{value:.{digits}g}"


def _cmd_forward(args, shape, cli: CliConfig) -> int:
    if args.u is not None:
        print(_fmt(x_of_u(args.u, shape), cli.digits))
    else:
        print(_fmt(y_of_v(args.v, shape), cli.digits))
    return EXIT_OK


def _cmd_inverse(args, shape, cli: CliConfig) -> int:
    method = InverseMethod(args.method)
    coordinate, value = ("x", args.x) if args.x is not None else ("y", args.y)

    if method == InverseMethod.ROOT and cli.tolerance is not None:
        options = InverseMapConfig(tol=cli.tolerance)
        maps = get_inverse_maps(shape)
        solver = maps.u_of_x if coordinate == "x" else maps.v_of_y
        result = solver(value, options)
    else:
        result = invert(value, coordinate, shape, method)

    print(f"{_fmt(result, cli.digits)}\t{method.value}")
    return EXIT_OK


def _cmd_coeffs(args, shape, cli: CliConfig) -> int:
    forward = forward_series(shape, cli.order, exact=args.exact)
    inverse = inverse_series(forward)
    normalized = normalized_coefficients(forward, inverse)
    table = coefficient_table(forward, inverse, normalized, families=args.family)

    records = []
    for row in table.itertuples(index=False):
        record = {"family": row.family, "k": int(row.k)}
        if args.exact:
            record.update(numerator=row.numerator, denominator=row.denominator)
        else:
            record["float"] = float(_fmt(row.float, cli.digits))
        records.append(record)
    print(json.dumps(records, ensure_ascii=False, indent=2))
    return EXIT_OK


def _mesh_format(out: str, fmt: Optional[str]) -> MeshFormat:
    if fmt:
        return MeshFormat(fmt)
    suffix = Path(out).suffix.lstrip(".").lower()
    try:
        return MeshFormat(suffix)
    except ValueError:
        return MeshFormat.OBJ


def _cmd_mesh(args, shape, cli: CliConfig) -> int:
    nx, ny = cli.grid
    # 完整表面需要貼齊座標平面
    eps = args.eps if args.eps is not None else (0.0 if args.full_surface else None)

    if MeshKind(args.kind) == MeshKind.LIOUVILLE:
        mesh = liouville_grid(shape, nx, ny, eps=eps, source=InverseSource(args.source), samples=args.samples)
    else:
        mesh = curvature_grid(shape, nx, ny, eps=eps)
    if args.full_surface:
        mesh = reflect_to_full_surface(mesh)

    path = export_mesh(mesh, cli.format, cli.out)
    print(f"{path}\t{mesh.vertex_count} vertices\t{mesh.face_count} faces")
    return EXIT_OK


def _cmd_verify(args, shape, cli: CliConfig) -> int:
    report = run_verification(shape, VerifyProfile(args.profile))
    frame = report.to_frame()
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.3e}"))
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_FAILURE


COMMANDS = {
    "forward": _cmd_forward,
    "inverse": _cmd_inverse,
    "coeffs": _cmd_coeffs,
    "mesh": _cmd_mesh,
    "verify": _cmd_verify,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    解析參數並執行子命令

    Returns:
        0 成功；1 驗證失敗或計算錯誤；2 參數或定義域錯誤
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    configure_logging(args.log_level, args.log_format)

    try:
        shape = make_shape(*args.axes)
        cli = CliConfig(
            axes=shape.axes,
            subcommand=args.subcommand,
            grid=getattr(args, "grid", None),
            order=getattr(args, "order", None),
            digits=args.digits,
            tolerance=getattr(args, "tol", None),
            out=getattr(args, "out", None),
            format=_mesh_format(args.out, args.format) if args.subcommand == "mesh" else None,
        )
        return COMMANDS[args.subcommand](args, shape, cli)
    except (DomainError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except LiouvilleError as e:
        logger.error(f"{args.subcommand} 執行失敗: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(run())
