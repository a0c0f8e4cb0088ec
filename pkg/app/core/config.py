"""
Liouville Ellipsoid - 應用程式配置管理
使用 Pydantic Settings 進行類型安全的數值參數管理
"""

from typing import Tuple

from pydantic import Field
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource


class Settings(BaseSettings):
    """
    數值計算與輸出配置類別
    只接受建構參數（CLI 旗標），不讀取環境變數或 .env 文件
    """

    # 應用程式基本設定
    APP_NAME: str = Field(default="Liouville Ellipsoid", description="應用程式名稱")
    LOG_LEVEL: str = Field(default="WARNING", description="日誌等級")
    LOG_FORMAT: str = Field(default="json", description="日誌格式 (json | console)")

    # 預設橢球（a = 3, b = 2, c = 1）
    DEFAULT_AXES: Tuple[float, float, float] = Field(
        default=(3.0, 2.0, 1.0),
        description="預設半軸 (a, b, c)"
    )

    # Carlson 對稱積分
    CARLSON_RTOL: float = Field(default=1e-15, description="倍增迭代的相對誤差目標")
    CARLSON_MAX_ITER: int = Field(default=100, description="倍增迭代最大步數")

    # 求根與反函數
    ROOT_TOL: float = Field(default=1e-12, description="求根目標容差")
    ROOT_ACCEPT_TOL: float = Field(default=1e-10, description="求根可接受容差")
    ROOT_MAX_ITER: int = Field(default=80, description="求根最大迭代次數")
    ENDPOINT_SNAP: float = Field(default=1e-8, description="端點吸附的相對距離")
    SEED_TABLE_SIZE: int = Field(default=64, description="初始猜值表的取樣點數")

    # 數值積分
    QUAD_EPSABS: float = Field(default=1e-14, description="積分絕對容差")
    QUAD_EPSREL: float = Field(default=1e-13, description="積分相對容差")
    QUAD_LIMIT: int = Field(default=200, description="自適應積分最大子區間數")

    # 閉式解的虛部容差
    BRANCH_TOL: float = Field(default=1e-10, description="閉式結果虛部殘差上限")

    # 級數
    SERIES_DEFAULT_ORDER: int = Field(default=8, description="預設截斷階數 K")
    SERIES_MAX_ORDER: int = Field(default=16, description="展開階數上限")
    SERIES_SEED_ORDER: int = Field(default=4, description="求根初始猜值所用的級數階數")
    SERIES_WARN_RADIUS: float = Field(default=0.5, description="縮放變數超過此值時發出品質警告")

    # 網格
    MESH_EPS: float = Field(default=1e-3, description="矩形邊界裁切比例")
    INTERP_SAMPLES: int = Field(default=64, description="插值取樣點數 n")
    DEDUP_TOL: float = Field(default=1e-9, description="全表面接縫頂點合併容差")

    # 輸出
    OUTPUT_DIGITS: int = Field(default=17, description="數值輸出有效位數")

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls,
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ):
        # CLI 不支援環境變數，只保留建構參數
        return (init_settings,)


# 建立全域設定實例
settings = Settings()


def get_settings() -> Settings:
    """
    獲取設定實例的工廠函數
    """
    return settings


def validate_settings(config: Settings = None) -> None:
    """
    驗證關鍵配置是否合理
    """
    config = config or settings

    positive_settings = [
        "CARLSON_RTOL",
        "ROOT_TOL",
        "ROOT_ACCEPT_TOL",
        "QUAD_EPSABS",
        "QUAD_EPSREL",
        "BRANCH_TOL",
        "ENDPOINT_SNAP",
        "DEDUP_TOL",
    ]

    invalid_settings = [name for name in positive_settings if not getattr(config, name) > 0]
    if invalid_settings:
        raise ValueError(f"以下配置必須為正數: {', '.join(invalid_settings)}")

    if config.ROOT_TOL > config.ROOT_ACCEPT_TOL:
        raise ValueError("ROOT_TOL 不可大於 ROOT_ACCEPT_TOL")

    if config.CARLSON_MAX_ITER < 1 or config.ROOT_MAX_ITER < 1:
        raise ValueError("迭代上限必須至少為 1")

    if not 1 <= config.SERIES_DEFAULT_ORDER <= config.SERIES_MAX_ORDER:
        raise ValueError("SERIES_DEFAULT_ORDER 必須介於 1 與 SERIES_MAX_ORDER 之間")

    if not 0 <= config.MESH_EPS < 0.5:
        raise ValueError("MESH_EPS 必須介於 0 與 0.5 之間")

    a, b, c = config.DEFAULT_AXES
    if not 0 < c < b < a:
        raise ValueError(f"預設半軸必須滿足 0 < c < b < a: {config.DEFAULT_AXES}")


# 在模組載入時驗證配置
validate_settings()
