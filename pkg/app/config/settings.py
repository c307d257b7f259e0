from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field
from typing import Literal, Optional


class Settings(BaseSettings):
    """应用配置"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"  # 忽略未定义的字段
    )

    # 日志配置
    log_level: str = "INFO"

    # 文件输出配置
    output_dir: str = "output"  # figure/report 的默认输出目录

    # 线性代数容差
    max_tensor_dim: int = Field(default=100_000, description="张量积结果允许的最大行数或列数")
    hermitian_tol: float = Field(default=1e-10, description="厄米性检查容差 ‖M − M†‖_max")
    unitary_tol: float = Field(default=1e-12, description="幺正性检查容差")
    mub_tol: float = Field(default=1e-12, description="互无偏检查容差")

    # 经典界
    brute_force_max_d: int = Field(default=5, description="穷举 LHV 策略允许的最大维数")

    # 优化器配置
    optimizer_restarts: int = Field(default=20, ge=1, description="随机重启次数")
    optimizer_max_iterations: int = Field(default=2000, ge=1, description="每次重启的最大迭代数")
    optimizer_step_init: float = Field(default=0.25, gt=0, description="初始步长")
    optimizer_gradient_tol: float = Field(default=1e-8, gt=0, description="梯度无穷范数收敛阈值")
    optimizer_improvement_tol: float = Field(default=1e-12, gt=0, description="单步提升收敛阈值")
    optimizer_seed: int = Field(default=20070101, description="默认随机种子")
    optimizer_fd_step: float = Field(default=1e-5, gt=0, description="中心差分步长")
    optimizer_gradient: Literal["analytic", "finite_difference"] = Field(
        default="analytic", description="梯度计算方式"
    )

    # 并行配置
    max_workers: int = Field(default=1, ge=1, description="网格/路径扫描的进程数，1 表示串行")

    # 输出格式
    json_significant_digits: int = Field(default=12, ge=1, le=17)
    report_schema_version: str = "1"


# 全局配置实例
settings = Settings()


def reload_settings(env_file: Optional[str] = None) -> Settings:
    """Reload settings from environment (in-place) so existing references stay valid.

    env_file 替换默认的 .env 路径
    """
    global settings
    new_settings = Settings(_env_file=env_file) if env_file else Settings()
    for field_name, value in new_settings.model_dump().items():
        setattr(settings, field_name, value)
    return settings
