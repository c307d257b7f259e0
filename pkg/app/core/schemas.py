from __future__ import annotations

import json
import math
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config.settings import settings


def round_significant(value: float, digits: Optional[int] = None) -> float:
    """按有效数字取整（NaN/Inf 原样返回）"""
    digits = settings.json_significant_digits if digits is None else digits
    if not math.isfinite(value) or value == 0.0:
        return value
    return float(f"{value:.{digits}g}")


def round_floats(obj: Any, digits: Optional[int] = None) -> Any:
    """Recursively round every float inside dicts, lists and tuples."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return round_significant(obj, digits)
    if isinstance(obj, dict):
        return {k: round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    return obj


class OptimizerConfig(BaseModel):
    """优化器超参数"""
    restarts: int = Field(default_factory=lambda: settings.optimizer_restarts, ge=1, description="随机重启次数")
    max_iterations: int = Field(default_factory=lambda: settings.optimizer_max_iterations, ge=1, description="每次重启的最大迭代数")
    step_init: float = Field(default_factory=lambda: settings.optimizer_step_init, gt=0, description="初始步长")
    gradient_tol: float = Field(default_factory=lambda: settings.optimizer_gradient_tol, gt=0, description="梯度无穷范数收敛阈值")
    improvement_tol: float = Field(default_factory=lambda: settings.optimizer_improvement_tol, gt=0, description="单步改进收敛阈值")
    seed: int = Field(default_factory=lambda: settings.optimizer_seed, description="主随机种子")
    fd_step: float = Field(default_factory=lambda: settings.optimizer_fd_step, gt=0, description="中心差分步长")
    gradient: Literal["analytic", "finite_difference"] = Field(
        default_factory=lambda: settings.optimizer_gradient, description="梯度计算方式"
    )
    max_workers: int = Field(default_factory=lambda: settings.max_workers, ge=1, description="扫描并行进程数")

    model_config = ConfigDict(frozen=True)


class RunReport(BaseModel):
    """CLI 运行报告"""
    schema_version: str = Field(default_factory=lambda: settings.report_schema_version)
    command: str = Field(..., description="子命令名")
    d: int = Field(..., description="维度")
    inputs: Dict[str, Any] = Field(default_factory=dict, description="输入参数")
    results: Dict[str, Any] = Field(default_factory=dict, description="命名数值结果")
    classical_bounds: Optional[Tuple[float, float]] = Field(None, description="经典界 (min, max)")
    violated: bool = Field(False, description="量子值是否超过经典上界")
    timing_ms: int = Field(0, ge=0, description="耗时（毫秒）")

    @model_validator(mode="after")
    def _check_violated(self) -> "RunReport":
        quantum_value = self.results.get("quantum_value")
        if isinstance(quantum_value, (int, float)) and self.classical_bounds is not None:
            expected = quantum_value > self.classical_bounds[1]
            if expected != self.violated:
                raise ValueError(
                    f"violated={self.violated} contradicts quantum_value={quantum_value} "
                    f"and classical upper bound {self.classical_bounds[1]}"
                )
        return self

    def to_json(self, digits: Optional[int] = None) -> str:
        return json.dumps(round_floats(self.model_dump(mode="json"), digits), ensure_ascii=False, indent=2)


class FigureData(BaseModel):
    """图数据（fig1: c0sq, c1sq, c2sq, bell_max；fig2: entropy, bell_max）"""
    schema_version: str = Field(default_factory=lambda: settings.report_schema_version)
    figure: Literal["fig1", "fig2-r1", "fig2-r2"]
    columns: List[str]
    rows: List[List[float]]
    inputs: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_widths(self) -> "FigureData":
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row {row} does not match columns {self.columns}")
        return self

    def rounded_rows(self, digits: Optional[int] = None) -> List[List[float]]:
        return round_floats(self.rows, digits)


class GoldenCheck(BaseModel):
    """一条黄金数值校验"""
    name: str
    expected: float
    actual: float
    tolerance: float = Field(..., ge=0)
    passed: bool
