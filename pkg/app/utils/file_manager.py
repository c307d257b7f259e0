"""文件管理工具"""
import csv
import io
import json
from pathlib import Path
from typing import Literal, Optional, Union

from app.config.settings import settings
from app.core.schemas import FigureData, RunReport, round_floats
from app.utils.logger import logger


FigureFormat = Literal["json", "csv"]


def ensure_output_dir() -> Path:
    """确保输出目录存在"""
    output_path = Path(settings.output_dir)
    output_path.mkdir(parents=True, exist_ok=True)
    return output_path


def resolve_output_path(path: Union[str, Path]) -> Path:
    """
    解析输出路径

    Bare file names land in settings.output_dir; anything with a directory
    component (or absolute) is used as given.
    """
    path = Path(path)
    if path.is_absolute() or path.parent != Path("."):
        return path
    return ensure_output_dir() / path


def save_file(file_path: Path, content: str) -> Path:
    """
    保存文本文件（UTF-8，LF 换行）

    Raises:
        OSError: 写入失败
    """
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        with open(file_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(content)
    except OSError as e:
        logger.error(f"Failed to save file {file_path}: {str(e)}")
        raise
    logger.info(f"File saved: {file_path}")
    return file_path


def save_report(report: RunReport, path: Union[str, Path]) -> Path:
    return save_file(resolve_output_path(path), report.to_json() + "\n")


def figure_to_json(figure: FigureData, digits: Optional[int] = None) -> str:
    payload = round_floats(figure.model_dump(mode="json"), digits)
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def figure_to_csv(figure: FigureData, digits: Optional[int] = None) -> str:
    """表头 + 数据行，`,` 分隔，`.` 小数点，LF 换行"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(figure.columns)
    for row in figure.rounded_rows(digits):
        writer.writerow([repr(float(v)) for v in row])
    return buffer.getvalue()


def save_figure(figure: FigureData, path: Union[str, Path], fmt: FigureFormat = "json") -> Path:
    if fmt == "json":
        content = figure_to_json(figure)
    elif fmt == "csv":
        content = figure_to_csv(figure)
    else:
        raise ValueError(f"unknown figure format {fmt!r}")
    return save_file(resolve_output_path(path), content)
