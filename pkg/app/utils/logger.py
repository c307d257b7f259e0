import logging
import sys
from app.config.settings import settings


def setup_logger(name: str = "qudit_bell") -> logging.Logger:
    """配置日志"""
    logger = logging.getLogger(name)
    level = getattr(logging, settings.log_level.upper())
    logger.setLevel(level)

    # 重复调用时不再追加 handler
    if logger.handlers:
        return logger

    # 控制台处理器；写 stderr，stdout 留给 JSON 报告
    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(level)

    # 格式化
    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )
    handler.setFormatter(formatter)

    logger.addHandler(handler)
    logger.propagate = False
    return logger


# 全局日志实例
logger = setup_logger()
