import os
import sys
from typing import Optional

from loguru import logger

LOG_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> <fg #777777>|</> <level>{level: <7}</level> <fg "
    "#777777>|</> <cyan>{name:.<8}</cyan>:<cyan>{function:.<8}</cyan>:<cyan>{line: >4}</cyan> <fg "
    "#777777>-</> <level>{message}</level>"
)

_file_sink_id: Optional[int] = None


def load_logger():
    logger.remove()  # 移除默认配置
    if os.getenv("ENVIRONMENT") == "dev":
        level = os.getenv("LOG_LEVEL", "DEBUG")  # 开发环境默认DEBUG
    else:
        level = os.getenv("LOG_LEVEL", "INFO")  # 其它环境默认INFO
    logger.add(sys.stderr, format=LOG_FORMAT, colorize=True, level=level)


def attach_run_log(out_dir: str) -> None:
    """在输出目录下额外写一份 run.log，每次运行只保留一个文件 sink"""
    global _file_sink_id
    detach_run_log()
    os.makedirs(out_dir, exist_ok=True)
    _file_sink_id = logger.add(
        os.path.join(out_dir, "run.log"),
        format="{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <7} | {name}:{function}:{line} - {message}",
        level=os.getenv("LOG_LEVEL", "DEBUG"),
        encoding="utf-8",
        mode="w",
    )


def detach_run_log() -> None:
    global _file_sink_id
    if _file_sink_id is not None:
        logger.remove(_file_sink_id)
        _file_sink_id = None
