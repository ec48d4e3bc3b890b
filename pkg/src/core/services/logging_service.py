"""Process-wide logging setup"""

import logging
import sys
from pathlib import Path
from typing import Optional, Union

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def configure_logging(level: Union[str, int] = 'INFO', log_file: Optional[str] = None) -> logging.Logger:
    """
    Install a stderr handler and, optionally, a UTF-8 file handler on the root logger.

    Calling it again replaces the handlers installed by a previous call.

    Args:
        level: Level name or number
        log_file: Optional path of a debug log file

    Returns:
        The root logger
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, '_stg_handler', False):
            root.removeHandler(handler)
            handler.close()

    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO
    root.setLevel(logging.DEBUG if log_file else level)

    formatter = logging.Formatter(LOG_FORMAT)
    stream = logging.StreamHandler(sys.stderr)
    stream.setLevel(level)
    stream.setFormatter(formatter)
    stream._stg_handler = True
    root.addHandler(stream)

    if log_file:
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(path, mode='w', encoding='utf-8')
        file_handler.setFormatter(formatter)
        file_handler.setLevel(logging.DEBUG)
        file_handler._stg_handler = True
        root.addHandler(file_handler)

    return root
