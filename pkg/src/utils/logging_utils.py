import logging
from pathlib import Path
from typing import Optional, Union

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(log_file: Optional[Union[str, Path]] = None, level: int = logging.INFO):
    """Configure logging"""
    handlers = [logging.StreamHandler()]

    if log_file is not None:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_path))

    # force=True so that consecutive commands in one process switch log files
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)
