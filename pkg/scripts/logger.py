import logging
from contextlib import contextmanager
from pathlib import Path

LOGGER_NAME: str = "ambient_backscatter"
LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
RUN_LOG_NAME: str = "run.log"


def setup_logger(name: str = LOGGER_NAME, level: int = logging.INFO) -> logging.Logger:
    """Set up the package logger with a single console handler.

    Calling it again only changes the level, so the CLI can raise verbosity
    per invocation without stacking handlers.

    Args:
        name (str): The name of the logger.
        level (int): Logging level (default is logging.INFO).

    Returns:
        logging.Logger: Configured logger.
    """
    logger_ = logging.getLogger(name)
    logger_.setLevel(level)

    consoles = [h for h in logger_.handlers if not isinstance(h, logging.FileHandler)]
    if not consoles:
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger_.addHandler(console_handler)
        consoles = [console_handler]

    for handler in consoles:
        handler.setLevel(level)

    return logger_


@contextmanager
def run_log(out_dir: Path, name: str = LOGGER_NAME):
    """Copy every record of one command into ``out_dir/run.log``."""
    path = Path(out_dir) / RUN_LOG_NAME
    path.parent.mkdir(parents=True, exist_ok=True)

    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger_ = logging.getLogger(name)
    logger_.addHandler(handler)
    try:
        yield path
    finally:
        logger_.removeHandler(handler)
        handler.close()


# solver and sweep modules log a line per chunk; matplotlib should not
logging.getLogger("matplotlib").setLevel(logging.WARNING)

logger = setup_logger()
