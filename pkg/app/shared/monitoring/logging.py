import logging
import os
import sys
from typing import Any, Dict

LOG_FORMAT = (
    "%(asctime)s | %(levelname)s | %(name)s:%(funcName)s:%(lineno)d | %(message)s"
)


def _attach(logger: logging.Logger, handler: logging.Handler, level: int) -> None:
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)


def setup_logging(log_level: str = "INFO", log_dir: str = "logs") -> None:
    """
    Configure console plus file logging for a CLI run
    """
    os.makedirs(log_dir, exist_ok=True)

    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        handler.close()
    root_logger.handlers.clear()

    level = getattr(logging, log_level.upper())
    root_logger.setLevel(level)

    # stderr only: stdout carries key=value results
    _attach(root_logger, logging.StreamHandler(sys.stderr), level)
    _attach(root_logger, logging.FileHandler(os.path.join(log_dir, "app.log")), level)
    _attach(
        root_logger,
        logging.FileHandler(os.path.join(log_dir, "error.log")),
        logging.ERROR,
    )


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance
    """
    return logging.getLogger(name)


class LoggerMixin:
    """
    Mixin to add a class-named logger
    """

    @property
    def logger(self) -> logging.Logger:
        if not hasattr(self, "_logger"):
            self._logger = get_logger(self.__class__.__name__)
        return self._logger


def log_command(command: str, **options) -> Dict[str, Any]:
    """
    Create a log context for a CLI subcommand and its parsed options
    """
    return {"command": command, "options": options, "log_event": "command"}


def log_training_event(event: str, epoch: int, **kwargs) -> Dict[str, Any]:
    """
    Create a log context for training loop events
    """
    return {"event": event, "epoch": epoch, "log_event": "training", **kwargs}


def log_io_operation(operation: str, path: str, **kwargs) -> Dict[str, Any]:
    """
    Create a log context for file reads and writes
    """
    return {"operation": operation, "path": path, "log_event": "io", **kwargs}
