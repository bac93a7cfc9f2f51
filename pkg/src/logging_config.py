"""Console plus per-run file logging for benchmark runs.

Each run writes `<run_name>_<timestamp>.log` under the log directory.
DPSYNTH_LOG_LEVEL overrides the configured console level.
"""

import logging, os
from datetime import datetime

from src.config import config
from src.errors import ConfigError

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
QUIET_LOGGERS = ("asyncio",)

# marks the handlers this module owns so a second call replaces them
_OWNED = "_dpsynth_handler"


def resolve_level(name: str, setting: str) -> int:
    level = logging.getLevelName(str(name).upper())
    if not isinstance(level, int):
        raise ConfigError(setting, f"unknown log level {name!r}")
    return level


def _owned(handler: logging.Handler) -> logging.Handler:
    setattr(handler, _OWNED, True)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, DATE_FORMAT))
    return handler


def init_logging(log_directory: str | None = None, run_name: str = "dpsynth") -> str:
    """Attach a console and a file handler to the root logger; returns the log file path."""
    console_level = resolve_level(os.environ.get("DPSYNTH_LOG_LEVEL", config.console_log_level),
                                  "console_log_level")
    file_level = resolve_level(config.file_log_level, "file_log_level")

    log_directory = log_directory or config.log_directory
    os.makedirs(log_directory, exist_ok=True)
    stamp = datetime.now().strftime("%Y-%m-%d_%H-%M-%S")
    log_file = os.path.join(log_directory, f"{run_name}_{stamp}.log")

    root = logging.getLogger()
    for handler in [h for h in root.handlers if getattr(h, _OWNED, False)]:
        root.removeHandler(handler)
        handler.close()
    root.setLevel(min(console_level, file_level))

    console = _owned(logging.StreamHandler())
    console.setLevel(console_level)
    file = _owned(logging.FileHandler(log_file, encoding="utf-8"))
    file.setLevel(file_level)
    root.addHandler(console)
    root.addHandler(file)

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)
    logging.getLogger(__name__).debug("Logging to %s (console %s, file %s)", log_file,
                                      logging.getLevelName(console_level), logging.getLevelName(file_level))
    return log_file
