"""
Logging configuration for genericlab

Console logging goes to standard error so that standard output only carries
experiment artifacts. A rotating file handler and a JSON-lines structured
formatter are available through environment variables.
"""

import json
import logging
import os
import sys
import time
from datetime import datetime, timezone
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

_RESERVED_RECORD_KEYS = frozenset({
    'name', 'msg', 'args', 'levelname', 'levelno', 'pathname', 'filename',
    'module', 'lineno', 'funcName', 'created', 'msecs', 'relativeCreated',
    'thread', 'threadName', 'processName', 'process', 'exc_info', 'exc_text',
    'stack_info', 'taskName',
})


class StructuredFormatter(logging.Formatter):
    """JSON formatter for structured logging"""

    def format(self, record):
        log_entry = {
            'timestamp': datetime.now(timezone.utc).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno,
        }

        if record.exc_info:
            log_entry['exception'] = self.formatException(record.exc_info)

        for key, value in record.__dict__.items():
            if key not in _RESERVED_RECORD_KEYS:
                log_entry[key] = value

        return json.dumps(log_entry, default=str, sort_keys=True)


class LabLogger:
    """Named logger with a rich console handler and optional file output"""

    def __init__(self, name: str = "genericlab"):
        self.name = name
        self.logger = logging.getLogger(name)
        self.logger.setLevel(logging.DEBUG)
        self.logger.propagate = False

        if not self.logger.handlers:
            self._setup_handlers()

    def _setup_handlers(self):
        level = getattr(logging, os.getenv('LOG_LEVEL', 'WARNING').upper(), logging.WARNING)
        structured = os.getenv('GENERICLAB_LOG_FORMAT', 'text').lower() == 'json'

        if structured:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setFormatter(StructuredFormatter())
        else:
            console_handler = RichHandler(
                console=Console(stderr=True),
                show_path=False,
                markup=False,
                rich_tracebacks=True,
            )
            console_handler.setFormatter(logging.Formatter('%(message)s'))
        console_handler.setLevel(level)
        self.logger.addHandler(console_handler)

        log_file = os.getenv('GENERICLAB_LOG_FILE')
        if log_file:
            self._setup_file_handler(Path(log_file), level, structured)

    def _setup_file_handler(self, log_file: Path, level: int, structured: bool):
        try:
            log_file.parent.mkdir(parents=True, exist_ok=True)
            file_handler = RotatingFileHandler(log_file, maxBytes=10 * 1024 * 1024, backupCount=5)
        except OSError as e:
            self.logger.warning(f"Failed to setup file logging: {e}")
            return
        file_handler.setLevel(level)
        file_handler.setFormatter(StructuredFormatter() if structured else logging.Formatter(
            '%(asctime)s %(levelname)s %(module)s:%(lineno)d %(message)s'))
        self.logger.addHandler(file_handler)


logger = LabLogger().logger


def log_performance(operation: str, duration: float, **kwargs):
    """Log performance metrics"""
    extra_data = {
        'operation': operation,
        'duration_seconds': duration,
        'performance_log': True,
    }
    extra_data.update(kwargs)

    logger.info(f"Performance: {operation} took {duration:.2f}s", extra=extra_data)


def log_stage(stage: int, component: str, status: str, **kwargs):
    """Log one step of an inductive construction"""
    extra_data = {
        'stage': stage,
        'component': component,
        'status': status,
        'stage_log': True,
    }
    extra_data.update({key: str(value) for key, value in kwargs.items()})

    details = ", ".join(f"{key}={value}" for key, value in kwargs.items())
    logger.info(f"Stage {stage}: {component} ({status}) {details}".rstrip(), extra=extra_data)


class LogTimer:
    """Context manager for logging operation timing"""

    def __init__(self, operation: str, **kwargs):
        self.operation = operation
        self.kwargs = kwargs
        self.start_time: Optional[float] = None

    def __enter__(self):
        self.start_time = time.perf_counter()
        logger.debug(f"Starting: {self.operation}")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        duration = time.perf_counter() - self.start_time

        if exc_type:
            logger.error(
                f"Failed: {self.operation} after {duration:.2f}s",
                extra={'operation': self.operation, 'duration': duration, 'error': str(exc_val)},
            )
        else:
            log_performance(self.operation, duration, **self.kwargs)


logger.debug("Logging initialized", extra={'log_level': os.getenv('LOG_LEVEL', 'WARNING')})
