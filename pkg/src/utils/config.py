import os
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

from src.utils.errors import InputError
from src.utils.logger import logger

# Load environment variables
load_dotenv()

DEFAULT_HORIZON = 16
DEFAULT_LENGTH_CAP = 4_000_000
DEFAULT_WORKERS = 1


def parse_rational(text: str) -> Fraction:
    """Parse "p/q", an integer or a finite decimal into an exact rational"""
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"not a rational number: {text!r}") from e


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"{name}={raw!r} is not an integer, using {default}")
        return default
    if value < 1:
        logger.warning(f"{name}={value} must be positive, using {default}")
        return default
    return value


class Config:
    """Process-wide defaults read from the environment"""

    def __init__(self):
        self.cache_dir: Optional[Path] = None
        raw_cache = os.getenv("GENERICLAB_CACHE_DIR")
        if raw_cache:
            self.cache_dir = Path(raw_cache)

        self.horizon = _int_env("GENERICLAB_HORIZON", DEFAULT_HORIZON)
        self.length_cap = _int_env("GENERICLAB_LENGTH_CAP", DEFAULT_LENGTH_CAP)
        self.workers = _int_env("GENERICLAB_WORKERS", DEFAULT_WORKERS)
        self.log_level = os.getenv("LOG_LEVEL", "WARNING").upper()

        self._validate_and_configure()

    def _validate_and_configure(self):
        """Validate the cache directory; an unusable one disables persistence"""
        if self.cache_dir is None:
            logger.debug("GENERICLAB_CACHE_DIR not set - word cache disabled")
            return
        try:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.warning(f"Cannot use cache directory {self.cache_dir}: {e}")
            self.cache_dir = None

    def as_dict(self) -> Dict[str, object]:
        return {
            "cache_dir": str(self.cache_dir) if self.cache_dir else None,
            "horizon": self.horizon,
            "length_cap": self.length_cap,
            "workers": self.workers,
            "log_level": self.log_level,
        }


class ExperimentConfig(BaseModel):
    """Validated settings for one CLI experiment"""

    command: str
    inputs: List[Path] = Field(default_factory=list)
    output: Optional[Path] = None
    horizon: int = Field(default=DEFAULT_HORIZON, ge=1)
    length_cap: int = Field(default=DEFAULT_LENGTH_CAP, ge=1)
    stages: int = Field(default=5, ge=1)
    eps: str = "1/8"
    delta1: str = "0"
    delta2: str = "0"
    tolerance: str = "1/20"
    seed: int = 0
    workers: int = Field(default=DEFAULT_WORKERS, ge=1)

    @field_validator("inputs")
    @classmethod
    def _inputs_exist(cls, paths: List[Path]) -> List[Path]:
        missing = [str(path) for path in paths if not path.is_file()]
        if missing:
            raise ValueError(f"input file(s) not found: {', '.join(missing)}")
        return paths

    @field_validator("eps", "delta1", "delta2", "tolerance")
    @classmethod
    def _rational(cls, value: str) -> str:
        try:
            Fraction(str(value).strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"not a rational number: {value!r}") from e
        return str(value).strip()

    def rational(self, name: str) -> Fraction:
        return parse_rational(getattr(self, name))


# Global configuration instance
config = Config()


def validate_configuration() -> bool:
    """Validate that the environment-derived configuration is usable"""
    ok = config.horizon >= 1 and config.length_cap >= 1 and config.workers >= 1
    if not ok:
        logger.error(f"Configuration validation failed: {config.as_dict()}")
    return ok
