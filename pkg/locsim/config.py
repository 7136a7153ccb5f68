from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

from locsim.errors import ConfigError
from locsim.tolerances import DEFAULT_TOLERANCES_PATH, Tolerances, load_tolerances

BASE_DIR = Path(__file__).resolve().parent.parent
load_dotenv(BASE_DIR / ".env")

REPORT_FORMATS = ("json", "text")


@dataclass
class Config:
    tolerances_path: Path
    tolerances: Tolerances
    seed: int
    report_format: str
    log_level: int
    workers: int


def _int_env(name: str, default: int, minimum: int) -> int:
    raw = os.getenv(name, "").strip()
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def load_config() -> Config:
    raw_path = os.getenv("LOCSIM_TOLERANCES", "").strip()
    tolerances_path = DEFAULT_TOLERANCES_PATH
    if raw_path:
        # relative paths are taken from the repository root, like .env
        tolerances_path = Path(raw_path)
        if not tolerances_path.is_absolute():
            tolerances_path = BASE_DIR / tolerances_path
        tolerances_path = tolerances_path.resolve()
    tolerances = load_tolerances(tolerances_path if raw_path else None)

    seed = _int_env("LOCSIM_SEED", 0, 0)
    if seed >= 2**64:
        raise ConfigError("LOCSIM_SEED must fit in 64 bits")

    report_format = os.getenv("LOCSIM_FORMAT", "json").strip().lower() or "json"
    if report_format not in REPORT_FORMATS:
        raise ConfigError(f"LOCSIM_FORMAT must be one of {', '.join(REPORT_FORMATS)}")

    level_name = os.getenv("LOCSIM_LOG_LEVEL", "WARNING").strip().upper() or "WARNING"
    log_level = logging.getLevelName(level_name)
    if not isinstance(log_level, int):
        raise ConfigError(f"LOCSIM_LOG_LEVEL is not a logging level: {level_name!r}")

    workers = _int_env("LOCSIM_WORKERS", 1, 1)

    return Config(
        tolerances_path=tolerances_path,
        tolerances=tolerances,
        seed=seed,
        report_format=report_format,
        log_level=log_level,
        workers=workers,
    )
