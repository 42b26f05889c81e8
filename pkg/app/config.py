"""
Environment and logging configuration.

Loads `.env` from the project root (falling back to the current directory)
and exposes the few process-level settings the pipeline reads.
"""

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

project_root = Path(__file__).resolve().parent.parent

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

DEFAULT_MAX_DOMAIN_CELLS = 1_000_000

_env_loaded = False


def load_environment() -> None:
    """Load environment variables once per process."""
    global _env_loaded
    if _env_loaded:
        return
    env_path = project_root / ".env"
    if env_path.exists():
        load_dotenv(env_path)
    else:
        load_dotenv()
    _env_loaded = True


def configure_logging(level: str | None = None) -> None:
    """Set up root logging for entry points (CLI, service)."""
    load_environment()
    level_name = (level or os.getenv("PODSYNTH_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(level=getattr(logging, level_name, logging.INFO), format=LOG_FORMAT)


def get_output_dir() -> Path:
    """Default directory for metrics, traces and synthetic data."""
    load_environment()
    return Path(os.getenv("PODSYNTH_OUTPUT_DIR", "runs"))


def get_max_domain_cells() -> int:
    """Largest full-domain distribution a generator will allocate."""
    load_environment()
    raw = os.getenv("PODSYNTH_MAX_DOMAIN_CELLS")
    if not raw:
        return DEFAULT_MAX_DOMAIN_CELLS
    try:
        return int(raw)
    except ValueError:
        logging.getLogger(__name__).warning(
            f"Ignoring non-integer PODSYNTH_MAX_DOMAIN_CELLS={raw!r}"
        )
        return DEFAULT_MAX_DOMAIN_CELLS
