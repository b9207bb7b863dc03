import os
import sys
from dataclasses import dataclass

from dotenv import load_dotenv

load_dotenv()

# --- CONFIGURATION ---
DEFAULT_DB_PATH = "chie_results.db"
DEFAULT_OUTPUT_DIR = "out"
DEFAULT_PROGRESS_EVERY = 10_000


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        print(f"[CONFIG] Ignoring non-integer {name}={raw!r}, using {default}", file=sys.stderr)
        return default


def _env_flag(name: str) -> bool:
    return os.getenv(name, "").strip().lower() in ("1", "true", "yes", "on")


@dataclass(frozen=True)
class Settings:
    """Snapshot of the environment-driven settings."""
    threads: int = 1
    db_path: str = DEFAULT_DB_PATH
    output_dir: str = DEFAULT_OUTPUT_DIR
    quiet: bool = False
    progress_every: int = DEFAULT_PROGRESS_EVERY


def load_settings() -> Settings:
    """Read CHIE_* variables (after .env has been loaded)."""
    return Settings(
        threads=max(1, _env_int("CHIE_THREADS", 1)),
        db_path=os.getenv("CHIE_DB_PATH", DEFAULT_DB_PATH),
        output_dir=os.getenv("CHIE_OUTPUT_DIR", DEFAULT_OUTPUT_DIR),
        quiet=_env_flag("CHIE_QUIET"),
        progress_every=max(1, _env_int("CHIE_PROGRESS_EVERY", DEFAULT_PROGRESS_EVERY)),
    )


def log(tag: str, message: str):
    """Bracket-tagged progress line on stderr; stdout is reserved for reports."""
    if _env_flag("CHIE_QUIET"):
        return
    print(f"[{tag}] {message}", file=sys.stderr, flush=True)
