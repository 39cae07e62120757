import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List

from dotenv import load_dotenv

from services.errors import ValidationError

LOGGER = logging.getLogger(__name__)

# Used when coins.json is missing or unreadable
DEFAULT_CONFIG: Dict[str, Any] = {
    "coins": {
        "symmetric": {"enabled": True, "builtin": "symmetric"},
        "hadamard": {"enabled": True, "builtin": "hadamard"},
    },
    "settings": {
        "coin": "symmetric",
        "epsilon": 1e-12,
        "format": "csv",
        "seed": 0,
        "ds_max": 100,
        "lags": [1],
        "cesaro_convention": "main",
    },
}


def load_environment(dotenv_path: str = ".env") -> None:
    """Load environment variables from a .env file if present."""
    if os.path.exists(dotenv_path):
        load_dotenv(dotenv_path)
        LOGGER.info("Environment variables loaded from %s", dotenv_path)
    else:
        LOGGER.debug(".env file not found at %s; relying on process environment.", dotenv_path)


def config_path() -> Path:
    override = os.getenv("QWALK_CONFIG")
    if override:
        return Path(override)
    return Path(__file__).parent.parent / "coins.json"


def load_config() -> Dict[str, Any]:
    """Load coin presets and settings from coins.json.

    Returns:
        The parsed configuration with any missing settings filled from
        DEFAULT_CONFIG. Falls back to DEFAULT_CONFIG entirely when the file
        is absent or malformed.
    """
    path = config_path()
    if not path.exists():
        LOGGER.warning("%s not found, using default configuration", path)
        return json.loads(json.dumps(DEFAULT_CONFIG))

    try:
        with open(path, "r", encoding="utf-8") as f:
            config = json.load(f)
    except (json.JSONDecodeError, OSError) as exc:
        LOGGER.warning("Failed to load %s: %s. Using default configuration.", path, exc)
        return json.loads(json.dumps(DEFAULT_CONFIG))

    settings = dict(DEFAULT_CONFIG["settings"])
    settings.update(config.get("settings", {}) or {})
    config["settings"] = settings
    config.setdefault("coins", {})
    LOGGER.debug("Loaded %d coin presets from %s", len(config["coins"]), path)
    return config


def load_settings() -> Dict[str, Any]:
    return load_config()["settings"]


def enabled_coin_presets() -> Dict[str, Dict[str, Any]]:
    """Return the coin presets whose 'enabled' flag is not false."""
    coins = load_config().get("coins", {})
    return {name: entry for name, entry in coins.items() if entry.get("enabled", True)}


def parse_floats(text: str, count: int, what: str) -> List[float]:
    """Parse exactly ``count`` comma or whitespace separated floats."""
    tokens = [token for token in text.replace(",", " ").split() if token]
    if len(tokens) != count:
        raise ValidationError(f"{what} expects {count} numbers (got {len(tokens)})")
    try:
        return [float(token) for token in tokens]
    except ValueError as exc:
        raise ValidationError(f"{what}: {exc}") from exc


def parse_int_list(text: str, what: str) -> List[int]:
    tokens = [token for token in text.replace(",", " ").split() if token]
    if not tokens:
        raise ValidationError(f"{what} must list at least one integer")
    try:
        return [int(token) for token in tokens]
    except ValueError as exc:
        raise ValidationError(f"{what}: {exc}") from exc


def divisors(n: int) -> List[int]:
    """Return the divisors d of n with 1 < d < n in ascending order."""
    return [d for d in range(2, n // 2 + 1) if n % d == 0]


def require_positive(value: int, name: str) -> None:
    if value < 1:
        raise ValidationError(f"{name} must be >= 1 (got {value})")
