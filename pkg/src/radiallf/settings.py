"""
Optional YAML settings file and .env handling
"""

import logging
import os
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from .errors import ConfigError

logger = logging.getLogger("radiallf.settings")

CONFIG_ENV = "RADIALLF_CONFIG"
CASES_ENV = "RADIALLF_CASES"

SOLVER_KEYS = ("eps_grad", "eps_volt", "alpha_bar", "beta", "sigma", "max_backtracks", "max_iter")
RUN_KEYS = ("init", "retraction", "load_scale")
KNOWN_KEYS = SOLVER_KEYS + RUN_KEYS


def load_environment(dotenv_path: Optional[str] = None) -> bool:
    """Load a .env file into os.environ without overriding existing variables"""
    return load_dotenv(dotenv_path=dotenv_path, override=False)


def parse_settings(text: str, source: str = "<string>") -> Dict[str, Any]:
    """Parse a flat key-value YAML document, rejecting unknown keys"""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"{source}: invalid YAML ({e})")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: expected a mapping at the top level")
    unknown = sorted(str(key) for key in data if key not in KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"{source}: unknown setting(s) {unknown}, expected some of {list(KNOWN_KEYS)}")
    return dict(data)


def load_settings(path: Optional[str] = None) -> Dict[str, Any]:
    """Read `path`, or the file named by RADIALLF_CONFIG, or nothing"""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    if not os.path.isfile(path):
        raise ConfigError(f"config file '{path}' does not exist")
    with open(path, "r", encoding="utf-8") as handle:
        settings = parse_settings(handle.read(), source=path)
    logger.info(f"loaded {len(settings)} setting(s) from {path}")
    return settings


def merge(settings: Dict[str, Any], flags: Dict[str, Any]) -> Dict[str, Any]:
    """Flags that were given (not None) win over file settings"""
    merged = dict(settings)
    merged.update({key: value for key, value in flags.items() if value is not None})
    return merged


def solver_overrides(settings: Dict[str, Any]) -> Dict[str, Any]:
    return {key: settings[key] for key in SOLVER_KEYS if settings.get(key) is not None}


def cases_dir() -> Optional[str]:
    return os.environ.get(CASES_ENV) or None
