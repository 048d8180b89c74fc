"""Service configuration with flags > environment > config file precedence."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

ENV_DATA_DIR = "PRESAISE_DATA_DIR"
ENV_LLM_ENDPOINT = "PRESAISE_LLM_ENDPOINT"
CONFIG_FILE = "presaise.toml"

DEFAULT_DATA_DIR = "./presaise-data"
DEFAULT_TIME_BUDGET = 30.0
DEFAULT_PORT = 8000
MIN_ROWS_PER_MARKET = 30


@dataclass
class ServiceConfig:
    data_dir: Path
    llm_endpoint: str | None  # absence forces the deterministic fallback
    time_budget: float
    port: int


def _file_settings(config_path: str | Path | None) -> dict:
    path = Path(config_path) if config_path else Path(CONFIG_FILE)
    if not path.is_file():
        return {}
    with path.open("rb") as fh:
        return tomllib.load(fh)


def load_config(
    data_dir: str | None = None,
    llm_endpoint: str | None = None,
    time_budget: float | None = None,
    port: int | None = None,
    config_path: str | Path | None = None,
) -> ServiceConfig:
    """Explicit arguments win, then environment variables, then the file."""
    file_cfg = _file_settings(config_path)

    def pick(flag, env_name, file_key, default):
        if flag is not None:
            return flag
        env = os.environ.get(env_name) if env_name else None
        if env:
            return env
        return file_cfg.get(file_key, default)

    return ServiceConfig(
        data_dir=Path(pick(data_dir, ENV_DATA_DIR, "data_dir",
                           DEFAULT_DATA_DIR)),
        llm_endpoint=pick(llm_endpoint, ENV_LLM_ENDPOINT, "llm_endpoint",
                          None),
        time_budget=float(pick(time_budget, None, "time_budget_s",
                               DEFAULT_TIME_BUDGET)),
        port=int(pick(port, None, "port", DEFAULT_PORT)),
    )
