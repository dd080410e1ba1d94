import os
import logging
from typing import Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from .schemas import ConfigError, ExperimentSpec, validation_message
from .settings import ENV_PREFIX

logger = logging.getLogger("kacsim")

# config-file / environment key -> ExperimentSpec field
CONFIG_KEYS = {
    "COMMAND": "command",
    "ALGORITHM": "algorithms",
    "N": "n_particles",
    "LAMBDA": "lam",
    "T": "t_final",
    "DT": "dt",
    "REPLICATES": "replicates",
    "SEED": "seed",
    "BINS": "bins",
    "OUT": "out",
    "WORKERS": "workers",
    "EPSILON": "epsilon",
    "ENERGY": "energy",
    "TVN_REPEATS": "tvn_repeats",
    "TAIL_FROM": "tail_from",
    "STEP_BACK": "step_back",
    "HARVEST_ALL": "harvest_all",
    "CURVE": "curve",
    "GRID": "grid",
}


def load_kacsim_env(env_file: str) -> dict:
    """
    Load experiment settings from a flat KEY=value config file.

    Args:
        env_file (str): Path to the config file (dotenv syntax, '#' comments).

    Returns:
        dict: ExperimentSpec field names mapped to their raw string values.

    Raises:
        ConfigError: if the file does not exist or sets an unknown key.
    """
    if not os.path.exists(env_file):
        raise ConfigError(f"config file '{env_file}' does not exist")
    raw = dotenv_values(env_file)
    unknown = sorted(k for k in raw if k.upper() not in CONFIG_KEYS)
    if unknown:
        raise ConfigError(
            f"unknown key(s) {unknown} in '{env_file}', expected any of {', '.join(CONFIG_KEYS)}"
        )
    values = {CONFIG_KEYS[k.upper()]: v for k, v in raw.items() if v is not None and v != ""}
    logger.info(f"Loaded {len(values)} setting(s) from '{env_file}'")
    return values


def read_environment() -> dict:
    """Settings given as KACSIM_<KEY> environment variables."""
    values = {}
    for key, name in CONFIG_KEYS.items():
        if key == "COMMAND":
            continue
        value = os.getenv(ENV_PREFIX + key)
        if value:
            values[name] = value
    return values


def resolve_spec(command: str, cli_values: dict, config: Optional[str] = None,
                 ignore_env: bool = False) -> ExperimentSpec:
    """
    Merge settings with precedence CLI flag > config file > environment >
    default and validate them.

    Raises:
        ConfigError: naming the violated rule.
    """
    values = {} if ignore_env else read_environment()
    if config:
        values.update(load_kacsim_env(config))
    values.update({k: v for k, v in cli_values.items() if v is not None})

    file_command = values.pop("command", command)
    if file_command != command:
        raise ConfigError(f"config is for the '{file_command}' command, not '{command}'")
    try:
        return ExperimentSpec(command=command, **values)
    except ValidationError as e:
        raise ConfigError(validation_message(e)) from e
