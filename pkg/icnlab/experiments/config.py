"""Experiment Settings

Configuration files and CLI flags are merged into pydantic settings models,
which then build the domain configs. Keys match the long flag names.

Files ending in .yaml or .yml are read as YAML mappings. Anything else is
read as UTF-8 `key = value` lines with `#` comments; a comma-separated value
becomes a list and a dotted key (`init.pa = 3`) a nested mapping.
"""

import logging
from pathlib import Path
from typing import Any, TypeVar

import yaml
from dotenv.parser import parse_stream
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from icnlab.errors import ConfigError
from icnlab.game.asymmetric import AsymmetricConfig, Prices
from icnlab.game.symmetric import DEFAULT_EPSILON, SymmetricConfig, build_config
from icnlab.model.popularity import PopularityModel

logger = logging.getLogger(__name__)

YAML_SUFFIXES = (".yaml", ".yml")

SettingsT = TypeVar("SettingsT", bound=BaseModel)


class SymmetricSettings(BaseModel):
    """Flat parameters of one symmetric game."""

    model_config = ConfigDict(extra="forbid")

    m: int
    gamma: float
    r: float
    co: float
    k: int = 2
    rho: float = 0.1
    rho0: float = 0.1
    beta: float = 10.0
    c0: float = 1.0
    epsilon: float = DEFAULT_EPSILON

    def to_config(self) -> SymmetricConfig:
        return build_config(**self.model_dump())


class InitPrices(BaseModel):
    model_config = ConfigDict(extra="forbid")

    pa: float
    pb: float
    pc: float
    pos: float
    poc: float

    def to_prices(self) -> Prices:
        return Prices(**self.model_dump())


class AsymmetricSettings(BaseModel):
    """Parameters of the two-access-ICN game plus an optional starting price profile."""

    model_config = ConfigDict(extra="forbid")

    m: int
    gamma: float
    co: float
    rho_a: float = 0.1
    rho_b: float = 0.1
    rho0: float = 0.1
    beta_a: float = 10.0
    beta_b: float = 10.0
    c_a0: float = 1.0
    c_b0: float = 1.0
    c_c0: float = 0.7
    epsilon: float = DEFAULT_EPSILON
    init: InitPrices | None = None

    def to_config(self) -> AsymmetricConfig:
        return AsymmetricConfig(
            pm=PopularityModel(num_contents=self.m, gamma=self.gamma),
            rho_a=self.rho_a,
            rho_b=self.rho_b,
            rho0=self.rho0,
            beta_a=self.beta_a,
            beta_b=self.beta_b,
            c_a0=self.c_a0,
            c_b0=self.c_b0,
            c_c0=self.c_c0,
            co=self.co,
        )

    def reference_config(self) -> SymmetricConfig:
        """Symmetric game with A's parameters, used to seed runs at its equilibrium."""
        if not self.c_a0 > 0:
            msg = "c_a0 must be > 0 to derive an equilibrium starting point"
            raise ConfigError(msg)
        return build_config(
            m=self.m,
            gamma=self.gamma,
            r=self.c_c0 / self.c_a0,
            co=self.co,
            c0=self.c_a0,
            k=2,
            rho=self.rho_a,
            rho0=self.rho0,
            beta=self.beta_a,
            epsilon=self.epsilon,
        )


class SweepSettings(BaseModel):
    """Grid of symmetric games: gamma range times provider costs times cost ratios."""

    model_config = ConfigDict(extra="forbid")

    gamma_from: float = 0.01
    gamma_to: float = 1.0
    gamma_step: float = 0.01
    co_list: list[float]
    r_list: list[float]
    m: int = 100
    k: int = 2
    rho: float = 0.1
    rho0: float = 0.1
    beta: float = 10.0
    c0: float = 1.0
    epsilon: float = DEFAULT_EPSILON

    @field_validator("co_list", "r_list", mode="before")
    @classmethod
    def _single_value_list(cls, value: Any) -> Any:
        if isinstance(value, str | int | float):
            return [value]
        return value


def _parse_key_values(path: str | Path, stream) -> dict[str, Any]:
    data: dict[str, Any] = {}
    for binding in parse_stream(stream):
        line = binding.original.line
        if binding.error or (binding.key is not None and binding.value is None):
            msg = f"config {path} line {line}: expected `key = value`"
            raise ConfigError(msg)
        if binding.key is None:
            continue

        value: Any = binding.value.strip()
        if "," in value:
            value = [part.strip() for part in value.split(",")]
        *parents, name = binding.key.split(".")
        target = data
        for parent in parents:
            target = target.setdefault(parent, {})
            if not isinstance(target, dict):
                msg = f"config {path} line {line}: {parent} is not a section"
                raise ConfigError(msg)
        if name in target:
            msg = f"config {path} line {line}: duplicate key {binding.key}"
            raise ConfigError(msg)
        target[name] = value
    return data


def load_settings_file(path: str | Path | None) -> dict[str, Any]:
    """Read a YAML or `key = value` config; a missing path yields an empty mapping."""
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as f:
            if Path(path).suffix.lower() not in YAML_SUFFIXES:
                data = _parse_key_values(path, f)
                logger.debug("Loaded %d settings from %s", len(data), path)
                return data
            data = yaml.safe_load(f)
    except OSError as e:
        msg = f"cannot read config {path}: {e.strerror or e}"
        raise ConfigError(msg) from e
    except yaml.YAMLError as e:
        msg = f"config {path} is not valid YAML: {e}"
        raise ConfigError(msg) from e

    if data is None:
        return {}
    if not isinstance(data, dict):
        msg = f"config {path} must be a mapping of keys to values"
        raise ConfigError(msg)
    logger.debug("Loaded %d settings from %s", len(data), path)
    return data


def merge_settings(file_values: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Flag values override file values; flags left unset (None) do not."""
    merged = dict(file_values)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return merged


def parse_settings(model: type[SettingsT], data: dict[str, Any]) -> SettingsT:
    """Validate raw settings, naming the first offending field on failure."""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "config"
        msg = f"{field} {first['msg'].lower()}"
        raise ConfigError(msg) from e
