"""Scenario configuration: pydantic model plus the flat ``key = value`` file format."""
from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from pydantic import BaseModel, Field, ValidationError, root_validator, validator

from ...compat.dotenv import load_env_file
from ...core.errors import ConfigError
from ...core.detectors.windows import DEFAULT_WINDOW_SIZES_S
from ...core.plant.config import PlantConfig

logger = logging.getLogger(__name__)

SCENARIOS = ("baseline", "profile", "process-delay", "tank-overflow", "detector-sweep")
ATTACK_SCENARIOS = ("process-delay", "tank-overflow", "detector-sweep")
PLANT_PREFIX = "plant."
ENV_KEYS = {"BLACKHOLE_SEED": "seed", "BLACKHOLE_OUT": "out"}

_PLANT_FIELDS = {f.name for f in fields(PlantConfig)}


class ScenarioConfig(BaseModel):
    seed: int = Field(1, ge=0, description="Seed of the numpy PCG64 generator")
    scenario: str = Field("baseline", description="One of " + ", ".join(SCENARIOS))
    drop_duration_s: float = Field(600.0, ge=0, description="How long the drop rule stays installed")
    profile_dir: Optional[str] = Field(None, description="Directory holding lts.csv and id_map.csv from a profile run")
    window_sizes_s: List[float] = Field(default_factory=lambda: list(DEFAULT_WINDOW_SIZES_S))
    out: str = Field("out", description="Output directory")
    emit_ground_truth: bool = False

    attack_run_s: float = Field(7200.0, gt=0)
    profile_cycles: int = Field(3, ge=2)
    first_cycle_offset_s: float = Field(7200.0, ge=0)
    fluctuation_cycle: int = Field(2, ge=0, description="1-based profiling cycle with benign fluctuations, 0 for none")
    fluctuations_per_link: int = Field(5, ge=0)
    fluctuation_min_s: float = Field(30.0, gt=0)
    fluctuation_max_s: float = Field(60.0, gt=0)
    fluctuation_extra_delay_ms: float = Field(150.0, ge=0)
    fluctuation_span_start_s: float = Field(3600.0, ge=0)
    fluctuation_span_end_s: float = Field(25200.0, gt=0)
    benign_fluctuations: bool = Field(True, description="Inject fluctuations into the held-out benign run")

    rto_ms: float = Field(200.0, gt=0)
    max_retries: int = Field(5, ge=0)
    overhead_bytes: int = Field(29, ge=0)
    gap_factor: float = Field(50.0, gt=1)

    nnd_safety_factor: float = Field(1.0, gt=0)
    detano_tolerance: float = Field(1e-9, ge=0)
    pad_min_support: int = Field(1, ge=1)

    plant: Dict[str, float] = Field(default_factory=dict)

    class Config:
        extra = "forbid"

    @validator("scenario")
    def known_scenario(cls, v: str) -> str:
        v = str(v).strip().lower()
        if v not in SCENARIOS:
            raise ValueError(f"unknown scenario {v!r}; expected one of {', '.join(SCENARIOS)}")
        return v

    @validator("window_sizes_s", pre=True)
    def split_sizes(cls, v: Any) -> Any:
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        return v

    @validator("window_sizes_s")
    def positive_sizes(cls, v: List[float]) -> List[float]:
        if not v or any(size <= 0 for size in v):
            raise ValueError("window sizes must be positive")
        return v

    @validator("plant")
    def known_plant_keys(cls, v: Dict[str, float]) -> Dict[str, float]:
        unknown = sorted(set(v) - _PLANT_FIELDS)
        if unknown:
            raise ValueError(f"unknown plant keys: {', '.join(unknown)}")
        return v

    @root_validator(skip_on_failure=True)
    def consistent(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["scenario"] in ATTACK_SCENARIOS and values["drop_duration_s"] <= 0:
            raise ValueError("drop_duration_s must be > 0 for attack scenarios")
        if values["fluctuation_min_s"] > values["fluctuation_max_s"]:
            raise ValueError("fluctuation_min_s exceeds fluctuation_max_s")
        if values["fluctuation_span_start_s"] >= values["fluctuation_span_end_s"]:
            raise ValueError("fluctuation span is empty")
        if values["fluctuation_cycle"] > values["profile_cycles"]:
            raise ValueError("fluctuation_cycle is beyond the profiled cycles")
        return values

    def plant_config(self) -> PlantConfig:
        try:
            return PlantConfig.from_dict(self.plant)
        except ValueError as exc:
            raise ConfigError(f"invalid plant constants: {exc}") from exc

    def canonical_items(self) -> List[str]:
        items = []
        # the output location does not change results
        for key, value in sorted(self.dict(exclude={"out"}).items()):
            if key == "plant":
                items.extend(f"{PLANT_PREFIX}{k}={v!r}" for k, v in sorted(value.items()))
            elif isinstance(value, list):
                items.append(f"{key}={','.join(repr(x) for x in value)}")
            else:
                items.append(f"{key}={value!r}")
        return items

    def config_hash(self) -> str:
        return hashlib.sha256("\n".join(self.canonical_items()).encode("utf-8")).hexdigest()


def parse_config_text(text: str, *, source: str = "<config>") -> Dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment and ``plant.*`` keys nest."""

    values: Dict[str, Any] = {}
    plant: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{number}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{number}: empty key")
        if key.startswith(PLANT_PREFIX):
            plant[key[len(PLANT_PREFIX):]] = value
        else:
            values[key] = value
    if plant:
        values["plant"] = plant
    return values


def load_config_file(path: Path) -> Dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def _env_values(environ: Mapping[str, str]) -> Dict[str, Any]:
    return {field_name: environ[key] for key, field_name in ENV_KEYS.items() if environ.get(key)}


def build_config(
    *,
    config_path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> ScenarioConfig:
    """Merge defaults < environment < config file < explicit overrides."""

    if environ is None:
        env_file = os.environ.get("BLACKHOLE_ENV_FILE")
        if env_file:
            load_env_file(env_file)
        environ = os.environ
    merged: Dict[str, Any] = _env_values(environ)
    if config_path is not None:
        file_values = load_config_file(config_path)
        plant = {**merged.pop("plant", {}), **file_values.pop("plant", {})}
        merged.update(file_values)
        if plant:
            merged["plant"] = plant
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    try:
        config = ScenarioConfig(**merged)
    except ValidationError as exc:
        raise ConfigError(_summarize(exc)) from exc
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    logger.debug("scenario config %s (hash %s)", config.scenario, config.config_hash()[:12])
    return config


def _summarize(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(item) for item in error.get("loc", ())) or "config"
        parts.append(f"{location}: {error.get('msg')}")
    return "; ".join(parts)


__all__ = [
    "ATTACK_SCENARIOS",
    "SCENARIOS",
    "ScenarioConfig",
    "build_config",
    "load_config_file",
    "parse_config_text",
]
