"""
Application configuration module.
Loads settings from environment variables, a `.env` file or a CLI config file.
"""
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables."""

    app_name: str = Field(default="Microcavity Toolkit API", alias="APP_NAME")
    debug: bool = Field(default=False, alias="DEBUG")
    host: str = Field(default="0.0.0.0", alias="HOST")
    port: int = Field(default=8000, alias="PORT")
    log_level: str = Field(default="INFO", alias="LOG_LEVEL")

    penetration_lambda: float = Field(default=0.8, ge=0, alias="PENETRATION_LAMBDA")
    medium_index: float = Field(default=1.0, gt=0, alias="MEDIUM_INDEX")
    transmission_ppm: float = Field(default=5.0, ge=0, alias="TRANSMISSION_PPM")
    excess_loss_ppm: float = Field(default=0.5, ge=0, alias="EXCESS_LOSS_PPM")
    roughness_nm: float = Field(default=0.0, ge=0, alias="ROUGHNESS_NM")
    absorption_ppm: float = Field(default=0.0, ge=0, alias="ABSORPTION_PPM")
    branching_ratio: float = Field(default=1.0, ge=0, le=1, alias="BRANCHING_RATIO")

    min_contrast: float = Field(default=0.15, gt=0, alias="MIN_CONTRAST")
    fit_max_iterations: int = Field(default=200, gt=0, alias="FIT_MAX_ITERATIONS")
    fit_tolerance: float = Field(default=1e-9, gt=0, alias="FIT_TOLERANCE")
    root_rtol: float = Field(default=1e-12, gt=0, alias="ROOT_RTOL")
    root_grid_points: int = Field(default=400, ge=8, alias="ROOT_GRID_POINTS")
    ladder_tolerance: float = Field(default=0.05, gt=0, alias="LADDER_TOLERANCE")
    max_mode_order: int = Field(default=4, ge=1, alias="MAX_MODE_ORDER")
    profile_fit_fraction: float = Field(default=0.4, gt=0, le=1, alias="PROFILE_FIT_FRACTION")
    profile_xtol: float = Field(default=1e-9, gt=0, alias="PROFILE_XTOL")

    max_workers: int = Field(default=4, ge=1, alias="MAX_WORKERS")
    output_format: Literal["text", "csv", "json"] = Field(default="text", alias="OUTPUT_FORMAT")
    out_dir: Optional[Path] = Field(default=None, alias="OUT_DIR")

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=False,
        populate_by_name=True,
        extra="ignore",
    )


settings = Settings()


def _field_names() -> Dict[str, str]:
    """Upper-cased alias or field name -> field name."""
    names = {}
    for name, field in Settings.model_fields.items():
        names[name.upper()] = name
        if field.alias:
            names[field.alias.upper()] = name
    return names


def read_config_file(config_file: Path) -> Dict[str, str]:
    """KEY=value pairs of `config_file` keyed by settings field name; unknown keys are dropped."""
    names = _field_names()
    values = {}
    for key, value in dotenv_values(config_file).items():
        name = names.get(key.strip().upper())
        if name is not None and value is not None:
            values[name] = value
    return values


def load_settings(config_file: Optional[Path] = None, **overrides: Any) -> Settings:
    """
    Build settings with CLI precedence.

    Config-file values enter as init values and outrank the environment.
    `.env` is not read when a config file is given.

    Args:
        config_file: Flat KEY=value file read in place of `.env`
        overrides: Values given on the command line (None entries are dropped)

    Returns:
        Settings: flags > config file > environment > defaults
    """
    flags = {key: value for key, value in overrides.items() if value is not None}
    if config_file is None:
        return Settings(**flags)
    return Settings(_env_file=None, **{**read_config_file(config_file), **flags})


def configure(new_settings: Settings) -> Settings:
    """Copy `new_settings` into the process-wide `settings` that the services read."""
    for name in Settings.model_fields:
        setattr(settings, name, getattr(new_settings, name))
    return settings


class RunConfig(BaseModel):
    """One parsed CLI invocation."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    command: Literal["design", "table1", "spectrum", "profile", "sweep"]
    inputs: List[Path] = Field(default_factory=list, description="Input data files")
    settings: Settings
    out_dir: Optional[Path] = Field(None, description="Directory for written artifacts")
    output_format: Literal["text", "csv", "json"] = "text"
    options: Dict[str, Any] = Field(default_factory=dict, description="Subcommand flags")

    @field_validator("inputs")
    @classmethod
    def _inputs_exist(cls, paths: List[Path]) -> List[Path]:
        missing = [str(path) for path in paths if not path.is_file()]
        if missing:
            raise ValueError(f"input file(s) not found: {', '.join(missing)}")
        return paths
