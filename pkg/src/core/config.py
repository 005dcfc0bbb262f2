"""Application configuration using Pydantic Settings and TOML run files."""

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from functools import lru_cache
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.core.exceptions import ConfigError

Metric = Literal["impact", "exploitability", "risk"]
ExportFormat = Literal["dot", "json"]


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="ATTACK_CIRCUIT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Run file used when --config is not given (ATTACK_CIRCUIT_CONFIG)
    config: Path | None = None

    output_dir: Path = Path("out")

    # Logging
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    log_json: bool = False


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


# =============================================================================
# Run configuration sections
# =============================================================================


class ScoringConfig(BaseModel):
    """Knobs of the compositional, final and network scores."""

    dampener: float = Field(0.1, ge=0.0, lt=1.0, description="v_d; 0 disables flow coupling")
    normalizers: tuple[float, float, float, float, float] = Field(
        (100.0, 100.0, 100.0, 100.0, 100.0),
        description="v_n1..v_n5; scores are divided by these",
    )
    sigmoid: Literal["tanh"] = "tanh"
    nu_table: dict[str, float] = Field(
        default_factory=lambda: {
            "always_online": 1.6,
            "frequently_online": 1.4,
            "rarely_online": 1.07,
            "never_online": 1.0,
        }
    )
    en_table: dict[str, float] = Field(
        default_factory=lambda: {"encrypted": 1.0, "unencrypted": 1.5}
    )
    ip_table: dict[str, float] = Field(
        default_factory=lambda: {"clean": 1.0, "blacklisted": 2.0}
    )
    match_threshold: float = Field(0.5, gt=0.0, le=1.0)
    attacker_placement: Literal["global", "per_device"] = "global"
    # Flow problem whose solution feeds the compositional and risk scores
    flow_problem: Literal["min_cost_max_flow", "max_flow"] = "min_cost_max_flow"
    # r_as for the exploitability (min-cost) problem; None means the max-flow value
    required_flow: int | None = Field(None, ge=0)

    @field_validator("normalizers")
    @classmethod
    def _positive_normalizers(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if any(v <= 0 for v in value):
            raise ValueError("normalizers must be positive")
        return value

    @field_validator("nu_table", "en_table", "ip_table")
    @classmethod
    def _multipliers_at_least_one(cls, value: dict[str, float]) -> dict[str, float]:
        if any(v < 1.0 for v in value.values()):
            raise ValueError("activity multipliers must be >= 1.0")
        return value

    @model_validator(mode="after")
    def _complete_tables(self) -> "ScoringConfig":
        required = {
            "nu_table": {"always_online", "frequently_online", "rarely_online", "never_online"},
            "en_table": {"encrypted", "unencrypted"},
            "ip_table": {"clean", "blacklisted"},
        }
        for name, keys in required.items():
            missing = keys - set(getattr(self, name))
            if missing:
                raise ValueError(f"{name} is missing {sorted(missing)}")
        return self


class ExtractionConfig(BaseModel):
    """Knobs of the input/output extraction pipeline."""

    textrank_window: int = Field(2, ge=2)
    textrank_damping: float = Field(0.85, gt=0.0, lt=1.0)
    textrank_tolerance: float = Field(1e-6, gt=0.0)
    textrank_max_iter: int = Field(100, ge=1)
    max_phrase_tokens: int = Field(3, ge=1)
    max_inputs: int = Field(2, ge=1)
    max_outputs: int = Field(4, ge=1)
    fallback_input: str = "network access"


class ActivityConfig(BaseModel):
    """Knobs of the traffic-derived activity metrics."""

    uptime_window_seconds: float = Field(600.0, gt=0.0)
    always_online_fraction: float = Field(0.9, gt=0.0, le=1.0)
    frequently_online_fraction: float = Field(0.4, gt=0.0, le=1.0)
    encrypted_majority: float = Field(0.5, ge=0.0, le=1.0)
    secure_protocols: list[str] = Field(
        default_factory=lambda: ["TLSv1.2", "TLSv1.3", "TLS", "SSL", "QUIC", "SSH", "HTTPS"]
    )


class RunConfig(BaseModel):
    """Everything one CLI invocation needs: paths, knobs and export selection."""

    nvd: list[Path] = Field(default_factory=list)
    catalog: Path | None = None
    traffic: Path | None = None
    blacklist: Path | None = None
    out: Path = Path("out")
    metric: Metric = "risk"
    format: ExportFormat = "dot"
    verbosity: int = 0

    scoring: ScoringConfig = Field(default_factory=ScoringConfig)
    extraction: ExtractionConfig = Field(default_factory=ExtractionConfig)
    activity: ActivityConfig = Field(default_factory=ActivityConfig)

    def validate_paths(self, *, require_raw: bool = False) -> None:
        """Check that every referenced input file exists."""
        if require_raw and (not self.nvd or self.catalog is None):
            raise ConfigError("--nvd and --catalog are required for this command")
        referenced = [*self.nvd, self.catalog, self.traffic, self.blacklist]
        for path in referenced:
            if path is not None and not path.is_file():
                raise ConfigError(f"Input file not found: {path}")

    @property
    def has_raw_inputs(self) -> bool:
        return bool(self.nvd) and self.catalog is not None


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_run_config(
    config_path: Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> RunConfig:
    """
    Resolve the run configuration.

    Precedence: model defaults < TOML file (explicit path, else ATTACK_CIRCUIT_CONFIG)
    < CLI flag overrides. Overrides with a None value are ignored.
    """
    path = config_path or get_settings().config
    data: dict[str, Any] = {"out": str(get_settings().output_dir)}

    if path is not None:
        try:
            with open(path, "rb") as f:
                data = _merge(data, tomllib.load(f))
        except FileNotFoundError as e:
            raise ConfigError(f"Config file not found: {path}") from e
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"Invalid config file {path}: {e}") from e

    flags = {k: v for k, v in (overrides or {}).items() if v is not None}
    data = _merge(data, flags)

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e
