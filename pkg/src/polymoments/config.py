"""Configuration management for polymoments."""

from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class MomentsConfig(BaseSettings):
    """Runtime settings for computations, fuzzing and the command line.

    Exact computations never read these values; they only steer caching,
    random instance generation and the floating-point paths.
    """

    model_config = SettingsConfigDict(
        env_prefix="POLYMOM_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Logging Configuration
    logging_mode: str = Field(
        default="info",
        description="Logging mode: off, info, or debug",
    )

    # Data locations
    cache_dir: Path | None = Field(
        default=None,
        description="Directory for persisted symbolic expansions (disabled when unset)",
    )
    relations_dir: Path | None = Field(
        default=None,
        description="Directory overriding the packaged relation catalog",
    )

    # Randomized verification
    seed: int = Field(
        default=0,
        description="Default seed for random instance generation",
        ge=0,
    )
    fuzz_trials: int = Field(
        default=50,
        description="Default number of random instances per relation",
        ge=1,
        le=10000,
    )
    coordinate_bound: int = Field(
        default=10,
        description="Random rational coordinates are drawn from [-bound, bound]",
        ge=1,
        le=1000,
    )
    denominator_bound: int = Field(
        default=7,
        description="Largest denominator of random rational coordinates",
        ge=1,
        le=1000,
    )
    mc_samples: int = Field(
        default=100_000,
        description="Default Monte-Carlo sample count",
        ge=1,
    )

    # Floating-point paths
    root_tolerance: float = Field(
        default=1e-12,
        description="Target width of isolating intervals for irrational nodes",
        gt=0,
    )
    rank_threshold: float = Field(
        default=1e-8,
        description="Singular-value ratio below which the floating Hankel path drops rank",
        gt=0,
        lt=1,
    )

    # Execution
    max_workers: int = Field(
        default=1,
        description="Worker threads used by deterministic parallel paths",
        ge=1,
        le=64,
    )
    decimal_places: int = Field(
        default=20,
        description="Digits printed for rationals under --decimal",
        ge=1,
        le=100,
    )

    @field_validator("logging_mode")
    @classmethod
    def validate_logging_mode(cls, v: str) -> str:
        """Validate logging mode is one of the allowed values."""
        allowed = {"off", "info", "debug"}
        if v not in allowed:
            raise ValueError(f"logging_mode must be one of: {sorted(allowed)}")
        return v

    @field_validator("cache_dir", "relations_dir")
    @classmethod
    def expand_directory(cls, v: Path | None) -> Path | None:
        """Expand user home markers in directory settings."""
        return v.expanduser() if v is not None else None


def get_config() -> MomentsConfig:
    """Read a fresh configuration from the environment."""
    return MomentsConfig()
