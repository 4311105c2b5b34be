from pydantic import BaseModel, BaseSettings, Field


class Settings(BaseSettings):
    # Service Configuration
    app_host: str = Field(default="127.0.0.1", env="DIMERS_APP_HOST")
    app_port: int = Field(default=8000, env="DIMERS_APP_PORT")
    debug: bool = Field(default=False, env="DIMERS_DEBUG")

    # Precision Configuration
    default_precision_bits: int = Field(default=512, env="DIMERS_PRECISION_BITS")

    # Diagnostics (stderr only)
    log_level: str = Field(default="WARNING", env="DIMERS_LOG_LEVEL")
    log_json: bool = Field(default=False, env="DIMERS_LOG_JSON")

    class Config:
        env_file = ".env"
        case_sensitive = False


class Limits(BaseModel):
    """Fixed resource limits; not read from the environment."""

    build_cap: int = 8
    exact_cap: int = 12
    oracle_steps: int = 5_000_000
    oracle_seconds: float = 60.0
    max_target_digits: int = 120
    guard_digits: int = 2
    max_precision_bits: int = 65_536
    fixed_point_max_iterations: int = 64
    sandwich_stage_cap: int = 10


# Global settings instance
settings = Settings()
limits = Limits()


def get_settings() -> Settings:
    """Get application settings."""
    return settings


def get_limits() -> Limits:
    return limits
