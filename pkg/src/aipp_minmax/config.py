"""Configuration for aipp-minmax.

Defaults can be overridden through AIPP_MINMAX_* environment variables (nested fields use "__",
e.g. AIPP_MINMAX_ACG__MAX_ITERS). The bench scheduler thread count is the only setting with a
dedicated alias: AIPP_MINMAX_BENCH_THREADS.
"""

from functools import lru_cache
from typing import ClassVar

from pydantic import AliasChoices, BaseModel, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

app_slug = "aipp_minmax"

DEFAULT_TIME_LIMIT = 4000.0


class AcgSettings(BaseModel):
    """Inner accelerated solver limits."""

    max_iters: int = Field(default=10_000_000, ge=1, description="Iteration cap of a single ACG call")
    eps_rounding: float = Field(
        default=1e-12,
        ge=0.0,
        description="Negative epsilon values down to -eps_rounding*max(1,|psi|) are clamped to 0",
    )


class TracingSettings(BaseModel):
    """Optional MLflow span tracing of bench cells."""

    enabled: bool = Field(default=False, description="Emit MLflow spans when mlflow is importable")
    experiment: str = Field(default="aipp-minmax-bench", description="MLflow experiment name")


class Settings(BaseSettings):
    """Process-wide defaults."""

    model_config: ClassVar[SettingsConfigDict] = SettingsConfigDict(
        env_prefix=f"{app_slug.upper()}_",
        extra="ignore",
        env_nested_delimiter="__",
    )

    time_limit: float = Field(default=DEFAULT_TIME_LIMIT, gt=0.0, description="Wall-clock limit per solve (s)")
    log_level: str = Field(default="INFO", description="Package log level used by the CLI")
    bench_threads: int = Field(
        default=1,
        ge=1,
        description="Worker threads of the bench scheduler",
        validation_alias=AliasChoices("AIPP_MINMAX_BENCH_THREADS", "bench_threads"),
    )
    acg: AcgSettings = Field(default_factory=AcgSettings)
    tracing: TracingSettings = Field(default_factory=TracingSettings)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
