"""
Application Configuration
Centralized configuration management using Pydantic settings.
"""

from functools import lru_cache
from typing import Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Tolerances(BaseModel):
    """Named tolerances for the identity and bound audits."""

    model_config = ConfigDict(extra="forbid")

    reconstruction: float = Field(default=1e-8, gt=0, description="Max-norm residual of the trajectory equation")
    first_law: float = Field(default=1e-10, gt=0, description="Pointwise first-law closure (both forms)")
    heat_split: float = Field(default=1e-10, gt=0, description="Conventional heat = TB-STA heat + CD work")
    entropy_routes: float = Field(default=1e-10, gt=0, description="Two-route irreversible entropy agreement")
    relative_entropy_identity: float = Field(default=1e-8, gt=0, description="Relative-entropy identity residual")
    bound: float = Field(default=1e-10, ge=0, description="Slack allowed in the entropy-production bound")
    imaginary: float = Field(default=1e-10, gt=0, description="Largest imaginary residue accepted in a trace")

    def override(self, values: Dict[str, float]) -> "Tolerances":
        """Return a copy with named tolerances replaced."""
        unknown = sorted(set(values) - set(type(self).model_fields))
        if unknown:
            raise ValueError(
                f"Unknown tolerance name(s): {', '.join(unknown)}; "
                f"expected one of {', '.join(type(self).model_fields)}"
            )
        return type(self).model_validate({**self.model_dump(), **values})


class Settings(BaseSettings):
    """Application settings with environment variable support."""

    model_config = SettingsConfigDict(
        env_prefix="TRAJTHERMO_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging Configuration
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(default="INFO")
    logs_dir: Optional[str] = Field(default=None)

    # Output Configuration
    output_dir: str = Field(default="./results")

    # Numerical Configuration
    default_step: float = Field(default=1e-3, gt=0)
    eps_rank: float = Field(default=1e-12, gt=0)
    eps_deg: float = Field(default=1e-9, gt=0)

    # Batch Configuration
    max_workers: int = Field(default=4, ge=1)

    tolerances: Tolerances = Field(default_factory=Tolerances)

    @field_validator("log_level", mode="before")
    @classmethod
    def normalize_log_level(cls, v):
        """Accept lower-case level names from the environment."""
        if isinstance(v, str):
            return v.upper()
        return v


@lru_cache()
def get_settings() -> Settings:
    """Get cached application settings."""
    return Settings()


# Numerical floors shared by every module
EPS_RANK = 1e-12
EPS_DEG = 1e-9
ENTROPY_FLOOR = 1e-14
