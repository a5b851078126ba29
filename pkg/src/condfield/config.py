"""Configuration management using Pydantic Settings."""

import os
from pathlib import Path
from typing import Literal, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings with environment variable support."""

    # Runtime
    environment: str = Field(
        default="production", alias="CONDFIELD_ENV", description="Environment mode"
    )
    threads: int = Field(
        default=1, ge=1, alias="CONDFIELD_THREADS", description="Worker cap for parallel stages"
    )
    seed: int = Field(default=0, ge=0, alias="CONDFIELD_SEED", description="Default rng seed")

    # Conductor defaults
    tau: float = Field(
        default=0.1, gt=0.0, lt=1.0, alias="CONDFIELD_TAU", description="Normalization margin"
    )
    default_table: Literal["A", "B"] = Field(
        default="A", alias="CONDFIELD_TABLE", description="Tissue conductivity table"
    )
    tissue_table_dir: Optional[str] = Field(
        default=None,
        alias="CONDFIELD_TABLE_DIR",
        description="Directory overriding the shipped tissue_table_<tag>.txt files",
    )

    # Outputs
    output_dir: str = Field(
        default=".", alias="CONDFIELD_OUTPUT_DIR", description="Base directory for relative outputs"
    )

    # Logging
    log_level: str = Field(default="info", alias="CONDFIELD_LOG_LEVEL", description="Logging level")
    log_format: Literal["auto", "json", "console"] = Field(
        default="auto", alias="CONDFIELD_LOG_FORMAT", description="Log renderer"
    )

    # Get project root directory (parent of src/)
    _project_root = Path(__file__).parent.parent.parent
    _env_file_path = _project_root / ".env"

    model_config = SettingsConfigDict(
        env_file=str(_env_file_path),
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    @property
    def is_development(self) -> bool:
        """Check if running in development mode."""
        return self.environment == "development"

    @property
    def output_base(self) -> Path:
        """Get output base path as Path object."""
        if os.path.isabs(self.output_dir):
            return Path(self.output_dir)
        return Path.cwd() / self.output_dir

    @property
    def resolved_table_dir(self) -> Optional[Path]:
        """Get the tissue table override directory, if configured."""
        if not self.tissue_table_dir:
            return None
        if os.path.isabs(self.tissue_table_dir):
            return Path(self.tissue_table_dir)
        return self._project_root / self.tissue_table_dir


# Global settings instance
settings = Settings()
