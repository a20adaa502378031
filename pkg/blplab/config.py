"""
Configuration management for blplab.
Uses Pydantic for type validation and environment variable handling.
"""

from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Library settings with environment variable support (prefix BLPLAB_)."""

    # Logging Configuration
    log_level: str = Field(default="INFO", description="Logging level")
    log_file: Optional[str] = Field(default=None, description="Optional log file path")

    # Enumeration Caps
    enumeration_cap: int = Field(
        default=10_000_000, description="Maximum assignments enumerated by the brute-force oracle"
    )
    fpol_check_cap: int = Field(
        default=5_000_000, description="Maximum tuple families enumerated by a polymorphism check"
    )
    symmetric_operation_cap: int = Field(
        default=100_000, description="Maximum symmetric operations entering the detection LP"
    )
    clone_node_cap: int = Field(default=500_000, description="Maximum clone members during BFS")

    # Expansion Configuration
    expansion_depth_cap: int = Field(default=8, description="Maximum depth tried for the expansion operator")
    expansion_tree_cap: int = Field(default=200_000, description="Maximum number of expansion tree nodes")
    expansion_round_cap: int = Field(default=100_000, description="Maximum number of pruning rounds")
    allow_large_expansion: bool = Field(
        default=False, description="Lift the domain/arity scale guard of the expansion"
    )

    # Sampler Configuration
    sampler_max_attempts: int = Field(default=2_000, description="Default attempts of the function sampler")

    # Solver Configuration
    verify_lp_certificates: bool = Field(
        default=True, description="Verify every LP outcome against its certificate"
    )

    class Config:
        env_prefix = "BLPLAB_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = False
        extra = "ignore"


# Global settings instance
settings = Settings()
