"""
Configuration management for gridie.
"""

from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

from dotenv import dotenv_values
from pydantic import Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from gridie.core.errors import CorpusFormatError, InputValidationError

ConstraintPreset = Literal["all", "posc", "headverb", "none"]


class Settings(BaseSettings):
    """Flat training/inference settings; unknown keys are rejected."""

    model_config = SettingsConfigDict(env_prefix="GRIDIE_", case_sensitive=False, extra="forbid")

    # Encoder
    d_model: int = Field(64, gt=0)
    encoder_layers: int = Field(2, ge=1)
    heads: int = Field(4, ge=1)
    iterative_layers: int = Field(2, ge=1)
    ffn_dim: int = Field(128, gt=0)
    dropout: float = Field(0.0, ge=0.0, lt=1.0)
    max_len: int = Field(128, gt=3)
    seed: int = 13

    # Grid sizes per task
    oie_levels: int = Field(5, ge=1)
    coord_levels: int = Field(3, ge=1)

    # Constraint penalties
    lambda_posc: float = Field(3.0, ge=0.0)
    lambda_hvc: float = Field(3.0, ge=0.0)
    lambda_hve: float = Field(3.0, ge=0.0)
    lambda_ec: float = Field(3.0, ge=0.0)
    constraints: ConstraintPreset = "all"
    warmup_epochs: float = Field(2.0, ge=0.0)

    # Optimization
    batch_size: int = Field(24, ge=1)
    learning_rate: float = Field(1e-3, ge=0.0)
    finetune_learning_rate: float = Field(2e-5, ge=0.0)
    weight_decay: float = Field(0.01, ge=0.0)
    epochs: int = Field(30, ge=1)

    # Runtime
    tagger: Literal["lexicon", "gold"] = "lexicon"
    workers: int = Field(1, ge=1)
    log_level: str = "INFO"
    json_logs: bool = False

    @model_validator(mode="after")
    def validate_heads(self) -> "Settings":
        if self.d_model % self.heads:
            raise ValueError(f"d_model={self.d_model} is not divisible by heads={self.heads}")
        return self

    def levels(self, task: str) -> int:
        return self.oie_levels if task == "oie" else self.coord_levels


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """
    Read a flat key=value config file.

    Raises:
        CorpusFormatError: If the file is missing or a line has no '='
    """
    path = Path(path)
    if not path.is_file():
        raise CorpusFormatError("config file not found", path)
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            stripped = line.strip()
            if stripped and not stripped.startswith("#") and "=" not in stripped:
                raise CorpusFormatError(f"expected key=value, got {stripped!r}", path, number)
    return {k.lower(): v for k, v in dotenv_values(path).items() if v is not None}


def get_settings(config_file: Optional[Union[str, Path]] = None, **overrides: Any) -> Settings:
    """
    Get gridie settings.

    File values sit below explicit overrides (CLI flags); None overrides are ignored.

    Returns:
        Settings instance

    Raises:
        InputValidationError: On unknown keys or invalid values
    """
    values: Dict[str, Any] = read_config_file(config_file) if config_file else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return Settings(**values)
    except ValidationError as e:
        raise InputValidationError(f"Invalid configuration: {e}") from e
