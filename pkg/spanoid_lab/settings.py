import logging
import os
from fractions import Fraction
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticValidationError, field_validator

from spanoid_lab.errors import ValidationError

logger = logging.getLogger(__name__)

ENV_PREFIX = "SPANOID_"


class Settings(BaseModel):
    """Caps, budgets and algorithm constants shared by all engines"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    enum_cap: int = Field(22, gt=0, description="largest n for which 2^n subsets are enumerated")
    rank_search_cap: int = Field(25, gt=0, description="largest n for exact rank search")
    rank_node_budget: int = Field(5_000_000, gt=0, description="search nodes before a budget error")
    entropy_full_cap: int = Field(12, gt=0)
    entropy_elemental_cap: int = Field(16, gt=0)
    code_materialize_cap: int = Field(20, gt=0, description="largest universe whose 2^|U| words are listed")
    code_search_budget: int = Field(4096, gt=0, description="largest s^n searched by max_consistent_code")
    code_node_budget: int = Field(5_000_000, gt=0, description="clique-search nodes before a budget error")
    lcs_retries: int = Field(100, gt=0)
    two_lcs_step_factor: int = Field(8, gt=0)
    qlcs_alpha: Fraction = Field(Fraction(1, 4))
    qlcs_size_factor: int = Field(4, gt=0)
    audit_samples: int = Field(10_000, gt=0)
    audit_sigmas: int = Field(3, gt=0)

    @field_validator("qlcs_alpha", mode="before")
    @classmethod
    def _parse_fraction(cls, value):
        fraction = Fraction(value) if not isinstance(value, Fraction) else value
        if not 0 < fraction <= 1:
            raise ValueError("qlcs_alpha must lie in (0, 1]")
        return fraction


class SettingsManager:
    """Holds the active settings; loaded from the environment on first use"""

    def __init__(self):
        self._settings: Optional[Settings] = None

    def load(self) -> Settings:
        """Read SPANOID_* variables (after loading a local .env file)"""
        load_dotenv()
        values = {}
        for name in Settings.model_fields:
            raw = os.getenv(ENV_PREFIX + name.upper())
            if raw is not None:
                values[name] = raw
        try:
            settings = Settings(**values)
        except PydanticValidationError as e:
            raise ValidationError(f"Invalid {ENV_PREFIX}* environment settings: {e}") from e
        if values:
            logger.info(f"Settings overridden from environment: {sorted(values)}")
        return settings

    def get(self) -> Settings:
        if self._settings is None:
            self._settings = self.load()
        return self._settings

    def configure(self, **overrides) -> Settings:
        current = self.get().model_dump()
        current.update({k: v for k, v in overrides.items() if v is not None})
        try:
            self._settings = Settings(**current)
        except PydanticValidationError as e:
            raise ValidationError(f"Invalid settings override: {e}") from e
        return self._settings

    def reset(self) -> None:
        self._settings = None


# Global settings manager instance
_manager = SettingsManager()


def get_settings() -> Settings:
    """Get the active settings"""
    return _manager.get()


def configure(**overrides) -> Settings:
    """Replace selected fields of the active settings; None values are ignored"""
    return _manager.configure(**overrides)


def reset_settings() -> None:
    """Forget overrides; the next access reloads from the environment"""
    _manager.reset()
