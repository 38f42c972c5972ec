"""
schemas/privacy_params.py – (ε, δ, Δ, d̄, k) bundle for one mechanism call.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field, PositiveInt, model_validator


class PrivacyParams(BaseModel):
    """Parameters governing a single mechanism invocation.

    ``delta = 0`` is accepted here; the unknown-domain mechanisms reject it
    themselves because only they need the slack.
    """

    model_config = {"frozen": True, "extra": "forbid"}

    epsilon: float = Field(gt=0, allow_inf_nan=False)
    delta: float = Field(default=0.0, ge=0, lt=1)
    l0_sensitivity: Optional[PositiveInt] = None
    fetch_limit: PositiveInt = 1000
    k: PositiveInt = 20

    @model_validator(mode="after")
    def _k_within_fetch_limit(self) -> "PrivacyParams":
        if self.k > self.fetch_limit:
            raise ValueError(f"k ({self.k}) must not exceed fetch_limit ({self.fetch_limit})")
        return self

    @property
    def cost(self) -> tuple:
        return (self.epsilon, self.delta)
