"""Wire schema for the platform audit protocol (version dpaudit/1).

Responses are the information boundary: they structurally cannot carry raw
bin counts, per-user scores, or latent traits — only noisy counts, declared
sizes, and budget arithmetic cross the wire back to the auditor.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

PROTOCOL_VERSION = "dpaudit/1"


class UploadAudienceRequest(BaseModel):
    auditor_id: str = Field(min_length=1)
    audience_handle: str = Field(min_length=1)
    group: str = Field(min_length=1)
    user_ids: list[str] = Field(min_length=1)

    @field_validator("user_ids")
    @classmethod
    def _ids_unique(cls, ids: list[str]) -> list[str]:
        if len(set(ids)) != len(ids):
            raise ValueError("user_ids must be unique")
        return ids


class UploadAudienceResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")

    audience_handle: str
    accepted: int = Field(ge=0)
    matched: int = Field(ge=0)

    @model_validator(mode="after")
    def _matched_within_accepted(self) -> "UploadAudienceResponse":
        if self.matched > self.accepted:
            raise ValueError("matched cannot exceed accepted")
        return self


class ContentDescriptor(BaseModel):
    """The trial content: an opaque id plus a free-text payload.

    The synthetic estimator never reads it; it is logged so the interface
    keeps the shape a content-aware estimator would need.
    """

    content_id: str = Field(min_length=1)
    text: str = ""


class QueryRelevanceRequest(BaseModel):
    auditor_id: str = Field(min_length=1)
    audience_handle: str = Field(min_length=1)
    content: ContentDescriptor
    epsilon: float = Field(gt=0)


class QueryRelevanceResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")

    audience_handle: str
    group: str
    noisy_counts: list[float]
    n_declared: int = Field(ge=0)
    epsilon_spent: float
    remaining_budget: float
    query_id: str


class BudgetStatusResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")

    auditor_id: str
    total_epsilon: float
    spent: float
    remaining: float
    queries: int


class ErrorResponse(BaseModel):
    """Structured failure: ``error`` is the exception type name, ``data`` its fields."""

    error: str
    detail: str
    data: dict = Field(default_factory=dict)


class HealthResponse(BaseModel):
    status: str = "ok"
    protocol: str = PROTOCOL_VERSION
