"""Platform audit service: HTTP wire layer around the in-process platform."""

from .app import create_app, serve
from .platform import (AudienceRecord, PlatformState, QueryResult,
                       ServerConfig, load_server_config)
from .schemas import (PROTOCOL_VERSION, BudgetStatusResponse, ContentDescriptor,
                      ErrorResponse, HealthResponse, QueryRelevanceRequest,
                      QueryRelevanceResponse, UploadAudienceRequest,
                      UploadAudienceResponse)

__all__ = [
    "AudienceRecord",
    "BudgetStatusResponse",
    "ContentDescriptor",
    "ErrorResponse",
    "HealthResponse",
    "PROTOCOL_VERSION",
    "PlatformState",
    "QueryRelevanceRequest",
    "QueryRelevanceResponse",
    "QueryResult",
    "ServerConfig",
    "UploadAudienceRequest",
    "UploadAudienceResponse",
    "create_app",
    "load_server_config",
    "serve",
]
