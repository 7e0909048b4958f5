"""HTTP shell over PlatformState: routes, error mapping, lifecycle."""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from ..errors import (AuditError, BudgetExhausted, DuplicateAudienceHandle,
                      InsufficientPopulation, UnknownAudience)
from ..population import Population
from .platform import PlatformState, ServerConfig
from .schemas import (PROTOCOL_VERSION, BudgetStatusResponse, ErrorResponse,
                      HealthResponse, QueryRelevanceRequest,
                      QueryRelevanceResponse, UploadAudienceRequest,
                      UploadAudienceResponse)

# most specific class wins via MRO walk; anything else under AuditError is a 422
_ERROR_STATUS = {
    UnknownAudience: 404,
    DuplicateAudienceHandle: 409,
    BudgetExhausted: 429,
    AuditError: 422,
}


def _status_for(exc: AuditError) -> int:
    for klass in type(exc).__mro__:
        if klass in _ERROR_STATUS:
            return _ERROR_STATUS[klass]
    return 422


def _error_body(exc: AuditError) -> dict:
    data: dict = {}
    if isinstance(exc, BudgetExhausted):
        data = {"requested": exc.requested, "remaining": exc.remaining}
    elif isinstance(exc, InsufficientPopulation):
        data = {"requested": exc.requested, "available": exc.available}
    return ErrorResponse(error=type(exc).__name__, detail=str(exc),
                         data=data).model_dump()


def create_app(config: ServerConfig,
               population: Population | None = None) -> FastAPI:
    """Build the service around one population and one server config.

    ``population`` overrides the config's population file (used by tests and
    in-process callers); otherwise the file is loaded here, at startup.
    """
    state = PlatformState(config, population)
    app = FastAPI(title="platform-audit service", version=PROTOCOL_VERSION)
    app.state.platform = state

    error_responses = {
        404: {"model": ErrorResponse},
        409: {"model": ErrorResponse},
        422: {"model": ErrorResponse},
        429: {"model": ErrorResponse},
    }

    @app.exception_handler(AuditError)
    async def _audit_error(request, exc: AuditError):
        return JSONResponse(status_code=_status_for(exc), content=_error_body(exc))

    @app.get("/v1/health", response_model=HealthResponse)
    def health():
        return HealthResponse()

    @app.post("/v1/audience", response_model=UploadAudienceResponse,
              responses=error_responses)
    def upload_audience(req: UploadAudienceRequest):
        record = state.upload_audience(req.auditor_id, req.audience_handle,
                                       req.group, req.user_ids)
        return UploadAudienceResponse(audience_handle=record.handle,
                                      accepted=record.accepted,
                                      matched=record.matched)

    @app.post("/v1/query", response_model=QueryRelevanceResponse,
              responses=error_responses)
    def query_relevance(req: QueryRelevanceRequest):
        result = state.query_relevance(req.auditor_id, req.audience_handle,
                                       req.content.content_id, req.content.text,
                                       req.epsilon)
        return QueryRelevanceResponse(
            audience_handle=result.audience_handle,
            group=result.group,
            noisy_counts=list(result.noisy_counts),
            n_declared=result.n_declared,
            epsilon_spent=result.epsilon_spent,
            remaining_budget=result.remaining_budget,
            query_id=result.query_id,
        )

    @app.get("/v1/budget/{auditor_id}", response_model=BudgetStatusResponse)
    def budget(auditor_id: str):
        return BudgetStatusResponse(**state.budget_status(auditor_id))

    @app.post("/v1/audience/sample", status_code=501, responses=error_responses)
    def sample_audience_reserved():
        # reserved: platform-assisted audience selection has no agreed contract
        return JSONResponse(status_code=501, content=ErrorResponse(
            error="NotImplemented",
            detail="platform-side audience sampling is reserved but not implemented",
        ).model_dump())

    return app


def serve(config: ServerConfig, population: Population | None = None) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(config, population), host=config.host,
                port=config.port, log_level="info")
