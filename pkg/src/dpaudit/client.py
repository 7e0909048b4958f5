"""Auditor-side client: drives the four-step audit pipeline over HTTP.

The client uploads one audience per group, spends epsilon on one histogram
query per group, and runs the fairness evaluation locally on the released
noisy counts. Server-side failures arrive as structured error bodies and are
re-raised as the matching exception types.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import httpx

from . import errors
from .core import AuditSpec, FairnessReport, NoisyHistogram, evaluate_audit
from .errors import AuditError, BudgetExhausted, InsufficientPopulation, InvalidParameter
from .population import UserRecord
from .service.schemas import (BudgetStatusResponse, QueryRelevanceResponse,
                              UploadAudienceResponse)

_ERROR_TYPES = {
    name: obj for name, obj in vars(errors).items()
    if isinstance(obj, type) and issubclass(obj, AuditError)
}


def _raise_from_response(response: httpx.Response) -> None:
    if response.status_code < 400:
        return
    try:
        body = response.json()
    except ValueError:
        body = {}
    name = body.get("error")
    detail = body.get("detail", response.text)
    data = body.get("data", {})
    if name == "BudgetExhausted" and {"requested", "remaining"} <= data.keys():
        raise BudgetExhausted(data["requested"], data["remaining"])
    if name == "InsufficientPopulation" and {"requested", "available"} <= data.keys():
        raise InsufficientPopulation(data["requested"], data["available"])
    klass = _ERROR_TYPES.get(name)
    if klass is not None:
        raise klass(detail)
    if response.status_code == 422:
        # request-schema rejections from the server framework
        raise InvalidParameter(str(detail))
    raise AuditError(f"HTTP {response.status_code}: {detail}")


class AuditClient:
    """One auditor's connection to a platform endpoint.

    Accepts either a base URL (owns a real HTTP connection) or a prebuilt
    httpx-compatible client, e.g. an in-process test client.
    """

    def __init__(self, base_url: str | None = None, *, auditor_id: str,
                 http: httpx.Client | None = None, timeout: float = 30.0):
        if http is None:
            if base_url is None:
                raise ValueError("need a base_url or an http client")
            http = httpx.Client(base_url=base_url, timeout=timeout)
            self._owns_http = True
        else:
            self._owns_http = False
        self.auditor_id = auditor_id
        self._http = http

    def close(self) -> None:
        if self._owns_http:
            self._http.close()

    def __enter__(self) -> "AuditClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _post(self, path: str, payload: dict) -> httpx.Response:
        response = self._http.post(path, json=payload)
        _raise_from_response(response)
        return response

    def health(self) -> dict:
        response = self._http.get("/v1/health")
        _raise_from_response(response)
        return response.json()

    def upload_audience(self, handle: str, group: str,
                        user_ids: Sequence[str]) -> UploadAudienceResponse:
        response = self._post("/v1/audience", {
            "auditor_id": self.auditor_id,
            "audience_handle": handle,
            "group": group,
            "user_ids": list(user_ids),
        })
        return UploadAudienceResponse.model_validate(response.json())

    def query_relevance(self, handle: str, epsilon: float, *,
                        content_id: str = "content-0",
                        content_text: str = "") -> QueryRelevanceResponse:
        response = self._post("/v1/query", {
            "auditor_id": self.auditor_id,
            "audience_handle": handle,
            "content": {"content_id": content_id, "text": content_text},
            "epsilon": epsilon,
        })
        return QueryRelevanceResponse.model_validate(response.json())

    def budget(self) -> BudgetStatusResponse:
        response = self._http.get(f"/v1/budget/{self.auditor_id}")
        _raise_from_response(response)
        return BudgetStatusResponse.model_validate(response.json())


def _member_ids(audience: Sequence) -> list[str]:
    return [u.user_id if isinstance(u, UserRecord) else str(u) for u in audience]


def client_audit(client: AuditClient, spec: AuditSpec,
                 audiences: Mapping[str, Sequence], *,
                 content_id: str = "content-0", content_text: str = "",
                 handle_prefix: str = "audit") -> FairnessReport:
    """Run one full audit over the wire: upload, query, evaluate locally.

    ``audiences`` maps each group label in the spec to its member user ids
    (or UserRecords). Each group costs spec.epsilon from the budget.
    """
    missing = [a.label for a in spec.attributes if a.label not in audiences]
    if missing:
        raise InvalidParameter(f"no audience given for groups {missing}")
    released: list[NoisyHistogram] = []
    for attr in spec.attributes:
        handle = f"{handle_prefix}-{attr.label}"
        client.upload_audience(handle, attr.label, _member_ids(audiences[attr.label]))
        reply = client.query_relevance(handle, spec.epsilon,
                                       content_id=content_id,
                                       content_text=content_text)
        released.append(NoisyHistogram(
            group=attr,
            noisy_counts=tuple(reply.noisy_counts),
            n_declared=reply.n_declared,
            epsilon_spent=reply.epsilon_spent,
        ))
    return evaluate_audit(spec, released)
