"""FastAPI application exposing the scorer behind two endpoints.

POST /score with ``mode`` one of:
  * ``confidence``  pairs -> {scores: [p(grounded)]}
  * ``nli``         pairs -> {labels: [Entailment|Contradiction|Neutral]}
  * ``token_count`` texts -> {token_counts: [int]}

GET /healthz reports readiness and the loaded model name.  Responses keep
request order and length exactly.  Batches beyond the server cap and
per-pair inputs beyond the token limit are refused with 413.
"""

from __future__ import annotations

from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .models import ModelBackend
from .template import fill_instruction


class ScorePair(BaseModel):
    doc: str = Field(min_length=1)
    claim: str = Field(min_length=1)


class ScoreRequest(BaseModel):
    mode: Literal["confidence", "nli", "token_count"] = "confidence"
    pairs: Optional[list[ScorePair]] = None
    texts: Optional[list[str]] = None


class ScoreResponse(BaseModel):
    model_name: str
    scores: Optional[list[float]] = None
    labels: Optional[list[str]] = None
    token_counts: Optional[list[int]] = None


def create_app(
    backend: ModelBackend,
    max_batch: int = 32,
    max_input_tokens: int = 4096,
) -> FastAPI:
    app = FastAPI(title="scorer-service")

    @app.get("/healthz")
    def healthz():
        return {"status": "ready", "model_name": backend.name}

    def _check_batch(items, what: str):
        if not items:
            raise HTTPException(status_code=422, detail=f"{what} must be non-empty")
        if len(items) > max_batch:
            raise HTTPException(
                status_code=413,
                detail={
                    "error":f"batch of {len(items)} exceeds server cap",
                    "max_batch": max_batch,
                },
            )

    def _check_pair_sizes(pairs: list[ScorePair]):
        for index, pair in enumerate(pairs):
            tokens = backend.token_count(fill_instruction(pair.doc, pair.claim))
            if tokens > max_input_tokens:
                raise HTTPException(
                    status_code=413,
                    detail={
                        "error": f"pair input of {tokens} tokens exceeds limit",
                        "index": index,
                        "max_input_tokens": max_input_tokens,
                    },
                )

    @app.post("/score", response_model=ScoreResponse, response_model_exclude_none=True)
    def score(request: ScoreRequest) -> ScoreResponse:
        if request.mode == "token_count":
            if request.texts is None:
                raise HTTPException(
                    status_code=422, detail="token_count mode needs texts"
                )
            _check_batch(request.texts, "texts")
            return ScoreResponse(
                model_name=backend.name,
                token_counts=[backend.token_count(t) for t in request.texts],
            )

        if request.pairs is None:
            raise HTTPException(status_code=422, detail=f"{request.mode} mode needs pairs")
        _check_batch(request.pairs, "pairs")
        _check_pair_sizes(request.pairs)

        counts = [
            backend.token_count(fill_instruction(p.doc, p.claim))
            for p in request.pairs
        ]
        if request.mode == "confidence":
            return ScoreResponse(
                model_name=backend.name,
                scores=[backend.confidence(p.doc, p.claim) for p in request.pairs],
                token_counts=counts,
            )
        return ScoreResponse(
            model_name=backend.name,
            labels=[backend.nli(p.doc, p.claim) for p in request.pairs],
            token_counts=counts,
        )

    return app
