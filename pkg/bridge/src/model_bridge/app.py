"""HTTP application exposing the two inference endpoints.

POST /rerank    {"query", "candidates": [{"id", "text"}, ...]}
                -> {"scores": [{"id", "score"}, ...]}
POST /summarize {"system", "user", "temperature"} -> {"summary"}

All errors are non-2xx with a JSON body {"error": <text>}; partial results
are never returned. The service is stateless across requests.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, field_validator

from .backends import EchoSummarizer, LexicalReranker


class Candidate(BaseModel):
    id: str
    text: str


class RerankRequest(BaseModel):
    query: str
    candidates: list[Candidate]

    @field_validator("query")
    @classmethod
    def query_non_empty(cls, v):
        if not v.strip():
            raise ValueError("query must be non-empty")
        return v

    @field_validator("candidates")
    @classmethod
    def ids_unique(cls, v):
        ids = [c.id for c in v]
        if len(set(ids)) != len(ids):
            raise ValueError("candidate ids must be unique")
        return v


class ScoreItem(BaseModel):
    id: str
    score: float


class RerankResponse(BaseModel):
    scores: list[ScoreItem]


class SummarizeRequest(BaseModel):
    system: str
    user: str
    temperature: float = Field(default=0.0, ge=0.0)

    @field_validator("user")
    @classmethod
    def user_non_empty(cls, v):
        if not v.strip():
            raise ValueError("user prompt must be non-empty")
        return v


class SummarizeResponse(BaseModel):
    summary: str


def create_app(reranker=None, summarizer=None) -> FastAPI:
    reranker = reranker or LexicalReranker()
    summarizer = summarizer or EchoSummarizer()
    app = FastAPI(title="model-bridge", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"error": str(exc.errors())})

    @app.exception_handler(Exception)
    async def internal_error(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.post("/rerank", response_model=RerankResponse)
    def rerank(req: RerankRequest):
        scores = reranker.score(req.query, [(c.id, c.text) for c in req.candidates])
        expected = {c.id for c in req.candidates}
        if set(scores) != expected or any(not math.isfinite(s) for s in scores.values()):
            # backend bug: surface as a structured error, never partial results
            return JSONResponse(status_code=500,
                                content={"error": "backend returned an invalid score set"})
        return RerankResponse(scores=[ScoreItem(id=cid, score=s) for cid, s in scores.items()])

    @app.post("/summarize", response_model=SummarizeResponse)
    def summarize(req: SummarizeRequest):
        try:
            summary = summarizer.summarize(req.system, req.user, req.temperature)
        except LookupError as exc:
            return JSONResponse(status_code=404, content={"error": str(exc)})
        if not summary:
            return JSONResponse(status_code=500,
                                content={"error": "backend returned an empty summary"})
        return SummarizeResponse(summary=summary)

    return app
