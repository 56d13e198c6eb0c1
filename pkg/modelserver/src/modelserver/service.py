"""FastAPI application exposing /health, /embed, and /read."""

import logging

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .config import ServerConfig
from .encoders import build_encoder
from .readers import build_extractive, build_generative

log = logging.getLogger(__name__)

MODES = ("extractive", "abstractive")


class EmbedRequest(BaseModel):
    texts: list[str]


class PassageBody(BaseModel):
    heading: str = ""
    text: str
    report_id: str = ""


class ReadRequest(BaseModel):
    question: str
    passages: list[PassageBody]
    mode: str = "extractive"
    top_n: int = Field(default=5, ge=1)


def make_service(config: ServerConfig | None = None) -> FastAPI:
    config = config or ServerConfig.from_env()
    encoder = build_encoder(config.embed_model)
    extractive = build_extractive(config.extractive_model)
    generative = build_generative(config.generative_model)

    service = FastAPI(title="modelserver")

    @service.get("/health")
    def health():
        return {"status": "ok", "dim": encoder.dim}

    @service.post("/embed")
    def embed(body: EmbedRequest):
        if len(body.texts) > config.max_batch:
            raise HTTPException(status_code=413,
                                detail=f"batch of {len(body.texts)} exceeds "
                                       f"max {config.max_batch}")
        vectors = encoder.encode(body.texts)
        return {"dim": encoder.dim, "vectors": vectors}

    @service.post("/read")
    def read(body: ReadRequest):
        if body.mode not in MODES:
            raise HTTPException(status_code=400,
                                detail=f"unknown mode {body.mode!r}")
        if not body.passages:
            raise HTTPException(status_code=400, detail="passages must be non-empty")
        texts = [p.text for p in body.passages]
        reader = extractive if body.mode == "extractive" else generative
        answers = reader.read(body.question, texts, body.top_n)
        if body.mode == "extractive":
            for answer in answers:
                # the substring invariant is enforced server-side, not trusted
                if answer.text not in texts[answer.passage_index]:
                    log.error("reader produced a non-span answer %r", answer.text[:60])
                    raise HTTPException(status_code=500,
                                        detail="extractive answer is not a span")
        return {
            "answers": [
                {"text": a.text, "passage_index": a.passage_index,
                 "score": round(a.score, 6)}
                for a in answers
            ]
        }

    return service
