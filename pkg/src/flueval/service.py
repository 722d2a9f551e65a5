"""HTTP service wrapping the core package.

Intended for the long-running use case: load a trained LM (and optionally a
wordpiece vocabulary plus a piece-level LM) once, then score sentences from
many clients, e.g. to filter generation output at application time. The
reference-based and evaluation endpoints need no model at all.

Run with `flueval-serve --lm model.lm` or point uvicorn at
`flueval.service:app` (no models loaded in that case).
"""

import argparse
import json
from typing import Literal

import uvicorn
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__, harness, ngram_lm, overlap, scorers, stats, subword, text
from .errors import FluevalError


class ModelState:
    def __init__(self, word_lm=None, piece_lm=None, vocab=None):
        self.word_lm = word_lm
        self.piece_lm = piece_lm
        self.vocab = vocab


class NormalizeRequest(BaseModel):
    text: str


class NormalizeResponse(BaseModel):
    tokens: list[str]
    length: int


class ScoreRequest(BaseModel):
    sentences: dict[str, str] = Field(description="id -> raw sentence")
    kind: Literal["slor", "nce", "ppl"]
    unit_space: Literal["word", "wordpiece"] = "word"


class ScoreResponse(BaseModel):
    metric: str
    unit_space: str
    scores: dict[str, float]


class RougeRequest(BaseModel):
    candidate: str
    references: list[str]
    metric: Literal["rouge-l", "lr2-r", "lr2-f", "lr3-r", "lr3-f"] = "rouge-l"


class RougeResponse(BaseModel):
    metric: str
    precision: float
    recall: float
    f_score: float
    value: float


class RecordModel(BaseModel):
    id: str
    system: str
    domain: str
    output: str
    references: list[str] = []
    fluency_ratings: list[float]


class EvaluateRequest(BaseModel):
    records: list[RecordModel]
    scores: dict[str, dict[str, float]] = Field(description="metric -> id -> score")
    refs: dict[str, str] = {}
    group_by: Literal["none", "system", "domain"] = "none"


class EvaluateResponse(BaseModel):
    report: dict
    text: str


class CombineRequest(BaseModel):
    rouge: dict[str, float]
    lm: dict[str, float]
    fit_ids: list[str] | None = None


class CombineResponse(BaseModel):
    scores: dict[str, float]


class AgreementRequest(BaseModel):
    rating_lists: list[list[int]]
    num_categories: int = 3


class AgreementResponse(BaseModel):
    mean_pairwise_kappa: float


class HealthResponse(BaseModel):
    status: str
    version: str
    word_lm: str | None
    piece_lm: str | None
    vocabulary_pieces: int | None


def _to_records(models: list[RecordModel]) -> list[harness.DatasetRecord]:
    records = []
    seen = set()
    for m in models:
        if m.id in seen:
            raise FluevalError(f"duplicate id {m.id!r}")
        seen.add(m.id)
        rec = harness.DatasetRecord(m.id, m.system, m.domain, m.output,
                                    list(m.references), list(m.fluency_ratings))
        harness._validate_record(rec, m.id)
        records.append(rec)
    return records


def create_app(word_lm_path=None, piece_lm_path=None, vocab_path=None) -> FastAPI:
    state = ModelState()
    if word_lm_path:
        state.word_lm = ngram_lm.load(word_lm_path)
    if vocab_path:
        state.vocab = subword.load_vocabulary(vocab_path)
    if piece_lm_path:
        state.piece_lm = ngram_lm.load(piece_lm_path)

    app = FastAPI(title="flueval", version=__version__)

    @app.exception_handler(FluevalError)
    async def _flueval_error(request: Request, exc: FluevalError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(
            status="ok",
            version=__version__,
            word_lm=f"order-{state.word_lm.order}" if state.word_lm else None,
            piece_lm=f"order-{state.piece_lm.order}" if state.piece_lm else None,
            vocabulary_pieces=len(state.vocab) if state.vocab else None,
        )

    @app.post("/normalize", response_model=NormalizeResponse)
    def normalize(req: NormalizeRequest):
        tokens = text.normalize(req.text)
        return NormalizeResponse(tokens=tokens, length=len(tokens))

    @app.post("/score", response_model=ScoreResponse)
    def score(req: ScoreRequest):
        if req.unit_space == "word":
            model = state.word_lm
            if model is None:
                raise HTTPException(status_code=409, detail="no word LM loaded")
            vocab = None
        else:
            model = state.piece_lm
            if model is None or state.vocab is None:
                raise HTTPException(
                    status_code=409,
                    detail="wordpiece scoring needs a piece LM and a vocabulary",
                )
            vocab = state.vocab
        sentences = {sid: text.normalize(raw) for sid, raw in req.sentences.items()}
        result = scorers.score_dataset(model, sentences, req.kind, req.unit_space, vocab)
        return ScoreResponse(
            metric=scorers.METRIC_NAMES[(req.kind, req.unit_space)],
            unit_space=req.unit_space,
            scores={sid: s.value for sid, s in result.items()},
        )

    @app.post("/rouge", response_model=RougeResponse)
    def rouge(req: RougeRequest):
        candidate = text.normalize(req.candidate)
        references = [text.normalize(r) for r in req.references]
        if req.metric == "rouge-l":
            result = overlap.rouge_l_multi(candidate, references)
        else:
            result = overlap.ngram_overlap(candidate, references,
                                           int(req.metric[2]), req.metric[-1].upper())
        return RougeResponse(metric=result.metric_name, precision=result.precision,
                             recall=result.recall, f_score=result.f_score,
                             value=result.value)

    @app.post("/evaluate", response_model=EvaluateResponse)
    def evaluate(req: EvaluateRequest):
        records = _to_records(req.records)
        report = harness.compare_metrics(req.scores, records, req.group_by, req.refs)
        return EvaluateResponse(report=json.loads(harness.render_json(report)),
                                text=harness.render_text(report))

    @app.post("/combine/rouge-lm", response_model=CombineResponse)
    def combine(req: CombineRequest):
        fit_ids = req.fit_ids
        if fit_ids is None:
            fit_ids = [sid for sid in req.rouge if sid in req.lm]
        _, values = harness.combine_rouge_lm(req.rouge, req.lm, fit_ids)
        return CombineResponse(scores=values)

    @app.post("/agreement", response_model=AgreementResponse)
    def agreement(req: AgreementRequest):
        kappa = stats.pairwise_weighted_kappa(req.rating_lists, req.num_categories)
        return AgreementResponse(mean_pairwise_kappa=kappa)

    return app


# default app for `uvicorn flueval.service:app`; loads no models
app = create_app()


def main() -> None:
    parser = argparse.ArgumentParser(prog="flueval-serve", description=__doc__)
    parser.add_argument("--lm", help="word-level model file")
    parser.add_argument("--piece-lm", help="piece-level model file")
    parser.add_argument("--subword", help="wordpiece vocabulary file")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args()
    uvicorn.run(create_app(args.lm, args.piece_lm, args.subword),
                host=args.host, port=args.port)
