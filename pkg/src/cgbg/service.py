"""HTTP feedback service: list questions, grade an explanation live.

Students see a question's reference source and get an immediate verdict
with the generated program and per-test evidence. Expected test values are
never serialized: the grader's oracle outputs stay server-side, only the
student program's own results go over the wire.
"""

from __future__ import annotations

import asyncio
import functools
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .bank import QuestionBank, complete_bank
from .gateway import GatewayError, TokenBucket
from .grading import (
    DEFAULT_MODEL_ID,
    SINGLE_ZERO_TEMP,
    STRATEGY_NAMES,
    GradeDecision,
    grade_response,
    strategy_from_name,
)
from .prompting import PromptTemplate
from .sandbox import ExecutionLimits, run_tests
from .extraction import ExtractedProgram

MAX_RESPONSE_CHARS = 4000


@dataclass
class ServiceState:
    bank: QuestionBank
    template: PromptTemplate
    gateway: object
    limits: ExecutionLimits
    gateway_mode: str
    model_id: str
    rate_per_minute: float
    time_budget_s: float
    ready: bool = False
    selftest: str = "pending"  # passed | skipped | failed | pending
    buckets: dict = field(default_factory=dict)


def _error(status_code: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status_code, content={"error": message})


def _decision_payload(decision: GradeDecision, question) -> dict:
    samples = []
    n = len(decision.sample_verdicts)
    for i in range(n):
        program = decision.programs[i]
        detail = decision.verdicts_detail[i]
        tests = None
        if detail is not None:
            tests = [
                {
                    "test_index": r.test_index,
                    "status": r.status,
                    "args": question.tests[r.test_index].args,
                    "actual": r.actual if r.has_actual else None,
                    "error_text": r.error_text,
                }
                for r in detail.results
            ]
        samples.append(
            {
                "sample_index": i,
                "source": program.source if program is not None else None,
                "extraction_error": decision.extraction_errors[i],
                "passed": decision.sample_verdicts[i],
                "tests": tests,
            }
        )
    return {
        "question_id": decision.question_id,
        "strategy": decision.strategy,
        "verdict": decision.verdict,
        "samples": samples,
        "timing_ms": decision.timing.total_ms,
    }


def _run_selftest(state: ServiceState) -> None:
    if not state.bank.questions:
        state.selftest = "skipped"
        state.ready = True
        return
    question = state.bank.questions[0]
    reference = ExtractedProgram(
        source=question.reference_source, detected_entry_point=question.entry_point
    )
    verdict = run_tests(reference, question, state.limits)
    if verdict.all_passed:
        state.selftest = "passed"
        state.ready = True
    else:
        state.selftest = "failed"


def create_app(
    bank: QuestionBank,
    template: PromptTemplate | None = None,
    gateway=None,
    limits: ExecutionLimits | None = None,
    gateway_mode: str = "mock",
    model_id: str = DEFAULT_MODEL_ID,
    rate_per_minute: float = 6.0,
    time_budget_s: float = 30.0,
    cors_origins: list[str] | None = None,
) -> FastAPI:
    """Build the service app around an already-configured gateway."""
    if gateway is None:
        from .gateway import MockGateway

        gateway = MockGateway(strict=False)
    limits = limits or ExecutionLimits()
    needs_oracle = any(not t.has_expected for q in bank.questions for t in q.tests)
    if needs_oracle:
        bank = complete_bank(bank, limits)

    state = ServiceState(
        bank=bank,
        template=template or PromptTemplate(),
        gateway=gateway,
        limits=limits,
        gateway_mode=gateway_mode,
        model_id=model_id,
        rate_per_minute=rate_per_minute,
        time_budget_s=time_budget_s,
    )
    questions = bank.by_id()
    executor = ThreadPoolExecutor(max_workers=8)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        _run_selftest(state)
        yield
        executor.shutdown(wait=False, cancel_futures=True)

    app = FastAPI(title="cgbg feedback service", lifespan=lifespan)
    app.state.service = state

    if cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=cors_origins,
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.get("/healthz")
    def healthz():
        if not state.ready:
            return _error(503, f"starting (selftest: {state.selftest})")
        return {
            "status": "ok",
            "gateway_mode": state.gateway_mode,
            "bank_version": state.bank.version,
            "selftest": state.selftest,
        }

    @app.get("/api/v1/questions")
    def list_questions():
        return [
            {
                "id": q.id,
                "title": q.title,
                "reference_source": q.reference_source,
                "entry_point": q.entry_point,
                "arity": q.arity,
                "param_names": q.param_names,
                "tags": q.tags,
            }
            for q in state.bank.questions
        ]

    def _bucket_for(ip: str) -> TokenBucket:
        bucket = state.buckets.get(ip)
        if bucket is None:
            bucket = TokenBucket(
                capacity=state.rate_per_minute,
                refill_per_second=state.rate_per_minute / 60.0,
            )
            state.buckets[ip] = bucket
        return bucket

    @app.post("/api/v1/grade")
    async def grade(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(422, "request body must be JSON")
        if not isinstance(body, dict):
            return _error(422, "request body must be a JSON object")
        question_id = body.get("question_id")
        response_text = body.get("response_text")
        strategy_name = body.get("strategy", SINGLE_ZERO_TEMP)
        if not isinstance(question_id, str) or not question_id:
            return _error(422, "question_id is required")
        if not isinstance(response_text, str) or not response_text.strip():
            return _error(422, "response_text must be a non-empty string")
        if len(response_text) > MAX_RESPONSE_CHARS:
            return _error(422, f"response_text exceeds {MAX_RESPONSE_CHARS} characters")
        if strategy_name not in STRATEGY_NAMES:
            return _error(422, f"unknown strategy {strategy_name!r}")
        question = questions.get(question_id)
        if question is None:
            return _error(404, f"unknown question {question_id!r}")

        client_ip = request.client.host if request.client else "unknown"
        if not _bucket_for(client_ip).try_acquire():
            return _error(429, "rate limit exceeded; slow down")

        strategy = strategy_from_name(strategy_name, state.model_id)
        task = functools.partial(
            grade_response,
            question,
            response_text,
            strategy,
            state.template,
            state.gateway,
            state.limits,
        )
        loop = asyncio.get_running_loop()
        try:
            decision = await asyncio.wait_for(
                loop.run_in_executor(executor, task), timeout=state.time_budget_s
            )
        except asyncio.TimeoutError:
            return _error(504, f"grading exceeded the {state.time_budget_s:.0f}s budget")
        except GatewayError as exc:
            return _error(502, f"completion provider failed: {exc}")
        return _decision_payload(decision, question)

    return app
