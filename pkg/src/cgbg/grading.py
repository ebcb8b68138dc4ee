"""CGBG orchestration: prompt, sample, extract, execute, aggregate.

Three grading strategies are supported: a single sample at temperature 0,
majority vote over five samples at temperature 0.5 (threshold 3), and best
of five at temperature 0.5 (correct iff any sample's program passes every
test). A sample whose completion contains no code counts as a failing
verdict; it stays distinguishable in the decision detail.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .bank import Question, QuestionBank
from .extraction import ExtractedProgram, NoCodeFoundError, extract_code, normalize_entry_point
from .gateway import SamplingConfig
from .prompting import PromptTemplate, build_codegen_prompt
from .responses import ResponseRecord
from .sandbox import ExecutionLimits, ProgramVerdict, run_tests

SINGLE_ZERO_TEMP = "single_zero_temp"
MAJORITY_OF_FIVE = "majority_of_five"
BEST_OF_FIVE = "best_of_five"
STRATEGY_NAMES = (SINGLE_ZERO_TEMP, MAJORITY_OF_FIVE, BEST_OF_FIVE)

DEFAULT_MODEL_ID = "gpt-4"


@dataclass
class GradingStrategy:
    name: str
    sampling: SamplingConfig
    majority_threshold: int | None = None

    def __post_init__(self):
        if self.name == SINGLE_ZERO_TEMP:
            if self.sampling.temperature != 0.0 or self.sampling.n_samples != 1:
                raise ValueError(f"{self.name} requires temperature 0.0 and 1 sample")
        elif self.name == MAJORITY_OF_FIVE:
            if self.sampling.temperature != 0.5 or self.sampling.n_samples != 5:
                raise ValueError(f"{self.name} requires temperature 0.5 and 5 samples")
            if self.majority_threshold != 3:
                raise ValueError(f"{self.name} requires a majority threshold of 3")
        elif self.name == BEST_OF_FIVE:
            if self.sampling.temperature != 0.5 or self.sampling.n_samples != 5:
                raise ValueError(f"{self.name} requires temperature 0.5 and 5 samples")
        else:
            raise ValueError(f"unknown strategy {self.name!r}")


def single_zero_temp(model_id: str = DEFAULT_MODEL_ID, max_tokens: int | None = None) -> GradingStrategy:
    config = SamplingConfig(model_id=model_id, temperature=0.0, n_samples=1)
    if max_tokens:
        config.max_tokens = max_tokens
    return GradingStrategy(name=SINGLE_ZERO_TEMP, sampling=config)


def majority_of_five(model_id: str = DEFAULT_MODEL_ID, max_tokens: int | None = None) -> GradingStrategy:
    config = SamplingConfig(model_id=model_id, temperature=0.5, n_samples=5)
    if max_tokens:
        config.max_tokens = max_tokens
    return GradingStrategy(name=MAJORITY_OF_FIVE, sampling=config, majority_threshold=3)


def best_of_five(model_id: str = DEFAULT_MODEL_ID, max_tokens: int | None = None) -> GradingStrategy:
    config = SamplingConfig(model_id=model_id, temperature=0.5, n_samples=5)
    if max_tokens:
        config.max_tokens = max_tokens
    return GradingStrategy(name=BEST_OF_FIVE, sampling=config)


_STRATEGY_FACTORIES = {
    SINGLE_ZERO_TEMP: single_zero_temp,
    MAJORITY_OF_FIVE: majority_of_five,
    BEST_OF_FIVE: best_of_five,
}


def strategy_from_name(name: str, model_id: str = DEFAULT_MODEL_ID) -> GradingStrategy:
    try:
        factory = _STRATEGY_FACTORIES[name]
    except KeyError:
        raise ValueError(
            f"unknown strategy {name!r}; expected one of {', '.join(STRATEGY_NAMES)}"
        ) from None
    return factory(model_id)


def aggregate(sample_verdicts: Sequence[bool], strategy: GradingStrategy) -> bool:
    """Fold per-sample verdicts into the strategy's final verdict."""
    if len(sample_verdicts) != strategy.sampling.n_samples:
        raise ValueError(
            f"{len(sample_verdicts)} sample verdicts for strategy {strategy.name} "
            f"expecting {strategy.sampling.n_samples}"
        )
    if strategy.name == SINGLE_ZERO_TEMP:
        return sample_verdicts[0]
    if strategy.name == MAJORITY_OF_FIVE:
        return sum(sample_verdicts) >= strategy.majority_threshold
    return any(sample_verdicts)


@dataclass
class GradeTiming:
    generation_ms: int = 0
    execution_ms: int = 0
    total_ms: int = 0


@dataclass
class GradeDecision:
    question_id: str
    response_id: str
    strategy: str
    verdict: str  # correct | incorrect
    sample_verdicts: list[bool]
    programs: list[ExtractedProgram | None]
    extraction_errors: list[str | None]
    verdicts_detail: list[ProgramVerdict | None]
    timing: GradeTiming = field(default_factory=GradeTiming)


class VerdictCache:
    """Memoizes sandbox verdicts by (question id, program source).

    Execution is deterministic for a fixed program and test set, so
    repeated samples of the same text run once. Thread-safe.
    """

    def __init__(self):
        self._cache: dict[tuple[str, str], ProgramVerdict] = {}
        self._lock = threading.Lock()

    def run(self, program: ExtractedProgram, question: Question, limits: ExecutionLimits) -> ProgramVerdict:
        key = (question.id, program.source)
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        verdict = run_tests(program, question, limits)
        with self._lock:
            self._cache.setdefault(key, verdict)
        return verdict


def _decided(true_count: int, false_count: int, strategy: GradingStrategy) -> bool:
    n = strategy.sampling.n_samples
    remaining = n - true_count - false_count
    if strategy.name == BEST_OF_FIVE:
        return true_count >= 1
    if strategy.name == MAJORITY_OF_FIVE:
        return true_count >= strategy.majority_threshold or true_count + remaining < strategy.majority_threshold
    return false_count + true_count >= n


def grade_response(
    question: Question,
    response_text: str,
    strategy: GradingStrategy,
    template: PromptTemplate,
    gateway,
    limits: ExecutionLimits,
    response_id: str = "",
    verdict_cache: VerdictCache | None = None,
    fast: bool = False,
) -> GradeDecision:
    """Grade one plain-English response end to end.

    Gateway failures propagate: a response is reported ungraded rather than
    silently incorrect. With ``fast`` set, samples stop executing once the
    aggregate verdict is settled; by default all samples run as audit
    evidence.
    """
    if not all(t.has_expected for t in question.tests):
        raise ValueError(f"question {question.id!r} has tests without expected values")
    prompt = build_codegen_prompt(template, question, response_text)

    started = time.monotonic()
    completions = gateway.generate(prompt, strategy.sampling)
    generation_ms = int((time.monotonic() - started) * 1000)

    n = strategy.sampling.n_samples
    sample_verdicts: list[bool] = [False] * n
    programs: list[ExtractedProgram | None] = [None] * n
    extraction_errors: list[str | None] = [None] * n
    details: list[ProgramVerdict | None] = [None] * n

    exec_started = time.monotonic()
    true_count = false_count = 0
    for i, completion in enumerate(completions):
        try:
            program = extract_code(completion.text, origin_sample_index=i)
            program = normalize_entry_point(program, question.entry_point)
        except NoCodeFoundError as exc:
            extraction_errors[i] = str(exc)
            false_count += 1
            continue
        programs[i] = program
        if verdict_cache is not None:
            detail = verdict_cache.run(program, question, limits)
        else:
            detail = run_tests(program, question, limits)
        details[i] = detail
        sample_verdicts[i] = detail.all_passed
        true_count += detail.all_passed
        false_count += not detail.all_passed
        if fast and _decided(true_count, false_count, strategy):
            break
    execution_ms = int((time.monotonic() - exec_started) * 1000)

    verdict = aggregate(sample_verdicts, strategy)
    return GradeDecision(
        question_id=question.id,
        response_id=response_id,
        strategy=strategy.name,
        verdict="correct" if verdict else "incorrect",
        sample_verdicts=sample_verdicts,
        programs=programs,
        extraction_errors=extraction_errors,
        verdicts_detail=details,
        timing=GradeTiming(
            generation_ms=generation_ms,
            execution_ms=execution_ms,
            total_ms=int((time.monotonic() - started) * 1000),
        ),
    )


@dataclass
class BatchError:
    response_id: str
    strategy: str | None
    message: str


@dataclass
class BatchResult:
    decisions: list[GradeDecision]
    errors: list[BatchError]


def grade_batch(
    bank: QuestionBank,
    responses: Sequence[ResponseRecord],
    strategies: Iterable[GradingStrategy],
    template: PromptTemplate,
    gateway,
    limits: ExecutionLimits,
    parallelism: int = 1,
    fast: bool = False,
) -> BatchResult:
    """One decision per (response, strategy), in deterministic order.

    A failing response never aborts the batch: its error is collected and
    the rest proceed. Identical program texts are executed once per
    question via a shared verdict cache.
    """
    strategies = sorted(strategies, key=lambda s: s.name)
    questions = bank.by_id()
    errors: list[BatchError] = []
    tasks: list[tuple[ResponseRecord, GradingStrategy]] = []
    for record in responses:
        if record.question_id not in questions:
            errors.append(
                BatchError(
                    response_id=record.response_id,
                    strategy=None,
                    message=f"unknown question_id {record.question_id!r}",
                )
            )
            continue
        for strategy in strategies:
            tasks.append((record, strategy))

    cache = VerdictCache()

    def _run(task: tuple[ResponseRecord, GradingStrategy]):
        record, strategy = task
        try:
            return grade_response(
                questions[record.question_id],
                record.response_text,
                strategy,
                template,
                gateway,
                limits,
                response_id=record.response_id,
                verdict_cache=cache,
                fast=fast,
            ), None
        except Exception as exc:
            return None, BatchError(
                response_id=record.response_id, strategy=strategy.name, message=str(exc)
            )

    decisions: list[GradeDecision] = []
    if parallelism > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(_run, tasks))
    else:
        outcomes = [_run(t) for t in tasks]
    for decision, error in outcomes:
        if decision is not None:
            decisions.append(decision)
        else:
            errors.append(error)

    decisions.sort(key=lambda d: (d.question_id, d.response_id, d.strategy))
    errors.sort(key=lambda e: (e.response_id, e.strategy or ""))
    return BatchResult(decisions=decisions, errors=errors)
