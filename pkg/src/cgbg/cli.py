"""Command-line front end: validate banks, run oracles, grade, report.

Exit codes: 0 success, 1 fatal error, 2 partial failure (some responses
ungraded). Grading artifacts land in a timestamped run directory with a
"latest" pointer.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import shutil
import sys
from pathlib import Path

from . import fixtures
from .agreement import (
    build_report,
    disagreement_digest,
    outcomes_from_decisions,
    per_question_csv,
    report_to_dict,
    report_to_markdown,
)
from .bank import (
    BankSchemaError,
    OracleError,
    bank_from_dict,
    complete_bank,
    load_question_bank,
    save_question_bank,
    validate_bank,
)
from .extraction import ExtractedProgram
from .gateway import (
    API_KEY_ENV_VAR,
    HttpGateway,
    MissingFixtureError,
    MockGateway,
    RecordingGateway,
    ReplayGateway,
)
from .grading import (
    DEFAULT_MODEL_ID,
    STRATEGY_NAMES,
    GradeDecision,
    GradeTiming,
    grade_batch,
    strategy_from_name,
)
from .prompting import PromptTemplate, load_template
from .responses import IngestError, ingest_responses
from .sandbox import ExecutionLimits

GATEWAY_MODES = ("live", "record", "replay", "mock")

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_FATAL


# ---------------------------------------------------------------------------
# decisions.json (de)serialization
# ---------------------------------------------------------------------------


def decision_to_dict(decision: GradeDecision, deterministic: bool = False) -> dict:
    """Serialize a decision; ``deterministic`` zeroes wall-clock fields so
    replay/mock runs are byte-reproducible."""

    def _program(p):
        if p is None:
            return None
        return {
            "source": p.source,
            "detected_entry_point": p.detected_entry_point,
            "alias_applied": p.alias_applied,
            "origin_sample_index": p.origin_sample_index,
        }

    def _verdict(v):
        if v is None:
            return None
        results = []
        for r in v.results:
            item = {
                "test_index": r.test_index,
                "status": r.status,
                "duration_ms": 0 if deterministic else r.duration_ms,
            }
            if r.has_actual:
                item["actual"] = r.actual
            if r.error_text is not None:
                item["error_text"] = r.error_text
            results.append(item)
        return {"all_passed": v.all_passed, "results": results}

    timing = decision.timing
    return {
        "question_id": decision.question_id,
        "response_id": decision.response_id,
        "strategy": decision.strategy,
        "verdict": decision.verdict,
        "sample_verdicts": decision.sample_verdicts,
        "programs": [_program(p) for p in decision.programs],
        "extraction_errors": decision.extraction_errors,
        "verdicts_detail": [_verdict(v) for v in decision.verdicts_detail],
        "timing": {
            "generation_ms": 0 if deterministic else timing.generation_ms,
            "execution_ms": 0 if deterministic else timing.execution_ms,
            "total_ms": 0 if deterministic else timing.total_ms,
        },
    }


def decision_from_dict(data: dict) -> GradeDecision:
    from .sandbox import ProgramVerdict, TestRunResult

    programs = [
        None
        if p is None
        else ExtractedProgram(
            source=p["source"],
            detected_entry_point=p.get("detected_entry_point"),
            alias_applied=p.get("alias_applied", False),
            origin_sample_index=p.get("origin_sample_index", 0),
        )
        for p in data["programs"]
    ]
    details = []
    for v in data["verdicts_detail"]:
        if v is None:
            details.append(None)
            continue
        details.append(
            ProgramVerdict(
                all_passed=v["all_passed"],
                results=[
                    TestRunResult(
                        test_index=r["test_index"],
                        status=r["status"],
                        actual=r.get("actual"),
                        has_actual="actual" in r,
                        error_text=r.get("error_text"),
                        duration_ms=r.get("duration_ms", 0),
                    )
                    for r in v["results"]
                ],
            )
        )
    timing = data.get("timing", {})
    return GradeDecision(
        question_id=data["question_id"],
        response_id=data["response_id"],
        strategy=data["strategy"],
        verdict=data["verdict"],
        sample_verdicts=list(data["sample_verdicts"]),
        programs=programs,
        extraction_errors=list(data["extraction_errors"]),
        verdicts_detail=details,
        timing=GradeTiming(
            generation_ms=timing.get("generation_ms", 0),
            execution_ms=timing.get("execution_ms", 0),
            total_ms=timing.get("total_ms", 0),
        ),
    )


def _dump_json(data, path: Path) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_validate(bank_path: str) -> int:
    try:
        with open(bank_path, encoding="utf-8") as fh:
            data = json.load(fh)
        bank = bank_from_dict(data)
    except (OSError, json.JSONDecodeError, BankSchemaError) as exc:
        return _fail(str(exc))
    findings = validate_bank(bank)
    for finding in findings:
        print(finding)
    if findings:
        print(f"{len(findings)} finding(s)", file=sys.stderr)
        return EXIT_FATAL
    print(f"ok: {len(bank.questions)} question(s), no findings")
    return EXIT_OK


def cmd_oracle(bank_path: str, out_path: str | None, limits: ExecutionLimits) -> int:
    try:
        bank = load_question_bank(bank_path)
    except (OSError, BankSchemaError) as exc:
        return _fail(str(exc))
    try:
        completed = complete_bank(bank, limits)
    except OracleError as exc:
        return _fail(str(exc))
    destination = out_path or bank_path
    save_question_bank(completed, destination)
    total_tests = sum(len(q.tests) for q in completed.questions)
    print(f"oracle complete: {len(completed.questions)} question(s), {total_tests} expected value(s) -> {destination}")
    return EXIT_OK


def _build_gateway(args):
    if args.mode == "mock":
        script_path = args.mock_script or fixtures.mock_script_path()
        return MockGateway.from_file(script_path, strict=False)
    if args.mode == "replay":
        if not args.cache_dir:
            raise MissingFixtureError("--mode replay requires --cache-dir")
        return ReplayGateway(args.cache_dir)
    if not os.environ.get(API_KEY_ENV_VAR):
        raise PermissionError(
            f"--mode {args.mode} calls the provider; set {API_KEY_ENV_VAR} "
            "(and CGBG_LLM_BASE_URL) first"
        )
    gateway = HttpGateway()
    if args.mode == "record":
        if not args.cache_dir:
            raise MissingFixtureError("--mode record requires --cache-dir")
        gateway = RecordingGateway(gateway, args.cache_dir)
    return gateway


def _load_template_arg(args) -> PromptTemplate:
    if args.template:
        return load_template(args.template, context_mode=args.context_mode)
    return PromptTemplate(context_mode=args.context_mode)


def cmd_grade(args) -> int:
    try:
        gateway = _build_gateway(args)
    except (PermissionError, MissingFixtureError, OSError) as exc:
        return _fail(str(exc))
    try:
        bank = load_question_bank(args.bank)
    except (OSError, BankSchemaError) as exc:
        return _fail(str(exc))
    try:
        ingest = ingest_responses(args.responses)
    except (OSError, IngestError) as exc:
        return _fail(str(exc))
    try:
        template = _load_template_arg(args)
    except OSError as exc:
        return _fail(str(exc))

    limits = _limits_from_args(args)
    needs_oracle = any(not t.has_expected for q in bank.questions for t in q.tests)
    if needs_oracle:
        try:
            bank = complete_bank(bank, limits)
        except OracleError as exc:
            return _fail(str(exc))

    try:
        strategies = [strategy_from_name(name, args.model) for name in args.strategy.split(",")]
    except ValueError as exc:
        return _fail(str(exc))

    deterministic = args.mode in ("mock", "replay")
    result = grade_batch(
        bank,
        ingest.records,
        strategies,
        template,
        gateway,
        limits,
        parallelism=args.parallelism,
    )

    run_dir = _make_run_dir(Path(args.out))
    _dump_json(
        {"decisions": [decision_to_dict(d, deterministic=deterministic) for d in result.decisions]},
        run_dir / "decisions.json",
    )
    shutil.copyfile(args.responses, run_dir / "responses.csv")
    _write_reports(result.decisions, ingest.records, run_dir)
    _dump_json(
        {
            "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "mode": args.mode,
            "model": args.model,
            "strategies": sorted(s.name for s in strategies),
            "bank": str(args.bank),
            "responses": str(args.responses),
            "n_decisions": len(result.decisions),
            "n_errors": len(result.errors) + len(ingest.errors),
        },
        run_dir / "run_meta.json",
    )
    problems = [*ingest.errors, *(f"{e.response_id} [{e.strategy}]: {e.message}" for e in result.errors)]
    if problems:
        _dump_json({"errors": problems}, run_dir / "errors.json")

    print(f"graded {len(result.decisions)} decision(s) -> {run_dir}")
    if problems:
        print(f"{len(problems)} problem(s); see errors.json", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _write_reports(decisions, records, run_dir: Path) -> None:
    labels = {r.response_id: r.human_label for r in records}
    texts = {r.response_id: r.response_text for r in records}
    outcomes = outcomes_from_decisions(decisions, labels)
    report = build_report(outcomes)
    digest = disagreement_digest(outcomes, decisions, texts)
    _dump_json(report_to_dict(report), run_dir / "report.json")
    (run_dir / "report.md").write_text(report_to_markdown(report, digest), encoding="utf-8")
    (run_dir / "per_question.csv").write_text(per_question_csv(report), encoding="utf-8")


def _make_run_dir(out_root: Path) -> Path:
    out_root.mkdir(parents=True, exist_ok=True)
    stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%S%f")
    run_dir = out_root / f"run-{stamp}"
    run_dir.mkdir()
    latest = out_root / "latest"
    try:
        if latest.is_symlink() or latest.exists():
            latest.unlink()
        latest.symlink_to(run_dir.name)
    except OSError:
        (out_root / "latest.txt").write_text(run_dir.name + "\n", encoding="utf-8")
    return run_dir


def cmd_report(run_dir_arg: str) -> int:
    run_dir = Path(run_dir_arg)
    decisions_path = run_dir / "decisions.json"
    responses_path = run_dir / "responses.csv"
    if not decisions_path.is_file():
        return _fail(f"{decisions_path} not found")
    if not responses_path.is_file():
        return _fail(f"{responses_path} not found")
    data = json.loads(decisions_path.read_text(encoding="utf-8"))
    decisions = [decision_from_dict(d) for d in data["decisions"]]
    try:
        ingest = ingest_responses(responses_path)
    except IngestError as exc:
        return _fail(str(exc))
    _write_reports(decisions, ingest.records, run_dir)
    print((run_dir / "report.md").read_text(encoding="utf-8"))
    return EXIT_OK


def cmd_serve(args) -> int:
    try:
        gateway = _build_gateway(args)
        bank = load_question_bank(args.bank)
        template = _load_template_arg(args)
    except (PermissionError, MissingFixtureError, OSError, BankSchemaError) as exc:
        return _fail(str(exc))
    from .service import create_app

    app = create_app(
        bank,
        template=template,
        gateway=gateway,
        limits=_limits_from_args(args),
        gateway_mode=args.mode,
        model_id=args.model,
        rate_per_minute=args.rate_limit,
        cors_origins=args.cors_origin or None,
    )
    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _limits_from_args(args) -> ExecutionLimits:
    return ExecutionLimits(
        per_test_timeout_ms=args.per_test_timeout_ms,
        memory_cap_mb=args.memory_cap_mb,
        total_program_timeout_ms=args.total_timeout_ms,
    )


def _add_limit_flags(parser):
    parser.add_argument("--per-test-timeout-ms", type=int, default=2000)
    parser.add_argument("--memory-cap-mb", type=int, default=256)
    parser.add_argument("--total-timeout-ms", type=int, default=20000)


def _add_gateway_flags(parser):
    parser.add_argument("--mode", choices=GATEWAY_MODES, default="mock")
    parser.add_argument("--model", default=DEFAULT_MODEL_ID)
    parser.add_argument("--cache-dir", help="fingerprint cache for record/replay modes")
    parser.add_argument("--mock-script", help="scripted completions file for mock mode")
    parser.add_argument("--template", help="pre-prompt template file")
    parser.add_argument(
        "--context-mode",
        choices=("none", "entry_point_only", "signature"),
        default="signature",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cgbg",
        description="Grade plain-English code explanations by generating and testing code.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a question bank file")
    p_validate.add_argument("bank")

    p_oracle = sub.add_parser("oracle", help="fill expected outputs by running reference code")
    p_oracle.add_argument("bank")
    p_oracle.add_argument("--out", help="write completed bank here (default: in place)")
    _add_limit_flags(p_oracle)

    p_grade = sub.add_parser("grade", help="grade a labeled response corpus")
    p_grade.add_argument("--bank", required=True)
    p_grade.add_argument("--responses", required=True)
    p_grade.add_argument(
        "--strategy",
        default=",".join(STRATEGY_NAMES),
        help="comma-separated strategy names",
    )
    p_grade.add_argument("--out", required=True, help="output root for run directories")
    p_grade.add_argument("--parallelism", type=int, default=os.cpu_count() or 2)
    _add_gateway_flags(p_grade)
    _add_limit_flags(p_grade)

    p_report = sub.add_parser("report", help="rebuild and print reports for a run directory")
    p_report.add_argument("run_dir")

    p_serve = sub.add_parser("serve", help="run the practice feedback service")
    p_serve.add_argument("--bank", default=str(fixtures.bank_path()))
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--rate-limit", type=float, default=6.0, help="grades per minute per IP")
    p_serve.add_argument(
        "--cors-origin",
        action="append",
        help="allowed UI origin for CORS (repeatable)",
    )
    _add_gateway_flags(p_serve)
    _add_limit_flags(p_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args.bank)
    if args.command == "oracle":
        return cmd_oracle(args.bank, args.out, _limits_from_args(args))
    if args.command == "grade":
        return cmd_grade(args)
    if args.command == "report":
        return cmd_report(args.run_dir)
    if args.command == "serve":
        return cmd_serve(args)
    return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
