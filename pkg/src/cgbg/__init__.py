"""Code Generation Based Grading for explain-in-plain-English questions.

Pipeline: a student's plain-English description of a code snippet is turned
into a code-generation prompt, sampled completions are extracted into
programs, each program is executed against the question's test cases in a
sandbox, and per-sample results aggregate into a correct/incorrect verdict.
Agreement with human grades is measured with Cohen's kappa.
"""

from .agreement import (
    AgreementReport,
    ConfusionMatrix,
    DisagreementCase,
    LabeledOutcome,
    bucket_kappa,
    build_report,
    cohens_kappa,
    disagreement_digest,
    outcomes_from_decisions,
    report_to_dict,
    report_to_markdown,
)
from .bank import (
    BankSchemaError,
    Comparison,
    OracleError,
    Question,
    QuestionBank,
    TestCase,
    complete_bank,
    compute_expected_outputs,
    load_question_bank,
    save_question_bank,
    validate_bank,
)
from .extraction import ExtractedProgram, NoCodeFoundError, extract_code, normalize_entry_point
from .gateway import (
    AuthenticationError,
    CompletionResult,
    GatewayError,
    HttpGateway,
    MalformedReplyError,
    MissingFixtureError,
    MockGateway,
    ProviderTimeoutError,
    RateLimitExhaustedError,
    RecordingGateway,
    ReplayGateway,
    SamplingConfig,
    TokenBucket,
    fingerprint,
    mock_generate,
)
from .grading import (
    BEST_OF_FIVE,
    MAJORITY_OF_FIVE,
    SINGLE_ZERO_TEMP,
    STRATEGY_NAMES,
    BatchResult,
    GradeDecision,
    GradingStrategy,
    aggregate,
    best_of_five,
    grade_batch,
    grade_response,
    majority_of_five,
    single_zero_temp,
    strategy_from_name,
)
from .prompting import (
    Message,
    PromptError,
    PromptTemplate,
    build_codegen_prompt,
    load_template,
    render_template_preview,
)
from .responses import IngestError, ResponseRecord, ingest_responses
from .sandbox import (
    ExecutionLimits,
    ProgramVerdict,
    SandboxError,
    TestRunResult,
    compare_values,
    run_tests,
)

__version__ = "0.1.0"
