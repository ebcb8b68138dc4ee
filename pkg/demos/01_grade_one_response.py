"""Walk one response through the whole grading pipeline, step by step.

Everything runs offline: the completion comes from a scripted mock gateway,
so you can see each artifact (prompt, completion, extracted program, test
results, verdict) without an API key.

    python3 demos/01_grade_one_response.py
"""

from cgbg import fixtures
from cgbg.bank import complete_bank, load_question_bank
from cgbg.extraction import extract_code, normalize_entry_point
from cgbg.gateway import MockGateway, fingerprint
from cgbg.grading import grade_response, single_zero_temp
from cgbg.prompting import PromptTemplate, build_codegen_prompt
from cgbg.sandbox import ExecutionLimits

RESPONSE = "finding the average of a list of numbers"
COMPLETION = "Sure!\n```python\ndef average(nums):\n    return sum(nums) / len(nums)\n```"

# 1. Load the question bank and fill expected outputs by executing each
#    question's reference source in the sandbox.
bank = complete_bank(load_question_bank(fixtures.bank_path()), ExecutionLimits())
question = bank.by_id()["q_average"]
print("== question ==")
print(question.reference_source)
print()

# 2. Build the code-generation prompt. The student response goes in
#    verbatim; the system message carries the entry point and signature.
template = PromptTemplate()
prompt = build_codegen_prompt(template, question, RESPONSE)
for message in prompt:
    print(f"== {message.role} message ==")
    print(message.content)
    print()

# 3. Sample a completion. Here a mock gateway replays a scripted text for
#    this exact (prompt, sampling config) fingerprint.
strategy = single_zero_temp()
gateway = MockGateway({fingerprint(prompt, strategy.sampling): [COMPLETION]})

# 4. Extraction turns the completion into a runnable program; a mismatched
#    function name gets an alias binding instead of a rename.
program = normalize_entry_point(extract_code(COMPLETION), question.entry_point)
print("== extracted program ==")
print(program.source)
print()

# 5. grade_response does all of the above plus sandboxed execution and
#    aggregation in one call.
decision = grade_response(
    question, RESPONSE, strategy, template, gateway, ExecutionLimits()
)
print("== decision ==")
print(f"verdict: {decision.verdict}")
for result in decision.verdicts_detail[0].results:
    test = question.tests[result.test_index]
    print(f"  test {result.test_index}: foo(*{test.args!r}) -> {result.actual!r} [{result.status}]")
