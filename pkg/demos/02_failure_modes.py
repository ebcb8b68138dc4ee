"""Reproduce the two characteristic disagreement directions.

Lenient (false positive): a line-by-line restatement of the code is enough
for the model to generate functionally correct code, so code-generation
grading accepts what a human rubric rejects.

Strict (false negative): when a response names variables from the snippet
("between y and z"), the model may guess they are literal characters; the
generated program passes a y/z test vector but fails once the delimiters
vary, so the grader rejects what a human accepts.

    python3 demos/02_failure_modes.py
"""

from cgbg import fixtures
from cgbg.bank import complete_bank, load_question_bank
from cgbg.extraction import extract_code
from cgbg.sandbox import ExecutionLimits, run_tests

bank = complete_bank(load_question_bank(fixtures.bank_path()), ExecutionLimits())
limits = ExecutionLimits()

print("=== lenient direction: line-by-line description, correct code ===")
question = bank.by_id()["q_average"]
print('response: "the sum of the element in the list divided by the length of the list"')
print("human grade: incorrect (not a high-level description)")
program = extract_code("def foo(lst):\n    return sum(lst) / len(lst)")
verdict = run_tests(program, question, limits)
print(f"generated code passes all tests: {verdict.all_passed} -> CGBG grade: correct")
print("disagreement direction: false positive (lenient)\n")

print("=== strict direction: variable-vs-literal ambiguity ===")
question = bank.by_id()["q_substring"]
print(question.reference_source)
print('response: "return the substring that is in between y and z"')
print("human grade: correct")
literal = extract_code('def foo(x, y, z):\n  return x[x.index("y")+1:x.index("z")]')
print("model guessed y/z are literal characters:")
print(literal.source)
verdict = run_tests(literal, question, limits)
for result in verdict.results:
    test = question.tests[result.test_index]
    print(f"  foo(*{test.args!r}) -> {result.status}")
print(f"all tests passed: {verdict.all_passed} -> CGBG grade: incorrect")
print("disagreement direction: false negative (strict)")
print()
print("Mitigations: include the signature in the pre-prompt context")
print("(PromptTemplate(context_mode='signature'), the default) and use test")
print("vectors whose delimiter characters differ from the parameter names.")
