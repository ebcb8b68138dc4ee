"""Regenerate the shipped deterministic fixtures.

Authors the per-response completion behaviors (what the model "generates"
for each fixture response), then derives mock_script.json and the replay
cache keyed by prompt fingerprints. Run after changing the fixture bank,
the response corpus, or the default prompt template:

    python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import shutil

from cgbg import fixtures
from cgbg.bank import load_question_bank
from cgbg.gateway import fingerprint
from cgbg.grading import majority_of_five, single_zero_temp
from cgbg.prompting import PromptTemplate, build_codegen_prompt
from cgbg.responses import ingest_responses

AVG_FENCED = '```python\ndef foo(lst):\n  return sum(lst)/len(lst)\n```'
AVG_BARE = 'def foo(lst):\n    return sum(lst) / len(lst)'
AVG_ALIAS = (
    'Here is the function you described:\n\n'
    '```python\ndef average(numbers):\n    return sum(numbers) / len(numbers)\n```'
)
SUM_LIST = '```python\ndef foo(lst):\n  total = 0\n  for n in lst:\n    total += n\n  return total\n```'
ABS_BUILTIN = 'def foo(x):\n    return abs(x)'
ABS_BRANCH = '```python\ndef foo(x):\n    if x < 0:\n        return -x\n    return x\n```'
DOUBLE = 'def foo(x):\n    return x * 2'
MAX_BUILTIN = 'def foo(a, b):\n    return max(a, b)'
MAX_BRANCH = '```python\ndef foo(a, b):\n    if a > b:\n        return a\n    else:\n        return b\n```'
ADD_TWO = 'Here is the function:\n\ndef foo(a, b):\n    return a + b'
MULTIPLE = 'def foo(x, y):\n    return x % y == 0'
DIVIDE = 'def foo(x, y):\n    return x / y'
RANGE_CODE = 'def foo(lst):\n    return max(lst) - min(lst)'
SORT_CODE = 'def foo(lst):\n    return sorted(lst)'
ODD_EQ = 'def foo(x):\n    return x % 2 == 1'
ODD_NE = 'def foo(x):\n    return x % 2 != 0'
PRIME = (
    'def foo(x):\n    if x < 2:\n        return False\n'
    '    for i in range(2, x):\n        if x % i == 0:\n            return False\n    return True'
)
REFUSAL = 'I cannot write code for that.'
# The classic string-question failure: delimiters guessed as literals.
SUB_LITERAL = '```python\ndef foo(x, y, z):\n  return x[x.index("y")+1:x.index("z")]\n```'
SUB_VARS = 'def foo(x, y, z):\n    return x[x.index(y)+1:x.index(z)]'
REVERSE = 'def foo(x, y, z):\n    return x[::-1]'
MEMBER_IN = 'def foo(lst, x):\n    return x in lst'
MEMBER_LOOP = (
    '```python\ndef foo(lst, x):\n    for e in lst:\n        if e == x:\n'
    '            return True\n    return False\n```'
)
COUNT = 'def foo(lst, x):\n    return len(lst)'
SUMPOS_GEN = 'def foo(lst):\n    return sum(n for n in lst if n > 0)'
SUMPOS_LOOP = (
    '```python\ndef foo(lst):\n    total = 0\n    for n in lst:\n'
    '        if n > 0:\n            total += n\n    return total\n```'
)
SUM_ALL = 'def foo(lst):\n    return sum(lst)'

# t0: completions at temperature 0 (one sample); t05: at 0.5 (five samples,
# shorter lists cycle). Correct code for line-by-line responses produces the
# lenient false positives; SUB_LITERAL produces the strict false negatives.
BEHAVIORS: dict[str, dict[str, list[str]]] = {
    "r01": {"t0": [AVG_FENCED], "t05": [AVG_FENCED, AVG_BARE, AVG_FENCED, AVG_ALIAS, AVG_FENCED]},
    "r02": {"t0": [AVG_BARE], "t05": [AVG_BARE, AVG_FENCED, AVG_BARE, AVG_ALIAS, AVG_BARE]},
    "r03": {"t0": [SUM_LIST], "t05": [SUM_LIST, SUM_LIST, AVG_FENCED, SUM_LIST, SUM_LIST]},
    "r04": {"t0": [AVG_ALIAS], "t05": [AVG_ALIAS]},
    "r05": {"t0": [ABS_BUILTIN], "t05": [ABS_BUILTIN, ABS_BRANCH]},
    "r06": {"t0": [ABS_BRANCH], "t05": [ABS_BRANCH]},
    "r07": {"t0": [DOUBLE], "t05": [DOUBLE]},
    "r08": {"t0": [MAX_BUILTIN], "t05": [MAX_BUILTIN, MAX_BRANCH]},
    "r09": {"t0": [MAX_BRANCH], "t05": [MAX_BRANCH]},
    "r10": {"t0": [ADD_TWO], "t05": [ADD_TWO]},
    "r11": {"t0": [MULTIPLE], "t05": [MULTIPLE]},
    "r12": {"t0": [MULTIPLE], "t05": [MULTIPLE]},
    "r13": {"t0": [DIVIDE], "t05": [DIVIDE]},
    "r14": {"t0": [RANGE_CODE], "t05": [RANGE_CODE]},
    "r15": {"t0": [RANGE_CODE], "t05": [RANGE_CODE]},
    "r16": {"t0": [SORT_CODE], "t05": [SORT_CODE]},
    "r17": {"t0": [ODD_EQ], "t05": [ODD_EQ, ODD_NE]},
    "r18": {"t0": [ODD_EQ], "t05": [ODD_EQ]},
    "r19": {"t0": [ODD_NE], "t05": [ODD_NE]},
    "r20": {"t0": [PRIME], "t05": [PRIME, PRIME, REFUSAL, PRIME, PRIME]},
    "r21": {"t0": [SUB_LITERAL], "t05": [SUB_LITERAL]},
    "r22": {"t0": [SUB_VARS], "t05": [SUB_VARS]},
    "r23": {"t0": [REVERSE], "t05": [REVERSE]},
    "r24": {"t0": [SUB_LITERAL], "t05": [SUB_LITERAL, SUB_LITERAL, SUB_VARS, SUB_LITERAL, SUB_LITERAL]},
    "r25": {"t0": [MEMBER_IN], "t05": [MEMBER_IN, MEMBER_LOOP]},
    "r26": {"t0": [MEMBER_LOOP], "t05": [MEMBER_LOOP]},
    "r27": {"t0": [COUNT], "t05": [COUNT]},
    "r28": {"t0": [SUMPOS_GEN], "t05": [SUMPOS_GEN, SUMPOS_LOOP]},
    "r29": {"t0": [SUMPOS_LOOP], "t05": [SUMPOS_LOOP]},
    "r30": {"t0": [SUM_ALL], "t05": [SUM_ALL]},
}


def main() -> None:
    bank = load_question_bank(fixtures.bank_path())
    questions = bank.by_id()
    records = ingest_responses(fixtures.responses_path()).records
    template = PromptTemplate()
    config_t0 = single_zero_temp().sampling
    config_t05 = majority_of_five().sampling  # best_of_five samples identically

    script: dict[str, list[str]] = {}
    for record in records:
        behavior = BEHAVIORS[record.response_id]
        prompt = build_codegen_prompt(template, questions[record.question_id], record.response_text)
        script[fingerprint(prompt, config_t0)] = behavior["t0"]
        script[fingerprint(prompt, config_t05)] = behavior["t05"]

    fixtures.mock_behaviors_path().write_text(
        json.dumps(BEHAVIORS, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    fixtures.mock_script_path().write_text(
        json.dumps(script, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    cache_dir = fixtures.replay_cache_dir()
    if cache_dir.exists():
        shutil.rmtree(cache_dir)
    cache_dir.mkdir(parents=True)
    for key, texts in script.items():
        (cache_dir / key).write_text(
            json.dumps(texts, ensure_ascii=True, indent=2), encoding="utf-8"
        )

    print(f"wrote {len(script)} fingerprints for {len(records)} responses")
    print(f"  {fixtures.mock_script_path()}")
    print(f"  {cache_dir}/")


if __name__ == "__main__":
    main()
