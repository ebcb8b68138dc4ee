"""Exercise the feedback service API in-process, no server or API key needed.

Shows the three endpoints a practice UI consumes: question list, grading,
and health. For a real server, run `cgbg serve --mode mock` instead.

    python3 demos/04_practice_service.py
"""

import json

from fastapi.testclient import TestClient

from cgbg import fixtures
from cgbg.bank import load_question_bank
from cgbg.gateway import MockGateway
from cgbg.service import create_app

bank = load_question_bank(fixtures.bank_path())
gateway = MockGateway.from_file(fixtures.mock_script_path(), strict=False)
app = create_app(bank, gateway=gateway, gateway_mode="mock")

with TestClient(app) as client:
    print("GET /healthz")
    print(json.dumps(client.get("/healthz").json(), indent=2))
    print()

    print("GET /api/v1/questions (first entry)")
    questions = client.get("/api/v1/questions").json()
    print(json.dumps(questions[0], indent=2))
    print()

    print("POST /api/v1/grade")
    reply = client.post(
        "/api/v1/grade",
        json={
            "question_id": "q_average",
            "response_text": "finding the average of a list of numbers",
        },
    )
    body = reply.json()
    print(f"verdict: {body['verdict']}")
    print("generated program:")
    print(body["samples"][0]["source"])
    print("per-test results:")
    for row in body["samples"][0]["tests"]:
        print(f"  foo(*{row['args']!r}) -> {row['actual']!r} [{row['status']}]")
