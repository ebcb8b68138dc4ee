import json

import pytest
from fastapi.testclient import TestClient

from cgbg.bank import QuestionBank
from cgbg.gateway import GatewayError, MockGateway, fingerprint
from cgbg.grading import single_zero_temp
from cgbg.prompting import PromptTemplate, build_codegen_prompt
from cgbg.service import create_app

AVERAGE_RESPONSE = "finding the average of a list of numbers"
AVERAGE_CODE = "```python\ndef foo(lst):\n  return sum(lst)/len(lst)\n```"


def scripted_gateway(question, pairs):
    """pairs: (response_text, completion_texts) for the default strategy."""
    template = PromptTemplate()
    config = single_zero_temp().sampling
    script = {}
    for response_text, texts in pairs:
        prompt = build_codegen_prompt(template, question, response_text)
        script[fingerprint(prompt, config)] = texts
    return MockGateway(script, strict=False)


@pytest.fixture(scope="module")
def app(completed_bank):
    question = completed_bank.by_id()["q_average"]
    gateway = scripted_gateway(question, [(AVERAGE_RESPONSE, [AVERAGE_CODE])])
    return create_app(completed_bank, gateway=gateway, rate_per_minute=1000)


@pytest.fixture(scope="module")
def client(app):
    with TestClient(app) as test_client:
        yield test_client


class TestHealth:
    def test_healthy_after_startup(self, client):
        reply = client.get("/healthz")
        assert reply.status_code == 200
        body = reply.json()
        assert body["status"] == "ok"
        assert body["gateway_mode"] == "mock"
        assert body["selftest"] == "passed"
        assert body["bank_version"] == "1"

    def test_503_before_startup(self, completed_bank):
        app = create_app(completed_bank, gateway=MockGateway(strict=False))
        unstarted = TestClient(app)  # no context manager: lifespan never runs
        assert unstarted.get("/healthz").status_code == 503

    def test_empty_bank_skips_selftest(self):
        app = create_app(QuestionBank(questions=[], version="empty"))
        with TestClient(app) as client:
            body = client.get("/healthz").json()
            assert body["selftest"] == "skipped"
            assert body["bank_version"] == "empty"


class TestQuestionList:
    def test_summaries(self, client, completed_bank):
        reply = client.get("/api/v1/questions")
        assert reply.status_code == 200
        items = reply.json()
        assert len(items) == len(completed_bank.questions)
        first = items[0]
        assert {"id", "title", "reference_source", "entry_point", "arity", "param_names"} <= set(first)

    def test_no_test_data_leaks(self, client):
        body = client.get("/api/v1/questions").text
        assert '"expected"' not in body
        assert '"tests"' not in body

    def test_empty_bank(self):
        app = create_app(QuestionBank(questions=[], version="empty"))
        with TestClient(app) as client:
            assert client.get("/api/v1/questions").json() == []


class TestGrade:
    def test_average_round_trip(self, client):
        reply = client.post(
            "/api/v1/grade",
            json={"question_id": "q_average", "response_text": AVERAGE_RESPONSE},
        )
        assert reply.status_code == 200
        body = reply.json()
        assert body["verdict"] == "correct"
        assert body["strategy"] == "single_zero_temp"
        assert body["samples"][0]["source"].startswith("def foo")
        statuses = [t["status"] for t in body["samples"][0]["tests"]]
        assert statuses == ["pass"] * len(statuses)

    def test_unknown_question_404(self, client):
        reply = client.post(
            "/api/v1/grade", json={"question_id": "nope", "response_text": "anything"}
        )
        assert reply.status_code == 404

    def test_empty_response_422(self, client):
        reply = client.post(
            "/api/v1/grade", json={"question_id": "q_average", "response_text": "  "}
        )
        assert reply.status_code == 422

    def test_oversized_response_422(self, client):
        reply = client.post(
            "/api/v1/grade",
            json={"question_id": "q_average", "response_text": "x" * 4001},
        )
        assert reply.status_code == 422

    def test_unknown_strategy_422(self, client):
        reply = client.post(
            "/api/v1/grade",
            json={
                "question_id": "q_average",
                "response_text": "avg",
                "strategy": "pass_at_100",
            },
        )
        assert reply.status_code == 422

    def test_unscripted_prompt_grades_incorrect(self, client):
        # Lenient mock falls back to a refusal -> extraction failure -> incorrect.
        reply = client.post(
            "/api/v1/grade",
            json={"question_id": "q_average", "response_text": "something new"},
        )
        assert reply.status_code == 200
        assert reply.json()["verdict"] == "incorrect"

    def test_no_expected_values_in_any_body(self, client):
        for payload in (
            {"question_id": "q_average", "response_text": AVERAGE_RESPONSE},
            {"question_id": "q_average", "response_text": "unscripted words"},
        ):
            reply = client.post("/api/v1/grade", json=payload)
            assert '"expected"' not in reply.text

    def test_rate_limit_429(self, completed_bank):
        question = completed_bank.by_id()["q_average"]
        gateway = scripted_gateway(question, [(AVERAGE_RESPONSE, [AVERAGE_CODE])])
        app = create_app(completed_bank, gateway=gateway, rate_per_minute=2)
        with TestClient(app) as client:
            codes = [
                client.post(
                    "/api/v1/grade",
                    json={"question_id": "q_average", "response_text": AVERAGE_RESPONSE},
                ).status_code
                for _ in range(3)
            ]
        assert codes[0] == 200
        assert codes[-1] == 429

    def test_gateway_failure_502(self, completed_bank):
        class Broken:
            def generate(self, prompt, config):
                raise GatewayError("provider down")

        app = create_app(completed_bank, gateway=Broken())
        with TestClient(app) as client:
            reply = client.post(
                "/api/v1/grade",
                json={"question_id": "q_average", "response_text": "avg"},
            )
        assert reply.status_code == 502

    def test_budget_exceeded_504(self, completed_bank):
        import time

        class Slow:
            def generate(self, prompt, config):
                time.sleep(1.0)
                raise GatewayError("never reached in time")

        app = create_app(completed_bank, gateway=Slow(), time_budget_s=0.2)
        with TestClient(app) as client:
            reply = client.post(
                "/api/v1/grade",
                json={"question_id": "q_average", "response_text": "avg"},
            )
        assert reply.status_code == 504
