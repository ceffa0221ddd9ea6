import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from fairbargain.service import ServiceConfig, SessionStore, create_app


@pytest.fixture
def client(tmp_path):
    app = create_app(ServiceConfig(data_dir=tmp_path / "sessions"))
    return TestClient(app)


def create(client, scenario="used_car", human_role="buyer"):
    response = client.post(
        "/v1/sessions", json={"scenario": scenario, "human_role": human_role}
    )
    return response


class TestCreateSession:
    def test_opening_message_contains_anchor(self, client):
        response = create(client)
        assert response.status_code == 201
        body = response.json()
        assert body["status"] == "active"
        assert len(body["messages"]) == 1
        opening = body["messages"][0]
        assert opening["role"] == "seller"
        assert "$14,750" in opening["text"]
        assert opening["act"]["kind"] == "counteroffer"
        assert opening["act"]["price_cents"] == 1475000

    def test_unknown_scenario_404(self, client):
        response = create(client, scenario="nope")
        assert response.status_code == 404
        assert response.json()["code"] == "unknown_scenario"

    def test_distinct_ids(self, client):
        a = create(client).json()["session_id"]
        b = create(client).json()["session_id"]
        assert a != b

    def test_human_reservation_disclosed(self, client):
        body = create(client, human_role="buyer").json()
        assert body["your_reservation_cents"] == 1350000


class TestMessages:
    def test_counteroffer_gets_agent_reply(self, client):
        sid = create(client).json()["session_id"]
        response = client.post(
            f"/v1/sessions/{sid}/messages", json={"text": "Would $12,000 work?"}
        )
        assert response.status_code == 200
        body = response.json()
        assert len(body["messages"]) == 2
        human, agent = body["messages"]
        assert human["act"]["kind"] == "counteroffer"
        assert human["act"]["price_cents"] == 1200000
        assert agent["role"] == "seller"
        assert body["status"] == "active"

    def test_full_negotiation_reaches_fair_deal(self, client):
        sid = create(client).json()["session_id"]
        offers = ["$12,000", "$12,400", "$12,700", "$12,900", "I accept!"]
        status = "active"
        for text in offers:
            response = client.post(f"/v1/sessions/{sid}/messages", json={"text": text})
            body = response.json()
            status = body["status"]
            if status != "active":
                break
        assert status == "deal"
        assert body["deal_price_cents"] == 1300000

    def test_agent_accepts_fair_offer(self, client):
        sid = create(client).json()["session_id"]
        response = client.post(
            f"/v1/sessions/{sid}/messages", json={"text": "How about $13,000?"}
        )
        body = response.json()
        assert body["status"] == "deal"
        assert body["deal_price_cents"] == 1300000
        agent_reply = body["messages"][1]
        assert agent_reply["act"]["kind"] == "accept"

    def test_empty_text_restates_standing_offer(self, client):
        sid = create(client).json()["session_id"]
        response = client.post(f"/v1/sessions/{sid}/messages", json={"text": ""})
        body = response.json()
        human, agent = body["messages"]
        assert human["act"]["kind"] == "no_counteroffer"
        assert agent["act"]["kind"] == "counteroffer"

    def test_terminal_session_rejects_messages(self, client):
        sid = create(client).json()["session_id"]
        client.post(f"/v1/sessions/{sid}/messages", json={"text": "$13,000"})
        response = client.post(f"/v1/sessions/{sid}/messages", json={"text": "hello?"})
        assert response.status_code == 409
        assert response.json()["code"] == "terminal_session"

    def test_unknown_session_404(self, client):
        response = client.post("/v1/sessions/zzz/messages", json={"text": "hi"})
        assert response.status_code == 404


class TestTranscript:
    def test_roundtrip_and_replay(self, client, tmp_path):
        sid = create(client).json()["session_id"]
        client.post(f"/v1/sessions/{sid}/messages", json={"text": "$12,500 maybe"})
        client.post(f"/v1/sessions/{sid}/messages", json={"text": "ok $13,000"})
        record = client.get(f"/v1/sessions/{sid}").json()
        assert record["status"] == "deal"
        roles = [m["role"] for m in record["messages"]]
        assert all(a != b for a, b in zip(roles, roles[1:]))

        # replaying the stored acts through a fresh app yields the same record
        app2 = create_app(ServiceConfig(data_dir=tmp_path / "sessions"))
        client2 = TestClient(app2)
        replayed = client2.get(f"/v1/sessions/{sid}").json()
        assert replayed == record

    def test_unknown_transcript(self, client):
        assert client.get("/v1/sessions/nope").status_code == 404


class TestSurvey:
    def finish(self, client):
        sid = create(client).json()["session_id"]
        client.post(f"/v1/sessions/{sid}/messages", json={"text": "$13,000"})
        return sid

    def test_survey_stored_verbatim(self, client):
        sid = self.finish(client)
        response = client.post(
            f"/v1/sessions/{sid}/survey",
            json={"quality": 5, "human_like": 4, "comments": "great"},
        )
        assert response.status_code == 200
        assert response.json()["survey"] == {
            "quality": 5,
            "human_like": 4,
            "comments": "great",
        }

    def test_active_session_rejected(self, client):
        sid = create(client).json()["session_id"]
        response = client.post(
            f"/v1/sessions/{sid}/survey", json={"quality": 5, "human_like": 5}
        )
        assert response.status_code == 409

    def test_out_of_range_rating(self, client):
        sid = self.finish(client)
        response = client.post(
            f"/v1/sessions/{sid}/survey", json={"quality": 6, "human_like": 3}
        )
        assert response.status_code == 422

    def test_second_survey_rejected(self, client):
        sid = self.finish(client)
        client.post(f"/v1/sessions/{sid}/survey", json={"quality": 5, "human_like": 5})
        response = client.post(
            f"/v1/sessions/{sid}/survey", json={"quality": 1, "human_like": 1}
        )
        assert response.status_code == 409


class TestMisc:
    def test_scenarios_listing(self, client):
        body = client.get("/v1/scenarios").json()
        names = [s["name"] for s in body["scenarios"]]
        assert "used_car" in names
        listed = body["scenarios"][names.index("used_car")]
        assert listed["initial_price_range_cents"] == [1125000, 1475000]
        assert "price_floor" not in listed  # reservations stay private

    def test_abandon(self, client):
        sid = create(client).json()["session_id"]
        response = client.post(f"/v1/sessions/{sid}/abandon")
        assert response.json()["status"] == "abandoned"
        again = client.post(f"/v1/sessions/{sid}/abandon")
        assert again.status_code == 409

    def test_agent_safety_through_service(self, client):
        # grind the agent down; its counters never cross its reservation
        sid = create(client).json()["session_id"]
        for text in ["$11,500", "$11,700", "$11,900", "$12,050", "$12,100",
                     "$12,200", "$12,300", "$12,350", "$12,400", "$12,450"]:
            response = client.post(f"/v1/sessions/{sid}/messages", json={"text": text})
            body = response.json()
            if body["status"] != "active":
                break
            agent_msg = body["messages"][-1]
            if agent_msg["act"]["kind"] == "counteroffer":
                assert agent_msg["act"]["price_cents"] >= 1250000

    def test_store_files_are_jsonl(self, client, tmp_path):
        sid = create(client).json()["session_id"]
        path = tmp_path / "sessions" / f"{sid}.jsonl"
        assert path.exists()
        for line in path.read_text().splitlines():
            json.loads(line)
