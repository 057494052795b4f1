import math
import random

import pytest
from fastapi.testclient import TestClient

from petalrisk.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def male_payload(**overrides):
    payload = dict(sex="male", age=61, smoking=True, sbp=150, total_chol=6.0, hdl_chol=1.5)
    payload.update(overrides)
    return payload


def female_payload(**overrides):
    payload = dict(sex="female", age=55, smoking=False, sbp=128, total_chol=5.2, hdl_chol=1.2)
    payload.update(overrides)
    return payload


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_models_reports_provenance(client):
    body = client.get("/models").json()
    assert body["bundle"]["provenance"]
    assert "moderate" in body["bundle"]["regions"]
    assert body["surrogates"]["male"]["provenance"] == "transcribed"
    assert body["quantized"]["female"]["total_lobes"] == 11
    assert body["defaults"]["kappa"] == 0.5


def test_risk_valid_female(client):
    response = client.post("/risk", json=female_payload())
    assert response.status_code == 200
    body = response.json()
    assert 0.0 < body["risk_score2"] < 1.0
    assert 0.0 < body["risk_surrogate"] < 1.0
    assert body["color_class"] in ("green", "orange", "red")
    assert body["display"]["risk_score2"].endswith("%")


def test_risk_missing_field_is_400_naming_field(client):
    payload = male_payload()
    del payload["sbp"]
    response = client.post("/risk", json=payload)
    assert response.status_code == 400
    error = response.json()["error"]
    assert error["code"] == "malformed_payload"
    assert error["field"] == "sbp"


def test_risk_out_of_range_is_422(client):
    response = client.post("/risk", json=male_payload(sbp=190))
    assert response.status_code == 422
    error = response.json()["error"]
    assert error["code"] == "out_of_range"
    assert error["field"] == "sbp"


def test_risk_clamp_flag_accepts_and_reports(client):
    response = client.post("/risk", json=male_payload(sbp=190, clamp=True))
    assert response.status_code == 200
    assert response.json()["clamped_fields"] == ["sbp"]


def test_risk_bad_region_is_400(client):
    response = client.post("/risk", json=male_payload(region="mars"))
    assert response.status_code == 400


def test_explain_male_lobes(client):
    body = client.post("/explain", json=male_payload()).json()
    petals = body["flower"]["petals"]
    assert [p["eta"] for p in petals] == [4, 3, 2, 1]
    assert body["flower"]["total_lobes"] == 10
    assert [p["factor_id"] for p in petals] == ["age", "sbp", "smoking", "nonhdl"]


def test_explain_female_has_eleven_lobes(client):
    body = client.post("/explain", json=female_payload()).json()
    assert body["flower"]["total_lobes"] == 11
    assert sum(p["eta"] for p in body["flower"]["petals"]) == 11


def test_explain_contributions_sum_exactly(client):
    body = client.post("/explain", json=male_payload()).json()
    assert sum(body["contributions"].values()) == body["risk_surrogate"]


def test_explain_flower_angles_sum_to_full_circle(client):
    body = client.post("/explain", json=female_payload()).json()
    total = sum(p["gamma"] for p in body["flower"]["petals"])
    assert total == pytest.approx(2.0 * math.pi, abs=1e-12)


def test_explain_svg_only_on_request(client):
    assert client.post("/explain", json=male_payload()).json()["svg"] is None
    body = client.post("/explain", json=male_payload(include_svg=True)).json()
    assert body["svg"].startswith("<?xml")
    assert 'id="petal-age"' in body["svg"]


def test_explain_outline_only_on_request(client):
    bare = client.post("/explain", json=male_payload()).json()
    assert "outline" not in bare["flower"]["petals"][0]
    rich = client.post("/explain", json=male_payload(include_outline=True)).json()
    assert len(rich["flower"]["petals"][0]["outline"]) > 10


def test_whatif_smoker_gets_positive_stop_smoking_delta(client):
    body = client.post("/whatif", json=male_payload()).json()
    kinds = [s["kind"] for s in body["scenarios"]]
    assert kinds == ["sbp_to_130", "stop_smoking", "nonhdl_to_3_4"]
    stop = body["scenarios"][1]
    assert stop["delta"]["surrogate"] > 0.0
    assert stop["delta"]["score2"] > 0.0


def test_whatif_no_rules_fire(client):
    payload = female_payload(sbp=110, total_chol=4.0, hdl_chol=0.8)  # non-HDL 3.2
    response = client.post("/whatif", json=payload)
    assert response.status_code == 200
    assert response.json()["scenarios"] == []


def test_whatif_before_matches_explain(client):
    explain = client.post("/explain", json=male_payload()).json()
    whatif = client.post("/whatif", json=male_payload()).json()
    for scenario in whatif["scenarios"]:
        assert scenario["before"]["surrogate"] == explain["risk_surrogate"]
        assert scenario["before"]["score2"] == explain["risk_score2"]


def test_whatif_flower_changes_only_target_petal(client):
    explain = client.post("/explain", json=male_payload()).json()
    whatif = client.post("/whatif", json=male_payload()).json()
    baseline = {p["factor_id"]: p for p in explain["flower"]["petals"]}
    stop = next(s for s in whatif["scenarios"] if s["kind"] == "stop_smoking")
    after = {p["factor_id"]: p for p in stop["flower_after"]["petals"]}
    for factor in ("age", "sbp", "nonhdl"):
        assert after[factor] == baseline[factor]
    assert after["smoking"]["length"] == 0.0
    assert baseline["smoking"]["length"] == 1.0
    assert after["smoking"]["eta"] == baseline["smoking"]["eta"]


def test_statelessness_under_request_reordering(client):
    payloads = [male_payload(), female_payload(), male_payload(age=52), female_payload(sbp=170)]
    first = [client.post("/explain", json=p).json() for p in payloads]
    shuffled = list(enumerate(payloads))
    random.Random(5).shuffle(shuffled)
    for index, payload in shuffled:
        assert client.post("/explain", json=payload).json() == first[index]


def test_response_schema_stability(client):
    body = client.post("/explain", json=male_payload()).json()
    assert set(body) == {
        "risk_score2",
        "risk_surrogate",
        "contributions",
        "flower",
        "svg",
        "color_class",
        "display",
        "clamped_fields",
    }
    assert set(body["contributions"]) == {"age", "sbp", "smoking", "nonhdl"}
    assert set(body["flower"]) == {"total_lobes", "kappa", "start_offset", "petals"}
    assert set(body["flower"]["petals"][0]) == {
        "factor_id",
        "eta",
        "gamma",
        "start_angle",
        "length",
    }
    risk = client.post("/risk", json=male_payload()).json()
    assert set(risk) == {
        "risk_score2",
        "risk_surrogate",
        "color_class",
        "display",
        "clamped_fields",
    }
    whatif = client.post("/whatif", json=male_payload()).json()
    assert set(whatif) == {"scenarios"}
    assert set(whatif["scenarios"][0]) == {
        "kind",
        "description",
        "before",
        "after",
        "delta",
        "display",
        "flower_after",
    }
