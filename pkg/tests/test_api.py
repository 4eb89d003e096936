"""HTTP API: endpoint inventory, authorization, error mapping, peer sync."""

import base64
import json

import pytest
from fastapi.routing import APIRoute
from fastapi.testclient import TestClient as ApiClient

from medirelay.canonical import canon_dumps
from medirelay.errors import ConfigInvalid
from medirelay.http_api import create_app
from medirelay.model import pip_to_dict
from medirelay.service import load_config
from medirelay.store import Tier
from medirelay.workflow import TOKEN_LIFETIME

from conftest import build_record

MONDAY = "2024-01-08"
PEER_KEY = "peer-secret"
ADMIN_EMAIL = "admin@medirelay.local"
ADMIN_PASSWORD = "admin-pw"

# The stable surface the UI and the rural peer program against.
CORE_ROUTES = {
    ("POST", "/register/doctor"),
    ("POST", "/register/patient"),
    ("POST", "/activate"),
    ("POST", "/login"),
    ("POST", "/admin/doctors/{doctor_id}/decision"),
    ("GET", "/doctors/{doctor_id}/service"),
    ("PUT", "/doctors/{doctor_id}/service"),
    ("GET", "/doctors"),
    ("GET", "/doctors/{doctor_id}/slots"),
    ("POST", "/bookings"),
    ("GET", "/bookings"),
    ("POST", "/bookings/{booking_id}/status"),
    ("POST", "/bookings/{booking_id}/prescription"),
    ("GET", "/patients/{patient_id}/history/{category}"),
    ("POST", "/patients/{patient_id}/history/{category}"),
    ("POST", "/patients/{patient_id}/credit"),
    ("GET", "/records/patient/{patient_id}"),
    ("GET", "/records/problem/{problem_id}"),
    ("POST", "/sync/records"),
    ("GET", "/sync/folder/{patient_id}"),
    ("GET", "/healthz"),
}
CONVENIENCE_ROUTES = {
    ("POST", "/logout"),
    ("GET", "/admin/doctors/pending"),
    ("GET", "/bookings/{booking_id}/review"),
    ("GET", "/patients/{patient_id}/credit"),
    ("GET", "/notifications"),
    ("POST", "/records"),
}


@pytest.fixture
def api(core_factory):
    core = core_factory("center", peer_key=PEER_KEY, admin_password=ADMIN_PASSWORD)
    return ApiClient(create_app(core)), core


def auth(token):
    return {"Authorization": f"Bearer {token}"}


def login(client, email, password="pw"):
    resp = client.post("/login", json={"email": email, "password": password})
    assert resp.status_code == 200, resp.text
    return resp.json()["token"]


def make_patient(client, email, credit=0):
    reg = client.post("/register/patient", json={"email": email, "profile": {}})
    assert reg.status_code == 201, reg.text
    act = client.post(
        "/activate", json={"token": reg.json()["activation_token"], "password": "pw"}
    )
    assert act.status_code == 200, act.text
    account_id = act.json()["account_id"]
    token = login(client, email)
    if credit:
        resp = client.post(
            f"/patients/{account_id}/credit", json={"amount": credit}, headers=auth(token)
        )
        assert resp.status_code == 200, resp.text
    return account_id, token


def make_doctor(client, email, admin_token, specialty="Cardiology"):
    reg = client.post(
        "/register/doctor", json={"email": email, "profile": {"specialty": specialty}}
    )
    assert reg.status_code == 201, reg.text
    act = client.post(
        "/activate", json={"token": reg.json()["activation_token"], "password": "pw"}
    )
    assert act.status_code == 200 and act.json()["state"] == "AwaitingApproval"
    doctor_id = act.json()["account_id"]
    dec = client.post(
        f"/admin/doctors/{doctor_id}/decision",
        json={"decision": "Approve"},
        headers=auth(admin_token),
    )
    assert dec.status_code == 200, dec.text
    return doctor_id, login(client, email)


def open_service(client, doctor_id, doctor_token, cost=30):
    resp = client.put(
        f"/doctors/{doctor_id}/service",
        json={
            "enabled": True,
            "offerings": [
                {"weekday": 0, "slot_start": "10:00", "slot_length": 30, "cost": cost}
            ],
        },
        headers=auth(doctor_token),
    )
    assert resp.status_code == 200, resp.text


class TestInventory:
    def test_every_required_route_exists(self, api):
        client, _ = api
        actual = {
            (method, route.path)
            for route in client.app.routes
            if isinstance(route, APIRoute)
            for method in route.methods
        }
        missing = CORE_ROUTES - actual
        assert not missing, f"missing routes: {sorted(missing)}"
        assert actual == CORE_ROUTES | CONVENIENCE_ROUTES

    def test_healthz_is_anonymous(self, api):
        client, core = api
        resp = client.get("/healthz")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok"
        assert body["role"] == "Center"
        assert body["seq"] == core.seq


class TestFullFlow:
    def test_portal_round_trip(self, api, clock):
        client, core = api
        admin_token = login(client, ADMIN_EMAIL, ADMIN_PASSWORD)

        # Doctor registration sits in the admin queue until approved.
        reg = client.post(
            "/register/doctor",
            json={"email": "doc@clinic.example", "profile": {"specialty": "ENT"}},
        )
        act = client.post(
            "/activate", json={"token": reg.json()["activation_token"], "password": "pw"}
        )
        doctor_id = act.json()["account_id"]
        pending = client.get("/admin/doctors/pending", headers=auth(admin_token)).json()
        assert [a["account_id"] for a in pending["pending"]] == [doctor_id]
        with pytest.raises(Exception):
            login(client, "doc@clinic.example")  # not approved yet -> 403
        client.post(
            f"/admin/doctors/{doctor_id}/decision",
            json={"decision": "Approve"},
            headers=auth(admin_token),
        )
        doctor_token = login(client, "doc@clinic.example")

        open_service(client, doctor_id, doctor_token, cost=30)
        service = client.get(
            f"/doctors/{doctor_id}/service", headers=auth(doctor_token)
        ).json()
        assert service["enabled"] is True
        assert service["offerings"][0]["slot_start"] == "10:00"

        patient_id, patient_token = make_patient(client, "pat@mail.example", credit=100)

        found = client.get("/doctors", params={"query": "ent"}).json()["doctors"]
        assert [d["account_id"] for d in found] == [doctor_id]

        slots = client.get(
            f"/doctors/{doctor_id}/slots",
            params={"from": MONDAY, "to": MONDAY},
            headers=auth(patient_token),
        ).json()["slots"]
        assert slots == [
            {"date": MONDAY, "slot_start": "10:00", "slot_length": 30, "cost": 30}
        ]

        booked = client.post(
            "/bookings",
            json={"doctor_id": doctor_id, "date": MONDAY, "slot_start": "10:00"},
            headers=auth(patient_token),
        )
        assert booked.status_code == 201
        booking_id = booked.json()["booking_id"]
        assert booked.json()["status"] == "Requested"

        # Both sides see the booking; the slot has closed.
        mine = client.get("/bookings", headers=auth(patient_token)).json()["bookings"]
        theirs = client.get("/bookings", headers=auth(doctor_token)).json()["bookings"]
        assert [b["booking_id"] for b in mine] == [booking_id]
        assert [b["booking_id"] for b in theirs] == [booking_id]
        assert (
            client.get(
                f"/doctors/{doctor_id}/slots",
                params={"from": MONDAY, "to": MONDAY},
                headers=auth(patient_token),
            ).json()["slots"]
            == []
        )

        review = client.get(
            f"/bookings/{booking_id}/review", headers=auth(doctor_token)
        )
        assert review.status_code == 200
        assert review.json()["slot"]["date"] == MONDAY

        accepted = client.post(
            f"/bookings/{booking_id}/status",
            json={"status": "Accepted"},
            headers=auth(doctor_token),
        )
        assert accepted.status_code == 200 and accepted.json()["status"] == "Accepted"

        prescribed = client.post(
            f"/bookings/{booking_id}/prescription",
            json={
                "prescription": "amoxicillin 500mg",
                "required_radiographs": ["chest x-ray"],
                "required_tests": ["CBC"],
            },
            headers=auth(doctor_token),
        )
        assert prescribed.status_code == 200

        seen = client.get("/bookings", headers=auth(patient_token)).json()["bookings"][0]
        assert seen["prescription"] == "amoxicillin 500mg"
        assert seen["required_radiographs"] == ["chest x-ray"]
        assert seen["required_tests"] == ["CBC"]

        credit = client.get(
            f"/patients/{patient_id}/credit", headers=auth(patient_token)
        ).json()
        assert credit["balance"] == 70
        reasons = [p["reason"] for p in credit["postings"]]
        assert reasons == ["topup", "booking"]

        # History: patient writes, booked doctor reads.
        assert (
            client.post(
                f"/patients/{patient_id}/history/Sensitivities",
                json={"entry": "penicillin"},
                headers=auth(patient_token),
            ).status_code
            == 201
        )
        assert (
            client.post(
                f"/patients/{patient_id}/history/basic_info",
                json={"fields": {"blood_type": "A+"}},
                headers=auth(patient_token),
            ).status_code
            == 201
        )
        entries = client.get(
            f"/patients/{patient_id}/history/sensitivities",  # case-insensitive
            headers=auth(doctor_token),
        ).json()["entries"]
        assert [e["entry"] for e in entries] == ["penicillin"]
        basic = client.get(
            f"/patients/{patient_id}/history/basic_info", headers=auth(doctor_token)
        ).json()["basic_info"]
        assert basic == {"blood_type": "A+"}

        notes = client.get("/notifications", headers=auth(doctor_token)).json()
        kinds = [n["kind"] for n in notes["notifications"]]
        assert "BookingRequested" in kinds and "AccountApproved" in kinds

    def test_records_flow(self, api):
        client, core = api
        admin_token = login(client, ADMIN_EMAIL, ADMIN_PASSWORD)
        doctor_id, doctor_token = make_doctor(client, "doc@clinic.example", admin_token)
        patient_id, patient_token = make_patient(client, "pat@mail.example", credit=100)
        open_service(client, doctor_id, doctor_token)
        client.post(
            "/bookings",
            json={"doctor_id": doctor_id, "date": MONDAY, "slot_start": "10:00"},
            headers=auth(patient_token),
        )

        pip, blobs = build_record(
            patient_id, "PRB-1", 1704067300, doctor_id=doctor_id, with_image=True
        )
        posted = client.post(
            "/records",
            json={
                "pip": pip_to_dict(pip),
                "blobs": {k: base64.b64encode(v).decode() for k, v in blobs.items()},
            },
            headers=auth(doctor_token),
        )
        assert posted.status_code == 201, posted.text
        assert posted.json()["record_id"] == pip.record_id
        assert core.store.contains(pip.record_id)
        assert core.store.lookup(pip.record_id)[0] is Tier.MAIN

        by_patient = client.get(
            f"/records/patient/{patient_id}", headers=auth(patient_token)
        ).json()["records"]
        assert [r["record_id"] for r in by_patient] == [pip.record_id]

        by_problem = client.get(
            "/records/problem/PRB-1", headers=auth(doctor_token)
        ).json()["records"]
        assert [r["record_id"] for r in by_problem] == [pip.record_id]

    def test_activation_salts_are_unique_per_account(self, api):
        client, core = api
        a, _ = make_patient(client, "a@mail.example")
        b, _ = make_patient(client, "b@mail.example")
        acc_a, acc_b = core.portal.accounts[a], core.portal.accounts[b]
        assert acc_a.pw_salt and acc_b.pw_salt
        assert acc_a.pw_salt != acc_b.pw_salt
        assert acc_a.pw_hash != acc_b.pw_hash  # same password, different salt


class TestAuthorization:
    SESSION_ENDPOINTS = [
        ("GET", "/admin/doctors/pending", None),
        ("POST", "/admin/doctors/X/decision", {"decision": "Approve"}),
        ("GET", "/doctors/X/service", None),
        ("PUT", "/doctors/X/service", {"enabled": True, "offerings": []}),
        ("GET", "/doctors/X/slots?from=2024-01-01&to=2024-01-02", None),
        ("POST", "/bookings", {"doctor_id": "X", "date": MONDAY, "slot_start": "10:00"}),
        ("GET", "/bookings", None),
        ("POST", "/bookings/X/status", {"status": "Accepted"}),
        ("POST", "/bookings/X/prescription", {"prescription": "x"}),
        ("GET", "/bookings/X/review", None),
        ("GET", "/patients/X/history/Diseases", None),
        ("POST", "/patients/X/history/Diseases", {"entry": "x"}),
        ("GET", "/patients/X/credit", None),
        ("POST", "/patients/X/credit", {"amount": 5}),
        ("GET", "/notifications", None),
        ("GET", "/records/patient/X", None),
        ("GET", "/records/problem/X", None),
        ("POST", "/records", {"pip": {}}),
    ]

    def test_session_endpoints_reject_anonymous_and_garbage_tokens(self, api):
        client, _ = api
        for method, path, body in self.SESSION_ENDPOINTS:
            for headers in ({}, auth("bogus-token")):
                resp = client.request(method, path, json=body, headers=headers)
                assert resp.status_code == 401, (method, path, resp.status_code)
                assert resp.json()["error"]["type"] == "SessionInvalid"

    def test_anonymous_surface_is_exactly_the_public_flows(self, api):
        client, _ = api
        assert client.get("/healthz").status_code == 200
        assert client.get("/doctors").status_code == 200
        assert (
            client.post("/register/patient", json={"email": "p@m.example"}).status_code
            == 201
        )
        # Bad inputs on public endpoints fail on their own terms, not on auth.
        assert client.post("/activate", json={"token": "nope", "password": "x"}).status_code == 404
        assert client.post("/login", json={"email": "p@m.example", "password": "x"}).status_code == 401
        assert client.post("/logout").status_code == 200

    def test_role_walls_hold(self, api):
        client, _ = api
        admin_token = login(client, ADMIN_EMAIL, ADMIN_PASSWORD)
        doctor_id, doctor_token = make_doctor(client, "doc@clinic.example", admin_token)
        patient_id, patient_token = make_patient(client, "pat@mail.example", credit=100)
        other_id, other_token = make_patient(client, "other@mail.example", credit=100)

        # Patients cannot act as admin, doctor, or another patient.
        assert (
            client.post(
                f"/admin/doctors/{doctor_id}/decision",
                json={"decision": "Approve"},
                headers=auth(patient_token),
            ).status_code
            == 403
        )
        assert (
            client.get("/admin/doctors/pending", headers=auth(patient_token)).status_code
            == 403
        )
        assert (
            client.put(
                f"/doctors/{doctor_id}/service",
                json={"enabled": True, "offerings": []},
                headers=auth(patient_token),
            ).status_code
            == 403
        )
        assert (
            client.post(
                f"/patients/{patient_id}/credit",
                json={"amount": 5},
                headers=auth(other_token),
            ).status_code
            == 403
        )
        assert (
            client.post(
                f"/patients/{patient_id}/history/Diseases",
                json={"entry": "x"},
                headers=auth(other_token),
            ).status_code
            == 403
        )
        assert (
            client.get(
                f"/patients/{patient_id}/credit", headers=auth(other_token)
            ).status_code
            == 403
        )
        assert (
            client.get(
                f"/records/patient/{patient_id}", headers=auth(other_token)
            ).status_code
            == 403
        )
        assert (
            client.get("/records/problem/PRB-1", headers=auth(patient_token)).status_code
            == 403
        )
        # Doctors cannot book; only patients can.
        assert (
            client.post(
                "/bookings",
                json={"doctor_id": doctor_id, "date": MONDAY, "slot_start": "10:00"},
                headers=auth(doctor_token),
            ).status_code
            == 403
        )

    def test_doctor_standing_is_gained_and_lost_with_the_booking(self, api):
        client, _ = api
        admin_token = login(client, ADMIN_EMAIL, ADMIN_PASSWORD)
        doctor_id, doctor_token = make_doctor(client, "doc@clinic.example", admin_token)
        patient_id, patient_token = make_patient(client, "pat@mail.example", credit=100)
        open_service(client, doctor_id, doctor_token)

        history_url = f"/patients/{patient_id}/history/Diseases"
        assert client.get(history_url, headers=auth(doctor_token)).status_code == 403

        booking_id = client.post(
            "/bookings",
            json={"doctor_id": doctor_id, "date": MONDAY, "slot_start": "10:00"},
            headers=auth(patient_token),
        ).json()["booking_id"]
        assert client.get(history_url, headers=auth(doctor_token)).status_code == 200

        client.post(
            f"/bookings/{booking_id}/status",
            json={"status": "Rejected"},
            headers=auth(doctor_token),
        )
        assert client.get(history_url, headers=auth(doctor_token)).status_code == 403

    def test_doctor_cannot_write_records_for_another_doctor(self, api):
        client, _ = api
        admin_token = login(client, ADMIN_EMAIL, ADMIN_PASSWORD)
        doctor_id, doctor_token = make_doctor(client, "doc@clinic.example", admin_token)
        pip, _ = build_record("P-X", "PRB-1", 1704067300, doctor_id="someone-else")
        resp = client.post(
            "/records", json={"pip": pip_to_dict(pip)}, headers=auth(doctor_token)
        )
        assert resp.status_code == 403

    def test_session_lifecycle(self, api, clock):
        client, core = api
        patient_id, token = make_patient(client, "pat@mail.example")
        assert client.get("/bookings", headers=auth(token)).status_code == 200
        client.post("/logout", headers=auth(token))
        assert client.get("/bookings", headers=auth(token)).status_code == 401

        token = login(client, "pat@mail.example")
        clock.tick(core.config.session_ttl + 1)
        assert client.get("/bookings", headers=auth(token)).status_code == 401


class TestErrorMapping:
    def test_error_body_shape_and_canonical_encoding(self, api):
        client, _ = api
        resp = client.post("/register/patient", json={"email": "not-an-email"})
        assert resp.status_code == 400
        body = resp.json()
        assert body["error"]["type"] == "InvalidEmail"
        assert "not-an-email" in body["error"]["message"]
        assert resp.content == canon_dumps(body)

    def test_conflict_statuses(self, api):
        client, _ = api
        client.post("/register/patient", json={"email": "p@m.example"})
        dup = client.post("/register/doctor", json={"email": "p@m.example"})
        assert dup.status_code == 409
        assert dup.json()["error"]["type"] == "EmailTaken"

        reg = client.post("/register/patient", json={"email": "q@m.example"})
        token = reg.json()["activation_token"]
        assert client.post("/activate", json={"token": token, "password": "pw"}).status_code == 200
        again = client.post("/activate", json={"token": token, "password": "pw"})
        assert again.status_code == 409 and again.json()["error"]["type"] == "TokenUsed"

    def test_expired_token_maps_to_410(self, api, clock):
        client, _ = api
        reg = client.post("/register/patient", json={"email": "p@m.example"})
        clock.tick(TOKEN_LIFETIME + 1)
        resp = client.post(
            "/activate", json={"token": reg.json()["activation_token"], "password": "pw"}
        )
        assert resp.status_code == 410
        assert resp.json()["error"]["type"] == "TokenExpired"

    def test_insufficient_credit_maps_to_402(self, api):
        client, _ = api
        admin_token = login(client, ADMIN_EMAIL, ADMIN_PASSWORD)
        doctor_id, doctor_token = make_doctor(client, "doc@clinic.example", admin_token)
        _, patient_token = make_patient(client, "pat@mail.example", credit=10)
        open_service(client, doctor_id, doctor_token, cost=30)
        resp = client.post(
            "/bookings",
            json={"doctor_id": doctor_id, "date": MONDAY, "slot_start": "10:00"},
            headers=auth(patient_token),
        )
        assert resp.status_code == 402
        assert resp.json()["error"]["type"] == "InsufficientCredit"

    def test_slot_conflict_maps_to_409(self, api):
        client, _ = api
        admin_token = login(client, ADMIN_EMAIL, ADMIN_PASSWORD)
        doctor_id, doctor_token = make_doctor(client, "doc@clinic.example", admin_token)
        _, p1 = make_patient(client, "p1@mail.example", credit=100)
        _, p2 = make_patient(client, "p2@mail.example", credit=100)
        open_service(client, doctor_id, doctor_token)
        body = {"doctor_id": doctor_id, "date": MONDAY, "slot_start": "10:00"}
        assert client.post("/bookings", json=body, headers=auth(p1)).status_code == 201
        clash = client.post("/bookings", json=body, headers=auth(p2))
        assert clash.status_code == 409
        assert clash.json()["error"]["type"] == "SlotTaken"

    def test_not_found_and_missing_fields(self, api):
        client, _ = api
        _, token = make_patient(client, "p@m.example")
        missing = client.post("/bookings", json={"doctor_id": "X"}, headers=auth(token))
        assert missing.status_code == 400
        assert "missing field" in missing.json()["error"]["message"]

        resp = client.post(
            "/bookings/NOPE/status", json={"status": "Accepted"}, headers=auth(token)
        )
        assert resp.status_code == 404

        garbage = client.post(
            "/register/patient",
            content=b"this is not json",
            headers={"Content-Type": "application/json"},
        )
        assert garbage.status_code == 400

    def test_incomplete_record_document_maps_to_400(self, api):
        client, _ = api
        admin_token = login(client, ADMIN_EMAIL, ADMIN_PASSWORD)
        doctor_id, doctor_token = make_doctor(client, "d@clinic.example", admin_token)
        resp = client.post(
            "/records",
            json={"pip": {"record_id": "nope", "doctor_id": doctor_id}, "blobs": {}},
            headers=auth(doctor_token),
        )
        assert resp.status_code == 400, resp.text
        body = resp.json()["error"]
        assert body["type"] == "RecordInvalid"
        assert "missing field" in body["message"]


class TestPeerSync:
    def test_peer_endpoints_require_the_shared_key(self, api):
        client, _ = api
        for headers in ({}, {"X-Peer-Key": "wrong"}):
            assert client.get("/sync/folder/P-1", headers=headers).status_code == 401
            assert (
                client.post("/sync/records", json={"record": {}}, headers=headers).status_code
                == 401
            )

    def test_unconfigured_peer_key_refuses_everything(self, core_factory):
        core = core_factory("lonely")  # peer_key defaults to ""
        client = ApiClient(create_app(core))
        assert client.get("/sync/folder/P-1", headers={"X-Peer-Key": ""}).status_code == 401

    def test_sync_apply_is_idempotent_over_http(self, api):
        from medirelay.store import StoredRecord, record_to_dict

        client, core = api
        pip, blobs = build_record("P-9", "PRB-9", 1704067300, with_image=True)
        record = record_to_dict(StoredRecord(pip=pip, blobs=blobs, ingested_at=1704067300))
        headers = {"X-Peer-Key": PEER_KEY}

        first = client.post("/sync/records", json={"record": record}, headers=headers)
        assert first.status_code == 200 and first.json()["outcome"] == "applied"
        second = client.post("/sync/records", json={"record": record}, headers=headers)
        assert second.status_code == 200 and second.json()["outcome"] == "duplicate"
        assert core.store.tier_counts()[Tier.MAIN] == 1

        folder = client.get("/sync/folder/P-9", headers=headers).json()["records"]
        assert [r["pip"]["record_id"] for r in folder] == [pip.record_id]
        # Round-trip: the folder payload reconstructs the identical record.
        from medirelay.store import record_from_dict

        back = record_from_dict(folder[0])
        assert back.pip == pip and back.blobs == blobs


class TestConfig:
    def test_file_plus_overrides(self, tmp_path, monkeypatch):
        cfg = tmp_path / "svc.json"
        cfg.write_text(json.dumps({"data_dir": str(tmp_path / "d"), "port": 9000}))
        config = load_config(str(cfg), overrides={"port": 9100, "role": "Center"})
        assert config.port == 9100
        assert config.data_dir == str(tmp_path / "d")

        monkeypatch.setenv("MEDIRELAY_CONFIG", str(cfg))
        config = load_config()
        assert config.port == 9000

    def test_unknown_keys_rejected(self, tmp_path):
        cfg = tmp_path / "svc.json"
        cfg.write_text(json.dumps({"data_dir": "d", "frobnicate": 1}))
        with pytest.raises(ConfigInvalid) as err:
            load_config(str(cfg))
        assert "frobnicate" in str(err.value)

    def test_data_dir_required(self):
        with pytest.raises(ConfigInvalid):
            load_config(None, overrides={"port": 9000})

    def test_validation_rules(self, tmp_path):
        base = {"data_dir": str(tmp_path / "d")}
        with pytest.raises(ConfigInvalid):
            load_config(None, overrides={**base, "role": "Satellite"})
        with pytest.raises(ConfigInvalid):
            load_config(None, overrides={**base, "role": "Rural"})  # no peer_url
        with pytest.raises(ConfigInvalid):
            load_config(None, overrides={**base, "port": 70000})
        with pytest.raises(ConfigInvalid):
            load_config(None, overrides={**base, "tick_every": 0})

    def test_missing_file_is_an_error(self):
        with pytest.raises(ConfigInvalid):
            load_config("/nonexistent/config.json")


class TestStaticAssets:
    """A built web client can be mounted under /app without touching the API."""

    def test_static_dir_serves_the_client(self, tmp_path, core_factory, clock):
        webroot = tmp_path / "webroot"
        webroot.mkdir()
        (webroot / "index.html").write_text("<!doctype html><title>medirelay</title>")
        (webroot / "app.js").write_text("export const ok = true;\n")
        core = core_factory("static-site", static_dir=str(webroot))
        client = ApiClient(create_app(core))

        page = client.get("/app/")
        assert page.status_code == 200
        assert "medirelay" in page.text
        asset = client.get("/app/app.js")
        assert asset.status_code == 200
        assert asset.text.startswith("export const ok")
        # The API surface itself is untouched by the mount.
        assert client.get("/healthz").status_code == 200

    def test_without_static_dir_app_is_absent(self, api):
        client, _ = api
        assert client.get("/app/").status_code == 404

    def test_static_dir_must_exist(self, tmp_path):
        with pytest.raises(ConfigInvalid):
            load_config(None, overrides={
                "data_dir": str(tmp_path / "d"),
                "static_dir": str(tmp_path / "missing"),
            })
