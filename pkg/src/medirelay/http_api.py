"""HTTP surface of the service.

Resource-oriented endpoints over the application core. All request and
response bodies use the same canonical JSON the event log uses; errors come
back as {"error": {"type", "message"}} with a status mapped from the domain
exception. Mutations go through core.submit, reads straight at state.

Session auth is a bearer token from POST /login. The /sync/* endpoints are
for the rural peer only and authenticate with the shared X-Peer-Key header;
anonymous access is limited to registration, activation, login, doctor
search, and /healthz.
"""

from __future__ import annotations

import hmac
import secrets

from fastapi import Body, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import errors as E
from .canonical import canon_dumps
from .model import pip_to_dict
from .service import (
    ApplicationCore,
    account_to_dict,
    booking_to_dict,
    settings_to_dict,
)
from .store import record_to_dict
from .workflow import HISTORY_CATEGORIES, Role, hash_password

_STATUS_MAP = [
    (E.SessionInvalid, 401),
    (E.BadCredentials, 401),
    (E.InsufficientCredit, 402),
    (E.NotAdmin, 403),
    (E.NotYourBooking, 403),
    (E.NotActive, 403),
    (E.TokenInvalid, 404),
    (E.NotFound, 404),
    (E.TokenExpired, 410),
    (E.TokenUsed, 409),
    (E.EmailTaken, 409),
    (E.SlotTaken, 409),
    (E.ServiceDisabled, 409),
    (E.WrongState, 409),
    (E.WrongStatus, 409),
    (E.IllegalTransition, 409),
    (E.OverlappingOfferings, 409),
    (E.OverlappingVolume, 409),
    (E.TierSealed, 409),
    (E.CorruptPayload, 500),
    (E.DataDirLocked, 503),
    (E.ServiceUnavailable, 503),
    (E.RecordInvalid, 400),
    (E.ChecksumMismatch, 400),
    (E.MissingBlob, 400),
    (E.InvalidEmail, 400),
    (E.UnknownCategory, 400),
    (E.NonPositiveAmount, 400),
    (E.MalformedScenario, 400),
    (E.MedirelayError, 400),
]


class CanonicalJSONResponse(JSONResponse):
    media_type = "application/json"

    def render(self, content) -> bytes:
        return canon_dumps(content)


def _error_response(exc: Exception, status: int) -> CanonicalJSONResponse:
    return CanonicalJSONResponse(
        {"error": {"type": type(exc).__name__, "message": str(exc)}},
        status_code=status,
    )


def _need(body: dict, key: str):
    if not isinstance(body, dict) or key not in body:
        raise ValueError(f"missing field {key!r}")
    return body[key]


_CATEGORY_BY_LOWER = {c.lower(): c for c in HISTORY_CATEGORIES}


def create_app(core: ApplicationCore) -> FastAPI:
    app = FastAPI(
        title="medirelay",
        default_response_class=CanonicalJSONResponse,
        docs_url=None,
        redoc_url=None,
        openapi_url=None,
    )
    app.state.core = core
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(E.MedirelayError)
    async def _domain_error(_req: Request, exc: E.MedirelayError):
        for cls, status in _STATUS_MAP:
            if isinstance(exc, cls):
                return _error_response(exc, status)
        return _error_response(exc, 400)

    @app.exception_handler(ValueError)
    async def _value_error(_req: Request, exc: ValueError):
        return _error_response(exc, 400)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return _error_response(ValueError("malformed request body"), 400)

    # -- auth helpers -------------------------------------------------------

    def session_account(request: Request):
        auth = request.headers.get("Authorization", "")
        token = auth[7:] if auth.startswith("Bearer ") else None
        return core.authenticate(token)

    def require_peer(request: Request) -> None:
        expected = core.config.peer_key
        given = request.headers.get("X-Peer-Key", "")
        if not expected or not hmac.compare_digest(given, expected):
            raise E.SessionInvalid("peer key required")

    def may_view_patient(account, patient_id: str) -> None:
        if account.account_id == patient_id or account.role is Role.ADMIN:
            return
        if account.role is Role.DOCTOR and any(
            b.doctor_id == account.account_id
            and b.patient_id == patient_id
            and b.status.value not in ("Rejected", "Cancelled")
            for b in core.portal.bookings.values()
        ):
            return
        raise E.NotYourBooking(f"no standing with patient {patient_id}")

    # -- registration / activation / login ------------------------------------

    @app.post("/register/doctor", status_code=201)
    async def register_doctor(body: dict = Body(...)):
        return core.submit(
            "register_doctor",
            {"email": _need(body, "email"), "profile": body.get("profile", {})},
        )

    @app.post("/register/patient", status_code=201)
    async def register_patient(body: dict = Body(...)):
        return core.submit(
            "register_patient",
            {"email": _need(body, "email"), "profile": body.get("profile", {})},
        )

    @app.post("/activate")
    async def activate(body: dict = Body(...)):
        password = str(_need(body, "password"))
        if not password:
            raise E.BadCredentials("password must not be empty")
        salt = secrets.token_hex(8)
        return core.submit(
            "activate",
            {
                "token": str(_need(body, "token")),
                "pw_salt": salt,
                "pw_hash": hash_password(salt, password),
            },
        )

    @app.post("/login")
    async def login(body: dict = Body(...)):
        session, account = core.login(
            str(_need(body, "email")), str(_need(body, "password"))
        )
        return {
            "token": session.token,
            "account_id": account.account_id,
            "role": account.role.value,
            "expires_at": session.expires_at,
        }

    @app.post("/logout")
    async def logout(request: Request):
        auth = request.headers.get("Authorization", "")
        if auth.startswith("Bearer "):
            core.logout(auth[7:])
        return {"ok": True}

    # -- admin ----------------------------------------------------------------

    @app.post("/admin/doctors/{doctor_id}/decision")
    async def admin_decision(doctor_id: str, request: Request, body: dict = Body(...)):
        account = session_account(request)
        if account.role is not Role.ADMIN:
            raise E.NotAdmin("admin session required")
        return core.submit(
            "admin_decide",
            {
                "admin_id": account.account_id,
                "doctor_id": doctor_id,
                "decision": str(_need(body, "decision")),
            },
        )

    @app.get("/admin/doctors/pending")
    async def pending_doctors(request: Request):
        account = session_account(request)
        if account.role is not Role.ADMIN:
            raise E.NotAdmin("admin session required")
        return {"pending": [account_to_dict(a) for a in core.portal.pending_doctors()]}

    # -- doctors / services / slots -----------------------------------------------

    @app.get("/doctors")
    async def search_doctors(query: str = Query(default="")):
        return {
            "doctors": [
                {"account_id": a.account_id, "profile": dict(a.profile)}
                for a in core.portal.search_doctors(query)
            ]
        }

    @app.get("/doctors/{doctor_id}/service")
    async def get_service(doctor_id: str, request: Request):
        session_account(request)
        core.portal.account(doctor_id)
        return settings_to_dict(core.portal.service_settings(doctor_id))

    @app.put("/doctors/{doctor_id}/service")
    async def put_service(doctor_id: str, request: Request, body: dict = Body(...)):
        account = session_account(request)
        if account.account_id != doctor_id:
            raise E.NotYourBooking("doctors manage only their own service")
        return core.submit(
            "update_service",
            {
                "doctor_id": doctor_id,
                "enabled": bool(_need(body, "enabled")),
                "offerings": _need(body, "offerings"),
            },
        )

    @app.get("/doctors/{doctor_id}/slots")
    async def slots(
        doctor_id: str,
        request: Request,
        date_from: str = Query(alias="from"),
        date_to: str = Query(alias="to"),
    ):
        session_account(request)
        core.portal.account(doctor_id)
        return {"slots": core.portal.list_available_slots(doctor_id, date_from, date_to)}

    # -- bookings ----------------------------------------------------------------

    @app.post("/bookings", status_code=201)
    async def create_booking(request: Request, body: dict = Body(...)):
        account = session_account(request)
        if account.role is not Role.PATIENT:
            raise E.NotActive("only patients book consultations")
        return core.submit(
            "request_booking",
            {
                "patient_id": account.account_id,
                "doctor_id": str(_need(body, "doctor_id")),
                "date": str(_need(body, "date")),
                "slot_start": str(_need(body, "slot_start")),
            },
        )

    @app.get("/bookings")
    async def list_bookings(request: Request):
        account = session_account(request)
        if account.role is Role.ADMIN:
            rows = sorted(
                core.portal.bookings.values(),
                key=lambda b: (-b.created_at, b.booking_id),
            )
        else:
            rows = core.portal.list_bookings(account.account_id)
        return {"bookings": [booking_to_dict(b) for b in rows]}

    @app.post("/bookings/{booking_id}/status")
    async def set_status(booking_id: str, request: Request, body: dict = Body(...)):
        account = session_account(request)
        return core.submit(
            "set_booking_status",
            {
                "doctor_id": account.account_id,
                "booking_id": booking_id,
                "status": str(_need(body, "status")),
            },
        )

    @app.post("/bookings/{booking_id}/prescription")
    async def prescription(booking_id: str, request: Request, body: dict = Body(...)):
        account = session_account(request)
        return core.submit(
            "attach_prescription",
            {
                "doctor_id": account.account_id,
                "booking_id": booking_id,
                "prescription": str(_need(body, "prescription")),
                "required_radiographs": body.get("required_radiographs", []),
                "required_tests": body.get("required_tests", []),
            },
        )

    @app.get("/bookings/{booking_id}/review")
    async def review(booking_id: str, request: Request):
        account = session_account(request)
        return core.portal.review_booking(account.account_id, booking_id)

    # -- history / credit -----------------------------------------------------------

    def _canonical_category(category: str) -> str:
        if category == "basic_info":
            return category
        canonical = _CATEGORY_BY_LOWER.get(category.lower())
        if canonical is None:
            raise E.UnknownCategory(
                f"{category!r} is not one of basic_info, "
                + ", ".join(HISTORY_CATEGORIES)
            )
        return canonical

    @app.get("/patients/{patient_id}/history/{category}")
    async def get_history(patient_id: str, category: str, request: Request):
        account = session_account(request)
        may_view_patient(account, patient_id)
        history = core.portal.history(patient_id)
        category = _canonical_category(category)
        if category == "basic_info":
            return {"basic_info": dict(history.basic_info)}
        return {
            "entries": [
                {"entry": text, "added_at": at} for text, at in history.entries[category]
            ]
        }

    @app.post("/patients/{patient_id}/history/{category}", status_code=201)
    async def post_history(
        patient_id: str, category: str, request: Request, body: dict = Body(...)
    ):
        account = session_account(request)
        if account.account_id != patient_id:
            raise E.NotYourBooking("patients edit only their own history")
        category = _canonical_category(category)
        if category == "basic_info":
            return core.submit(
                "set_basic_info",
                {"patient_id": patient_id, "fields": _need(body, "fields")},
            )
        return core.submit(
            "add_history",
            {
                "patient_id": patient_id,
                "category": category,
                "entry": str(_need(body, "entry")),
            },
        )

    @app.post("/patients/{patient_id}/credit")
    async def topup(patient_id: str, request: Request, body: dict = Body(...)):
        account = session_account(request)
        if account.account_id != patient_id and account.role is not Role.ADMIN:
            raise E.NotYourBooking("patients top up only their own credit")
        return core.submit(
            "credit_topup",
            {"patient_id": patient_id, "amount": _need(body, "amount")},
        )

    @app.get("/patients/{patient_id}/credit")
    async def credit(patient_id: str, request: Request):
        account = session_account(request)
        may_view_patient(account, patient_id)
        ledger = core.portal.ledger(patient_id)
        return {
            "patient_id": patient_id,
            "balance": ledger.balance,
            "postings": [
                {
                    "at": p.at,
                    "amount": p.amount,
                    "reason": p.reason,
                    "booking_id": p.booking_id,
                }
                for p in ledger.postings
            ],
        }

    @app.get("/notifications")
    async def notifications(request: Request):
        account = session_account(request)
        mine = [
            n
            for n in core.portal.notifications
            if n.recipient == account.account_id
            or (account.role is Role.ADMIN and n.recipient == "Admin")
        ]
        return {
            "notifications": [
                {"kind": n.kind.value, "payload": n.payload, "at": n.at} for n in mine
            ]
        }

    # -- clinical records --------------------------------------------------------------

    @app.get("/records/patient/{patient_id}")
    async def records_by_patient(patient_id: str, request: Request):
        account = session_account(request)
        may_view_patient(account, patient_id)
        return {"records": [pip_to_dict(p) for p in core.store.query_patient(patient_id)]}

    @app.get("/records/problem/{problem_id}")
    async def records_by_problem(problem_id: str, request: Request):
        account = session_account(request)
        if account.role not in (Role.DOCTOR, Role.ADMIN):
            raise E.NotYourBooking("problem folders are for clinicians")
        return {"records": [pip_to_dict(p) for p in core.store.query_problem(problem_id)]}

    @app.post("/records", status_code=201)
    async def create_record(request: Request, body: dict = Body(...)):
        account = session_account(request)
        if account.role not in (Role.DOCTOR, Role.ADMIN):
            raise E.NotYourBooking("only clinicians create records")
        pip_doc = _need(body, "pip")
        if account.role is Role.DOCTOR and pip_doc.get("doctor_id") != account.account_id:
            raise E.NotYourBooking("records must name their authoring doctor")
        record_doc = {
            "pip": pip_doc,
            "blobs": body.get("blobs", {}),
            "ingested_at": int(core.clock()),
        }
        command = "record_visit" if core.config.role == "Rural" else "ingest_record"
        return core.submit(command, {"record": record_doc})

    # -- peer sync ------------------------------------------------------------------

    @app.post("/sync/records")
    async def sync_records(request: Request, body: dict = Body(...)):
        require_peer(request)
        return core.submit("sync_apply", {"record": _need(body, "record")})

    @app.get("/sync/folder/{patient_id}")
    async def sync_folder(patient_id: str, request: Request):
        require_peer(request)
        return {
            "records": [
                record_to_dict(r) for r in core.store.patient_records(patient_id)
            ]
        }

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "role": core.config.role, "seq": core.seq}

    if core.config.static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount(
            "/app",
            StaticFiles(directory=core.config.static_dir, html=True),
            name="webui",
        )

    return app
