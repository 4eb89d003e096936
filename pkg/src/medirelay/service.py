"""Application core: config, command log binding, sessions, sync wiring.

Every mutation funnels through `ApplicationCore.submit`, which validates the
command (a dry run through the same applier), appends it durably, applies it,
and records the resulting state digest. Reads go straight at the in-memory
state. The digest covers the portal plus the authoritative record tiers; the
Local tier and sync outbox are deliberately outside it, because the rural
prefetch cache fills from the network rather than from the log.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
from dataclasses import asdict, dataclass

from .canonical import canon_dumps, sha256_hex
from .errors import ConfigInvalid, ServiceUnavailable, SessionInvalid
from .eventlog import EventLog
from .ids import IdStream
from .model import VisitMode
from .store import RetentionPolicy, Tier, TierStore, record_from_dict, record_to_dict
from .sync import ConsultationEntry, OutboxEntry, SyncEngine, apply_remote
from .volume import check_window_free, volume_to_bytes, write_volume
from .workflow import (
    Account,
    Booking,
    Notification,
    Portal,
    ServiceSettings,
    hash_password,
)

META_NAME = "meta.json"
VOLUME_DIR = "volumes"


class CrashInjected(RuntimeError):
    """Raised by test crash hooks to stop a process mid-commit."""


@dataclass
class ServiceConfig:
    data_dir: str
    host: str = "127.0.0.1"
    port: int = 8470
    role: str = "Center"
    peer_url: str | None = None
    peer_key: str = ""
    main_retention: int = 90 * 86400
    local_capacity: int = 1024
    horizon: int = 24 * 3600
    tick_every: int = 60
    snapshot_every: int = 100
    session_ttl: int = 8 * 3600
    timezone: str = "UTC"
    admin_password: str = "admin"
    schedule_file: str | None = None
    static_dir: str | None = None

    def validate(self) -> None:
        if self.role not in ("Center", "Rural"):
            raise ConfigInvalid(f"role must be Center or Rural, got {self.role!r}")
        if self.role == "Rural" and not self.peer_url:
            raise ConfigInvalid("Rural role requires peer_url")
        if not self.data_dir:
            raise ConfigInvalid("data_dir is required")
        if not 0 < self.port < 65536:
            raise ConfigInvalid(f"port out of range: {self.port}")
        for name in ("main_retention", "local_capacity", "horizon", "tick_every",
                     "session_ttl"):
            if getattr(self, name) <= 0:
                raise ConfigInvalid(f"{name} must be positive")
        if self.snapshot_every < 0:
            raise ConfigInvalid("snapshot_every must be >= 0 (0 disables snapshots)")
        if self.static_dir and not os.path.isdir(self.static_dir):
            raise ConfigInvalid(f"static_dir is not a directory: {self.static_dir}")


def load_config(path: str | None = None, overrides: dict | None = None) -> ServiceConfig:
    """Config file (JSON) named by `path` or $MEDIRELAY_CONFIG; explicit
    overrides (CLI flags) win over file keys."""
    doc: dict = {}
    path = path or os.environ.get("MEDIRELAY_CONFIG")
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                doc = json.load(f)
        except FileNotFoundError:
            raise ConfigInvalid(f"config file not found: {path}") from None
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc}") from None
    known = {f for f in ServiceConfig.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
    for key, value in (overrides or {}).items():
        if value is not None:
            doc[key] = value
    if "data_dir" not in doc:
        raise ConfigInvalid("data_dir is required (config file or flag)")
    config = ServiceConfig(**doc)
    config.validate()
    return config


@dataclass
class Session:
    token: str
    account_id: str
    expires_at: int


class FileNotifier:
    """Default notifier: append one line per notification to a log file."""

    def __init__(self, path: str) -> None:
        self.path = path

    def __call__(self, note: Notification) -> None:
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(f"{note.at} {note.kind.value} -> {note.recipient}: {note.payload}\n")


def load_schedule(path: str | None) -> list[ConsultationEntry]:
    if not path:
        return []
    with open(path, "r", encoding="utf-8") as f:
        rows = json.load(f)
    return [
        ConsultationEntry(
            booking_id=row["booking_id"],
            patient_id=row["patient_id"],
            start_time=int(row["start_time"]),
            mode=VisitMode(row["mode"]),
            report_complete=bool(row.get("report_complete", False)),
        )
        for row in rows
    ]


class HttpChannel:
    """Sync channel bound to a peer service over HTTP.

    Fetches ride on the folder read: the listing response carries the full
    records, so fetch_record serves from the response it just received.
    """

    latency = 0

    def __init__(self, base_url: str, peer_key: str, timeout: float = 5.0) -> None:
        import httpx

        self._client = httpx.Client(
            base_url=base_url.rstrip("/"),
            timeout=timeout,
            headers={"X-Peer-Key": peer_key},
        )
        self._stash: dict[str, object] = {}

    def up_at(self, t: int) -> bool:
        try:
            return self._client.get("/healthz").status_code == 200
        except Exception:
            return False

    def folder_listing(self, patient_id: str, t: int) -> list[str] | None:
        try:
            resp = self._client.get(f"/sync/folder/{patient_id}")
            resp.raise_for_status()
        except Exception:
            return None
        records = [record_from_dict(doc) for doc in resp.json()["records"]]
        for rec in records:
            self._stash[rec.pip.record_id] = rec
        return [rec.pip.record_id for rec in records]

    def fetch_record(self, record_id: str, t: int):
        record = self._stash.pop(record_id, None)
        if record is None:
            return "down", None
        return "ok", record

    def send_record(self, record, t: int):
        try:
            resp = self._client.post("/sync/records", json={"record": record_to_dict(record)})
        except Exception:
            return "down", None
        if resp.status_code != 200:
            return "rejected", None
        return "acked", resp.json()["outcome"]


# -- result serializers -------------------------------------------------------


def account_to_dict(account: Account) -> dict:
    return {
        "account_id": account.account_id,
        "role": account.role.value,
        "email": account.email,
        "profile": dict(account.profile),
        "state": account.state.value,
        "created_at": account.created_at,
    }


def booking_to_dict(booking: Booking) -> dict:
    return {
        "booking_id": booking.booking_id,
        "patient_id": booking.patient_id,
        "doctor_id": booking.doctor_id,
        "date": booking.date,
        "slot_start": booking.slot_start,
        "slot_length": booking.slot_length,
        "cost": booking.cost,
        "status": booking.status.value,
        "created_at": booking.created_at,
        "prescription": booking.prescription,
        "required_radiographs": list(booking.required_radiographs),
        "required_tests": list(booking.required_tests),
    }


def settings_to_dict(settings: ServiceSettings) -> dict:
    return {
        "doctor_id": settings.doctor_id,
        "enabled": settings.enabled,
        "offerings": [asdict(o) for o in settings.offerings],
    }


class ApplicationCore:
    """One site's entire state plus its durable log.

    `clock` and `crash_hook` exist for tests: the clock makes command
    timestamps deterministic, the crash hook fires between the durable append
    and the apply.
    """

    def __init__(
        self,
        config: ServiceConfig,
        clock=None,
        notifier=None,
        channel_factory=None,
        crash_hook=None,
    ) -> None:
        config.validate()
        self.config = config
        self.clock = clock or (lambda: int(time.time()))
        self.crash_hook = crash_hook
        os.makedirs(config.data_dir, exist_ok=True)
        self.log = EventLog(config.data_dir)
        self.ids = IdStream(bytes.fromhex(self._load_id_seed()))
        self._replaying = False
        self._sink = notifier if notifier is not None else FileNotifier(
            os.path.join(config.data_dir, "notifications.log")
        )
        self.portal = Portal(self.ids, notifier=self._deliver)
        self.store = TierStore(
            RetentionPolicy(
                main_retention=config.main_retention,
                local_capacity=config.local_capacity,
            )
        )
        self.engine: SyncEngine | None = None
        if config.role == "Rural":
            channel = (
                channel_factory(config)
                if channel_factory is not None
                else HttpChannel(config.peer_url, config.peer_key)
            )
            self.engine = SyncEngine(
                self.store,
                channel,
                schedule=load_schedule(config.schedule_file),
                horizon=config.horizon,
            )
        self.sessions: dict[str, Session] = {}
        self.seq = 0
        self._mutex = threading.RLock()
        self._replay()
        self._bootstrap_admin()

    def close(self) -> None:
        self.log.close()

    def _load_id_seed(self) -> str:
        """The id-stream seed is fixed per data dir so replays redraw the
        same ids; it is created once and never rotates."""
        path = os.path.join(self.config.data_dir, META_NAME)
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)["id_seed"]
        seed = secrets.token_hex(16)
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"id_seed": seed}, f)
        return seed

    def _deliver(self, note: Notification) -> None:
        if not self._replaying and self._sink is not None:
            self._sink(note)

    # -- digest ----------------------------------------------------------------

    def state_digest(self) -> str:
        """Digest of everything the command log governs. Local-tier contents
        and pins are cache state fed by the network, so they stay out."""
        doc = {
            "portal": self.portal.state_dict(),
            "ids": self.ids.counter,
            "records": {
                "main": {
                    rid: record_to_dict(self.store._main[rid])
                    for rid in sorted(self.store._main)
                },
                "lt_buffer": {
                    rid: record_to_dict(self.store._lt_buffer[rid])
                    for rid in sorted(self.store._lt_buffer)
                },
                "volumes": [
                    sha256_hex(volume_to_bytes(v)) for v in self.store.volumes
                ],
            },
        }
        return sha256_hex(canon_dumps(doc))

    # -- command dispatch ----------------------------------------------------------

    def _apply(self, command: str, payload: dict, at: int, dry_run: bool):
        p = payload
        portal = self.portal
        if command == "register_doctor":
            result = portal.register_doctor(p["email"], p["profile"], at, dry_run)
            if dry_run:
                return None
            account, token = result
            return {**account_to_dict(account), "activation_token": token.token}
        if command == "register_patient":
            result = portal.register_patient(p["email"], p["profile"], at, dry_run)
            if dry_run:
                return None
            account, token = result
            return {**account_to_dict(account), "activation_token": token.token}
        if command == "activate":
            account = portal.activate(p["token"], p["pw_salt"], p["pw_hash"], at, dry_run)
            return None if dry_run else account_to_dict(account)
        if command == "set_credential":
            portal.set_credential(p["account_id"], p["pw_salt"], p["pw_hash"], at, dry_run)
            return None
        if command == "admin_decide":
            account = portal.admin_decide(
                p["admin_id"], p["doctor_id"], p["decision"], at, dry_run
            )
            return None if dry_run else account_to_dict(account)
        if command == "update_service":
            settings = portal.update_service_settings(
                p["doctor_id"], p["enabled"], p["offerings"], at, dry_run
            )
            return None if dry_run else settings_to_dict(settings)
        if command == "request_booking":
            booking = portal.request_booking(
                p["patient_id"], p["doctor_id"], p["date"], p["slot_start"], at, dry_run
            )
            return None if dry_run else booking_to_dict(booking)
        if command == "set_booking_status":
            booking = portal.set_booking_status(
                p["doctor_id"], p["booking_id"], p["status"], at, dry_run
            )
            return None if dry_run else booking_to_dict(booking)
        if command == "attach_prescription":
            booking = portal.attach_prescription(
                p["doctor_id"],
                p["booking_id"],
                p["prescription"],
                p.get("required_radiographs", []),
                p.get("required_tests", []),
                at,
                dry_run,
            )
            return None if dry_run else booking_to_dict(booking)
        if command == "add_history":
            portal.add_history(p["patient_id"], p["category"], p["entry"], at, dry_run)
            return None if dry_run else {"patient_id": p["patient_id"], "category": p["category"]}
        if command == "set_basic_info":
            portal.set_basic_info(p["patient_id"], p["fields"], at, dry_run)
            return None if dry_run else {"patient_id": p["patient_id"]}
        if command == "credit_topup":
            ledger = portal.credit_topup(p["patient_id"], p["amount"], at, dry_run)
            return None if dry_run else {"patient_id": p["patient_id"], "balance": ledger.balance}
        if command == "ingest_record":
            record = record_from_dict(p["record"])
            if dry_run:
                return None
            self.store.ingest(record.pip, record.blobs, Tier.MAIN, now=record.ingested_at)
            return {"record_id": record.pip.record_id}
        if command == "record_visit":
            record = record_from_dict(p["record"])
            if self.engine is None:
                raise ServiceUnavailable("record_visit requires the Rural role")
            if dry_run:
                return None
            entry = self.engine.record_locally(record.pip, record.blobs, now=at)
            return {"record_id": record.pip.record_id, "outbox_state": entry.state.value}
        if command == "sync_apply":
            record = record_from_dict(p["record"])
            if dry_run:
                return None
            outcome = apply_remote(self.store, record)
            return {"record_id": record.pip.record_id, "outcome": outcome}
        if command == "migrate":
            if dry_run:
                return None
            moved = self.store.migrate(now=int(p["now"]))
            return {"moved": moved}
        if command == "pack_volume":
            start, end = int(p["window_start"]), int(p["window_end"])
            check_window_free(self.store.volumes, start, end)
            if dry_run:
                return None
            vol = self.store.pack_volume(start, end)
            vol_dir = os.path.join(self.config.data_dir, VOLUME_DIR)
            os.makedirs(vol_dir, exist_ok=True)
            path = os.path.join(vol_dir, f"{vol.volume_id}.mrv")
            write_volume(vol, path)
            return {"volume_id": vol.volume_id, "count": len(vol.index), "path": path}
        raise ValueError(f"unknown command {command!r}")

    def submit(self, command: str, payload: dict, now: int | None = None):
        """Validate, durably append, apply, digest. Failed validation leaves
        the log untouched; a crash after the append is healed by replay."""
        with self._mutex:
            at = int(now) if now is not None else int(self.clock())
            self._apply(command, payload, at, dry_run=True)
            seq = self.seq + 1
            self.log.append_command(seq, at, command, payload)
            if self.crash_hook is not None:
                self.crash_hook(command, seq)
            result = self._apply(command, payload, at, dry_run=False)
            self.seq = seq
            self.log.append_digest(seq, self.state_digest())
            if self.config.snapshot_every and seq % self.config.snapshot_every == 0:
                self.write_snapshot()
            return result

    # -- replay / snapshot ----------------------------------------------------------

    def _replay(self) -> None:
        self._replaying = True
        try:
            snap = self.log.read_snapshot()
            if snap is not None:
                self.portal.load_state(snap["portal"])
                self.store.load_state(snap["store"])
                self.ids.counter = int(snap["ids_counter"])
                self.seq = int(snap["seq"])
                if self.engine is not None:
                    for record_id, enqueued_at in snap.get("outbox", []):
                        self.engine.outbox[record_id] = OutboxEntry(
                            record_id=record_id, enqueued_at=int(enqueued_at)
                        )
            digest_seen_for = self.seq
            for entry in self.log.entries():
                if entry["kind"] == "CMD":
                    if entry["seq"] <= self.seq:
                        continue
                    if entry["seq"] != self.seq + 1:
                        raise ServiceUnavailable(
                            f"event log gap: expected seq {self.seq + 1}, found {entry['seq']}"
                        )
                    self._apply(entry["command"], entry["payload"], entry["at"], dry_run=False)
                    self.seq = entry["seq"]
                elif entry["kind"] == "DIG":
                    if entry["seq"] <= digest_seen_for:
                        continue
                    if entry["seq"] != self.seq:
                        raise ServiceUnavailable(
                            f"digest for seq {entry['seq']} does not follow its command"
                        )
                    # O(state) per entry; acceptable at this log scale.
                    digest = self.state_digest()
                    if digest != entry["digest"]:
                        raise ServiceUnavailable(
                            f"state digest mismatch at seq {entry['seq']}"
                        )
                    digest_seen_for = entry["seq"]
                else:
                    raise ServiceUnavailable(f"unknown log record kind {entry['kind']!r}")
            if self.seq > digest_seen_for:
                # Crash landed between append and apply; the command is now
                # applied exactly once, so seal it with its digest.
                self.log.append_digest(self.seq, self.state_digest())
        finally:
            self._replaying = False

    def write_snapshot(self) -> None:
        outbox = []
        if self.engine is not None:
            outbox = [[e.record_id, e.enqueued_at] for e in self.engine.outbox.values()]
        self.log.write_snapshot(
            {
                "seq": self.seq,
                "ids_counter": self.ids.counter,
                "portal": self.portal.state_dict(),
                "store": self.store.state_dict(),
                "outbox": outbox,
            }
        )

    def _bootstrap_admin(self) -> None:
        admin = self.portal.accounts["ADMIN"]
        if not admin.pw_hash:
            salt = secrets.token_hex(8)
            self.submit(
                "set_credential",
                {
                    "account_id": "ADMIN",
                    "pw_salt": salt,
                    "pw_hash": hash_password(salt, self.config.admin_password),
                },
            )

    # -- sessions ------------------------------------------------------------------

    def login(self, email: str, password: str) -> tuple[Session, Account]:
        account = self.portal.check_password(email, password)
        session = Session(
            token=secrets.token_hex(16),
            account_id=account.account_id,
            expires_at=int(self.clock()) + self.config.session_ttl,
        )
        self.sessions[session.token] = session
        return session, account

    def logout(self, token: str) -> None:
        self.sessions.pop(token, None)

    def authenticate(self, token: str | None) -> Account:
        if not token:
            raise SessionInvalid("missing session token")
        session = self.sessions.get(token)
        if session is None or int(self.clock()) > session.expires_at:
            self.sessions.pop(token, None)
            raise SessionInvalid("unknown or expired session")
        account = self.portal.accounts.get(session.account_id)
        if account is None or account.state.value != "Active":
            raise SessionInvalid("account no longer active")
        return account

    # -- fixtures ------------------------------------------------------------------

    def seed_demo(self) -> dict:
        """Deterministic development fixture: 2 doctors, 3 patients, 1 booking.

        Everything is dated around 2024-01-01 (a Monday) so slot arithmetic in
        UI work is stable. All passwords are `demo-pass`.
        """
        t0 = 1704067200  # 2024-01-01T00:00:00Z
        password = "demo-pass"

        def activate(reg: dict, offset: int) -> None:
            salt = secrets.token_hex(8)
            self.submit(
                "activate",
                {
                    "token": reg["activation_token"],
                    "pw_salt": salt,
                    "pw_hash": hash_password(salt, password),
                },
                now=t0 + offset,
            )

        d1 = self.submit(
            "register_doctor",
            {
                "email": "ahmed.hassan@clinic.example",
                "profile": {"name": "Dr. Ahmed Hassan", "specialty": "Cardiology"},
            },
            now=t0,
        )
        activate(d1, 60)
        self.submit(
            "admin_decide",
            {"admin_id": "ADMIN", "doctor_id": d1["account_id"], "decision": "Approve"},
            now=t0 + 120,
        )
        self.submit(
            "update_service",
            {
                "doctor_id": d1["account_id"],
                "enabled": True,
                "offerings": [
                    {"weekday": 0, "slot_start": "09:00", "slot_length": 30, "cost": 50},
                    {"weekday": 0, "slot_start": "09:30", "slot_length": 30, "cost": 50},
                    {"weekday": 2, "slot_start": "10:00", "slot_length": 45, "cost": 60},
                ],
            },
            now=t0 + 180,
        )
        d2 = self.submit(
            "register_doctor",
            {
                "email": "sara.ibrahim@clinic.example",
                "profile": {"name": "Dr. Sara Ibrahim", "specialty": "Dermatology"},
            },
            now=t0 + 240,
        )
        activate(d2, 300)
        self.submit(
            "admin_decide",
            {"admin_id": "ADMIN", "doctor_id": d2["account_id"], "decision": "Approve"},
            now=t0 + 360,
        )
        self.submit(
            "update_service",
            {
                "doctor_id": d2["account_id"],
                "enabled": True,
                "offerings": [
                    {"weekday": 1, "slot_start": "11:00", "slot_length": 30, "cost": 40},
                ],
            },
            now=t0 + 420,
        )
        patients = []
        for i, (email, name) in enumerate(
            [
                ("omar.farouk@mail.example", "Omar Farouk"),
                ("laila.mansour@mail.example", "Laila Mansour"),
                ("youssef.adel@mail.example", "Youssef Adel"),
            ]
        ):
            reg = self.submit(
                "register_patient",
                {"email": email, "profile": {"name": name}},
                now=t0 + 500 + i * 60,
            )
            activate(reg, 530 + i * 60)
            patients.append(reg)
        self.submit(
            "credit_topup",
            {"patient_id": patients[0]["account_id"], "amount": 200},
            now=t0 + 700,
        )
        booking = self.submit(
            "request_booking",
            {
                "patient_id": patients[0]["account_id"],
                "doctor_id": d1["account_id"],
                "date": "2024-01-08",
                "slot_start": "09:00",
            },
            now=t0 + 760,
        )
        return {
            "doctors": [d1["account_id"], d2["account_id"]],
            "patients": [p["account_id"] for p in patients],
            "booking": booking["booking_id"],
            "password": password,
        }
