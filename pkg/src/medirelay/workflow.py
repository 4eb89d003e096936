"""Portal workflow: accounts, telemedicine services, bookings, history, credit.

Single-writer by construction: every mutating method is a command that the
service layer serializes through its event log. Commands take a `dry_run`
flag; all validation happens before the dry_run gate and all mutation after
it, so a validation pass and the real apply go through the same code path.
Mutating methods therefore draw ids only after the gate.

Passwords never reach this module in the clear: callers resolve (salt, hash)
pairs before appending the command, and only those travel in payloads.
"""

from __future__ import annotations

import enum
import hashlib
import re
from dataclasses import dataclass, field
from datetime import date as date_type
from datetime import timedelta

from .errors import (
    BadCredentials,
    EmailTaken,
    IllegalTransition,
    InsufficientCredit,
    InvalidEmail,
    NonPositiveAmount,
    NotActive,
    NotAdmin,
    NotFound,
    NotYourBooking,
    OverlappingOfferings,
    ServiceDisabled,
    SlotTaken,
    TokenExpired,
    TokenInvalid,
    TokenUsed,
    UnknownCategory,
    WrongState,
    WrongStatus,
)
from .ids import IdStream

TOKEN_LIFETIME = 72 * 3600

HISTORY_CATEGORIES = (
    "Diseases",
    "Symptoms",
    "Pharmaceuticals",
    "Surgeries",
    "Sensitivities",
    "Radiograph",
    "Tests",
)

ADMIN_RECIPIENT = "Admin"

_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")


class Role(str, enum.Enum):
    DOCTOR = "Doctor"
    PATIENT = "Patient"
    ADMIN = "Admin"


class AccountState(str, enum.Enum):
    PENDING_ACTIVATION = "PendingActivation"
    AWAITING_APPROVAL = "AwaitingApproval"
    ACTIVE = "Active"
    DELETED = "Deleted"


class BookingStatus(str, enum.Enum):
    REQUESTED = "Requested"
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"
    COMPLETED = "Completed"
    CANCELLED = "Cancelled"


# Legal booking transitions; everything else is IllegalTransition.
_BOOKING_GRAPH = {
    BookingStatus.REQUESTED: {BookingStatus.ACCEPTED, BookingStatus.REJECTED},
    BookingStatus.ACCEPTED: {BookingStatus.COMPLETED, BookingStatus.CANCELLED},
    BookingStatus.REJECTED: set(),
    BookingStatus.COMPLETED: set(),
    BookingStatus.CANCELLED: set(),
}

# Statuses that hold a slot against new requests.
HOLDING_STATUSES = {BookingStatus.REQUESTED, BookingStatus.ACCEPTED}


class NotificationKind(str, enum.Enum):
    ACTIVATE_ACCOUNT = "ActivateAccount"
    DOCTOR_REGISTERED = "DoctorRegistered"
    PATIENT_REGISTERED = "PatientRegistered"
    ACCOUNT_APPROVED = "AccountApproved"
    BOOKING_REQUESTED = "BookingRequested"
    BOOKING_STATUS_CHANGED = "BookingStatusChanged"


@dataclass
class Account:
    account_id: str
    role: Role
    email: str
    profile: dict
    state: AccountState
    created_at: int
    pw_salt: str = ""
    pw_hash: str = ""


@dataclass
class ActivationToken:
    token: str
    account_id: str
    issued_at: int
    expires_at: int
    used: bool = False


@dataclass(frozen=True)
class Offering:
    weekday: int  # Monday == 0
    slot_start: str  # HH:MM
    slot_length: int  # minutes
    cost: int


@dataclass
class ServiceSettings:
    doctor_id: str
    enabled: bool = False
    offerings: tuple = ()


@dataclass
class Booking:
    booking_id: str
    patient_id: str
    doctor_id: str
    date: str  # YYYY-MM-DD
    slot_start: str
    slot_length: int
    cost: int
    status: BookingStatus
    created_at: int
    prescription: str | None = None
    required_radiographs: tuple = ()
    required_tests: tuple = ()


@dataclass(frozen=True)
class Posting:
    at: int
    amount: int
    reason: str
    booking_id: str | None = None


@dataclass
class CreditLedger:
    patient_id: str
    postings: list = field(default_factory=list)

    @property
    def balance(self) -> int:
        return sum(p.amount for p in self.postings)


@dataclass
class MedicalHistory:
    patient_id: str
    basic_info: dict = field(default_factory=dict)
    entries: dict = field(
        default_factory=lambda: {c: [] for c in HISTORY_CATEGORIES}
    )


@dataclass(frozen=True)
class Notification:
    recipient: str
    kind: NotificationKind
    payload: str
    at: int


def hash_password(salt: str, password: str) -> str:
    return hashlib.sha256((salt + ":" + password).encode("utf-8")).hexdigest()


def _parse_hm(value: str) -> int:
    """HH:MM -> minutes from midnight; raises ValueError on junk."""
    parts = value.split(":")
    if len(parts) != 2:
        raise ValueError(f"bad time {value!r}")
    hours, minutes = int(parts[0]), int(parts[1])
    if not (0 <= hours < 24 and 0 <= minutes < 60):
        raise ValueError(f"bad time {value!r}")
    return hours * 60 + minutes


def _parse_date(value: str) -> date_type:
    try:
        return date_type.fromisoformat(value)
    except (TypeError, ValueError):
        raise ValueError(f"bad date {value!r}") from None


class Portal:
    """All portal state plus the commands that mutate it.

    A built-in Admin account exists from construction; it is part of the
    deterministic initial state so replays reproduce it.
    """

    def __init__(self, ids: IdStream, notifier=None) -> None:
        self.ids = ids
        self.notifier = notifier
        self.accounts: dict[str, Account] = {}
        self.tokens: dict[str, ActivationToken] = {}
        self.services: dict[str, ServiceSettings] = {}
        self.bookings: dict[str, Booking] = {}
        self.ledgers: dict[str, CreditLedger] = {}
        self.histories: dict[str, MedicalHistory] = {}
        self.notifications: list[Notification] = []
        self._email_index: dict[str, str] = {}  # non-Deleted accounts only
        admin = Account(
            account_id="ADMIN",
            role=Role.ADMIN,
            email="admin@medirelay.local",
            profile={"name": "Administrator"},
            state=AccountState.ACTIVE,
            created_at=0,
        )
        self.accounts[admin.account_id] = admin
        self._email_index[admin.email] = admin.account_id

    # -- helpers ------------------------------------------------------------

    def _emit(self, recipient: str, kind: NotificationKind, payload: str, now: int) -> None:
        note = Notification(recipient=recipient, kind=kind, payload=payload, at=now)
        self.notifications.append(note)
        if self.notifier is not None:
            try:
                self.notifier(note)
            except Exception:
                pass  # delivery must never block a command

    def account(self, account_id: str) -> Account:
        acct = self.accounts.get(account_id)
        if acct is None:
            raise NotFound(f"no account {account_id}")
        return acct

    def _require_active(self, account_id: str, role: Role) -> Account:
        acct = self.account(account_id)
        if acct.role is not role or acct.state is not AccountState.ACTIVE:
            raise NotActive(f"{account_id} is not an active {role.value}")
        return acct

    def _check_email(self, email: str) -> str:
        email = (email or "").strip().lower()
        if not _EMAIL_RE.match(email):
            raise InvalidEmail(f"not a valid email address: {email!r}")
        if email in self._email_index:
            raise EmailTaken(f"email already registered: {email}")
        return email

    def ledger(self, patient_id: str) -> CreditLedger:
        led = self.ledgers.get(patient_id)
        if led is None:
            raise NotFound(f"no ledger for {patient_id}")
        return led

    def history(self, patient_id: str) -> MedicalHistory:
        hist = self.histories.get(patient_id)
        if hist is None:
            raise NotFound(f"no history for {patient_id}")
        return hist

    # -- registration and activation -------------------------------------------

    def _register(self, role: Role, email: str, profile: dict, now: int, dry_run: bool):
        email = self._check_email(email)
        profile = {str(k): str(v) for k, v in (profile or {}).items()}
        if dry_run:
            return None
        account = Account(
            account_id=self.ids.next_id(now),
            role=role,
            email=email,
            profile=profile,
            state=AccountState.PENDING_ACTIVATION,
            created_at=now,
        )
        token = ActivationToken(
            token=self.ids.next_token(),
            account_id=account.account_id,
            issued_at=now,
            expires_at=now + TOKEN_LIFETIME,
        )
        self.accounts[account.account_id] = account
        self._email_index[email] = account.account_id
        self.tokens[token.token] = token
        if role is Role.PATIENT:
            self.ledgers[account.account_id] = CreditLedger(patient_id=account.account_id)
            self.histories[account.account_id] = MedicalHistory(patient_id=account.account_id)
        self._emit(account.account_id, NotificationKind.ACTIVATE_ACCOUNT, token.token, now)
        return account, token

    def register_doctor(self, email: str, profile: dict, now: int, dry_run: bool = False):
        result = self._register(Role.DOCTOR, email, profile, now, dry_run)
        if result is None:
            return None
        account, token = result
        self._emit(
            ADMIN_RECIPIENT,
            NotificationKind.DOCTOR_REGISTERED,
            account.account_id,
            now,
        )
        return account, token

    def register_patient(self, email: str, profile: dict, now: int, dry_run: bool = False):
        result = self._register(Role.PATIENT, email, profile, now, dry_run)
        if result is None:
            return None
        account, token = result
        self._emit(
            ADMIN_RECIPIENT,
            NotificationKind.PATIENT_REGISTERED,
            account.account_id,
            now,
        )
        return account, token

    def activate(
        self, token: str, pw_salt: str, pw_hash: str, now: int, dry_run: bool = False
    ) -> Account | None:
        """Consume an activation token and set the account's credential.

        Patients come out Active; doctors land in AwaitingApproval and still
        need the admin decision before they can log in.
        """
        record = self.tokens.get(token)
        if record is None:
            raise TokenInvalid("unknown activation token")
        if record.used:
            raise TokenUsed("activation token already used")
        if now > record.expires_at:
            raise TokenExpired("activation token expired")
        if not pw_salt or not pw_hash:
            raise BadCredentials("a password is required to activate")
        account = self.account(record.account_id)
        if account.state is not AccountState.PENDING_ACTIVATION:
            raise WrongState(f"account is {account.state.value}")
        if dry_run:
            return None
        record.used = True
        account.pw_salt = pw_salt
        account.pw_hash = pw_hash
        account.state = (
            AccountState.ACTIVE
            if account.role is Role.PATIENT
            else AccountState.AWAITING_APPROVAL
        )
        return account

    def set_credential(
        self, account_id: str, pw_salt: str, pw_hash: str, now: int, dry_run: bool = False
    ) -> None:
        """Direct credential set, used for the built-in admin at bootstrap."""
        account = self.account(account_id)
        if not pw_salt or not pw_hash:
            raise BadCredentials("empty credential")
        if dry_run:
            return None
        account.pw_salt = pw_salt
        account.pw_hash = pw_hash
        return None

    def admin_decide(
        self, admin_id: str, doctor_id: str, decision: str, now: int, dry_run: bool = False
    ) -> Account | None:
        caller = self.accounts.get(admin_id)
        if caller is None or caller.role is not Role.ADMIN or caller.state is not AccountState.ACTIVE:
            raise NotAdmin(f"{admin_id} may not decide doctor registrations")
        if decision not in ("Approve", "Delete"):
            raise ValueError(f"decision must be Approve or Delete, got {decision!r}")
        target = self.account(doctor_id)
        if target.role is not Role.DOCTOR or target.state is not AccountState.AWAITING_APPROVAL:
            raise WrongState(f"{doctor_id} is not awaiting approval")
        if dry_run:
            return None
        if decision == "Approve":
            target.state = AccountState.ACTIVE
            self._emit(
                target.account_id,
                NotificationKind.ACCOUNT_APPROVED,
                "welcome",
                now,
            )
        else:
            target.state = AccountState.DELETED
            self._email_index.pop(target.email, None)  # email reusable again
        return target

    def pending_doctors(self) -> list[Account]:
        return sorted(
            (
                a
                for a in self.accounts.values()
                if a.role is Role.DOCTOR and a.state is AccountState.AWAITING_APPROVAL
            ),
            key=lambda a: a.account_id,
        )

    def check_password(self, email: str, password: str) -> Account:
        account_id = self._email_index.get((email or "").strip().lower())
        if account_id is None:
            raise BadCredentials("unknown email or wrong password")
        account = self.accounts[account_id]
        if not account.pw_hash or hash_password(account.pw_salt, password) != account.pw_hash:
            raise BadCredentials("unknown email or wrong password")
        if account.state is not AccountState.ACTIVE:
            raise NotActive(f"account is {account.state.value}")
        return account

    # -- telemedicine service settings ---------------------------------------------

    def update_service_settings(
        self, doctor_id: str, enabled: bool, offerings, now: int, dry_run: bool = False
    ) -> ServiceSettings | None:
        self._require_active(doctor_id, Role.DOCTOR)
        parsed: list[Offering] = []
        for off in offerings:
            if isinstance(off, Offering):
                parsed.append(off)
            else:
                parsed.append(
                    Offering(
                        weekday=int(off["weekday"]),
                        slot_start=str(off["slot_start"]),
                        slot_length=int(off["slot_length"]),
                        cost=int(off["cost"]),
                    )
                )
        by_day: dict[int, list[tuple[int, int]]] = {}
        for off in parsed:
            if not 0 <= off.weekday <= 6:
                raise ValueError(f"weekday out of range: {off.weekday}")
            if off.slot_length <= 0:
                raise ValueError("slot_length must be positive")
            if off.cost < 0:
                raise ValueError("cost must be non-negative")
            start = _parse_hm(off.slot_start)
            for other_start, other_end in by_day.get(off.weekday, []):
                if start < other_end and other_start < start + off.slot_length:
                    raise OverlappingOfferings(
                        f"offerings overlap on weekday {off.weekday}"
                    )
            by_day.setdefault(off.weekday, []).append((start, start + off.slot_length))
        if dry_run:
            return None
        settings = ServiceSettings(
            doctor_id=doctor_id, enabled=bool(enabled), offerings=tuple(parsed)
        )
        self.services[doctor_id] = settings
        return settings

    def service_settings(self, doctor_id: str) -> ServiceSettings:
        return self.services.get(doctor_id) or ServiceSettings(doctor_id=doctor_id)

    def _slot_held(self, doctor_id: str, date: str, slot_start: str) -> bool:
        return any(
            b.doctor_id == doctor_id
            and b.date == date
            and b.slot_start == slot_start
            and b.status in HOLDING_STATUSES
            for b in self.bookings.values()
        )

    def list_available_slots(self, doctor_id: str, date_from: str, date_to: str) -> list[dict]:
        """Concrete open slots for the doctor over the date range (inclusive).

        A disabled or unconfigured service offers nothing; a slot held by a
        Requested or Accepted booking is closed, any other status reopens it.
        """
        settings = self.services.get(doctor_id)
        if settings is None or not settings.enabled:
            return []
        start, end = _parse_date(date_from), _parse_date(date_to)
        if end < start:
            raise ValueError("date range is backwards")
        if (end - start).days > 366:
            raise ValueError("date range longer than a year")
        slots = []
        day = start
        while day <= end:
            for off in settings.offerings:
                if off.weekday != day.weekday():
                    continue
                iso = day.isoformat()
                if self._slot_held(doctor_id, iso, off.slot_start):
                    continue
                slots.append(
                    {
                        "date": iso,
                        "slot_start": off.slot_start,
                        "slot_length": off.slot_length,
                        "cost": off.cost,
                    }
                )
            day += timedelta(days=1)
        slots.sort(key=lambda s: (s["date"], _parse_hm(s["slot_start"])))
        return slots

    def search_doctors(self, query: str = "") -> list[Account]:
        """Active doctors whose profile mentions the query; empty query lists all."""
        needle = (query or "").strip().lower()
        out = []
        for acct in self.accounts.values():
            if acct.role is not Role.DOCTOR or acct.state is not AccountState.ACTIVE:
                continue
            haystack = " ".join([acct.email, *map(str, acct.profile.values())]).lower()
            if needle in haystack:
                out.append(acct)
        out.sort(key=lambda a: a.account_id)
        return out

    # -- bookings ---------------------------------------------------------------

    def request_booking(
        self, patient_id: str, doctor_id: str, date: str, slot_start: str,
        now: int, dry_run: bool = False,
    ) -> Booking | None:
        self._require_active(patient_id, Role.PATIENT)
        self._require_active(doctor_id, Role.DOCTOR)
        settings = self.services.get(doctor_id)
        if settings is None or not settings.enabled:
            raise ServiceDisabled(f"{doctor_id} offers no telemedicine service")
        day = _parse_date(date)
        offering = next(
            (
                off
                for off in settings.offerings
                if off.weekday == day.weekday() and off.slot_start == slot_start
            ),
            None,
        )
        if offering is None:
            raise SlotTaken(f"no open slot {date} {slot_start} for {doctor_id}")
        if self._slot_held(doctor_id, date, slot_start):
            raise SlotTaken(f"slot {date} {slot_start} already requested")
        ledger = self.ledger(patient_id)
        if ledger.balance < offering.cost:
            raise InsufficientCredit(
                f"balance {ledger.balance} below cost {offering.cost}"
            )
        if dry_run:
            return None
        booking = Booking(
            booking_id=self.ids.next_id(now),
            patient_id=patient_id,
            doctor_id=doctor_id,
            date=date,
            slot_start=slot_start,
            slot_length=offering.slot_length,
            cost=offering.cost,
            status=BookingStatus.REQUESTED,
            created_at=now,
        )
        self.bookings[booking.booking_id] = booking
        ledger.postings.append(
            Posting(at=now, amount=-offering.cost, reason="booking", booking_id=booking.booking_id)
        )
        self._emit(doctor_id, NotificationKind.BOOKING_REQUESTED, booking.booking_id, now)
        return booking

    def booking(self, booking_id: str) -> Booking:
        b = self.bookings.get(booking_id)
        if b is None:
            raise NotFound(f"no booking {booking_id}")
        return b

    def set_booking_status(
        self, doctor_id: str, booking_id: str, new_status, now: int, dry_run: bool = False
    ) -> Booking | None:
        booking = self.booking(booking_id)
        if booking.doctor_id != doctor_id:
            raise NotYourBooking(f"{booking_id} belongs to another doctor")
        new_status = BookingStatus(new_status)
        if new_status not in _BOOKING_GRAPH[booking.status]:
            raise IllegalTransition(
                f"{booking.status.value} -> {new_status.value} is not allowed"
            )
        if dry_run:
            return None
        booking.status = new_status
        if new_status in (BookingStatus.REJECTED, BookingStatus.CANCELLED):
            self.ledger(booking.patient_id).postings.append(
                Posting(at=now, amount=booking.cost, reason="refund", booking_id=booking_id)
            )
        self._emit(
            booking.patient_id,
            NotificationKind.BOOKING_STATUS_CHANGED,
            f"{booking_id}:{new_status.value}",
            now,
        )
        return booking

    def attach_prescription(
        self, doctor_id: str, booking_id: str, prescription: str,
        required_radiographs, required_tests, now: int, dry_run: bool = False,
    ) -> Booking | None:
        booking = self.booking(booking_id)
        if booking.doctor_id != doctor_id:
            raise NotYourBooking(f"{booking_id} belongs to another doctor")
        if booking.status not in (BookingStatus.ACCEPTED, BookingStatus.COMPLETED):
            raise WrongStatus(
                f"prescriptions require Accepted or Completed, booking is {booking.status.value}"
            )
        if dry_run:
            return None
        booking.prescription = str(prescription)
        booking.required_radiographs = tuple(str(x) for x in required_radiographs or ())
        booking.required_tests = tuple(str(x) for x in required_tests or ())
        return booking

    def review_booking(self, doctor_id: str, booking_id: str) -> dict:
        """Read-only composite the doctor sees before/after the consult."""
        booking = self.booking(booking_id)
        if booking.doctor_id != doctor_id:
            raise NotYourBooking(f"{booking_id} belongs to another doctor")
        if booking.status in (BookingStatus.CANCELLED, BookingStatus.REJECTED):
            raise WrongStatus(f"booking is {booking.status.value}")
        patient = self.account(booking.patient_id)
        history = self.history(booking.patient_id)
        return {
            "patient": {
                "account_id": patient.account_id,
                "email": patient.email,
                "profile": dict(patient.profile),
                "basic_info": dict(history.basic_info),
            },
            "slot": {
                "date": booking.date,
                "slot_start": booking.slot_start,
                "slot_length": booking.slot_length,
            },
            "history": {c: list(history.entries[c]) for c in HISTORY_CATEGORIES},
        }

    def list_bookings(self, account_id: str) -> list[Booking]:
        acct = self.account(account_id)
        if acct.role is Role.DOCTOR:
            mine = [b for b in self.bookings.values() if b.doctor_id == account_id]
        else:
            mine = [b for b in self.bookings.values() if b.patient_id == account_id]
        mine.sort(key=lambda b: (-b.created_at, b.booking_id))
        return mine

    # -- history and credit -------------------------------------------------------

    def add_history(
        self, patient_id: str, category: str, entry_text: str, now: int, dry_run: bool = False
    ) -> MedicalHistory | None:
        self._require_active(patient_id, Role.PATIENT)
        if category not in HISTORY_CATEGORIES:
            raise UnknownCategory(
                f"{category!r} is not one of {', '.join(HISTORY_CATEGORIES)}"
            )
        if dry_run:
            return None
        history = self.history(patient_id)
        history.entries[category].append((str(entry_text), now))
        return history

    def set_basic_info(
        self, patient_id: str, fields: dict, now: int, dry_run: bool = False
    ) -> MedicalHistory | None:
        self._require_active(patient_id, Role.PATIENT)
        fields = {str(k): str(v) for k, v in (fields or {}).items()}
        if dry_run:
            return None
        history = self.history(patient_id)
        history.basic_info.update(fields)
        return history

    def credit_topup(
        self, patient_id: str, amount: int, now: int, dry_run: bool = False
    ) -> CreditLedger | None:
        self._require_active(patient_id, Role.PATIENT)
        amount = int(amount)
        if amount <= 0:
            raise NonPositiveAmount(f"topup must be positive, got {amount}")
        if dry_run:
            return None
        ledger = self.ledger(patient_id)
        ledger.postings.append(Posting(at=now, amount=amount, reason="topup"))
        return ledger

    # -- digestible state ---------------------------------------------------------------

    def load_state(self, doc: dict) -> None:
        """Inverse of state_dict, used when restoring from a snapshot."""
        self.accounts = {
            aid: Account(
                account_id=aid,
                role=Role(d["role"]),
                email=d["email"],
                profile=dict(d["profile"]),
                state=AccountState(d["state"]),
                created_at=int(d["created_at"]),
                pw_salt=d["pw_salt"],
                pw_hash=d["pw_hash"],
            )
            for aid, d in doc["accounts"].items()
        }
        self.tokens = {
            t: ActivationToken(
                token=t,
                account_id=d["account_id"],
                issued_at=int(d["issued_at"]),
                expires_at=int(d["expires_at"]),
                used=bool(d["used"]),
            )
            for t, d in doc["tokens"].items()
        }
        self.services = {
            did: ServiceSettings(
                doctor_id=did,
                enabled=bool(d["enabled"]),
                offerings=tuple(Offering(*row) for row in d["offerings"]),
            )
            for did, d in doc["services"].items()
        }
        self.bookings = {
            bid: Booking(
                booking_id=bid,
                patient_id=d["patient_id"],
                doctor_id=d["doctor_id"],
                date=d["date"],
                slot_start=d["slot_start"],
                slot_length=int(d["slot_length"]),
                cost=int(d["cost"]),
                status=BookingStatus(d["status"]),
                created_at=int(d["created_at"]),
                prescription=d["prescription"],
                required_radiographs=tuple(d["required_radiographs"]),
                required_tests=tuple(d["required_tests"]),
            )
            for bid, d in doc["bookings"].items()
        }
        self.ledgers = {
            pid: CreditLedger(patient_id=pid, postings=[Posting(*row) for row in rows])
            for pid, rows in doc["ledgers"].items()
        }
        self.histories = {
            pid: MedicalHistory(
                patient_id=pid,
                basic_info=dict(d["basic_info"]),
                entries={c: [tuple(e) for e in d["entries"][c]] for c in HISTORY_CATEGORIES},
            )
            for pid, d in doc["histories"].items()
        }
        self.notifications = [
            Notification(recipient=r, kind=NotificationKind(k), payload=p, at=at)
            for r, k, p, at in doc["notifications"]
        ]
        self._email_index = {
            a.email: a.account_id
            for a in self.accounts.values()
            if a.state is not AccountState.DELETED
        }

    def state_dict(self) -> dict:
        """Deterministic plain-data image of all portal state, for digests."""
        return {
            "accounts": {
                aid: {
                    "role": a.role.value,
                    "email": a.email,
                    "profile": dict(a.profile),
                    "state": a.state.value,
                    "created_at": a.created_at,
                    "pw_salt": a.pw_salt,
                    "pw_hash": a.pw_hash,
                }
                for aid, a in sorted(self.accounts.items())
            },
            "tokens": {
                t: {
                    "account_id": tok.account_id,
                    "issued_at": tok.issued_at,
                    "expires_at": tok.expires_at,
                    "used": tok.used,
                }
                for t, tok in sorted(self.tokens.items())
            },
            "services": {
                did: {
                    "enabled": s.enabled,
                    "offerings": [
                        [o.weekday, o.slot_start, o.slot_length, o.cost]
                        for o in s.offerings
                    ],
                }
                for did, s in sorted(self.services.items())
            },
            "bookings": {
                bid: {
                    "patient_id": b.patient_id,
                    "doctor_id": b.doctor_id,
                    "date": b.date,
                    "slot_start": b.slot_start,
                    "slot_length": b.slot_length,
                    "cost": b.cost,
                    "status": b.status.value,
                    "created_at": b.created_at,
                    "prescription": b.prescription,
                    "required_radiographs": list(b.required_radiographs),
                    "required_tests": list(b.required_tests),
                }
                for bid, b in sorted(self.bookings.items())
            },
            "ledgers": {
                pid: [[p.at, p.amount, p.reason, p.booking_id] for p in led.postings]
                for pid, led in sorted(self.ledgers.items())
            },
            "histories": {
                pid: {
                    "basic_info": dict(h.basic_info),
                    "entries": {c: [list(e) for e in h.entries[c]] for c in HISTORY_CATEGORIES},
                }
                for pid, h in sorted(self.histories.items())
            },
            "notifications": [
                [n.recipient, n.kind.value, n.payload, n.at] for n in self.notifications
            ],
        }
