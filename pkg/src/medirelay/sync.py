"""Store-and-forward synchronization between a rural site and the center.

Two mechanisms share one engine. The forwarding side keeps every locally
created record in an outbox and pushes it to the center whenever the channel
is up, so channel failures never lose data: delivery is at-least-once and the
center deduplicates on record id. The prefetch side walks the consultation
schedule and pulls each scheduled patient's folder into the local cache ahead
of the visit, so folder reads at consult time touch no WAN.

The channel is abstract. Tests and the simulator use `SimChannel`, which plays
back an explicit up/down segment schedule with per-message latency; a message
only gets through if the channel stays up for its whole leg, which yields
mid-transfer drops and lost acks at segment boundaries.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import ChecksumMismatch, MissingBlob
from .model import VisitMode
from .store import StoredRecord, Tier, TierStore, check_blobs


class ChannelState(str, enum.Enum):
    UP = "Up"
    DOWN = "Down"


@dataclass
class ChannelSchedule:
    """Deterministic channel behaviour: state segments plus message latency.

    Segments must tile the timeline contiguously from time zero; after the
    last segment the final state persists.
    """

    seed: int
    segments: list[tuple[int, int, ChannelState]]
    latency: int = 1

    def __post_init__(self) -> None:
        if self.latency <= 0:
            raise ValueError("latency must be positive")
        prev_end = None
        for start, end, _state in self.segments:
            if end <= start:
                raise ValueError(f"empty channel segment [{start},{end})")
            if prev_end is not None and start != prev_end:
                raise ValueError("channel segments must be contiguous")
            prev_end = end

    def state_at(self, t: int) -> ChannelState:
        if not self.segments:
            return ChannelState.DOWN
        last = self.segments[-1][2]
        for start, end, state in self.segments:
            if t < start:
                return ChannelState.DOWN
            if start <= t < end:
                return state
        return last

    def up_at(self, t: int) -> bool:
        return self.state_at(t) is ChannelState.UP

    def up_through(self, t0: int, t1: int) -> bool:
        """Up over the whole closed interval [t0, t1]."""
        if not self.up_at(t0) or not self.up_at(t1):
            return False
        for start, end, state in self.segments:
            if state is ChannelState.DOWN and start <= t1 and t0 < end:
                return False
        return True


class OutboxState(str, enum.Enum):
    QUEUED = "Queued"
    IN_FLIGHT = "InFlight"
    ACKED = "Acked"


@dataclass
class OutboxEntry:
    record_id: str
    enqueued_at: int
    attempts: int = 0
    state: OutboxState = OutboxState.QUEUED


@dataclass(frozen=True)
class ConsultationEntry:
    booking_id: str
    patient_id: str
    start_time: int
    mode: VisitMode
    report_complete: bool = False


@dataclass
class SyncStats:
    wan_messages: int = 0
    records_forwarded: int = 0
    duplicates_suppressed: int = 0
    prefetch_hits: int = 0
    prefetch_misses: int = 0

    def add(self, other: "SyncStats") -> None:
        self.wan_messages += other.wan_messages
        self.records_forwarded += other.records_forwarded
        self.duplicates_suppressed += other.duplicates_suppressed
        self.prefetch_hits += other.prefetch_hits
        self.prefetch_misses += other.prefetch_misses

    def as_dict(self) -> dict:
        return {
            "wan_messages": self.wan_messages,
            "records_forwarded": self.records_forwarded,
            "duplicates_suppressed": self.duplicates_suppressed,
            "prefetch_hits": self.prefetch_hits,
            "prefetch_misses": self.prefetch_misses,
        }


def prefetch_set(schedule, now: int, horizon: int) -> set[tuple[str, str]]:
    """(patient_id, booking_id) pairs whose records must be local soon.

    Every teleconsultation starting inside [now, now+horizon] qualifies;
    telediagnosis entries qualify only while their diagnosis report is still
    outstanding. Nothing outside the window ever qualifies.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    wanted = set()
    for entry in schedule:
        if not (now <= entry.start_time <= now + horizon):
            continue
        if entry.mode is VisitMode.TELECONSULTATION:
            wanted.add((entry.patient_id, entry.booking_id))
        elif entry.mode is VisitMode.TELEDIAGNOSIS and not entry.report_complete:
            wanted.add((entry.patient_id, entry.booking_id))
    return wanted


def apply_remote(center_store: TierStore, record: StoredRecord) -> str:
    """Idempotent receive side of record forwarding.

    Verifies integrity, ingests into Main keyed by record id, and reports
    whether the record was new ("applied") or already present ("duplicate").
    """
    check_blobs(record.pip, record.blobs)
    if center_store.contains(record.pip.record_id):
        return "duplicate"
    center_store.ingest(record.pip, record.blobs, Tier.MAIN, now=record.ingested_at)
    return "applied"


class SimChannel:
    """Schedule-driven channel bound directly to the center store.

    A record push is two legs (request, then ack), a fetch is one; a leg
    succeeds only if the channel is up for its whole latency interval. A push
    whose ack leg fails has still been applied at the center, which is exactly
    the at-least-once case the deduplication exists for.
    """

    def __init__(self, schedule: ChannelSchedule, center_store: TierStore) -> None:
        self.schedule = schedule
        self.center = center_store

    @property
    def latency(self) -> int:
        return self.schedule.latency

    def up_at(self, t: int) -> bool:
        return self.schedule.up_at(t)

    def folder_listing(self, patient_id: str, t: int) -> list[str] | None:
        if not self.schedule.up_at(t):
            return None
        return [p.record_id for p in self.center.query_patient(patient_id)]

    def fetch_record(self, record_id: str, t: int):
        if not self.schedule.up_at(t):
            return "down", None
        if not self.schedule.up_through(t, t + self.latency):
            return "lost", None
        return "ok", self.center.lookup(record_id)[1]

    def send_record(self, record: StoredRecord, t: int):
        if not self.schedule.up_at(t):
            return "down", None
        if not self.schedule.up_through(t, t + self.latency):
            return "lost", None  # center never received it
        try:
            outcome = apply_remote(self.center, record)
        except (ChecksumMismatch, MissingBlob):
            outcome = "rejected"
        if not self.schedule.up_through(t + self.latency, t + 2 * self.latency):
            return "ack_lost", None  # applied, but the sender cannot know
        if outcome == "rejected":
            return "rejected", None
        return "acked", outcome


class SyncEngine:
    """Event-driven sync state machine for one site.

    All mutation happens through record_locally / execute_prefetch /
    flush_outbox / tick; callers serialize those invocations.
    """

    def __init__(
        self,
        local_store: TierStore,
        channel,
        schedule: list[ConsultationEntry] | None = None,
        horizon: int = 24 * 3600,
    ) -> None:
        self.local = local_store
        self.channel = channel
        self.schedule: list[ConsultationEntry] = list(schedule or [])
        self.horizon = horizon
        self.stats = SyncStats()
        self.outbox: dict[str, OutboxEntry] = {}
        self._forwarded: dict[str, OutboxEntry] = {}
        self._satisfied: set[str] = set()
        self._last_tick: int | None = None

    # -- local recording (forwarding side) ---------------------------------

    def record_locally(self, pip, blobs, now: int) -> OutboxEntry:
        """Store a new visit record locally and queue it for forwarding.

        Works regardless of channel state; duplicate record ids leave both
        the store and the outbox unchanged.
        """
        existing = self.outbox.get(pip.record_id) or self._forwarded.get(pip.record_id)
        if existing is not None:
            return existing
        self.local.ingest(pip, blobs, Tier.LOCAL, now=now)
        self.local.pin(pip.record_id)
        entry = OutboxEntry(record_id=pip.record_id, enqueued_at=now)
        self.outbox[pip.record_id] = entry
        return entry

    def flush_outbox(self, now: int, channel=None) -> SyncStats:
        delta = SyncStats()
        self._do_flush(channel or self.channel, now, delta)
        self.stats.add(delta)
        return delta

    def _do_flush(self, channel, cursor: int, delta: SyncStats) -> int:
        for record_id in list(self.outbox):
            entry = self.outbox[record_id]
            if not channel.up_at(cursor):
                break
            _tier, record = self.local.lookup(record_id)
            entry.state = OutboxState.IN_FLIGHT
            status, outcome = channel.send_record(record, cursor)
            if status == "down":
                entry.state = OutboxState.QUEUED
                break
            delta.wan_messages += 1
            entry.attempts += 1
            cursor += 2 * channel.latency
            if status == "acked":
                if outcome == "applied":
                    delta.records_forwarded += 1
                else:
                    delta.duplicates_suppressed += 1
                entry.state = OutboxState.ACKED
                del self.outbox[record_id]
                self._forwarded[record_id] = entry
                self.local.unpin(record_id)
            elif status == "rejected":
                entry.state = OutboxState.QUEUED  # link healthy, keep going
            else:  # lost or ack_lost: link dropped mid-transfer, stop here
                entry.state = OutboxState.QUEUED
                break
        return cursor

    # -- prefetch (consultation side) ----------------------------------------

    def execute_prefetch(self, requests, now: int, channel=None) -> SyncStats:
        delta = SyncStats()
        self._do_prefetch(channel or self.channel, requests, now, delta)
        self.stats.add(delta)
        return delta

    def _sorted_requests(self, requests):
        start_by_booking = {e.booking_id: e.start_time for e in self.schedule}
        return sorted(
            requests,
            key=lambda pb: (start_by_booking.get(pb[1], 0), pb[1], pb[0]),
        )

    def _do_prefetch(self, channel, requests, cursor: int, delta: SyncStats) -> int:
        for patient_id, booking_id in self._sorted_requests(requests):
            if booking_id in self._satisfied:
                continue
            listing = channel.folder_listing(patient_id, cursor)
            if listing is None:
                break  # channel down: defer, retry next tick
            complete = True
            for record_id in listing:
                if self.local.in_local(record_id):
                    self.local.touch(record_id)
                    delta.prefetch_hits += 1
                    continue
                status, record = channel.fetch_record(record_id, cursor)
                if status == "down":
                    complete = False
                    break
                delta.wan_messages += 1
                cursor += channel.latency
                if status == "lost":
                    complete = False
                    break
                self.local.cache_put(record)
                delta.prefetch_misses += 1
            if complete:
                self._satisfied.add(booking_id)
        return cursor

    # -- periodic drive ---------------------------------------------------------

    def tick(self, now: int) -> SyncStats:
        """One engine step: prefetch what the schedule wants, then flush the
        outbox. Deterministic given the channel schedule and store state."""
        if self._last_tick is not None and now < self._last_tick:
            raise ValueError("tick time went backwards")
        self._last_tick = now
        delta = SyncStats()
        wanted = prefetch_set(self.schedule, now, self.horizon)
        cursor = self._do_prefetch(self.channel, wanted, now, delta)
        self._do_flush(self.channel, cursor, delta)
        self.stats.add(delta)
        return delta

    # -- consult-time reads -------------------------------------------------------

    def consult_read(self, patient_id: str, now: int) -> tuple[list, int]:
        """The patient folder as read at consult time.

        Records already in the local cache cost nothing; anything the center
        has that is not cached is fetched on the spot and counted, which is
        what prefetch exists to avoid.
        """
        wan_used = 0
        listing = self.channel.folder_listing(patient_id, now)
        if listing is not None:
            cursor = now
            for record_id in listing:
                if self.local.in_local(record_id):
                    continue
                status, record = self.channel.fetch_record(record_id, cursor)
                if status == "down":
                    break
                wan_used += 1
                cursor += self.channel.latency
                if status == "lost":
                    break
                self.local.cache_put(record)
        if wan_used:
            delta = SyncStats(wan_messages=wan_used)
            self.stats.add(delta)
        return self.local.query_patient(patient_id), wan_used

    # -- schedule management -----------------------------------------------------

    def set_schedule(self, entries) -> None:
        self.schedule = list(entries)
        self._satisfied.clear()

    def mark_report_complete(self, booking_id: str) -> None:
        self.schedule = [
            ConsultationEntry(
                e.booking_id, e.patient_id, e.start_time, e.mode, True
            )
            if e.booking_id == booking_id
            else e
            for e in self.schedule
        ]
