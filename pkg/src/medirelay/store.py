"""Three-tier record store.

Local is a bounded cache for the site currently working (records awaiting
forwarding are pinned there and never evicted); Main holds recent visits;
LongTerm holds records migrated out of Main, buffered until they are sealed
into time-windowed archive volumes. Queries are tier-transparent: the same
folder comes back no matter where each record currently lives.

One writer at a time mutates the store; an internal lock serializes mutations
and keeps concurrent readers consistent.
"""

from __future__ import annotations

import base64
import enum
import threading
from collections import OrderedDict
from dataclasses import dataclass, field

from .canonical import sha256_hex
from .errors import ChecksumMismatch, MissingBlob, NotFound, RecordInvalid, TierSealed
from .model import Pip, StorageClass, pip_from_dict, pip_to_dict
from . import volume as volume_format


class Tier(str, enum.Enum):
    LOCAL = "Local"
    MAIN = "Main"
    LONG_TERM = "LongTerm"


@dataclass
class RetentionPolicy:
    main_retention: int = 90 * 86400  # seconds
    local_capacity: int = 1024

    def __post_init__(self) -> None:
        if self.main_retention <= 0:
            raise ValueError("main_retention must be positive")
        if self.local_capacity <= 0:
            raise ValueError("local_capacity must be positive")


@dataclass(frozen=True)
class StoredRecord:
    pip: Pip
    blobs: dict[str, bytes] = field(default_factory=dict)
    ingested_at: int = 0


def record_to_dict(record: StoredRecord) -> dict:
    """Wire/event-log form of a stored record; blobs travel base64-encoded."""
    return {
        "pip": pip_to_dict(record.pip),
        "blobs": {
            aid: base64.b64encode(data).decode("ascii")
            for aid, data in sorted(record.blobs.items())
        },
        "ingested_at": record.ingested_at,
    }


def record_from_dict(doc: dict) -> StoredRecord:
    try:
        return StoredRecord(
            pip=pip_from_dict(doc["pip"]),
            blobs={aid: base64.b64decode(b64) for aid, b64 in doc["blobs"].items()},
            ingested_at=int(doc["ingested_at"]),
        )
    except KeyError as exc:
        raise RecordInvalid(f"record document missing field {exc}") from None


def check_blobs(pip: Pip, blobs: dict[str, bytes]) -> None:
    """Blobs must cover exactly the FILE attachments and match their checksums."""
    file_ids = {
        a.attachment_id: a for a in pip.attachments
        if a.storage_class is StorageClass.FILE
    }
    missing = set(file_ids) - set(blobs)
    if missing:
        raise MissingBlob(
            f"record {pip.record_id} missing blobs for {sorted(missing)}"
        )
    extra = set(blobs) - set(file_ids)
    if extra:
        raise MissingBlob(f"record {pip.record_id} has unexpected blobs {sorted(extra)}")
    for aid, att in file_ids.items():
        data = blobs[aid]
        if len(data) != att.byte_len or sha256_hex(data) != att.checksum:
            raise ChecksumMismatch(
                f"record {pip.record_id} attachment {aid} blob does not match"
            )


class TierStore:
    def __init__(self, policy: RetentionPolicy | None = None) -> None:
        self.policy = policy or RetentionPolicy()
        self._lock = threading.RLock()
        self._main: dict[str, StoredRecord] = {}
        self._lt_buffer: dict[str, StoredRecord] = {}
        self._volumes: list[volume_format.ArchiveVolume] = []
        self._local: OrderedDict[str, StoredRecord] = OrderedDict()
        self._pinned: set[str] = set()

    # -- ingest / lookup -------------------------------------------------

    def ingest(self, pip: Pip, blobs: dict[str, bytes], tier: Tier, now: int = 0) -> str:
        """Store a record in a tier; re-ingesting the same record id is a no-op.

        A Local cache copy does not block ingest into Main: Main and LongTerm
        are the authoritative tiers, Local only ever duplicates them.
        """
        if tier is Tier.LONG_TERM:
            raise TierSealed("LongTerm accepts records only through volume packing")
        check_blobs(pip, blobs)
        record = StoredRecord(pip=pip, blobs=dict(blobs), ingested_at=int(now))
        with self._lock:
            if tier is Tier.MAIN:
                if pip.record_id not in self._main and not self._in_long_term(pip.record_id):
                    self._main[pip.record_id] = record
            else:
                if pip.record_id not in self._local:
                    self._local[pip.record_id] = record
                    self._local.move_to_end(pip.record_id)
                    self._evict_over_capacity(exempt=pip.record_id)
        return pip.record_id

    def _in_long_term(self, record_id: str) -> bool:
        if record_id in self._lt_buffer:
            return True
        return any(vol.find(record_id) is not None for vol in self._volumes)

    def _find(self, record_id: str):
        if record_id in self._local:
            return Tier.LOCAL, self._local[record_id]
        if record_id in self._main:
            return Tier.MAIN, self._main[record_id]
        if record_id in self._lt_buffer:
            return Tier.LONG_TERM, self._lt_buffer[record_id]
        for vol in self._volumes:
            if vol.find(record_id) is not None:
                return Tier.LONG_TERM, volume_format.read_record(vol, record_id)
        return None

    def lookup(self, record_id: str) -> tuple[Tier, StoredRecord]:
        """First hit searching Local, then Main, then the long-term archive."""
        with self._lock:
            hit = self._find(record_id)
            if hit is None:
                raise NotFound(f"record {record_id} not stored in any tier")
            tier, record = hit
            if tier is Tier.LOCAL:
                self._local.move_to_end(record_id)
            return tier, record

    def contains(self, record_id: str) -> bool:
        with self._lock:
            return self._find(record_id) is not None

    # -- folder queries ----------------------------------------------------

    def _all_pips(self) -> list[Pip]:
        seen: dict[str, Pip] = {}
        for rec in self._local.values():
            seen.setdefault(rec.pip.record_id, rec.pip)
        for rec in self._main.values():
            seen.setdefault(rec.pip.record_id, rec.pip)
        for rec in self._lt_buffer.values():
            seen.setdefault(rec.pip.record_id, rec.pip)
        for vol in self._volumes:
            for entry in vol.index:
                if entry.record_id not in seen:
                    seen[entry.record_id] = volume_format.read_record(
                        vol, entry.record_id
                    ).pip
        return list(seen.values())

    def query_patient(self, patient_id: str) -> list[Pip]:
        with self._lock:
            candidates = [p for p in self._all_pips() if p.patient_id == patient_id]
        return sorted(candidates, key=lambda p: (p.visit_time, p.record_id))

    def query_problem(self, problem_id: str) -> list[Pip]:
        with self._lock:
            candidates = [
                p for p in self._all_pips() if p.assessment.problem_id == problem_id
            ]
        return sorted(candidates, key=lambda p: (p.visit_time, p.record_id))

    def patient_records(self, patient_id: str) -> list[StoredRecord]:
        """Full stored records (with blobs) of a patient, folder-ordered."""
        with self._lock:
            out = {}
            for pip in self._all_pips():
                if pip.patient_id == patient_id:
                    out[pip.record_id] = self._find(pip.record_id)[1]
        return sorted(out.values(), key=lambda r: (r.pip.visit_time, r.pip.record_id))

    # -- migration / archival ----------------------------------------------

    def migrate(self, now: int, policy: RetentionPolicy | None = None) -> list[str]:
        """Move Main records older than the retention window into the long-term
        buffer. Strict inequality: a record aged exactly the retention stays."""
        policy = policy or self.policy
        cutoff = int(now) - policy.main_retention
        moved = []
        with self._lock:
            for rid in sorted(self._main):
                if self._main[rid].pip.visit_time < cutoff:
                    self._lt_buffer[rid] = self._main.pop(rid)
                    moved.append(rid)
        return moved

    def pack_volume(self, window_start: int, window_end: int) -> volume_format.ArchiveVolume:
        """Seal buffered long-term records inside the window into an immutable
        volume. An empty window seals an empty volume; overlapping a sealed
        volume's window raises."""
        with self._lock:
            volume_format.check_window_free(self._volumes, window_start, window_end)
            chosen = [
                rec for rec in self._lt_buffer.values()
                if window_start <= rec.pip.visit_time < window_end
            ]
            vol = volume_format.build_volume(chosen, window_start, window_end)
            for rec in chosen:
                del self._lt_buffer[rec.pip.record_id]
            self._volumes.append(vol)
        return vol

    def read_from_volume(self, volume_id: str, record_id: str) -> StoredRecord:
        with self._lock:
            for vol in self._volumes:
                if vol.volume_id == volume_id:
                    return volume_format.read_record(vol, record_id)
        raise NotFound(f"no sealed volume {volume_id}")

    @property
    def volumes(self) -> list[volume_format.ArchiveVolume]:
        with self._lock:
            return list(self._volumes)

    # -- local cache ---------------------------------------------------------

    def cache_put(self, record: StoredRecord) -> list[str]:
        """Cache a record in Local, evicting least-recently-used unpinned
        records once the cache runs past capacity."""
        check_blobs(record.pip, record.blobs)
        with self._lock:
            self._local[record.pip.record_id] = record
            self._local.move_to_end(record.pip.record_id)
            return self._evict_over_capacity(exempt=record.pip.record_id)

    def _evict_over_capacity(self, exempt: str | None = None) -> list[str]:
        """Evict oldest unpinned entries past capacity.

        The record being inserted (exempt) is never its own victim; when
        everything else is pinned the cache simply runs over capacity, which
        is what store-and-forward needs during a long outage.
        """
        evicted = []
        while len(self._local) > self.policy.local_capacity:
            victim = next(
                (
                    rid
                    for rid in self._local
                    if rid not in self._pinned and rid != exempt
                ),
                None,
            )
            if victim is None:
                break
            del self._local[victim]
            evicted.append(victim)
        return evicted

    def touch(self, record_id: str) -> None:
        with self._lock:
            if record_id in self._local:
                self._local.move_to_end(record_id)

    def in_local(self, record_id: str) -> bool:
        with self._lock:
            return record_id in self._local

    def pin(self, record_id: str) -> None:
        with self._lock:
            self._pinned.add(record_id)

    def unpin(self, record_id: str) -> None:
        with self._lock:
            self._pinned.discard(record_id)

    # -- bookkeeping -----------------------------------------------------------

    def tier_counts(self) -> dict[Tier, int]:
        with self._lock:
            archived = sum(len(v.index) for v in self._volumes)
            return {
                Tier.LOCAL: len(self._local),
                Tier.MAIN: len(self._main),
                Tier.LONG_TERM: len(self._lt_buffer) + archived,
            }

    def record_ids(self) -> set[str]:
        with self._lock:
            ids = set(self._local) | set(self._main) | set(self._lt_buffer)
            for vol in self._volumes:
                ids.update(vol.record_ids())
            return ids

    # -- snapshot support --------------------------------------------------------

    def state_dict(self) -> dict:
        """Plain-data image of every tier. Local entries keep LRU order;
        sealed volumes travel as their exact on-disk bytes."""
        with self._lock:
            return {
                "local": [record_to_dict(r) for r in self._local.values()],
                "main": [record_to_dict(self._main[rid]) for rid in sorted(self._main)],
                "lt_buffer": [
                    record_to_dict(self._lt_buffer[rid]) for rid in sorted(self._lt_buffer)
                ],
                "volumes": [
                    base64.b64encode(volume_format.volume_to_bytes(v)).decode("ascii")
                    for v in self._volumes
                ],
                "pinned": sorted(self._pinned),
            }

    def load_state(self, doc: dict) -> None:
        with self._lock:
            self._local = OrderedDict(
                (r.pip.record_id, r)
                for r in (record_from_dict(d) for d in doc["local"])
            )
            self._main = {
                r.pip.record_id: r
                for r in (record_from_dict(d) for d in doc["main"])
            }
            self._lt_buffer = {
                r.pip.record_id: r
                for r in (record_from_dict(d) for d in doc["lt_buffer"])
            }
            self._volumes = [
                volume_format.volume_from_bytes(base64.b64decode(b))
                for b in doc["volumes"]
            ]
            self._pinned = set(doc["pinned"])
