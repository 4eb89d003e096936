"""Time-windowed archive volumes.

A sealed volume packs records created inside one time window into a single
seekable file: fixed header, sorted fixed-width index, then a payload block of
canonical record JSON followed by that record's blob bytes. Integers are
little-endian fixed-width so entries can be read without loading the payload.

Layout:

    header  "MRV1" | u32 version | u64 window_start | u64 window_end | u32 count
    index   count * (26s record_id | 26s patient_id | 26s problem_id |
                     u64 created_at | u64 offset | u64 length | 32s checksum)
    payload concatenated per-record slices; offsets are payload-relative
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

from .canonical import json_span, sha256_hex
from .errors import CorruptPayload, NotFound, OverlappingVolume, RecordInvalid
from .model import StorageClass, canonical_pip_bytes, pip_from_dict
from . import canonical

MAGIC = b"MRV1"
VERSION = 1

_HEADER = struct.Struct("<4sIQQI")
_ENTRY = struct.Struct("<26s26s26sQQQ32s")

HEADER_SIZE = _HEADER.size
ENTRY_SIZE = _ENTRY.size


@dataclass(frozen=True)
class VolumeIndexEntry:
    record_id: str
    patient_id: str
    problem_id: str
    created_at: int
    payload_offset: int
    payload_len: int
    checksum: str


@dataclass
class ArchiveVolume:
    volume_id: str
    window_start: int
    window_end: int
    index: list[VolumeIndexEntry]
    payload: bytes

    def record_ids(self) -> list[str]:
        return [e.record_id for e in self.index]

    def find(self, record_id: str) -> VolumeIndexEntry | None:
        for entry in self.index:
            if entry.record_id == record_id:
                return entry
        return None


def _pack_id(value: str) -> bytes:
    raw = value.encode("ascii")
    if len(raw) > 26:
        raise RecordInvalid(f"id {value!r} longer than the 26-byte index field")
    return raw.ljust(26, b"\x00")


def _unpack_id(raw: bytes) -> str:
    return raw.rstrip(b"\x00").decode("ascii")


def record_payload(record) -> bytes:
    """Canonical record bytes followed by its blobs in attachment-id order."""
    parts = [canonical_pip_bytes(record.pip)]
    for att in record.pip.attachments:
        if att.storage_class is StorageClass.FILE:
            parts.append(record.blobs[att.attachment_id])
    return b"".join(parts)


def build_volume(records, window_start: int, window_end: int) -> ArchiveVolume:
    """Seal records created in [window_start, window_end) into a volume.

    Every record's creation time must fall inside the window; the index comes
    out strictly sorted by (created_at, record_id) and offsets never overlap.
    """
    if window_end <= window_start:
        raise RecordInvalid("window_end must be after window_start")
    ordered = sorted(records, key=lambda r: (r.pip.visit_time, r.pip.record_id))
    entries: list[VolumeIndexEntry] = []
    chunks: list[bytes] = []
    offset = 0
    for rec in ordered:
        created = rec.pip.visit_time
        if not (window_start <= created < window_end):
            raise RecordInvalid(
                f"record {rec.pip.record_id} created at {created} outside window"
            )
        payload = record_payload(rec)
        entries.append(
            VolumeIndexEntry(
                record_id=rec.pip.record_id,
                patient_id=rec.pip.patient_id,
                problem_id=rec.pip.assessment.problem_id,
                created_at=created,
                payload_offset=offset,
                payload_len=len(payload),
                checksum=sha256_hex(payload),
            )
        )
        chunks.append(payload)
        offset += len(payload)
    return ArchiveVolume(
        volume_id=f"mrv-{window_start}-{window_end}",
        window_start=window_start,
        window_end=window_end,
        index=entries,
        payload=b"".join(chunks),
    )


def volume_to_bytes(volume: ArchiveVolume) -> bytes:
    head = _HEADER.pack(
        MAGIC, VERSION, volume.window_start, volume.window_end, len(volume.index)
    )
    rows = [
        _ENTRY.pack(
            _pack_id(e.record_id),
            _pack_id(e.patient_id),
            _pack_id(e.problem_id),
            e.created_at,
            e.payload_offset,
            e.payload_len,
            bytes.fromhex(e.checksum),
        )
        for e in volume.index
    ]
    return head + b"".join(rows) + volume.payload


def volume_from_bytes(data: bytes) -> ArchiveVolume:
    if len(data) < HEADER_SIZE:
        raise CorruptPayload("volume shorter than its header")
    magic, version, start, end, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CorruptPayload("bad magic; not an archive volume")
    if version != VERSION:
        raise CorruptPayload(f"unsupported volume version {version}")
    index_end = HEADER_SIZE + count * ENTRY_SIZE
    if len(data) < index_end:
        raise CorruptPayload("volume truncated inside its index")
    entries = []
    for i in range(count):
        rid, pid, prid, created, off, length, digest = _ENTRY.unpack_from(
            data, HEADER_SIZE + i * ENTRY_SIZE
        )
        entries.append(
            VolumeIndexEntry(
                record_id=_unpack_id(rid),
                patient_id=_unpack_id(pid),
                problem_id=_unpack_id(prid),
                created_at=created,
                payload_offset=off,
                payload_len=length,
                checksum=digest.hex(),
            )
        )
    return ArchiveVolume(
        volume_id=f"mrv-{start}-{end}",
        window_start=start,
        window_end=end,
        index=entries,
        payload=data[index_end:],
    )


def write_volume(volume: ArchiveVolume, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(volume_to_bytes(volume))
    return path


def read_volume(path) -> ArchiveVolume:
    return volume_from_bytes(Path(path).read_bytes())


def read_record(volume: ArchiveVolume, record_id: str):
    """Extract one record, verifying its payload checksum before returning it.

    Returned records report ingested_at = index created_at: the payload layout
    carries only the canonical record and blob bytes.
    """
    from .store import StoredRecord  # record container lives with the store

    entry = volume.find(record_id)
    if entry is None:
        raise NotFound(f"record {record_id} not in volume {volume.volume_id}")
    lo, hi = entry.payload_offset, entry.payload_offset + entry.payload_len
    if hi > len(volume.payload):
        raise CorruptPayload(f"record {record_id} slice runs past the payload")
    data = volume.payload[lo:hi]
    if sha256_hex(data) != entry.checksum:
        raise CorruptPayload(f"record {record_id} payload checksum mismatch")

    try:
        pip_len = json_span(data)
        pip = pip_from_dict(canonical.canon_loads(data[:pip_len]))
    except (ValueError, KeyError) as exc:
        raise CorruptPayload(f"record {record_id} payload undecodable: {exc}")
    blobs: dict[str, bytes] = {}
    cursor = pip_len
    for att in pip.attachments:
        if att.storage_class is StorageClass.FILE:
            blobs[att.attachment_id] = data[cursor : cursor + att.byte_len]
            cursor += att.byte_len
    if cursor != len(data):
        raise CorruptPayload(f"record {record_id} payload has trailing bytes")
    return StoredRecord(pip=pip, blobs=blobs, ingested_at=entry.created_at)


def verify_volume(volume: ArchiveVolume) -> list[str]:
    """All structural problems found, empty when the volume is sound."""
    problems: list[str] = []
    last_key = None
    prev_end = 0
    for entry in volume.index:
        key = (entry.created_at, entry.record_id)
        if last_key is not None and key <= last_key:
            problems.append(f"index not strictly sorted at {entry.record_id}")
        last_key = key
        if not (volume.window_start <= entry.created_at < volume.window_end):
            problems.append(f"{entry.record_id} created outside the window")
        if entry.payload_offset < prev_end:
            problems.append(f"{entry.record_id} overlaps the previous payload")
        prev_end = entry.payload_offset + entry.payload_len
        try:
            read_record(volume, entry.record_id)
        except CorruptPayload as exc:
            problems.append(str(exc))
    if prev_end != len(volume.payload):
        problems.append("payload length disagrees with the index")
    return problems


def windows_overlap(a_start: int, a_end: int, b_start: int, b_end: int) -> bool:
    return a_start < b_end and b_start < a_end


def check_window_free(volumes, window_start: int, window_end: int) -> None:
    for vol in volumes:
        if windows_overlap(window_start, window_end, vol.window_start, vol.window_end):
            raise OverlappingVolume(
                f"window [{window_start},{window_end}) intersects {vol.volume_id}"
            )
