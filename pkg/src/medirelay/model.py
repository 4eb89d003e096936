"""Per-visit medical record model.

A visit produces one immutable information package holding the four narrative
parts of the note (subjective, objective, assessment, plan) plus multimedia
attachments. Corrections never mutate a package; a follow-up package shares the
same problem id. Everything here is value-level: no storage, no I/O, safe to
use from any thread.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .canonical import canon_dumps, rfc3339_to_ts, sha256_hex, ts_to_rfc3339
from .errors import (
    AttachmentClassMismatch,
    ChecksumMismatch,
    EmptyChiefComplaint,
    EmptyObjectiveItem,
    MissingProblemId,
    RecordInvalid,
)
from .ids import new_id


class Kind(str, enum.Enum):
    TEXT = "Text"
    IMAGE = "Image"
    VIDEO = "Video"


class StorageClass(str, enum.Enum):
    TEXT = "TEXT"
    FILE = "FILE"


class VisitMode(str, enum.Enum):
    IN_PERSON = "InPerson"
    TELECONSULTATION = "Teleconsultation"
    TELEDIAGNOSIS = "Telediagnosis"


def classify_attribute(kind: Kind) -> StorageClass:
    """Storage class for an attribute kind: video and images are FILE, text is TEXT."""
    if kind in (Kind.IMAGE, Kind.VIDEO):
        return StorageClass.FILE
    return StorageClass.TEXT


@dataclass(frozen=True)
class SubjectivePart:
    chief_complaint: str
    symptom_code: str = ""
    duration: str = ""
    location: str = ""
    severity: str = ""
    description: str = ""


@dataclass(frozen=True)
class ObjectiveFinding:
    item: str
    location: str = ""
    finding: str = ""
    sign_code: str = ""
    description: str = ""


@dataclass(frozen=True)
class AssessmentPart:
    problem_id: str
    assessment_description: str = ""


@dataclass(frozen=True)
class PlanPart:
    diagnostic_plans: tuple[str, ...] = ()
    therapeutic_plans: tuple[str, ...] = ()
    prescription: str | None = None
    required_radiographs: tuple[str, ...] = ()
    required_tests: tuple[str, ...] = ()


@dataclass(frozen=True)
class Attachment:
    attachment_id: str
    kind: Kind
    attribute_name: str
    storage_class: StorageClass
    byte_len: int
    checksum: str
    created_at: int
    inline_text: str | None = None
    blob_ref: str | None = None


@dataclass(frozen=True)
class Pip:
    record_id: str
    patient_id: str
    doctor_id: str
    visit_time: int
    mode: VisitMode
    subjective: SubjectivePart
    objective: tuple[ObjectiveFinding, ...]
    assessment: AssessmentPart
    plan: PlanPart
    attachments: tuple[Attachment, ...] = ()


def make_attachment(
    kind: Kind,
    attribute_name: str,
    *,
    text: str | None = None,
    blob: bytes | None = None,
    created_at: int = 0,
    attachment_id: str | None = None,
) -> Attachment:
    """Build a well-formed attachment from raw content.

    TEXT-class attributes carry their text inline; FILE-class attributes are
    content-addressed and the caller keeps the blob bytes for the store.
    """
    storage_class = classify_attribute(kind)
    if storage_class is StorageClass.TEXT:
        if text is None:
            raise RecordInvalid(f"{kind.value} attachment needs inline text")
        data = text.encode("utf-8")
        inline_text, blob_ref = text, None
    else:
        if blob is None:
            raise RecordInvalid(f"{kind.value} attachment needs blob bytes")
        data = blob
        inline_text, blob_ref = None, "sha256:" + sha256_hex(blob)
    return Attachment(
        attachment_id=attachment_id or new_id(),
        kind=kind,
        attribute_name=attribute_name,
        storage_class=storage_class,
        byte_len=len(data),
        checksum=sha256_hex(data),
        created_at=int(created_at),
        inline_text=inline_text,
        blob_ref=blob_ref,
    )


def _validate_attachment(att: Attachment) -> None:
    expected = classify_attribute(att.kind)
    if att.storage_class is not expected:
        raise AttachmentClassMismatch(
            f"{att.kind.value} attachment {att.attachment_id} declared "
            f"{att.storage_class.value}, must be {expected.value}"
        )
    if att.storage_class is StorageClass.TEXT:
        if att.inline_text is None or att.blob_ref is not None:
            raise AttachmentClassMismatch(
                f"TEXT attachment {att.attachment_id} must carry inline text only"
            )
        data = att.inline_text.encode("utf-8")
        if att.byte_len != len(data) or att.checksum != sha256_hex(data):
            raise ChecksumMismatch(
                f"attachment {att.attachment_id} checksum does not match its text"
            )
    else:
        if att.blob_ref is None or att.inline_text is not None:
            raise AttachmentClassMismatch(
                f"FILE attachment {att.attachment_id} must carry a blob reference only"
            )
    if att.byte_len < 0:
        raise RecordInvalid(f"attachment {att.attachment_id} has negative length")


def make_pip(
    patient_id: str,
    doctor_id: str,
    visit_time: int,
    mode: VisitMode,
    subjective: SubjectivePart,
    objective,
    assessment: AssessmentPart,
    plan: PlanPart,
    attachments=(),
    *,
    record_id: str | None = None,
) -> Pip:
    """Validate the parts and assemble an immutable visit record.

    Validation failures raise; a partially built record is never returned.
    Attachment storage classes are recomputed from the kind table and the
    attachment list is normalized to ascending attachment_id order. Callers
    that need reproducible ids (simulation, replay) pass record_id explicitly.
    """
    if not subjective.chief_complaint:
        raise EmptyChiefComplaint("subjective part needs a chief complaint")
    if not assessment.problem_id:
        raise MissingProblemId("assessment part needs a problem id")
    objective = tuple(objective)
    for finding in objective:
        if not finding.item:
            raise EmptyObjectiveItem("objective finding needs a non-empty item")

    atts = []
    seen = set()
    for att in attachments:
        att = replace(att, storage_class=classify_attribute(att.kind))
        _validate_attachment(att)
        if att.attachment_id in seen:
            raise RecordInvalid(f"duplicate attachment id {att.attachment_id}")
        seen.add(att.attachment_id)
        atts.append(att)
    atts.sort(key=lambda a: a.attachment_id)

    return Pip(
        record_id=record_id or new_id(now_ms=int(visit_time) * 1000),
        patient_id=patient_id,
        doctor_id=doctor_id,
        visit_time=int(visit_time),
        mode=mode,
        subjective=subjective,
        objective=objective,
        assessment=assessment,
        plan=PlanPart(
            diagnostic_plans=tuple(plan.diagnostic_plans),
            therapeutic_plans=tuple(plan.therapeutic_plans),
            prescription=plan.prescription,
            required_radiographs=tuple(plan.required_radiographs),
            required_tests=tuple(plan.required_tests),
        ),
        attachments=tuple(atts),
    )


# -- canonical form -----------------------------------------------------------

def pip_to_dict(pip: Pip) -> dict:
    return {
        "record_id": pip.record_id,
        "patient_id": pip.patient_id,
        "doctor_id": pip.doctor_id,
        "visit_time": ts_to_rfc3339(pip.visit_time),
        "mode": pip.mode.value,
        "subjective": {
            "chief_complaint": pip.subjective.chief_complaint,
            "symptom_code": pip.subjective.symptom_code,
            "duration": pip.subjective.duration,
            "location": pip.subjective.location,
            "severity": pip.subjective.severity,
            "description": pip.subjective.description,
        },
        "objective": [
            {
                "item": f.item,
                "location": f.location,
                "finding": f.finding,
                "sign_code": f.sign_code,
                "description": f.description,
            }
            for f in pip.objective
        ],
        "assessment": {
            "problem_id": pip.assessment.problem_id,
            "assessment_description": pip.assessment.assessment_description,
        },
        "plan": {
            "diagnostic_plans": list(pip.plan.diagnostic_plans),
            "therapeutic_plans": list(pip.plan.therapeutic_plans),
            "prescription": pip.plan.prescription,
            "required_radiographs": list(pip.plan.required_radiographs),
            "required_tests": list(pip.plan.required_tests),
        },
        "attachments": [
            {
                "attachment_id": a.attachment_id,
                "kind": a.kind.value,
                "attribute_name": a.attribute_name,
                "storage_class": a.storage_class.value,
                "byte_len": a.byte_len,
                "checksum": a.checksum,
                "created_at": ts_to_rfc3339(a.created_at),
                "inline_text": a.inline_text,
                "blob_ref": a.blob_ref,
            }
            for a in pip.attachments
        ],
    }


def pip_from_dict(doc: dict) -> Pip:
    try:
        return _pip_from_dict(doc)
    except KeyError as exc:
        raise RecordInvalid(f"record document missing field {exc}") from None


def _pip_from_dict(doc: dict) -> Pip:
    sub = doc["subjective"]
    ass = doc["assessment"]
    plan = doc["plan"]
    return Pip(
        record_id=doc["record_id"],
        patient_id=doc["patient_id"],
        doctor_id=doc["doctor_id"],
        visit_time=rfc3339_to_ts(doc["visit_time"]),
        mode=VisitMode(doc["mode"]),
        subjective=SubjectivePart(
            chief_complaint=sub["chief_complaint"],
            symptom_code=sub["symptom_code"],
            duration=sub["duration"],
            location=sub["location"],
            severity=sub["severity"],
            description=sub["description"],
        ),
        objective=tuple(
            ObjectiveFinding(
                item=f["item"],
                location=f["location"],
                finding=f["finding"],
                sign_code=f["sign_code"],
                description=f["description"],
            )
            for f in doc["objective"]
        ),
        assessment=AssessmentPart(
            problem_id=ass["problem_id"],
            assessment_description=ass["assessment_description"],
        ),
        plan=PlanPart(
            diagnostic_plans=tuple(plan["diagnostic_plans"]),
            therapeutic_plans=tuple(plan["therapeutic_plans"]),
            prescription=plan["prescription"],
            required_radiographs=tuple(plan["required_radiographs"]),
            required_tests=tuple(plan["required_tests"]),
        ),
        attachments=tuple(
            Attachment(
                attachment_id=a["attachment_id"],
                kind=Kind(a["kind"]),
                attribute_name=a["attribute_name"],
                storage_class=StorageClass(a["storage_class"]),
                byte_len=a["byte_len"],
                checksum=a["checksum"],
                created_at=rfc3339_to_ts(a["created_at"]),
                inline_text=a["inline_text"],
                blob_ref=a["blob_ref"],
            )
            for a in doc["attachments"]
        ),
    )


def canonical_pip_bytes(pip: Pip) -> bytes:
    """The byte form that feeds digests, archive payloads, and the wire."""
    return canon_dumps(pip_to_dict(pip))


def pip_digest(pip: Pip) -> str:
    return sha256_hex(canonical_pip_bytes(pip))


# -- folder views -------------------------------------------------------------

def _folder_sorted(pips) -> list[Pip]:
    return sorted(pips, key=lambda p: (p.visit_time, p.record_id))


def patient_folder(pips, patient_id: str) -> list[Pip]:
    """All records of one patient, ascending by (visit_time, record_id)."""
    return _folder_sorted(p for p in pips if p.patient_id == patient_id)


def problem_folder(pips, problem_id: str) -> list[Pip]:
    """All records of one clinical case, possibly spanning patients."""
    return _folder_sorted(
        p for p in pips if p.assessment.problem_id == problem_id
    )
