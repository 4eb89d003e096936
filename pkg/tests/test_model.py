"""Record model: classification table, validation, canonical form, folders."""

import random

import pytest

from medirelay.canonical import canon_dumps, json_span, rfc3339_to_ts, ts_to_rfc3339
from medirelay.errors import (
    AttachmentClassMismatch,
    ChecksumMismatch,
    EmptyChiefComplaint,
    EmptyObjectiveItem,
    MissingProblemId,
    RecordInvalid,
)
from medirelay.model import (
    AssessmentPart,
    Kind,
    ObjectiveFinding,
    PlanPart,
    StorageClass,
    SubjectivePart,
    VisitMode,
    classify_attribute,
    canonical_pip_bytes,
    make_attachment,
    make_pip,
    patient_folder,
    pip_from_dict,
    pip_to_dict,
    problem_folder,
)

from conftest import build_record, seeded_record


class TestClassification:
    def test_video_and_image_are_file(self):
        assert classify_attribute(Kind.VIDEO) is StorageClass.FILE
        assert classify_attribute(Kind.IMAGE) is StorageClass.FILE

    def test_text_is_text(self):
        assert classify_attribute(Kind.TEXT) is StorageClass.TEXT

    def test_every_kind_is_classified(self):
        for kind in Kind:
            assert classify_attribute(kind) in (StorageClass.TEXT, StorageClass.FILE)


class TestMakeAttachment:
    def test_text_attachment_is_inline(self):
        att = make_attachment(Kind.TEXT, "Report", text="all clear")
        assert att.storage_class is StorageClass.TEXT
        assert att.inline_text == "all clear"
        assert att.blob_ref is None
        assert att.byte_len == len(b"all clear")

    def test_file_attachment_is_content_addressed(self):
        att = make_attachment(Kind.IMAGE, "Radiograph", blob=b"\x01\x02\x03")
        assert att.storage_class is StorageClass.FILE
        assert att.inline_text is None
        assert att.blob_ref == "sha256:" + att.checksum
        assert att.byte_len == 3

    def test_missing_content_rejected(self):
        with pytest.raises(RecordInvalid):
            make_attachment(Kind.TEXT, "Report")
        with pytest.raises(RecordInvalid):
            make_attachment(Kind.VIDEO, "Video")


class TestMakePip:
    def _parts(self):
        return dict(
            patient_id="P-1",
            doctor_id="D-1",
            visit_time=1_700_000_000,
            mode=VisitMode.IN_PERSON,
            subjective=SubjectivePart(chief_complaint="cough"),
            objective=(ObjectiveFinding(item="temp", finding="38.2"),),
            assessment=AssessmentPart(problem_id="PRB-1"),
            plan=PlanPart(),
        )

    def test_valid_pip_builds(self):
        pip = make_pip(**self._parts())
        assert pip.patient_id == "P-1"
        assert len(pip.record_id) == 26

    def test_empty_chief_complaint_rejected(self):
        parts = self._parts()
        parts["subjective"] = SubjectivePart(chief_complaint="")
        with pytest.raises(EmptyChiefComplaint):
            make_pip(**parts)

    def test_missing_problem_id_rejected(self):
        parts = self._parts()
        parts["assessment"] = AssessmentPart(problem_id="")
        with pytest.raises(MissingProblemId):
            make_pip(**parts)

    def test_empty_objective_item_rejected(self):
        parts = self._parts()
        parts["objective"] = (ObjectiveFinding(item=""),)
        with pytest.raises(EmptyObjectiveItem):
            make_pip(**parts)

    def test_storage_class_mismatch_rejected(self):
        bad = make_attachment(Kind.TEXT, "Report", text="x")
        # Hand-build the illegal combination the constructor refuses to make.
        bad = bad.__class__(**{**bad.__dict__, "kind": Kind.IMAGE})
        with pytest.raises(AttachmentClassMismatch):
            make_pip(**self._parts(), attachments=[bad])

    def test_corrupt_text_checksum_rejected(self):
        att = make_attachment(Kind.TEXT, "Report", text="x")
        att = att.__class__(**{**att.__dict__, "inline_text": "y"})
        with pytest.raises(ChecksumMismatch):
            make_pip(**self._parts(), attachments=[att])

    def test_duplicate_attachment_ids_rejected(self):
        att = make_attachment(Kind.TEXT, "Report", text="x", attachment_id="A" * 26)
        with pytest.raises(RecordInvalid):
            make_pip(**self._parts(), attachments=[att, att])

    def test_attachments_sorted_by_id(self):
        a2 = make_attachment(Kind.TEXT, "Report", text="x", attachment_id="2" * 26)
        a1 = make_attachment(Kind.TEXT, "Report", text="y", attachment_id="1" * 26)
        pip = make_pip(**self._parts(), attachments=[a2, a1])
        assert [a.attachment_id for a in pip.attachments] == ["1" * 26, "2" * 26]


class TestCanonicalForm:
    def test_round_trip_is_identity(self):
        rng = random.Random(11)
        for i in range(50):
            pip, _blobs = seeded_record(rng, visit_time=1_700_000_000 + i * 3600)
            again = pip_from_dict(pip_to_dict(pip))
            assert again == pip
            assert canonical_pip_bytes(again) == canonical_pip_bytes(pip)

    def test_canonical_bytes_are_sorted_compact_json(self):
        pip, _ = build_record("P-1", "PRB-1", 1_700_000_000, record_id="0" * 26)
        raw = canonical_pip_bytes(pip)
        assert raw == canon_dumps(pip_to_dict(pip))
        assert b": " not in raw and b", " not in raw
        end = json_span(raw)
        assert end == len(raw)

    def test_timestamps_are_rfc3339_utc(self):
        pip, _ = build_record("P-1", "PRB-1", 1_700_000_000, record_id="0" * 26)
        doc = pip_to_dict(pip)
        assert doc["visit_time"] == "2023-11-14T22:13:20Z"
        assert rfc3339_to_ts(ts_to_rfc3339(1_700_000_000)) == 1_700_000_000


class TestFolders:
    def test_partition_property(self):
        # Every record lands in exactly one patient folder and one problem folder.
        rng = random.Random(7)
        pips = [seeded_record(rng, 1_700_000_000 + i * 60)[0] for i in range(200)]
        patients = {p.patient_id for p in pips}
        problems = {p.assessment.problem_id for p in pips}
        by_patient = [patient_folder(pips, pid) for pid in patients]
        by_problem = [problem_folder(pips, prb) for prb in problems]
        assert sum(len(f) for f in by_patient) == len(pips)
        assert sum(len(f) for f in by_problem) == len(pips)
        seen = [p.record_id for folder in by_patient for p in folder]
        assert len(seen) == len(set(seen))

    def test_folder_order_is_visit_time_then_record_id(self):
        a, _ = build_record("P-1", "PRB-1", 200, record_id="A" * 26)
        b, _ = build_record("P-1", "PRB-1", 100, record_id="Z" * 26)
        c, _ = build_record("P-1", "PRB-1", 200, record_id="0" * 26)
        folder = patient_folder([a, b, c], "P-1")
        assert [p.record_id for p in folder] == ["Z" * 26, "0" * 26, "A" * 26]

    def test_problem_folder_filters_by_problem(self):
        a, _ = build_record("P-1", "PRB-1", 100, record_id="A" * 26)
        b, _ = build_record("P-2", "PRB-1", 200, record_id="B" * 26)
        c, _ = build_record("P-1", "PRB-2", 300, record_id="C" * 26)
        assert [p.record_id for p in problem_folder([a, b, c], "PRB-1")] == [
            "A" * 26,
            "B" * 26,
        ]
