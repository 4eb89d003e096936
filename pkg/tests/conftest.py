"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import hashlib
import random

import pytest

from medirelay.ids import new_id
from medirelay.model import (
    AssessmentPart,
    Kind,
    ObjectiveFinding,
    PlanPart,
    SubjectivePart,
    VisitMode,
    make_attachment,
    make_pip,
)
from medirelay.service import ApplicationCore, ServiceConfig


def blob_of(tag: str, length: int = 48) -> bytes:
    out = b""
    counter = 0
    while len(out) < length:
        out += hashlib.sha256(f"{tag}-{counter}".encode()).digest()
        counter += 1
    return out[:length]


def build_record(
    patient_id: str,
    problem_id: str,
    visit_time: int,
    doctor_id: str = "D-0001",
    with_image: bool = False,
    chief: str = "headache",
    record_id: str | None = None,
    tag: str = "",
):
    """A valid (pip, blobs) pair; deterministic when record_id and tag are given."""
    attachments = []
    blobs = {}
    if with_image:
        data = blob_of(tag or f"{patient_id}-{visit_time}")
        att = make_attachment(Kind.IMAGE, "Radiograph", blob=data, created_at=visit_time)
        attachments.append(att)
        blobs[att.attachment_id] = data
    pip = make_pip(
        patient_id=patient_id,
        doctor_id=doctor_id,
        visit_time=visit_time,
        mode=VisitMode.IN_PERSON,
        subjective=SubjectivePart(chief_complaint=chief),
        objective=(ObjectiveFinding(item="BP", finding="120/80"),),
        assessment=AssessmentPart(problem_id=problem_id),
        plan=PlanPart(therapeutic_plans=("rest",)),
        attachments=attachments,
        record_id=record_id,
    )
    return pip, blobs


def seeded_record(rng: random.Random, visit_time: int, n_patients: int = 20,
                  n_problems: int = 8):
    """Random but reproducible record from an rng."""
    patient = f"P-{rng.randrange(n_patients):04d}"
    problem = f"PRB-{rng.randrange(n_problems):03d}"
    rid = new_id(
        now_ms=visit_time * 1000, entropy=rng.getrandbits(80).to_bytes(10, "big")
    )
    return build_record(
        patient,
        problem,
        visit_time,
        with_image=rng.random() < 0.4,
        record_id=rid,
        tag=rid,
    )


class StepClock:
    """Deterministic clock: each call returns the current value; advance manually."""

    def __init__(self, start: int = 1704067200) -> None:
        self.now = start

    def __call__(self) -> int:
        return self.now

    def tick(self, seconds: int = 1) -> int:
        self.now += seconds
        return self.now


@pytest.fixture
def clock():
    return StepClock()


@pytest.fixture
def core_factory(tmp_path, clock):
    """Builds ApplicationCores over per-test data dirs; closes them on teardown."""
    cores = []

    def build(name: str = "site", notifier=None, crash_hook=None, **cfg) -> ApplicationCore:
        cfg.setdefault("data_dir", str(tmp_path / name))
        config = ServiceConfig(**cfg)
        core = ApplicationCore(
            config,
            clock=clock,
            notifier=notifier if notifier is not None else (lambda note: None),
            crash_hook=crash_hook,
        )
        cores.append(core)
        return core

    yield build
    for core in cores:
        core.close()
