"""Text scenarios for the sync simulator, and their transcripts.

A scenario is a line-oriented file: blank lines and `#` comments are ignored,
every other line is a directive. Values with spaces are quoted.

    seed 7
    latency 2
    horizon 86400
    tick-every 600
    end 7200
    channel 0 3600 up
    channel 3600 5400 down
    channel 5400 7200 up
    center-record t=0 patient=P-1 problem=PRB-9 chief="prior visit"
    visit t=120 patient=P-3 problem=PRB-3 chief="fever" blob=64
    consult t=1800 booking=B-1 patient=P-1 mode=teleconsultation

`channel` segments must tile [0, end) contiguously. `center-record` rows are
present at the center before the clock starts; `visit` rows are recorded at
the rural site at their time; `consult` rows both feed the prefetch schedule
and trigger a folder read at their start time. The run emits one transcript
line per event plus a closing summary, and the whole thing is a pure function
of the scenario text and the seed, so transcripts can be re-derived and
compared byte for byte.
"""

from __future__ import annotations

import hashlib
import shlex
from dataclasses import dataclass, field

from .errors import MalformedScenario
from .ids import IdStream
from .model import (
    AssessmentPart,
    Kind,
    PlanPart,
    SubjectivePart,
    VisitMode,
    make_attachment,
    make_pip,
)
from .store import RetentionPolicy, Tier, TierStore
from .sync import (
    ChannelSchedule,
    ChannelState,
    ConsultationEntry,
    SimChannel,
    SyncEngine,
    SyncStats,
)

_MODES = {
    "teleconsultation": VisitMode.TELECONSULTATION,
    "telediagnosis": VisitMode.TELEDIAGNOSIS,
}


@dataclass(frozen=True)
class VisitSpec:
    time: int
    patient_id: str
    problem_id: str
    doctor_id: str
    chief_complaint: str
    blob_len: int = 0


@dataclass
class Scenario:
    seed: int = 0
    latency: int = 1
    horizon: int = 24 * 3600
    tick_every: int = 600
    end: int = 0
    segments: list[tuple[int, int, ChannelState]] = field(default_factory=list)
    center_records: list[VisitSpec] = field(default_factory=list)
    visits: list[VisitSpec] = field(default_factory=list)
    consults: list[ConsultationEntry] = field(default_factory=list)


def _kv(parts: list[str], lineno: int) -> dict[str, str]:
    out = {}
    for part in parts:
        if "=" not in part:
            raise MalformedScenario(f"line {lineno}: expected key=value, got {part!r}")
        key, value = part.split("=", 1)
        out[key] = value
    return out


def _int(kv: dict, key: str, lineno: int, default=None) -> int:
    if key not in kv:
        if default is None:
            raise MalformedScenario(f"line {lineno}: missing {key}=")
        return default
    try:
        return int(kv[key])
    except ValueError:
        raise MalformedScenario(f"line {lineno}: {key} must be an integer") from None


def _visit_spec(kv: dict, lineno: int) -> VisitSpec:
    t = _int(kv, "t", lineno)
    patient = kv.get("patient")
    if not patient:
        raise MalformedScenario(f"line {lineno}: missing patient=")
    return VisitSpec(
        time=t,
        patient_id=patient,
        problem_id=kv.get("problem", f"PRB-{patient}"),
        doctor_id=kv.get("doctor", "D-0001"),
        chief_complaint=kv.get("chief", "routine visit"),
        blob_len=_int(kv, "blob", lineno, default=0),
    )


def parse_scenario(text: str) -> Scenario:
    sc = Scenario()
    saw_end = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            parts = shlex.split(line)
        except ValueError as exc:
            raise MalformedScenario(f"line {lineno}: {exc}") from None
        word, args = parts[0], parts[1:]
        if word in ("seed", "latency", "horizon", "tick-every", "end"):
            if len(args) != 1:
                raise MalformedScenario(f"line {lineno}: {word} takes one value")
            try:
                value = int(args[0])
            except ValueError:
                raise MalformedScenario(f"line {lineno}: {word} must be an integer") from None
            if word == "seed":
                sc.seed = value
            elif word == "latency":
                sc.latency = value
            elif word == "horizon":
                sc.horizon = value
            elif word == "tick-every":
                sc.tick_every = value
            else:
                sc.end = value
                saw_end = True
        elif word == "channel":
            if len(args) != 3 or args[2] not in ("up", "down"):
                raise MalformedScenario(f"line {lineno}: usage: channel START END up|down")
            try:
                start, end = int(args[0]), int(args[1])
            except ValueError:
                raise MalformedScenario(f"line {lineno}: channel bounds must be integers") from None
            state = ChannelState.UP if args[2] == "up" else ChannelState.DOWN
            sc.segments.append((start, end, state))
        elif word == "center-record":
            sc.center_records.append(_visit_spec(_kv(args, lineno), lineno))
        elif word == "visit":
            sc.visits.append(_visit_spec(_kv(args, lineno), lineno))
        elif word == "consult":
            kv = _kv(args, lineno)
            mode = _MODES.get(kv.get("mode", "teleconsultation"))
            if mode is None:
                raise MalformedScenario(f"line {lineno}: unknown mode {kv.get('mode')!r}")
            booking = kv.get("booking")
            patient = kv.get("patient")
            if not booking or not patient:
                raise MalformedScenario(f"line {lineno}: consult needs booking= and patient=")
            sc.consults.append(
                ConsultationEntry(
                    booking_id=booking,
                    patient_id=patient,
                    start_time=_int(kv, "t", lineno),
                    mode=mode,
                    report_complete=kv.get("report-complete", "no") in ("yes", "true", "1"),
                )
            )
        else:
            raise MalformedScenario(f"line {lineno}: unknown directive {word!r}")
    if not saw_end or sc.end <= 0:
        raise MalformedScenario("scenario needs a positive end time")
    if sc.latency <= 0:
        raise MalformedScenario("latency must be positive")
    if sc.tick_every <= 0:
        raise MalformedScenario("tick-every must be positive")
    _check_segments(sc)
    return sc


def _check_segments(sc: Scenario) -> None:
    if not sc.segments:
        raise MalformedScenario("scenario needs at least one channel segment")
    cursor = 0
    for start, end, _state in sc.segments:
        if start != cursor:
            raise MalformedScenario(
                f"channel segments must tile the timeline: gap or overlap at t={start}"
            )
        if end <= start:
            raise MalformedScenario(f"empty channel segment at t={start}")
        cursor = end
    if cursor < sc.end:
        raise MalformedScenario(f"channel schedule ends at t={cursor}, before end={sc.end}")


def _blob_bytes(seed: int, index: int, length: int) -> bytes:
    out = b""
    counter = 0
    while len(out) < length:
        out += hashlib.sha256(f"blob-{seed}-{index}-{counter}".encode()).digest()
        counter += 1
    return out[:length]


def _build_record(spec: VisitSpec, record_id: str, seed: int, index: int):
    attachments = []
    blobs = {}
    if spec.blob_len > 0:
        att = make_attachment(
            Kind.IMAGE,
            "Image",
            blob=_blob_bytes(seed, index, spec.blob_len),
            created_at=spec.time,
        )
        attachments.append(att)
        blobs[att.attachment_id] = _blob_bytes(seed, index, spec.blob_len)
    pip = make_pip(
        patient_id=spec.patient_id,
        doctor_id=spec.doctor_id,
        visit_time=spec.time,
        mode=VisitMode.IN_PERSON,
        subjective=SubjectivePart(chief_complaint=spec.chief_complaint),
        objective=(),
        assessment=AssessmentPart(problem_id=spec.problem_id),
        plan=PlanPart(),
        attachments=attachments,
        record_id=record_id,
    )
    return pip, blobs


@dataclass
class SimResult:
    lines: list[str]
    stats: SyncStats
    rural: TierStore
    center: TierStore
    engine: SyncEngine
    scenario: Scenario

    @property
    def transcript(self) -> str:
        return "\n".join(self.lines) + "\n"


def run_scenario(scenario: Scenario, seed: int | None = None) -> SimResult:
    """Run the scenario and produce its transcript.

    Pure function of (scenario, seed): record ids come from a hash-chained
    stream, the channel follows its segment schedule, and events at equal
    times play in a fixed order (visits, then consults, then the tick).
    """
    eff_seed = scenario.seed if seed is None else seed
    ids = IdStream(f"sim-{eff_seed}".encode())
    center = TierStore()
    rural = TierStore(RetentionPolicy(local_capacity=100_000))
    channel = SimChannel(
        ChannelSchedule(seed=eff_seed, segments=list(scenario.segments), latency=scenario.latency),
        center,
    )
    engine = SyncEngine(rural, channel, schedule=scenario.consults, horizon=scenario.horizon)

    for i, spec in enumerate(scenario.center_records):
        pip, blobs = _build_record(spec, ids.next_id(spec.time), eff_seed, i)
        center.ingest(pip, blobs, Tier.MAIN, now=spec.time)

    base = len(scenario.center_records)
    visit_records = [
        (spec, _build_record(spec, ids.next_id(spec.time), eff_seed, base + i))
        for i, spec in enumerate(scenario.visits)
    ]

    events: list[tuple[int, int, int, object]] = []
    for i, (spec, built) in enumerate(visit_records):
        events.append((spec.time, 0, i, ("visit", spec, built)))
    for i, entry in enumerate(scenario.consults):
        if entry.start_time <= scenario.end:
            events.append((entry.start_time, 1, i, ("consult", entry)))
    t = 0
    i = 0
    while t <= scenario.end:
        events.append((t, 2, i, ("tick",)))
        t += scenario.tick_every
        i += 1
    events.sort(key=lambda e: (e[0], e[1], e[2]))

    lines = [
        f"t=0 ev=start seed={eff_seed} latency={scenario.latency} "
        f"horizon={scenario.horizon} tick-every={scenario.tick_every} end={scenario.end}"
    ]
    for when, _prio, _idx, payload in events:
        if payload[0] == "visit":
            spec, (pip, blobs) = payload[1], payload[2]
            engine.record_locally(pip, blobs, now=when)
            lines.append(
                f"t={when} ev=visit patient={spec.patient_id} problem={spec.problem_id} "
                f"record={pip.record_id} outbox={len(engine.outbox)}"
            )
        elif payload[0] == "consult":
            entry = payload[1]
            folder, wan_used = engine.consult_read(entry.patient_id, now=when)
            lines.append(
                f"t={when} ev=consult booking={entry.booking_id} patient={entry.patient_id} "
                f"mode={entry.mode.value} records={len(folder)} wan={wan_used}"
            )
        else:
            delta = engine.tick(when)
            lines.append(
                f"t={when} ev=tick wan={delta.wan_messages} fwd={delta.records_forwarded} "
                f"dup={delta.duplicates_suppressed} phits={delta.prefetch_hits} "
                f"pmiss={delta.prefetch_misses} outbox={len(engine.outbox)}"
            )
    s = engine.stats
    lines.append(
        f"t={scenario.end} ev=end wan={s.wan_messages} fwd={s.records_forwarded} "
        f"dup={s.duplicates_suppressed} phits={s.prefetch_hits} pmiss={s.prefetch_misses} "
        f"outbox={len(engine.outbox)} rural={len(rural.record_ids())} "
        f"center={len(center.record_ids())}"
    )
    for record_id in sorted(center.record_ids()):
        lines.append(f"t={scenario.end} ev=center-record record={record_id}")
    return SimResult(
        lines=lines, stats=s, rural=rural, center=center, engine=engine, scenario=scenario
    )


def verify_transcript(
    scenario: Scenario, transcript: str, seed: int | None = None
) -> tuple[bool, str | None]:
    """Replay the scenario and compare against a recorded transcript.

    Returns (ok, first_mismatch): the mismatch is a human-readable line
    pointing at the first divergence, or None when the transcript matches.
    """
    expected = run_scenario(scenario, seed=seed).lines
    got = [line.rstrip("\n") for line in transcript.splitlines()]
    for i, (a, b) in enumerate(zip(expected, got), start=1):
        if a != b:
            return False, f"line {i}: expected {a!r}, got {b!r}"
    if len(expected) != len(got):
        return False, (
            f"length mismatch: expected {len(expected)} lines, got {len(got)}"
        )
    return True, None
