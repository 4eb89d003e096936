"""Command line: archive pack/verify/ls, sim run/verify, admin, serve."""

import json
import socket

import pytest

from medirelay.canonical import ts_to_rfc3339
from medirelay.cli import main
from medirelay.scenario import parse_scenario, run_scenario
from medirelay.service import ApplicationCore, ServiceConfig
from medirelay.store import StoredRecord, record_to_dict

from conftest import StepClock, build_record

T0 = 1704067200

SCENARIO = """\
seed 7
latency 1
horizon 3600
tick-every 300
end 7200

channel 0 1800 up
channel 1800 3600 down
channel 3600 7200 up

center-record t=0 patient=P-1 problem=PRB-9 chief="prior visit" blob=32
visit t=120 patient=P-3 problem=PRB-3 chief="fever" blob=64
visit t=2000 patient=P-4 chief="cough during outage"
consult t=4000 booking=B-1 patient=P-1 mode=teleconsultation
"""


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def center_dir(tmp_path):
    """A closed center data dir holding two archived-age records plus a
    config file with a short retention so `archive pack` migrates them."""
    data_dir = str(tmp_path / "data")
    config_path = tmp_path / "service.json"
    config_path.write_text(json.dumps({"data_dir": data_dir, "main_retention": 100}))
    core = ApplicationCore(
        ServiceConfig(data_dir=data_dir, main_retention=100),
        clock=StepClock(start=T0),
    )
    records = []
    for i, offset in enumerate((100, 200)):
        pip, blobs = build_record(
            f"P-{i}", f"PRB-{i}", T0 + offset,
            with_image=(i == 0), record_id=f"CLI{i:023d}",
        )
        core.submit(
            "ingest_record",
            {"record": record_to_dict(StoredRecord(pip, blobs, T0 + offset))},
        )
        records.append((pip, blobs))
    core.close()
    return str(config_path), data_dir, records


class TestArchiveCli:
    def test_pack_verify_ls_round_trip(self, capsys, center_dir):
        config_path, data_dir, records = center_dir
        code, out, err = run_cli(
            capsys, "archive", "pack",
            "--window", str(T0), str(T0 + 300),
            "--now", str(T0 + 10_000),
            "--config", config_path,
        )
        assert code == 0, err
        volume_id, count, path = out.strip().split("\t")
        assert volume_id == f"mrv-{T0}-{T0 + 300}"
        assert count == "2"
        assert path == f"{data_dir}/volumes/{volume_id}.mrv"

        code, out, _ = run_cli(capsys, "archive", "verify", path)
        assert code == 0
        assert out.strip() == f"OK\t{volume_id}\t2 records"

        code, out, _ = run_cli(capsys, "archive", "ls", path)
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "record_id\tpatient_id\tproblem_id\tcreated\tbytes\tsha256"
        rows = [line.split("\t") for line in lines[1:]]
        assert [r[0] for r in rows] == sorted(p.record_id for p, _ in records)
        by_id = {p.record_id: (p, b) for p, b in records}
        for record_id, patient_id, problem_id, created, size, digest in rows:
            pip, _ = by_id[record_id]
            assert patient_id == pip.patient_id
            assert problem_id == pip.assessment.problem_id
            assert created == ts_to_rfc3339(pip.visit_time)
            assert int(size) > 0
            assert len(digest) == 12 and int(digest, 16) >= 0

    def test_verify_flags_a_flipped_byte(self, capsys, center_dir, tmp_path):
        config_path, _, _ = center_dir
        code, out, _ = run_cli(
            capsys, "archive", "pack",
            "--window", str(T0), str(T0 + 300),
            "--now", str(T0 + 10_000),
            "--config", config_path,
        )
        assert code == 0
        path = out.strip().split("\t")[2]
        blob = bytearray(open(path, "rb").read())
        blob[-10] ^= 0xFF  # payload byte, not header
        broken = tmp_path / "broken.mrv"
        broken.write_bytes(bytes(blob))

        code, out, _ = run_cli(capsys, "archive", "verify", str(broken))
        assert code == 1
        assert out.startswith("FAIL\t")

    def test_overlapping_window_is_refused(self, capsys, center_dir):
        config_path, _, _ = center_dir
        args = ("--now", str(T0 + 10_000), "--config", config_path)
        code, _, _ = run_cli(
            capsys, "archive", "pack", "--window", str(T0), str(T0 + 150), *args
        )
        assert code == 0
        code, out, err = run_cli(
            capsys, "archive", "pack", "--window", str(T0 + 100), str(T0 + 300), *args
        )
        assert code == 1 and out == ""
        assert err.startswith("error:") and "intersects" in err

    def test_adjacent_window_packs_the_remaining_record(self, capsys, center_dir):
        config_path, _, _ = center_dir
        args = ("--now", str(T0 + 10_000), "--config", config_path)
        code, out, _ = run_cli(
            capsys, "archive", "pack", "--window", str(T0), str(T0 + 150), *args
        )
        assert code == 0 and out.split("\t")[1] == "1"
        code, out, _ = run_cli(
            capsys, "archive", "pack", "--window", str(T0 + 150), str(T0 + 300), *args
        )
        assert code == 0 and out.split("\t")[1] == "1"

    def test_pack_refuses_while_the_service_holds_the_lock(self, capsys, center_dir):
        config_path, data_dir, _ = center_dir
        live = ApplicationCore(ServiceConfig(data_dir=data_dir, main_retention=100))
        try:
            code, _, err = run_cli(
                capsys, "archive", "pack",
                "--window", str(T0), str(T0 + 300), "--config", config_path,
            )
            assert code == 1
            assert err.startswith("error:")
        finally:
            live.close()

    def test_missing_volume_file(self, capsys):
        code, _, err = run_cli(capsys, "archive", "verify", "/nonexistent/a.mrv")
        assert code == 1 and err.startswith("error:")


class TestSimCli:
    @pytest.fixture
    def scenario_path(self, tmp_path):
        path = tmp_path / "outage.scn"
        path.write_text(SCENARIO)
        return str(path)

    def test_run_prints_the_transcript(self, capsys, scenario_path):
        code, out, err = run_cli(capsys, "sim", "run", scenario_path)
        assert code == 0 and err == ""
        expected = run_scenario(parse_scenario(SCENARIO), seed=None).transcript
        assert out == expected
        assert "ev=start seed=7 " in out.splitlines()[0]

    def test_seed_flag_overrides_the_file(self, capsys, scenario_path):
        code, out, _ = run_cli(capsys, "sim", "run", scenario_path, "--seed", "99")
        assert code == 0
        assert "ev=start seed=99 " in out.splitlines()[0]

    def test_report_dir_writes_transcript_and_figures(
        self, capsys, scenario_path, tmp_path
    ):
        report_dir = tmp_path / "report"
        code, out, err = run_cli(
            capsys, "sim", "run", scenario_path, "--report-dir", str(report_dir)
        )
        assert code == 0
        names = sorted(p.name for p in report_dir.iterdir())
        assert names == ["sync_timeline.png", "sync_traffic.png", "transcript.txt"]
        assert (report_dir / "transcript.txt").read_text() == out
        for name in names:
            if name.endswith(".png"):
                header = (report_dir / name).read_bytes()[:8]
                assert header == b"\x89PNG\r\n\x1a\n"
        assert err.count("wrote ") == 3

    def test_verify_accepts_its_own_run(self, capsys, scenario_path, tmp_path):
        _, out, _ = run_cli(capsys, "sim", "run", scenario_path)
        transcript = tmp_path / "transcript.txt"
        transcript.write_text(out)
        code, out, _ = run_cli(capsys, "sim", "verify", scenario_path, str(transcript))
        assert code == 0 and out.strip() == "transcript matches"

    def test_verify_rejects_a_doctored_line(self, capsys, scenario_path, tmp_path):
        _, out, _ = run_cli(capsys, "sim", "run", scenario_path)
        lines = out.splitlines()
        lines[3] = lines[3].replace("outbox=", "outbox=9")
        transcript = tmp_path / "transcript.txt"
        transcript.write_text("\n".join(lines) + "\n")
        code, out, _ = run_cli(capsys, "sim", "verify", scenario_path, str(transcript))
        assert code == 1
        assert out.startswith("transcript mismatch: line 4:")

    def test_verify_rejects_a_different_seed(self, capsys, scenario_path, tmp_path):
        _, out, _ = run_cli(capsys, "sim", "run", scenario_path, "--seed", "99")
        transcript = tmp_path / "transcript.txt"
        transcript.write_text(out)
        code, _, _ = run_cli(capsys, "sim", "verify", scenario_path, str(transcript))
        assert code == 1

    def test_malformed_scenario_reports_the_line(self, capsys, tmp_path):
        path = tmp_path / "bad.scn"
        path.write_text("end 100\nchannel 0 50 up\nchannel 50 100 sideways\n")
        code, _, err = run_cli(capsys, "sim", "run", str(path))
        assert code == 1 and err.startswith("error:")

    def test_missing_scenario_file(self, capsys):
        code, _, err = run_cli(capsys, "sim", "run", "/nonexistent/x.scn")
        assert code == 1 and err.startswith("error:")


class TestAdminCli:
    def make_pending_doctor(self, data_dir, email):
        core = ApplicationCore(
            ServiceConfig(data_dir=data_dir), clock=StepClock(start=T0)
        )
        try:
            reg = core.submit(
                "register_doctor", {"email": email, "profile": {"name": "Dr X"}}
            )
            core.submit(
                "activate",
                {"token": reg["activation_token"], "pw_salt": "s", "pw_hash": "h"},
            )
            return reg["account_id"]
        finally:
            core.close()

    def test_list_pending_then_approve(self, capsys, tmp_path):
        data_dir = str(tmp_path / "data")
        doctor_id = self.make_pending_doctor(data_dir, "doc@clinic.example")

        code, out, _ = run_cli(capsys, "admin", "list-pending", "--data-dir", data_dir)
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "account_id\temail\tname"
        assert lines[1] == f"{doctor_id}\tdoc@clinic.example\tDr X"

        code, out, _ = run_cli(
            capsys, "admin", "approve-doctor", doctor_id, "--data-dir", data_dir
        )
        assert code == 0 and out.strip() == f"{doctor_id}\tActive"

        code, out, _ = run_cli(capsys, "admin", "list-pending", "--data-dir", data_dir)
        assert code == 0 and out.strip() == "account_id\temail\tname"

        # The decision persisted: a fresh core sees the doctor active.
        core = ApplicationCore(ServiceConfig(data_dir=data_dir))
        try:
            assert core.portal.accounts[doctor_id].state.value == "Active"
        finally:
            core.close()

    def test_delete_decision(self, capsys, tmp_path):
        data_dir = str(tmp_path / "data")
        doctor_id = self.make_pending_doctor(data_dir, "doc@clinic.example")
        code, out, _ = run_cli(
            capsys, "admin", "approve-doctor", doctor_id,
            "--decision", "Delete", "--data-dir", data_dir,
        )
        assert code == 0 and out.strip() == f"{doctor_id}\tDeleted"

    def test_approve_unknown_account(self, capsys, tmp_path):
        data_dir = str(tmp_path / "data")
        code, _, err = run_cli(
            capsys, "admin", "approve-doctor", "ACC-NOPE", "--data-dir", data_dir
        )
        assert code == 1 and err.startswith("error:")

    def test_seed_demo_populates_a_working_portal(self, capsys, tmp_path):
        data_dir = str(tmp_path / "data")
        code, out, _ = run_cli(capsys, "admin", "seed-demo", "--data-dir", data_dir)
        assert code == 0
        rows = dict(line.split("\t", 1) for line in out.strip().split("\n"))
        assert len(rows["doctors"].split()) == 2
        assert len(rows["patients"].split()) == 3
        assert rows["password"] == "demo-pass"

        core = ApplicationCore(ServiceConfig(data_dir=data_dir))
        try:
            assert core.portal.pending_doctors() == []
            booking = core.portal.bookings[rows["booking"]]
            assert booking.status.value == "Requested"
            doctor = core.portal.accounts[rows["doctors"].split()[0]]
            assert core.portal.check_password(
                doctor.email, "demo-pass"
            ).account_id == doctor.account_id
        finally:
            core.close()

    def test_no_data_dir_is_a_config_error(self, capsys, monkeypatch):
        monkeypatch.delenv("MEDIRELAY_CONFIG", raising=False)
        code, _, err = run_cli(capsys, "admin", "list-pending")
        assert code == 1 and err.startswith("error:")


class TestServe:
    def test_refuses_an_occupied_port(self, capsys, tmp_path):
        taken = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        taken.bind(("127.0.0.1", 0))
        port = taken.getsockname()[1]
        try:
            code, _, err = run_cli(
                capsys, "serve",
                "--data-dir", str(tmp_path / "data"),
                "--host", "127.0.0.1", "--port", str(port),
            )
            assert code == 1
            assert "cannot bind" in err
        finally:
            taken.close()


class TestParser:
    def test_subcommand_is_required(self):
        with pytest.raises(SystemExit):
            main([])

    def test_main_returns_int_exit_codes(self, capsys, tmp_path):
        path = tmp_path / "tiny.scn"
        path.write_text("end 10\nchannel 0 10 up\n")
        assert run_cli(capsys, "sim", "run", str(path))[0] == 0
