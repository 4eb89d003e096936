"""Operator command line.

    medirelay serve --config service.json
    medirelay admin approve-doctor <account_id> --data-dir ./data
    medirelay admin list-pending --data-dir ./data
    medirelay admin seed-demo --data-dir ./data
    medirelay archive pack --window 1700000000 1702592000 --data-dir ./data
    medirelay archive verify volumes/mrv-....mrv
    medirelay archive ls volumes/mrv-....mrv
    medirelay sim run outage.scn --seed 7 --report-dir report/
    medirelay sim verify outage.scn transcript.txt

Commands that touch a data directory take the same exclusive lock the server
takes, so they refuse to run while a service instance is up. Configuration
comes from --config, the MEDIRELAY_CONFIG env var, or bare --data-dir; flags
override config file keys.
"""

from __future__ import annotations

import argparse
import socket
import sys
import threading
import time

from .canonical import ts_to_rfc3339
from .errors import MedirelayError, PortUnavailable
from .scenario import parse_scenario, run_scenario, verify_transcript
from .service import ApplicationCore, load_config
from .volume import read_volume, verify_volume


def _core_from_args(args) -> ApplicationCore:
    overrides = {"data_dir": getattr(args, "data_dir", None)}
    config = load_config(getattr(args, "config", None), overrides)
    return ApplicationCore(config)


def _cmd_serve(args) -> int:
    import uvicorn

    from .http_api import create_app

    overrides = {
        "data_dir": args.data_dir,
        "host": args.host,
        "port": args.port,
        "role": args.role,
        "peer_url": args.peer_url,
        "peer_key": args.peer_key,
        "static_dir": args.static_dir,
    }
    config = load_config(args.config, overrides)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((config.host, config.port))
    except OSError:
        raise PortUnavailable(f"cannot bind {config.host}:{config.port}") from None
    finally:
        probe.close()
    core = ApplicationCore(config)
    app = create_app(core)
    if core.engine is not None:
        def tick_loop():
            while True:
                time.sleep(config.tick_every)
                try:
                    core.engine.tick(int(core.clock()))
                except Exception as exc:
                    print(f"tick failed: {exc}", file=sys.stderr)

        threading.Thread(target=tick_loop, daemon=True).start()
    print(f"medirelay {config.role} on http://{config.host}:{config.port} "
          f"(data: {config.data_dir})")
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return 0


def _cmd_admin(args) -> int:
    core = _core_from_args(args)
    try:
        if args.admin_cmd == "approve-doctor":
            result = core.submit(
                "admin_decide",
                {
                    "admin_id": "ADMIN",
                    "doctor_id": args.account_id,
                    "decision": args.decision,
                },
            )
            print(f"{result['account_id']}\t{result['state']}")
        elif args.admin_cmd == "list-pending":
            pending = core.portal.pending_doctors()
            print("account_id\temail\tname")
            for acct in pending:
                print(f"{acct.account_id}\t{acct.email}\t{acct.profile.get('name', '')}")
        elif args.admin_cmd == "seed-demo":
            summary = core.seed_demo()
            print(f"doctors\t{' '.join(summary['doctors'])}")
            print(f"patients\t{' '.join(summary['patients'])}")
            print(f"booking\t{summary['booking']}")
            print(f"password\t{summary['password']}")
        return 0
    finally:
        core.close()


def _cmd_archive(args) -> int:
    if args.archive_cmd == "pack":
        core = _core_from_args(args)
        try:
            now = args.now if args.now is not None else int(core.clock())
            core.submit("migrate", {"now": now})
            result = core.submit(
                "pack_volume",
                {"window_start": args.window[0], "window_end": args.window[1]},
            )
            print(f"{result['volume_id']}\t{result['count']}\t{result['path']}")
            return 0
        finally:
            core.close()
    volume = read_volume(args.file)
    if args.archive_cmd == "verify":
        problems = verify_volume(volume)
        if problems:
            for problem in problems:
                print(f"FAIL\t{problem}")
            return 1
        print(f"OK\t{volume.volume_id}\t{len(volume.index)} records")
        return 0
    # ls
    print("record_id\tpatient_id\tproblem_id\tcreated\tbytes\tsha256")
    for entry in volume.index:
        print(
            f"{entry.record_id}\t{entry.patient_id}\t{entry.problem_id}\t"
            f"{ts_to_rfc3339(entry.created_at)}\t{entry.payload_len}\t"
            f"{entry.checksum[:12]}"
        )
    return 0


def _cmd_sim(args) -> int:
    with open(args.scenario, "r", encoding="utf-8") as f:
        scenario = parse_scenario(f.read())
    if args.sim_cmd == "run":
        result = run_scenario(scenario, seed=args.seed)
        sys.stdout.write(result.transcript)
        if args.report_dir:
            import os

            from .report import render_report

            os.makedirs(args.report_dir, exist_ok=True)
            transcript_path = os.path.join(args.report_dir, "transcript.txt")
            with open(transcript_path, "w", encoding="utf-8") as f:
                f.write(result.transcript)
            figures = render_report(result, args.report_dir)
            for path in [transcript_path, *figures]:
                print(f"wrote {path}", file=sys.stderr)
        return 0
    with open(args.transcript, "r", encoding="utf-8") as f:
        recorded = f.read()
    ok, mismatch = verify_transcript(scenario, recorded, seed=args.seed)
    if ok:
        print("transcript matches")
        return 0
    print(f"transcript mismatch: {mismatch}")
    return 1


def _add_data_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file (or set MEDIRELAY_CONFIG)")
    parser.add_argument("--data-dir", help="data directory (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="medirelay")
    sub = parser.add_subparsers(dest="cmd", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    _add_data_args(serve)
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.add_argument("--role", choices=["Center", "Rural"])
    serve.add_argument("--peer-url")
    serve.add_argument("--peer-key")
    serve.add_argument("--static-dir", help="serve a built web client under /app")
    serve.set_defaults(func=_cmd_serve)

    admin = sub.add_parser("admin", help="administrative operations")
    admin_sub = admin.add_subparsers(dest="admin_cmd", required=True)
    approve = admin_sub.add_parser("approve-doctor", help="decide a pending doctor")
    approve.add_argument("account_id")
    approve.add_argument(
        "--decision", choices=["Approve", "Delete"], default="Approve"
    )
    _add_data_args(approve)
    pending = admin_sub.add_parser("list-pending", help="doctors awaiting approval")
    _add_data_args(pending)
    seed = admin_sub.add_parser("seed-demo", help="load the demo fixture")
    _add_data_args(seed)
    admin.set_defaults(func=_cmd_admin)

    archive = sub.add_parser("archive", help="long-term archive volumes")
    archive_sub = archive.add_subparsers(dest="archive_cmd", required=True)
    pack = archive_sub.add_parser("pack", help="seal a time window into a volume")
    pack.add_argument(
        "--window",
        nargs=2,
        type=int,
        metavar=("START", "END"),
        required=True,
        help="window bounds, epoch seconds, end exclusive",
    )
    pack.add_argument("--now", type=int, help="retention reference time for migration")
    _add_data_args(pack)
    verify = archive_sub.add_parser("verify", help="check a volume file end to end")
    verify.add_argument("file")
    ls = archive_sub.add_parser("ls", help="list a volume file's index")
    ls.add_argument("file")
    archive.set_defaults(func=_cmd_archive)

    sim = sub.add_parser("sim", help="channel/sync simulator")
    sim_sub = sim.add_subparsers(dest="sim_cmd", required=True)
    run = sim_sub.add_parser("run", help="run a scenario, print its transcript")
    run.add_argument("scenario")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--report-dir", help="also write transcript and figures here")
    verify_t = sim_sub.add_parser("verify", help="replay and compare a transcript")
    verify_t.add_argument("scenario")
    verify_t.add_argument("transcript")
    verify_t.add_argument("--seed", type=int, default=None)
    sim.set_defaults(func=_cmd_sim)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MedirelayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
