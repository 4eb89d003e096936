"""Durable command log and snapshots under a locked data directory.

The log is one canonical-JSON record per line. Each applied command leaves
two records: a CMD line (sequence, timestamp, command name, payload) that is
fsynced before the command's effects become visible anywhere, and a DIG line
carrying the digest of the state after the apply. A crash between the two
leaves a CMD without its DIG; recovery applies that command exactly once and
writes the missing DIG. Digests let any replay prove it reconstructed the
same state the original process had.

An exclusive flock on `<data_dir>/.lock` keeps two processes from sharing a
data directory.
"""

from __future__ import annotations

import fcntl
import os

from .canonical import canon_dumps, canon_loads
from .errors import DataDirLocked, ServiceUnavailable

LOG_NAME = "commands.log"
SNAPSHOT_NAME = "snapshot.json"
LOCK_NAME = ".lock"


class EventLog:
    """Append-only log plus the directory lock and snapshot slot."""

    def __init__(self, data_dir: str) -> None:
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self._lock_file = open(os.path.join(data_dir, LOCK_NAME), "a+")
        try:
            fcntl.flock(self._lock_file.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            self._lock_file.close()
            raise DataDirLocked(f"{data_dir} is in use by another process") from None
        self._log_path = os.path.join(data_dir, LOG_NAME)
        self._snap_path = os.path.join(data_dir, SNAPSHOT_NAME)
        self._out = open(self._log_path, "ab")

    def close(self) -> None:
        if self._out is not None:
            self._out.close()
            self._out = None
        if self._lock_file is not None:
            fcntl.flock(self._lock_file.fileno(), fcntl.LOCK_UN)
            self._lock_file.close()
            self._lock_file = None

    # -- append -----------------------------------------------------------

    def _append(self, doc: dict) -> None:
        if self._out is None:
            raise ServiceUnavailable("event log is closed")
        self._out.write(canon_dumps(doc) + b"\n")
        self._out.flush()
        os.fsync(self._out.fileno())

    def append_command(self, seq: int, at: int, command: str, payload: dict) -> None:
        self._append(
            {"kind": "CMD", "seq": seq, "at": at, "command": command, "payload": payload}
        )

    def append_digest(self, seq: int, digest: str) -> None:
        self._append({"kind": "DIG", "seq": seq, "digest": digest})

    # -- read -------------------------------------------------------------------

    def entries(self) -> list[dict]:
        """All log records in file order. Tolerates a torn final line (the
        classic crash-during-append artifact) by dropping it."""
        if not os.path.exists(self._log_path):
            return []
        out = []
        with open(self._log_path, "rb") as f:
            for raw in f:
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    out.append(canon_loads(raw))
                except ValueError:
                    if raw is not None and f.read(1) == b"":
                        break  # torn tail, nothing follows
                    raise ServiceUnavailable("corrupt event log record") from None
        return out

    # -- snapshot --------------------------------------------------------------

    def write_snapshot(self, doc: dict) -> None:
        tmp = self._snap_path + ".tmp"
        with open(tmp, "wb") as f:
            f.write(canon_dumps(doc))
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, self._snap_path)

    def read_snapshot(self) -> dict | None:
        if not os.path.exists(self._snap_path):
            return None
        with open(self._snap_path, "rb") as f:
            return canon_loads(f.read())
