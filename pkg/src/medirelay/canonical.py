"""Canonical text encoding shared by digests, archives, the wire, and the log.

One deterministic byte form everywhere: UTF-8 JSON with lexicographically
sorted keys and no insignificant whitespace. Timestamps travel as RFC 3339 UTC
strings at second precision; internally the code passes integer epoch seconds.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone


def canon_dumps(obj) -> bytes:
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def canon_loads(data):
    if isinstance(data, (bytes, bytearray)):
        data = bytes(data).decode("utf-8")
    return json.loads(data)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def ts_to_rfc3339(ts: int) -> str:
    return datetime.fromtimestamp(int(ts), tz=timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%SZ"
    )


def rfc3339_to_ts(text: str) -> int:
    dt = datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def json_span(buf: bytes, start: int = 0) -> int:
    """Byte length of the JSON object/array starting at ``start``.

    Archive payloads place raw blob bytes directly after a record's canonical
    JSON, so the JSON end must be located without decoding what follows it.
    """
    depth = 0
    in_str = False
    esc = False
    i = start
    n = len(buf)
    while i < n:
        b = buf[i]
        if in_str:
            if esc:
                esc = False
            elif b == 0x5C:  # backslash
                esc = True
            elif b == 0x22:  # quote
                in_str = False
        else:
            if b == 0x22:
                in_str = True
            elif b in (0x7B, 0x5B):  # { [
                depth += 1
            elif b in (0x7D, 0x5D):  # } ]
                depth -= 1
                if depth == 0:
                    return i - start + 1
        i += 1
    raise ValueError("unterminated JSON value")
