"""On-disk cache of stacked per-graph descriptor matrices.

File layout::

    b"EBDESC1\\n"
    uint64 little-endian header length
    JSON header {method, config, d_s, graph_count, node_counts, sha256}
    float64 little-endian payload, all graphs stacked row-wise
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

MAGIC = b"EBDESC1\n"


def write_descriptor_cache(path: str | Path, method: str, config: dict, mats: list[np.ndarray]) -> None:
    path = Path(path)
    d_s = int(mats[0].shape[1]) if mats else 0
    payload = (
        np.concatenate(mats, axis=0).astype("<f8").tobytes() if mats else b""
    )
    header = {
        "method": method,
        "config": config,
        "d_s": d_s,
        "graph_count": len(mats),
        "node_counts": [int(m.shape[0]) for m in mats],
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(hbytes)))
        fh.write(hbytes)
        fh.write(payload)
    tmp.replace(path)


def read_descriptor_cache(path: str | Path, method: str, config: dict, graph_count: int) -> list[np.ndarray] | None:
    """Return cached matrices, or None (with a warning) if the file is
    absent, corrupted, or was written for a different configuration."""
    path = Path(path)
    if not path.is_file():
        return None
    try:
        raw = path.read_bytes()
        if not raw.startswith(MAGIC):
            raise ValueError("bad magic")
        (hlen,) = struct.unpack_from("<Q", raw, len(MAGIC))
        start = len(MAGIC) + 8
        header = json.loads(raw[start:start + hlen].decode("utf-8"))
        payload = raw[start + hlen:]
        if header["method"] != method or header["config"] != config:
            raise ValueError("header does not match requested configuration")
        if header["graph_count"] != graph_count or len(header["node_counts"]) != graph_count:
            raise ValueError("graph count mismatch")
        if hashlib.sha256(payload).hexdigest() != header["sha256"]:
            raise ValueError("payload checksum mismatch")
        d_s = int(header["d_s"])
        flat = np.frombuffer(payload, dtype="<f8").astype(np.float64)
        total = sum(header["node_counts"])
        if flat.size != total * d_s:
            raise ValueError("payload size mismatch")
        stacked = flat.reshape(total, d_s)
        cuts = np.cumsum(header["node_counts"])[:-1]
        return [m.copy() for m in np.split(stacked, cuts)]
    except (ValueError, KeyError, TypeError, struct.error, UnicodeDecodeError) as exc:
        log.warning("descriptor cache %s invalid (%s); recomputing", path, exc)
        return None
