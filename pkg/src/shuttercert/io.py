"""Rounds, certificate and extracted-bit file formats.

rounds.bin: 32-byte little-endian header

    offset  size  field
    0       4     magic b"SHRN"
    4       2     version (u16, currently 1)
    6       2     reserved, zero
    8       8     total record count (u64)
    16      8     test rate q (f64)
    24      8     batch size N (u64)

followed by one byte per round: bit0 test round, bit1 shutter closed,
bit2 click, bits 3-7 zero.  Batches are stored back to back.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .extractor import pack_bits, unpack_bits
from .protocol import RoundBatch

MAGIC = b"SHRN"
VERSION = 1
HEADER = struct.Struct("<4sHHQdQ")
CERT_KEYS = ("batch", "n_alpha", "t_alpha", "n_beta", "t_beta", "alpha_hat", "beta_hat",
             "g_star", "h", "feasible")


def write_rounds(path, batches, batch_size=None, test_rate=None):
    batches = list(batches)
    if batch_size is None:
        batch_size = len(batches[0]) if batches else 0
    if test_rate is None:
        test_rate = batches[0].test_rate if batches else float("nan")
    total = sum(len(b) for b in batches)
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, 0, total, float(test_rate), int(batch_size)))
        for b in batches:
            fh.write(b.encode().tobytes())


def read_header(path):
    with open(path, "rb") as fh:
        raw = fh.read(HEADER.size)
    if len(raw) < HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, reserved, total, q, n = HEADER.unpack(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    return {"total": total, "test_rate": q, "batch_size": n}


def read_rounds(path):
    """Return (header dict, list of RoundBatch split by the stored batch size)."""
    hdr = read_header(path)
    data = np.fromfile(path, dtype=np.uint8, offset=HEADER.size)
    if data.size != hdr["total"]:
        raise FormatError(f"{path}: header says {hdr['total']} records, found {data.size}")
    n = hdr["batch_size"] or max(data.size, 1)
    try:
        batches = [RoundBatch.decode(data[s:s + n], hdr["test_rate"]) for s in range(0, data.size, n)]
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return hdr, batches


def write_cert(path, rows):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps({k: row[k] for k in CERT_KEYS}) + "\n")


def read_cert(path):
    rows = []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{ln}: {exc}") from exc
            if set(row) != set(CERT_KEYS):
                raise FormatError(f"{path}:{ln}: keys {sorted(row)} differ from the certificate schema")
            rows.append(row)
    return rows


def write_bits(path, bits):
    Path(path).write_bytes(pack_bits(bits))


def read_bits(path, count):
    return unpack_bits(Path(path).read_bytes(), count)
