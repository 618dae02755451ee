"""BLME container writer/reader.

Byte layout (all integers little-endian), matching the toolkit's spec:

    magic "BLME" | version u16 (=1) | dim u32 | count u64 |
    per record: id-length u16, id UTF-8 bytes, dim x float32

Provenance rides in the id namespace: a leading record whose id starts
with "#provenance:" (zero vector) names the producing model and layer
policy.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"BLME"
VERSION = 1
PROVENANCE_PREFIX = "#provenance:"


def write_blme(path, records, dim: int):
    records = list(records)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", VERSION))
        fh.write(struct.pack("<I", dim))
        fh.write(struct.pack("<Q", len(records)))
        for sid, vec in records:
            arr = np.asarray(vec, dtype="<f4")
            if arr.shape != (dim,):
                raise ValueError(f"record {sid!r}: shape {arr.shape} != ({dim},)")
            raw = sid.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(arr.tobytes())


def read_blme(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    (dim,) = struct.unpack_from("<I", data, 6)
    (count,) = struct.unpack_from("<Q", data, 10)
    offset = 18
    records = []
    for i in range(count):
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        sid = data[offset:offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data[offset:offset + 4 * dim], dtype="<f4").copy()
        if vec.size != dim:
            raise ValueError(f"{path}: truncated at record {i}")
        offset += 4 * dim
        records.append((sid, vec))
    return records
