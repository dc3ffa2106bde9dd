"""V2HW weight archives and V2HS 2-D arrays."""

import json
import struct
import zlib
from pathlib import Path

import numpy as np

ARCHIVE_MAGIC = b"V2HW"
ARCHIVE_VERSION = 1
ARRAY_MAGIC = b"V2HS"
ARRAY_VERSION = 1
KIND_REAL = 0
KIND_COMPLEX = 1


class ArchiveError(ValueError):
    pass


class ChecksumError(ArchiveError):
    pass


def encode_archive(descriptor: dict, tensors: dict) -> bytes:
    desc = json.dumps(descriptor, separators=(",", ":")).encode()
    out = bytearray(ARCHIVE_MAGIC)
    out += struct.pack("<II", ARCHIVE_VERSION, len(desc))
    out += desc
    out += struct.pack("<I", len(tensors))
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        raw = name.encode()
        out += struct.pack("<H", len(raw)) + raw
        out += struct.pack("<B", arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += arr.tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def decode_archive(data: bytes) -> tuple[dict, dict]:
    if data[:4] != ARCHIVE_MAGIC:
        raise ArchiveError(f"bad magic {data[:4]!r}")
    if len(data) < 8:
        raise ChecksumError("archive truncated")
    body, (stored,) = data[:-4], struct.unpack("<I", data[-4:])
    computed = zlib.crc32(body)
    if stored != computed:
        raise ChecksumError(f"stored crc {stored:08x}, computed {computed:08x}")
    pos = 4

    def take(n):
        nonlocal pos
        if pos + n > len(body):
            raise ArchiveError("archive truncated")
        chunk = body[pos : pos + n]
        pos += n
        return chunk

    version, dlen = struct.unpack("<II", take(8))
    if version != ARCHIVE_VERSION:
        raise ArchiveError(f"unsupported version {version}")
    descriptor = json.loads(take(dlen).decode())
    (count,) = struct.unpack("<I", take(4))
    tensors = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", take(2))
        name = take(nlen).decode()
        (rank,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{rank}I", take(4 * rank))
        n = int(np.prod(shape)) if rank else 1
        tensors[name] = np.frombuffer(take(4 * n), dtype="<f4").reshape(shape).copy()
    if pos != len(body):
        raise ArchiveError(f"{len(body) - pos} trailing bytes")
    return descriptor, tensors


def write_archive(path, descriptor: dict, tensors: dict) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(encode_archive(descriptor, tensors))


def read_archive(path) -> tuple[dict, dict]:
    return decode_archive(Path(path).read_bytes())


def write_v2hs(path, array: np.ndarray) -> None:
    array = np.asarray(array)
    if array.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {array.shape}")
    rows, cols = array.shape
    complex_ = np.iscomplexobj(array)
    out = bytearray(ARRAY_MAGIC)
    out += struct.pack("<IIIB", ARRAY_VERSION, rows, cols, KIND_COMPLEX if complex_ else KIND_REAL)
    if complex_:
        inter = np.stack([array.real, array.imag], axis=-1)
        out += np.ascontiguousarray(inter, dtype="<f4").tobytes()
    else:
        out += np.ascontiguousarray(array, dtype="<f4").tobytes()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(bytes(out))


def read_v2hs(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != ARRAY_MAGIC:
        raise ArchiveError(f"{path}: bad magic")
    version, rows, cols, kind = struct.unpack("<IIIB", data[4:17])
    if version != ARRAY_VERSION:
        raise ArchiveError(f"{path}: unsupported version {version}")
    payload = np.frombuffer(data[17:], dtype="<f4").astype(np.float64)
    if kind == KIND_COMPLEX:
        payload = payload.reshape(rows, cols, 2)
        return payload[..., 0] + 1j * payload[..., 1]
    if kind != KIND_REAL:
        raise ArchiveError(f"{path}: unknown kind {kind}")
    return payload.reshape(rows, cols)
