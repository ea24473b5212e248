"""
Binary tensor snapshots

One tensor block is:
    magic b"DNT1" | rank u64 | extents u64 x rank | f64 payload (row-major)
all little-endian. A named collection is a u64 count followed by
(u64 name length, utf-8 name, tensor block) records.
"""

import struct
from typing import BinaryIO, Dict, Tuple

import numpy as np

from ..exceptions import ArtifactError

MAGIC = b"DNT1"
_U64 = struct.Struct("<Q")


def encode_tensor(array: np.ndarray) -> bytes:
    array = np.ascontiguousarray(array, dtype="<f8")
    header = MAGIC + _U64.pack(array.ndim) + b"".join(_U64.pack(n) for n in array.shape)
    return header + array.tobytes(order="C")


def decode_tensor(buffer: bytes, offset: int = 0) -> Tuple[np.ndarray, int]:
    """Parse one tensor block; returns (array, offset past the block)"""
    if buffer[offset:offset + 4] != MAGIC:
        raise ArtifactError(f"bad tensor magic at byte {offset}")
    offset += 4
    (rank,) = _U64.unpack_from(buffer, offset)
    offset += 8
    shape = tuple(_U64.unpack_from(buffer, offset + 8 * i)[0] for i in range(rank))
    offset += 8 * rank
    count = int(np.prod(shape)) if shape else 1
    end = offset + 8 * count
    if end > len(buffer):
        raise ArtifactError(f"tensor payload truncated: need {end} bytes, have {len(buffer)}")
    array = np.frombuffer(buffer, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64)
    return array, end


def write_tensors(fh: BinaryIO, tensors: Dict[str, np.ndarray]) -> None:
    fh.write(_U64.pack(len(tensors)))
    for name in sorted(tensors):
        raw = name.encode("utf-8")
        fh.write(_U64.pack(len(raw)))
        fh.write(raw)
        fh.write(encode_tensor(tensors[name]))


def read_tensors(buffer: bytes, offset: int = 0) -> Tuple[Dict[str, np.ndarray], int]:
    out: Dict[str, np.ndarray] = {}
    try:
        (count,) = _U64.unpack_from(buffer, offset)
        offset += 8
        for _ in range(count):
            (n,) = _U64.unpack_from(buffer, offset)
            offset += 8
            name = buffer[offset:offset + n].decode("utf-8")
            offset += n
            out[name], offset = decode_tensor(buffer, offset)
    except (struct.error, UnicodeDecodeError) as e:
        raise ArtifactError(f"truncated or corrupt tensor collection ({e})")
    return out, offset


def save_snapshot(path: str, tensors: Dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        write_tensors(fh, tensors)


def load_snapshot(path: str) -> Dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        buffer = fh.read()
    tensors, _ = read_tensors(buffer)
    return tensors
