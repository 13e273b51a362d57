"""
IDX Reader

The IDX layout: a 4-byte big-endian magic (two zero bytes, a type byte, a
dimension count), one big-endian uint32 per dimension, then the payload in
row-major order. Only unsigned-byte payloads (type 0x08) are read:

    0x00000801  labels   [n]          -> int64 indices
    0x00000803  images   [n, h, w]    -> float64 [n, 1, h, w] in [0, 1]
    0x00000804  images   [n, c, h, w] -> float64 [n, c, h, w] in [0, 1]
"""

import numpy as np

from ...errors import FormatError

UBYTE = 0x08
SUPPORTED_DIMS = (1, 3, 4)


def decode_idx(payload: bytes) -> np.ndarray:
    if len(payload) < 4:
        raise FormatError(f"expected a 4-byte magic, file has {len(payload)} bytes", offset=len(payload))
    if payload[0] != 0 or payload[1] != 0 or payload[2] != UBYTE:
        magic = int.from_bytes(payload[:4], "big")
        raise FormatError(f"bad magic 0x{magic:08x}; expected 0x00000801, 0x00000803 or 0x00000804", offset=0)
    ndims = payload[3]
    if ndims not in SUPPORTED_DIMS:
        raise FormatError(f"unsupported dimension count {ndims}", offset=3)
    header = 4 + 4 * ndims
    if len(payload) < header:
        raise FormatError(f"header needs {header} bytes, file has {len(payload)}", offset=len(payload))
    dims = tuple(int(d) for d in np.frombuffer(payload, dtype=">u4", count=ndims, offset=4))
    expected = int(np.prod(dims, dtype=np.int64))
    actual = len(payload) - header
    if actual < expected:
        raise FormatError(f"truncated payload: expected {expected} bytes, found {actual}", offset=len(payload))
    if actual > expected:
        raise FormatError(f"{actual - expected} trailing bytes after a {expected}-byte payload", offset=header + expected)
    values = np.frombuffer(payload, dtype=np.uint8, count=expected, offset=header).reshape(dims)
    if ndims == 1:
        return values.astype(np.int64)
    images = values.astype(np.float64) / 255.0
    if ndims == 3:
        images = images[:, None, :, :]
    return images


def parse_idx(path: str) -> np.ndarray:
    """Read an IDX file: int64 labels for 1-D files, float64 images otherwise."""
    with open(path, "rb") as handle:
        return decode_idx(handle.read())


def encode_idx(array: np.ndarray) -> bytes:
    """Inverse of decode_idx for uint8 arrays of 1, 3 or 4 dimensions."""
    array = np.asarray(array, dtype=np.uint8)
    if array.ndim not in SUPPORTED_DIMS:
        raise FormatError(f"cannot encode a {array.ndim}-dimensional array")
    header = bytes([0, 0, UBYTE, array.ndim]) + np.array(array.shape, dtype=">u4").tobytes()
    return header + array.tobytes()
