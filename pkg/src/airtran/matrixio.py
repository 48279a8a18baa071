"""Binary embedding matrix files.

Fixed little-endian layout, 28-byte header followed by the payload:

    offset  size  field
    ------  ----  -----------------------------------------
    0       4     magic "AIRT" (0x41 0x49 0x52 0x54)
    4       4     format version, u32, currently 1
    8       1     dtype code, u8, 0 = float32 little-endian
    9       3     reserved, written as zeros
    12      8     row count, u64
    20      8     column count, u64
    28      ...   rows*cols float32 values, row-major

Total size is exactly 28 + 4*rows*cols bytes.  Readers validate magic,
version, dtype, payload length, and finiteness of every value; writers
refuse non-finite input.  Matrices are non-empty by contract (rows >= 1,
cols >= 1).
"""

from __future__ import annotations

import io
import os
import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .errors import (
    MatrixDataError,
    MatrixFormatError,
    MatrixLengthError,
    MatrixVersionError,
    MatrixWriteError,
)

MAGIC = b"AIRT"
VERSION = 1
DTYPE_F32 = 0
_HEADER = struct.Struct("<4sIB3sQQ")
HEADER_SIZE = _HEADER.size  # 28


def _first_bad(values: np.ndarray) -> tuple[int, int]:
    """Row/col of the first non-finite entry (caller guarantees one exists)."""
    flat = int(np.flatnonzero(~np.isfinite(values))[0])
    return flat // values.shape[1], flat % values.shape[1]


def write_matrix(values: np.ndarray, dest: str | Path | BinaryIO) -> None:
    """Serialize a 2-D array as a matrix file.

    `values` is cast to float32; the cast must stay finite (float64 values
    beyond float32 range become inf and are rejected).  `dest` is a path or
    a writable binary stream.  I/O failures surface as MatrixWriteError with
    the byte offset at which the write failed.
    """
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise MatrixFormatError(f"matrix must be 2-D, got shape {arr.shape}")
    rows, cols = arr.shape
    if rows < 1 or cols < 1:
        raise MatrixFormatError(f"matrix must be non-empty, got shape {arr.shape}")
    with np.errstate(over="ignore"):  # overflow is caught by the finite check
        payload = np.ascontiguousarray(arr, dtype="<f4")
    if not np.isfinite(payload).all():
        r, c = _first_bad(payload)
        raise MatrixDataError(
            f"non-finite value at row {r}, col {c}; refusing to serialize"
        )
    header = _HEADER.pack(MAGIC, VERSION, DTYPE_F32, b"\x00\x00\x00", rows, cols)

    if hasattr(dest, "write"):
        _write_stream(dest, header, payload)
        return
    path = Path(dest)
    try:
        handle = open(path, "wb")
    except OSError as exc:
        raise MatrixWriteError(f"cannot open {path} for writing: {exc}") from exc
    with handle:
        _write_stream(handle, header, payload)


def _write_stream(stream: BinaryIO, header: bytes, payload: np.ndarray) -> None:
    offset = 0
    try:
        stream.write(header)
        offset = len(header)
        stream.write(payload.tobytes(order="C"))
    except OSError as exc:
        raise MatrixWriteError(f"write failed at byte offset {offset}: {exc}") from exc


def read_matrix(source: str | Path | bytes | BinaryIO) -> np.ndarray:
    """Deserialize a matrix file into a float32 array of shape (rows, cols).

    `source` is a path, a bytes object, or a readable binary stream.  The
    inverse of `write_matrix` bit for bit: writing the returned array again
    produces an identical file.
    """
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as handle:
            data = handle.read()

    if len(data) < HEADER_SIZE:
        raise MatrixLengthError(
            f"file too short for header: expected at least {HEADER_SIZE} bytes, "
            f"got {len(data)}"
        )
    magic, version, dtype, _reserved, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MatrixFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise MatrixVersionError(f"unsupported version {version}, expected {VERSION}")
    if dtype != DTYPE_F32:
        raise MatrixVersionError(f"unsupported dtype code {dtype}, expected {DTYPE_F32}")
    if rows < 1 or cols < 1:
        raise MatrixFormatError(f"matrix must be non-empty, header says {rows}x{cols}")
    expected = HEADER_SIZE + 4 * rows * cols
    if len(data) != expected:
        raise MatrixLengthError(
            f"payload length mismatch for {rows}x{cols} matrix: expected "
            f"{expected} bytes total, got {len(data)}"
        )
    values = np.frombuffer(data, dtype="<f4", offset=HEADER_SIZE).reshape(rows, cols)
    if not np.isfinite(values).all():
        r, c = _first_bad(values)
        raise MatrixDataError(f"non-finite value at row {r}, col {c}")
    return values.copy()  # own the memory; frombuffer views are read-only


def write_matrix_atomic(values: np.ndarray, path: str | Path) -> None:
    """Write via a temp file in the same directory, then rename into place.

    Readers never observe a half-written file; on failure the target is left
    untouched.
    """
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "wb") as handle:
            write_matrix(values, handle)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def matrix_bytes(values: np.ndarray) -> bytes:
    """The exact file image `write_matrix` would produce."""
    buf = io.BytesIO()
    write_matrix(values, buf)
    return buf.getvalue()
