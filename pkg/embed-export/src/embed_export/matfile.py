"""Writer for the airtran binary matrix format.

Self-contained so the exporter can run where the core package is not
installed.  The layout is fixed little-endian, 28-byte header then payload:

    offset  size  field
    ------  ----  -----------------------------------------
    0       4     magic "AIRT"
    4       4     format version, u32, currently 1
    8       1     dtype code, u8, 0 = float32 little-endian
    9       3     reserved, written as zeros
    12      8     row count, u64
    20      8     column count, u64
    28      ...   rows*cols float32 values, row-major

Values are cast to float32 at write time; the cast must stay finite.  The
core's reader (`airtran.read_matrix`) is the compatibility oracle: the test
suite checks byte-for-byte agreement with `airtran.matrix_bytes`.
"""

from __future__ import annotations

import io
import os
import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .errors import ExportError

MAGIC = b"AIRT"
VERSION = 1
DTYPE_F32 = 0
_HEADER = struct.Struct("<4sIB3sQQ")


def matrix_file_bytes(values: np.ndarray) -> bytes:
    """The exact file image `write_matrix_file` would produce."""
    buf = io.BytesIO()
    _write_stream(values, buf)
    return buf.getvalue()


def write_matrix_file(values: np.ndarray, path: str | Path) -> None:
    """Serialize a 2-D array to `path` via a temp file renamed into place.

    Readers never observe a half-written file; on failure the target is
    left untouched.
    """
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "wb") as handle:
            _write_stream(values, handle)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def _write_stream(values: np.ndarray, stream: BinaryIO) -> None:
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ExportError(f"matrix must be 2-D, got shape {arr.shape}")
    rows, cols = arr.shape
    if rows < 1 or cols < 1:
        raise ExportError(f"matrix must be non-empty, got shape {arr.shape}")
    with np.errstate(over="ignore"):  # overflow is caught by the finite check
        payload = np.ascontiguousarray(arr, dtype="<f4")
    if not np.isfinite(payload).all():
        flat = int(np.flatnonzero(~np.isfinite(payload))[0])
        raise ExportError(
            f"non-finite value at row {flat // cols}, col {flat % cols}; "
            f"refusing to serialize"
        )
    stream.write(_HEADER.pack(MAGIC, VERSION, DTYPE_F32, b"\x00\x00\x00", rows, cols))
    stream.write(payload.tobytes(order="C"))
