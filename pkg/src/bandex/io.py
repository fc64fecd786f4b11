"""Bit-exact serialization: NDSIG signals, metrics CSV and 16-bit PGM export.

NDSIG layout: three ASCII header lines (``NDSIG1``, ``dims: d1 d2 ... dN``,
``dtype: f64le``) followed by a raw row-major little-endian binary64 payload
of exactly ``prod(dims) * 8`` bytes.  Encoding is host-independent, so a
write/read round trip is bit-identical everywhere.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError
from .grid import GridShape, Signal

NDSIG_MAGIC = b"NDSIG1"


def _format_float(value: float) -> str:
    if value == float("-inf"):
        return "-inf"
    return f"{value:.12e}"


def write_signal(signal: Signal, path) -> None:
    """Write a signal in NDSIG format."""
    header = (
        NDSIG_MAGIC
        + b"\n"
        + f"dims: {' '.join(str(d) for d in signal.shape.dims)}\n".encode("ascii")
        + b"dtype: f64le\n"
    )
    payload = np.ascontiguousarray(signal.values, dtype="<f8").tobytes(order="C")
    Path(path).write_bytes(header + payload)


def _read_header_line(data: bytes, offset: int, what: str) -> tuple[bytes, int]:
    end = data.find(b"\n", offset)
    if end < 0:
        raise FormatError(f"missing newline after {what} at byte offset {offset}")
    return data[offset:end], end + 1


def read_signal(path) -> Signal:
    """Read an NDSIG file, failing loudly (with byte offsets) on corruption."""
    data = Path(path).read_bytes()
    magic, offset = _read_header_line(data, 0, "magic")
    if magic != NDSIG_MAGIC:
        raise FormatError(f"bad magic {magic!r} at byte offset 0, expected {NDSIG_MAGIC!r}")
    dims_line, offset = _read_header_line(data, offset, "dims line")
    dims_start = offset - len(dims_line) - 1
    if not dims_line.startswith(b"dims: "):
        raise FormatError(f"malformed dims line at byte offset {dims_start}")
    try:
        dims = tuple(int(tok) for tok in dims_line[len(b"dims: "):].split())
        shape = GridShape(dims)
    except (ValueError, ParameterError) as exc:
        raise FormatError(f"invalid dims at byte offset {dims_start}: {exc}") from exc
    dtype_line, offset = _read_header_line(data, offset, "dtype line")
    if dtype_line != b"dtype: f64le":
        raise FormatError(
            f"unsupported dtype {dtype_line!r} at byte offset {offset - len(dtype_line) - 1}"
        )
    expected = shape.size * 8
    actual = len(data) - offset
    if actual < expected:
        raise FormatError(
            f"payload truncated: expected {expected} bytes at byte offset {offset}, "
            f"found {actual}"
        )
    if actual > expected:
        raise FormatError(
            f"payload inconsistent with dims {shape.dims}: expected {expected} bytes "
            f"at byte offset {offset}, found {actual}"
        )
    values = np.frombuffer(data, dtype="<f8", count=shape.size, offset=offset)
    return Signal(shape, values)


def write_metrics_csv(report, path) -> None:
    """Write an iteration report as CSV.

    Header ``iteration,nmse_db,residual,contraction``; NMSE cells are blank
    when no truth was supplied, exact recovery is written as ``-inf``, and
    floats carry 13 significant digits.
    """
    if not report.records:
        raise ParameterError("cannot serialize an empty iteration report")
    lines = ["iteration,nmse_db,residual,contraction"]
    for record in report.records:
        nm = "" if record.nmse_db is None else _format_float(record.nmse_db)
        contraction = "" if record.contraction is None else _format_float(record.contraction)
        lines.append(f"{record.iteration},{nm},{_format_float(record.residual)},{contraction}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_metrics_csv(path) -> list[dict]:
    """Parse a metrics CSV back into row dicts (blanks become None)."""
    text = Path(path).read_text(encoding="ascii")
    lines = text.splitlines()
    if not lines or lines[0] != "iteration,nmse_db,residual,contraction":
        raise FormatError(f"unrecognized metrics CSV header in {path}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 4:
            raise FormatError(f"line {lineno}: expected 4 fields, got {len(parts)}")
        rows.append(
            {
                "iteration": int(parts[0]),
                "nmse_db": float(parts[1]) if parts[1] else None,
                "residual": float(parts[2]),
                "contraction": float(parts[3]) if parts[3] else None,
            }
        )
    return rows


def export_pgm(signal: Signal, path) -> None:
    """Export a 2-D signal as a 16-bit binary PGM (P5).

    Values are affinely mapped from [min, max] to [0, 65535]; a constant
    signal maps to mid-gray 32768.
    """
    if signal.shape.ndim != 2:
        raise ParameterError(
            f"PGM export requires a 2-D signal, got {signal.shape.ndim}-D"
        )
    rows, cols = signal.shape.dims
    lo = float(signal.values.min())
    hi = float(signal.values.max())
    if hi == lo:
        pixels = np.full(signal.shape.dims, 32768, dtype=">u2")
    else:
        scaled = (signal.values - lo) * (65535.0 / (hi - lo))
        pixels = np.clip(np.rint(scaled), 0, 65535).astype(">u2")
    header = f"P5\n{cols} {rows}\n65535\n".encode("ascii")
    Path(path).write_bytes(header + pixels.tobytes(order="C"))
