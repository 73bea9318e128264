"""Bit encodings, threshold specs, and atomic file output."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .core import ThresholdError, ThresholdRule

__all__ = [
    "encode_text",
    "decode_text",
    "encode_packed",
    "decode_packed",
    "encode_csv",
    "read_bits",
    "parse_threshold",
    "write_atomic",
]


def encode_text(bits) -> bytes:
    """One line of '0'/'1' characters, newline terminated; empty for no bits."""
    b = np.asarray(bits, dtype=np.uint8)
    if len(b) == 0:
        return b""
    return (b + ord("0")).tobytes() + b"\n"


def decode_text(data: bytes | str) -> np.ndarray:
    if isinstance(data, bytes):
        data = data.decode("ascii")
    s = "".join(data.split())
    if s.strip("01"):
        raise ValueError("text bit file may only contain '0', '1' and whitespace")
    return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")


def encode_packed(bits) -> bytes:
    """8 bits per byte, first bit in the most significant position, zero padded."""
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="big").tobytes()


def decode_packed(data: bytes, length: int) -> np.ndarray:
    arr = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="big")
    if length > len(arr):
        raise ValueError(f"packed data holds {len(arr)} bits, {length} requested")
    return arr[:length].copy()


def encode_csv(bits) -> bytes:
    b = np.asarray(bits, dtype=np.int64)
    rows = np.column_stack([np.arange(1, len(b) + 1), b])
    return _csv_bytes(["n", "bit"], rows)


def _csv_bytes(header, rows) -> bytes:
    import io as _io
    buf = _io.StringIO()
    buf.write(",".join(header) + "\n")
    if len(rows):
        np.savetxt(buf, rows, fmt="%d", delimiter=",")
    return buf.getvalue().encode()


def read_bits(path, length: int | None = None) -> np.ndarray:
    """Read a text ('0'/'1') file, or a packed ``.bin`` file (needs ``length``)."""
    p = Path(path)
    data = p.read_bytes()
    if p.suffix == ".bin":
        if length is None:
            return np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="big")
        return decode_packed(data, length)
    bits = decode_text(data)
    return bits if length is None else bits[:length]


def parse_threshold(text: str) -> ThresholdRule:
    """``exp:<r>`` or ``table:<path>`` (one capacity per line, line i = h(i))."""
    kind, _, arg = text.partition(":")
    if kind == "exp":
        try:
            r = int(arg)
        except ValueError:
            raise ThresholdError(f"exp threshold needs an integer base, got {arg!r}") from None
        return ThresholdRule.exp(r)
    if kind == "table":
        p = Path(arg)
        if not p.is_file():
            raise ThresholdError(f"threshold table {arg!r} not found")
        caps = []
        for lineno, line in enumerate(p.read_text().splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                caps.append(int(line))
            except ValueError:
                raise ThresholdError(f"{arg}:{lineno}: not an integer: {line!r}") from None
        return ThresholdRule.from_table(caps)
    raise ThresholdError(f"threshold must be exp:<r> or table:<path>, got {text!r}")


def write_atomic(path, data: bytes) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask
