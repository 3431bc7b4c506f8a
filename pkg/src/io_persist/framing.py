"""Shared binary framing and JSON helpers.

Binary layout::

    magic        8 bytes ASCII
    header_len   u32 little-endian
    header       header_len bytes of canonical UTF-8 JSON (sorted keys, no spaces)
    payload      little-endian float32 data

Every header and JSON document carries ``format_version``.
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..util.errors import FormatVersionError, InvalidInputError, PersistError

FORMAT_VERSION = 1
MAGIC_SIZE = 8
PREFIX_SIZE = MAGIC_SIZE + 4
F32 = np.dtype('<f4')

PathLike = Union[str, Path]


def canonical_json(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def write_framed(path: PathLike, magic: bytes, header: Dict[str, Any], payload: bytes) -> None:
    if len(magic) != MAGIC_SIZE:
        raise InvalidInputError(f"Magic must be {MAGIC_SIZE} bytes, got {magic!r}")
    header = dict(header, format_version=FORMAT_VERSION)
    header_bytes = canonical_json(header)
    try:
        with open(path, "wb") as f:
            f.write(magic)
            f.write(struct.pack("<I", len(header_bytes)))
            f.write(header_bytes)
            f.write(payload)
    except OSError as e:
        raise PersistError(f"Cannot write file: {e.strerror or e}", path=str(path)) from e


def read_bytes(path: PathLike) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise
    except OSError as e:
        raise PersistError(f"Cannot read file: {e.strerror or e}", path=str(path)) from e


def check_version(found: Any, path: PathLike) -> None:
    if found != FORMAT_VERSION:
        raise FormatVersionError(found, FORMAT_VERSION, path=str(path))


def read_framed(path: PathLike, magic: bytes) -> Tuple[Dict[str, Any], bytes, int]:
    """Return (header, whole file bytes, payload offset)."""
    data = read_bytes(path)
    if len(data) < PREFIX_SIZE:
        raise PersistError(
            f"File too short for a header: expected at least {PREFIX_SIZE} bytes, {len(data)} available",
            path=str(path), offset=0,
        )
    if data[:MAGIC_SIZE] != magic:
        raise PersistError(f"Bad magic {data[:MAGIC_SIZE]!r}, expected {magic!r}", path=str(path), offset=0)
    (header_len,) = struct.unpack("<I", data[MAGIC_SIZE:PREFIX_SIZE])
    available = len(data) - PREFIX_SIZE
    if header_len > available:
        raise PersistError(
            f"Truncated header: expected {header_len} bytes, {available} available",
            path=str(path), offset=PREFIX_SIZE,
        )
    try:
        header = json.loads(data[PREFIX_SIZE:PREFIX_SIZE + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise PersistError(f"Header is not valid JSON: {e}", path=str(path), offset=PREFIX_SIZE) from e
    if not isinstance(header, dict):
        raise PersistError("Header must be a JSON object", path=str(path), offset=PREFIX_SIZE)
    check_version(header.get("format_version"), path)
    return header, data, PREFIX_SIZE + header_len


def read_f32(data: bytes, offset: int, count: int, path: PathLike) -> np.ndarray:
    """``count`` little-endian float32 values starting at byte ``offset``."""
    expected = count * F32.itemsize
    available = max(len(data) - offset, 0)
    if expected > available:
        raise PersistError(
            f"Truncated payload: expected {expected} bytes, {available} available",
            path=str(path), offset=offset,
        )
    return np.frombuffer(data, dtype=F32, count=count, offset=offset).astype(np.float32)


def f32_bytes(array: np.ndarray) -> bytes:
    return np.ascontiguousarray(array, dtype=F32).tobytes()


def write_json(path: PathLike, doc: Dict[str, Any], indent: Optional[int] = None) -> None:
    doc = dict(doc, format_version=FORMAT_VERSION)
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f, sort_keys=True, indent=indent, separators=None if indent else (",", ":"))
            f.write("\n")
    except OSError as e:
        raise PersistError(f"Cannot write file: {e.strerror or e}", path=str(path)) from e


def read_json(path: PathLike) -> Dict[str, Any]:
    text = read_bytes(path)
    try:
        doc = json.loads(text.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise PersistError(f"Invalid JSON: {e}", path=str(path), json_path="$") from e
    if not isinstance(doc, dict):
        raise PersistError("Document must be a JSON object", path=str(path), json_path="$")
    check_version(doc.get("format_version"), path)
    return doc


def require(doc: Dict[str, Any], key: str, kind, path: PathLike, parent: str = "$"):
    """``doc[key]`` checked against ``kind``, or a PersistError naming its JSON path."""
    json_path = f"{parent}.{key}"
    if key not in doc:
        raise PersistError("Missing field", path=str(path), json_path=json_path)
    value = doc[key]
    if kind is int and isinstance(value, bool) or not isinstance(value, kind):
        raise PersistError(f"Expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}",
                           path=str(path), json_path=json_path)
    return value
