"""Self-describing checkpoint container with deterministic bytes.

Layout: one UTF-8 JSON header line (format tag, free-form metadata, and
a tensor manifest with name/dtype/shape), followed by the raw
little-endian tensor bytes concatenated in manifest order. Unlike zip
based formats there are no timestamps, so identical contents produce
identical files and content hashes are reproducible.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DataError
from .util import canonical_json, sha256_hex

_HEADER_LIMIT = 64 << 20


def _manifest(tensors: dict[str, np.ndarray]) -> list[dict]:
    entries = []
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr)
        entries.append(
            {
                "name": name,
                "dtype": arr.dtype.str,
                "shape": list(arr.shape),
                "nbytes": int(arr.nbytes),
            }
        )
    return entries


def save_container(
    path: str | Path,
    format_tag: str,
    meta: dict,
    tensors: dict[str, np.ndarray],
) -> None:
    header = {"format": format_tag, "meta": meta, "tensors": _manifest(tensors)}
    with open(path, "wb") as f:
        f.write(canonical_json(header).encode("utf-8"))
        f.write(b"\n")
        for name in tensors:
            arr = np.ascontiguousarray(tensors[name])
            if arr.dtype.str[0] == ">":
                arr = arr.astype(arr.dtype.newbyteorder("<"))
            f.write(arr.tobytes())


def load_container(
    path: str | Path, expect_format: str | None = None
) -> tuple[str, dict, dict[str, np.ndarray]]:
    with open(path, "rb") as f:
        header_line = f.readline(_HEADER_LIMIT)
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: not a pcgkit container ({exc})") from exc
        fmt = header.get("format")
        if expect_format is not None and fmt != expect_format:
            raise DataError(f"{path}: expected format {expect_format!r}, found {fmt!r}")
        tensors: dict[str, np.ndarray] = {}
        for entry in header["tensors"]:
            raw = f.read(entry["nbytes"])
            if len(raw) != entry["nbytes"]:
                raise DataError(f"{path}: truncated tensor {entry['name']!r}")
            arr = np.frombuffer(raw, dtype=np.dtype(entry["dtype"]))
            tensors[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return fmt, header["meta"], tensors


def content_hash(format_tag: str, meta: dict, tensors: dict[str, np.ndarray]) -> str:
    """Hash of the logical content (header plus tensor bytes), not the file."""
    import hashlib

    h = hashlib.sha256()
    header = {"format": format_tag, "meta": meta, "tensors": _manifest(tensors)}
    h.update(canonical_json(header).encode("utf-8"))
    for name in sorted(tensors):
        h.update(np.ascontiguousarray(tensors[name]).tobytes())
    return h.hexdigest()


def file_format(path: str | Path) -> str:
    with open(path, "rb") as f:
        header = json.loads(f.readline(_HEADER_LIMIT).decode("utf-8"))
    return header["format"]


def checkpoint_hash(path: str | Path) -> str:
    """Content hash of a container on disk (stable across rewrites)."""
    fmt, meta, tensors = load_container(path)
    return content_hash(fmt, meta, tensors)


__all__ = [
    "save_container",
    "load_container",
    "content_hash",
    "file_format",
    "checkpoint_hash",
    "sha256_hex",
]
