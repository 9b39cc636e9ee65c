"""Small shared helpers: canonical JSON, hashing, JSONL files, seeds."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Iterable


def canonical_json(obj: Any) -> str:
    """Serialize with sorted keys and no whitespace so equal objects hash equally."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def hash_json(obj: Any) -> str:
    return sha256_hex(canonical_json(obj).encode("utf-8"))


def hash_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(canonical_json(rec))
            f.write("\n")


def read_jsonl(path: str | Path) -> list[dict]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def round_half_up(x: float) -> int:
    """Round with ties away from zero-half behavior fixed upward (0.5 -> 1)."""
    return int(math.floor(x + 0.5))


def derive_seed(*parts: object) -> int:
    """Stable 63-bit seed from arbitrary string/int parts.

    Uses sha256 rather than hash() so results do not depend on
    PYTHONHASHSEED; the same parts always give the same seed.
    """
    key = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1
