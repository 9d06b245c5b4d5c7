"""Per-module seed derivation from one root seed.

``derive_seed(root, name)`` is the first 8 bytes of
``sha256(f"{root}:{name}")`` read big-endian, masked to 63 bits. Every
random consumer names itself, so adding a consumer never shifts another's
stream.
"""

from __future__ import annotations

import hashlib


def derive_seed(root: int, name: str) -> int:
    digest = hashlib.sha256(f"{root}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big") & ((1 << 63) - 1)
