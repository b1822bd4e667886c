"""Shared helpers: seed derivation, RNG construction, atomic writes."""

from __future__ import annotations

import hashlib
import os

import numpy as np


def derive_seed(*parts) -> int:
    """Hash arbitrary labels/integers into a stable 64-bit seed.

    Namespacing seeds this way keeps independent pipeline stages
    decorrelated while remaining reproducible across platforms.
    """
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(str(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def make_rng(*parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))


def fmt_float(x: float) -> str:
    """Shortest decimal that parses back to exactly the same double."""
    return repr(float(x))


def atomic_write_text(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def atomic_write_bytes(path: str, data: bytes) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
