"""Deterministic fresh-name allocation for constructed grammars.

All generated names stay inside the textual format's name language
``[A-Za-z][A-Za-z0-9'_]*`` so emitted grammars can be read back.
Collisions with existing names are resolved by priming, which keeps the
scheme deterministic for a fixed construction order.
"""
from __future__ import annotations

import re

_BAD = re.compile(r"[^A-Za-z0-9'_]")


def sanitize(raw: str) -> str:
    name = _BAD.sub("_", raw)
    if not name or not name[0].isalpha():
        name = "n" + name
    return name


class NameAllocator:
    def __init__(self, taken: set[str] | frozenset[str] = frozenset()):
        self._taken = set(taken)

    def fresh(self, raw: str) -> str:
        name = sanitize(raw)
        while name in self._taken:
            name += "'"
        self._taken.add(name)
        return name

    def reserve(self, name: str) -> None:
        self._taken.add(name)

    def __contains__(self, name: str) -> bool:
        return name in self._taken
