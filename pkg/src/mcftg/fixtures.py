"""Bundled example grammars.

The directory can be overridden with the ``MCFTG_FIXTURES`` environment
variable, which is handy for testing alternative grammar sets.
"""
from __future__ import annotations

import os
from pathlib import Path

from .fmt import load_grammar
from .grammar import Mcftg

_HERE = Path(__file__).parent / "fixtures"

NAMES = ("g_main", "g_copy", "g_newmain", "g_paren", "g_footed_ex",
         "g_mcfg_ex", "g_tag", "g_infamb", "g_nonroot", "t_ab")


def fixture_dir() -> Path:
    override = os.environ.get("MCFTG_FIXTURES")
    return Path(override) if override else _HERE


def fixture_path(name: str) -> Path:
    path = fixture_dir() / f"{name}.mcftg"
    if not path.exists():
        raise FileNotFoundError(f"no fixture {name} in {fixture_dir()}")
    return path


def load_fixture(name: str) -> Mcftg:
    grammar, _ = load_grammar(str(fixture_path(name)))
    return grammar


def load_fixture_with_partition(name: str):
    return load_grammar(str(fixture_path(name)))
