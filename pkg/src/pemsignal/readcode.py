"""Hierarchical Readcodes: parsing, canonical form, rollup and term lookup.

A Readcode is a 5-character code, right-padded with ``.``, followed by a
2-character term code.  ``N2451`` is level 5, ``N24..`` is level 3.  The
canonical rendering is the 7-character concatenation, e.g. ``"N24..00"``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

from .errors import EmptyCode, InvalidLevel, IoFailure, MalformedCode

log = logging.getLogger(__name__)

CODE_WIDTH = 5
TERM_WIDTH = 2
DEFAULT_TERM = "00"
PAD = "."
UNKNOWN_TERM = "<unknown term>"


def _printable(s: str) -> bool:
    return all("!" <= ch <= "~" for ch in s)


@dataclass(frozen=True, order=True)
class Readcode:
    code: str
    term: str = DEFAULT_TERM

    def __post_init__(self) -> None:
        if len(self.code) != CODE_WIDTH:
            raise MalformedCode(f"code must have {CODE_WIDTH} characters: {self.code!r}")
        if len(self.term) != TERM_WIDTH or not _printable(self.term):
            raise MalformedCode(f"bad term code: {self.term!r}")
        if not _printable(self.code):
            raise MalformedCode(f"non-printable character in code: {self.code!r}")
        stripped = self.code.rstrip(PAD)
        if not stripped:
            raise MalformedCode(f"code has no significant characters: {self.code!r}")
        if PAD in stripped:
            raise MalformedCode(f"interior pad in code: {self.code!r}")

    @property
    def level(self) -> int:
        return len(self.code.rstrip(PAD))

    @property
    def stem(self) -> str:
        """The significant (non-pad) characters of the code."""
        return self.code.rstrip(PAD)

    def render(self) -> str:
        return self.code + self.term

    def __str__(self) -> str:
        return self.render()


def parse_readcode(raw: str) -> Readcode:
    """Parse a loosely written Readcode into canonical form.

    Accepts the 7-character canonical form (``"N245111"``), the 6-character
    form with a single pad (``"C34.00"``) and bare codes of up to 5
    characters (``"N24"``), which get term ``"00"``.

    >>> parse_readcode("C34.00").render()
    'C34..00'
    """
    s = raw.strip()
    if not s:
        raise EmptyCode("empty Readcode")
    if len(s) > CODE_WIDTH + TERM_WIDTH:
        raise MalformedCode(f"Readcode longer than 7 characters: {raw!r}")
    if not _printable(s):
        raise MalformedCode(f"Readcode contains non-printable characters: {raw!r}")

    if len(s) <= CODE_WIDTH:
        code, term = s, DEFAULT_TERM
    else:
        # 6 or 7 characters: the last two are the term code
        code, term = s[:-TERM_WIDTH], s[-TERM_WIDTH:]
        if not term.isdigit():
            raise MalformedCode(f"term code must be two digits: {raw!r}")
    return Readcode(code.ljust(CODE_WIDTH, PAD), term)


def rollup(c: Readcode, target_level: int) -> Readcode:
    """Collapse ``c`` to its ancestor at ``target_level`` (term reset to 00).

    Codes already at or above the target level are returned unchanged.
    """
    if not 1 <= target_level <= CODE_WIDTH:
        raise InvalidLevel(f"target level must be in 1..{CODE_WIDTH}, got {target_level}")
    if c.level <= target_level:
        return c
    return Readcode(c.code[:target_level].ljust(CODE_WIDTH, PAD), DEFAULT_TERM)


@dataclass(frozen=True)
class DictionaryLoadSummary:
    kept: int = 0
    duplicates: int = 0
    malformed: int = 0


@dataclass(frozen=True)
class TermDictionary:
    """Immutable map from canonical 7-char renderings to descriptions."""

    entries: Mapping[str, str] = field(default_factory=dict)
    summary: DictionaryLoadSummary = field(default_factory=DictionaryLoadSummary)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def lookup(self, key: str | Readcode) -> str:
        if isinstance(key, Readcode):
            key = key.render()
        return self.entries.get(key, UNKNOWN_TERM)

    def __contains__(self, key: object) -> bool:
        if isinstance(key, Readcode):
            key = key.render()
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def load_dictionary(path: str | Path) -> TermDictionary:
    """Read a ``code<TAB>description`` file.

    Malformed lines are skipped and counted; duplicate keys keep the first
    description.  Keys are canonicalized, so ``C34.00`` and ``C34..00``
    collide.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read dictionary {path}: {exc}") from exc

    entries: dict[str, str] = {}
    duplicates = malformed = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        raw_code, sep, description = line.partition("\t")
        if not sep:
            malformed += 1
            continue
        try:
            key = parse_readcode(raw_code).render()
        except (EmptyCode, MalformedCode):
            malformed += 1
            continue
        if key in entries:
            duplicates += 1
            continue
        entries[key] = description.strip()

    if duplicates:
        log.warning("dictionary %s: %d duplicate keys ignored", path, duplicates)
    if malformed:
        log.warning("dictionary %s: %d malformed lines skipped", path, malformed)
    summary = DictionaryLoadSummary(kept=len(entries), duplicates=duplicates, malformed=malformed)
    log.info("dictionary %s: kept=%d duplicates=%d malformed=%d",
             path, summary.kept, duplicates, malformed)
    return TermDictionary(entries, summary)
