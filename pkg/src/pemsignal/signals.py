"""Ranking, filtering and rendering of per-event statistics as signal reports."""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .errors import IoFailure, UsageError
from .stats import EventStats, TestResult

TSV_COLUMNS = ("rank", "readcode", "description", "N_B", "N_A", "R1", "R2", "t", "df", "p",
               "degenerate")


class Ranking(str, Enum):
    BY_P = "by_p_ascending"
    BY_R1 = "by_r1_descending"


@dataclass(frozen=True)
class SignalReport:
    mode: str
    ranking: Ranking
    alpha: float
    rows: tuple[EventStats, ...]
    provenance: Mapping[str, object] = field(default_factory=dict)

    def ranked(self) -> list[tuple[int, EventStats]]:
        return list(enumerate(self.rows, start=1))

    def rank_of(self, key: str) -> int | None:
        for rank, row in self.ranked():
            if row.event_key == key:
                return rank
        return None

    def __len__(self) -> int:
        return len(self.rows)


def _check(alpha: float, top_k: int) -> None:
    if not 0.0 < alpha <= 1.0:
        raise UsageError(f"alpha must be in (0, 1], got {alpha}")
    if top_k < 1:
        raise UsageError(f"top_k must be >= 1, got {top_k}")


def _passing(stats: Iterable[EventStats], alpha: float, require_increase: bool) -> list[EventStats]:
    return [s for s in stats
            if s.test.p < alpha and (not require_increase or s.n_after > s.n_before)]


def rank_by_p(stats: Iterable[EventStats], alpha: float = 0.05, top_k: int = 20,
              mode: str = "level15", require_increase: bool = True,
              provenance: Mapping[str, object] | None = None) -> SignalReport:
    """Significant increases ordered by p ascending, ties by event key."""
    _check(alpha, top_k)
    rows = sorted(_passing(stats, alpha, require_increase), key=lambda s: (s.test.p, s.event_key))
    return SignalReport(mode, Ranking.BY_P, alpha, tuple(rows[:top_k]), dict(provenance or {}))


def rank_by_r1(stats: Iterable[EventStats], alpha: float = 0.05, top_k: int = 20,
               mode: str = "level15", require_increase: bool = True,
               provenance: Mapping[str, object] | None = None) -> SignalReport:
    """Significant increases ordered by R1 descending, then p, then event key."""
    _check(alpha, top_k)
    rows = sorted(_passing(stats, alpha, require_increase),
                  key=lambda s: (-s.r1, s.test.p, s.event_key))
    return SignalReport(mode, Ranking.BY_R1, alpha, tuple(rows[:top_k]), dict(provenance or {}))


def filter_prefix(stats: Iterable[EventStats], prefix: str) -> list[EventStats]:
    """Keep rows whose event key starts with ``prefix`` (e.g. ``"B"`` for neoplasms)."""
    if not prefix:
        raise UsageError("prefix filter must be non-empty")
    return [s for s in stats if s.event_key.startswith(prefix)]


def _fmt_float(v: float, spec: str) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, spec)


def _fmt_df(df: float) -> str:
    return str(int(df)) if float(df).is_integer() else format(df, ".2f")


def _clean(text: str) -> str:
    return " ".join(text.split())


def format_row(rank: int, s: EventStats) -> list[str]:
    return [
        str(rank),
        s.event_key,
        _clean(s.description),
        str(s.n_before),
        str(s.n_after),
        f"{s.r1:.2f}",
        f"{s.r2:.2f}",
        _fmt_float(s.test.t, ".4f"),
        _fmt_df(s.test.df),
        _fmt_float(s.test.p, ".3e"),
        "1" if s.test.degenerate else "0",
    ]


def render_report(r: SignalReport, fmt: str = "tsv") -> str:
    header = [f"# ranking={r.ranking.value}", f"# mode={r.mode}", f"# alpha={r.alpha}"]
    header += [f"# {k}={v}" for k, v in r.provenance.items()]
    rows = [format_row(rank, s) for rank, s in r.ranked()]
    if fmt == "tsv":
        lines = header + ["\t".join(TSV_COLUMNS)] + ["\t".join(row) for row in rows]
    elif fmt == "pretty":
        table = [list(TSV_COLUMNS)] + rows
        widths = [max(len(row[i]) for row in table) for i in range(len(TSV_COLUMNS))]
        lines = header + ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
                          for row in table]
    else:
        raise UsageError(f"unknown report format {fmt!r}")
    return "\n".join(lines) + "\n"


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        Path(tmp).unlink(missing_ok=True)
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def write_report(r: SignalReport, path: str | Path, fmt: str = "tsv") -> None:
    atomic_write_text(path, render_report(r, fmt))


def read_report(path: str | Path) -> SignalReport:
    """Parse a TSV report back; statistics carry their printed precision."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read report {path}: {exc}") from exc

    meta: dict[str, str] = {}
    rows: list[EventStats] = []
    header_seen = False
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
            continue
        if not header_seen:
            if tuple(line.split("\t")) != TSV_COLUMNS:
                raise UsageError(f"{path}: not a TSV signal report")
            header_seen = True
            continue
        f = line.split("\t")
        n_total = int(meta.get("n_patients", 0) or 0)
        test = TestResult(float(f[7]), float(f[8]), float(f[9]), f[10] == "1")
        rows.append(EventStats(f[1], f[2], int(f[3]), int(f[4]), n_total,
                               float(f[5]), float(f[6]), test))

    ranking = Ranking(meta.pop("ranking", Ranking.BY_P.value))
    mode = meta.pop("mode", "level15")
    alpha = float(meta.pop("alpha", "0.05"))
    return SignalReport(mode, ranking, alpha, tuple(rows), meta)

