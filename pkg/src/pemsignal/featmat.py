"""Binary before/after feature matrices and their grouped count matrices.

For a patient anchored at day ``d`` (first prescription) and a window of
``w`` days:

* before matrix A: event seen in ``[d - w, d)``
* after matrix B: event seen in ``(d, d + w]``

Events on day ``d`` itself land in neither matrix.  Cells are 0/1, so a
symptom recorded twice in one window counts once.  Patients are then cut into
consecutive blocks of ``group_size`` rows (ascending patient id) and each
block is summed, giving the grouped matrices X (from A) and Y (from B).
"""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EmptyMatrix, UsageError
from .ingest import EventRecord, ExposureIndex
from .readcode import Readcode, rollup

log = logging.getLogger(__name__)


class Mode(str, Enum):
    LEVEL15 = "level15"
    LEVEL13 = "level13"


def event_key(code: Readcode, mode: Mode | str) -> str:
    """Column key for ``code``: full rendering, or its level-3 ancestor."""
    if Mode(mode) is Mode.LEVEL13:
        code = rollup(code, 3)
    return code.render()


def _day(d: dt.date | int) -> int:
    return d if isinstance(d, int) else d.toordinal()


@dataclass(frozen=True)
class WindowConfig:
    window_days: int = 60
    group_size: int = 100

    def __post_init__(self) -> None:
        if self.window_days < 1:
            raise UsageError(f"window_days must be >= 1, got {self.window_days}")
        if self.group_size < 1:
            raise UsageError(f"group_size must be >= 1, got {self.group_size}")


@dataclass(frozen=True)
class EventUniverse:
    keys: tuple[str, ...]
    mode: Mode = Mode.LEVEL15
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        keys = tuple(sorted(set(self.keys)))
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "index", {k: i for i, k in enumerate(keys)})

    def __len__(self) -> int:
        return len(self.keys)


@dataclass(frozen=True)
class FeatureMatrix:
    """Binary patients x events matrix, stored as CSR (uint8)."""

    role: str  # "A" (before) or "B" (after)
    patients: tuple[str, ...]
    universe: EventUniverse
    cells: sp.csr_matrix
    unmatched: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def to_dense(self) -> np.ndarray:
        return self.cells.toarray()


@dataclass(frozen=True)
class GroupedMatrix:
    role: str  # "X" (from A) or "Y" (from B)
    universe: EventUniverse
    counts: np.ndarray  # groups x events, int64
    group_sizes: tuple[int, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape


def build_universe(events: Iterable[EventRecord], mode: Mode | str = Mode.LEVEL15) -> EventUniverse:
    mode = Mode(mode)
    return EventUniverse(tuple({event_key(e.event_code, mode) for e in events}), mode)


def events_in_windows(index: ExposureIndex, events: Iterable[EventRecord],
                      window_days: int) -> list[EventRecord]:
    """Events of exposed patients that fall inside either observation window."""
    anchors = {pid: _day(d) for pid, d in index.items()}
    kept = []
    for e in events:
        d = anchors.get(e.patient_id)
        if d is None:
            continue
        offset = _day(e.date) - d
        if offset != 0 and -window_days <= offset <= window_days:
            kept.append(e)
    return kept


def build_feature_matrices(index: ExposureIndex, events: Iterable[EventRecord],
                           universe: EventUniverse,
                           cfg: WindowConfig = WindowConfig()) -> tuple[FeatureMatrix, FeatureMatrix]:
    if not index:
        raise EmptyMatrix("exposure index is empty")
    patients = tuple(sorted(index))
    row_of = {pid: i for i, pid in enumerate(patients)}
    anchors = [_day(index[pid]) for pid in patients]
    w = cfg.window_days

    before_rows: list[int] = []
    before_cols: list[int] = []
    after_rows: list[int] = []
    after_cols: list[int] = []
    unmatched = 0
    keys: dict[Readcode, str] = {}
    for e in events:
        row = row_of.get(e.patient_id)
        if row is None:
            continue
        offset = _day(e.date) - anchors[row]
        if offset == 0 or not -w <= offset <= w:
            continue
        key = keys.get(e.event_code)
        if key is None:
            key = keys[e.event_code] = event_key(e.event_code, universe.mode)
        col = universe.index.get(key)
        if col is None:
            unmatched += 1
            continue
        if offset < 0:
            before_rows.append(row)
            before_cols.append(col)
        else:
            after_rows.append(row)
            after_cols.append(col)

    if unmatched:
        log.warning("%d in-window events had keys outside the universe", unmatched)
    shape = (len(patients), len(universe))
    return (
        FeatureMatrix("A", patients, universe, _binary(before_rows, before_cols, shape), unmatched),
        FeatureMatrix("B", patients, universe, _binary(after_rows, after_cols, shape), unmatched),
    )


def _binary(rows: Sequence[int], cols: Sequence[int], shape: tuple[int, int]) -> sp.csr_matrix:
    data = np.ones(len(rows), dtype=np.uint8)
    m = sp.csr_matrix((data, (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
                      shape=shape, dtype=np.uint8)
    m.sum_duplicates()
    m.data[:] = 1
    return m


def group_bounds(n_rows: int, group_size: int) -> list[tuple[int, int]]:
    """Row ranges of each group; the remainder joins the last group."""
    if n_rows < 1:
        raise EmptyMatrix("cannot group a matrix with no rows")
    if group_size < 1:
        raise UsageError(f"group_size must be >= 1, got {group_size}")
    n_groups = max(1, n_rows // group_size)
    bounds = [(g * group_size, (g + 1) * group_size) for g in range(n_groups)]
    bounds[-1] = (bounds[-1][0], n_rows)
    return bounds


def group_matrix(m: FeatureMatrix, group_size: int) -> GroupedMatrix:
    n_rows = m.shape[0]
    bounds = group_bounds(n_rows, group_size)
    membership = np.empty(n_rows, dtype=np.int64)
    for g, (lo, hi) in enumerate(bounds):
        membership[lo:hi] = g
    indicator = sp.csr_matrix((np.ones(n_rows, dtype=np.int64), (membership, np.arange(n_rows))),
                              shape=(len(bounds), n_rows))
    counts = np.asarray((indicator @ m.cells.astype(np.int64)).todense(), dtype=np.int64)
    role = {"A": "X", "B": "Y"}.get(m.role, m.role)
    return GroupedMatrix(role, m.universe, counts, tuple(hi - lo for lo, hi in bounds))


def column_counts(m: FeatureMatrix) -> list[tuple[str, int]]:
    """Number of patients with each event (N_B for A, N_A for B)."""
    sums = np.asarray(m.cells.sum(axis=0, dtype=np.int64)).ravel()
    return [(k, int(c)) for k, c in zip(m.universe.keys, sums)]


def dump_matrix(m: FeatureMatrix | GroupedMatrix, path: str | Path) -> None:
    """Tab-separated dump: header of event keys, then one integer row per line."""
    dense = m.to_dense() if isinstance(m, FeatureMatrix) else m.counts
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(m.universe.keys) + "\n")
        for row in dense:
            fh.write("\t".join(str(int(v)) for v in row) + "\n")
