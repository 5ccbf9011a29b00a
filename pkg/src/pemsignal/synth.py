"""Synthetic therapy/medical cohorts with planted adverse reactions.

Every patient gets one study-drug prescription at a random anchor date.  Each
event then occurs at most once in the before window and at most once in the
after window, as independent Bernoulli draws: null events use the same rate
in both windows, planted events multiply the after-window rate.  Files are
written in the same schema :mod:`pemsignal.ingest` reads.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import InvalidConfig, IoFailure
from .featmat import Mode, event_key
from .readcode import parse_readcode
from .signals import SignalReport

THERAPY_FILE = "therapy.csv"
MEDICAL_FILE = "medical.csv"
DICTIONARY_FILE = "dictionary.tsv"
CONFIG_FILE = "synth_config.json"

_FIRST_CHARS = "0123456789ABCDEFGHJKLMNPQRSTUZ"
_NEXT_CHARS = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class PlantedEvent:
    key: str
    rate: float
    multiplier: float
    description: str = ""

    def __post_init__(self) -> None:
        try:
            key = parse_readcode(self.key).render()
        except ValueError as exc:
            raise InvalidConfig(f"planted key {self.key!r}: {exc}") from exc
        object.__setattr__(self, "key", key)


# Table-II-style reactions, each under a distinct level-3 ancestor.
DEFAULT_PLANTED = (
    PlantedEvent("1M10.00", 0.008, 4.0, "Knee pain"),
    PlantedEvent("C34..00", 0.010, 4.0, "Gout"),
    PlantedEvent("A53..11", 0.012, 5.0, "Shingles"),
    PlantedEvent("N245.17", 0.015, 4.5, "Shoulder pain"),
    PlantedEvent("M03z000", 0.020, 6.0, "Cellulitis NOS"),
)


@dataclass(frozen=True)
class SynthConfig:
    n_patients: int = 10000
    n_null_events: int = 200
    planted: tuple[PlantedEvent, ...] = DEFAULT_PLANTED
    null_rate_min: float = 0.002
    null_rate_max: float = 0.05
    window_days: int = 60
    group_size: int = 100
    seed: int = 0
    drug_code: str = "PRAVA01"
    start_date: str = "2000-01-01"
    span_days: int = 730

    def __post_init__(self) -> None:
        object.__setattr__(self, "planted", tuple(
            p if isinstance(p, PlantedEvent) else PlantedEvent(**p) for p in self.planted))
        self.validate()

    def validate(self) -> None:
        if self.n_patients < 1:
            raise InvalidConfig("n_patients must be >= 1")
        if self.n_null_events < 0:
            raise InvalidConfig("n_null_events must be >= 0")
        if not 0 < self.null_rate_min <= self.null_rate_max < 1:
            raise InvalidConfig("null rates need 0 < null_rate_min <= null_rate_max < 1")
        if self.window_days < 1 or self.group_size < 1 or self.span_days < 1:
            raise InvalidConfig("window_days, group_size and span_days must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")
        if not self.drug_code:
            raise InvalidConfig("drug_code must be non-empty")
        try:
            dt.date.fromisoformat(self.start_date)
        except ValueError as exc:
            raise InvalidConfig(f"start_date: {exc}") from exc
        keys = [p.key for p in self.planted]
        if len(set(keys)) != len(keys):
            raise InvalidConfig("planted keys must be unique")
        for p in self.planted:
            if not 0 < p.rate < 1:
                raise InvalidConfig(f"{p.key}: rate must be in (0, 1)")
            if p.multiplier < 1 or p.rate * p.multiplier > 1:
                raise InvalidConfig(f"{p.key}: need multiplier >= 1 and rate * multiplier <= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["planted"] = [asdict(p) for p in self.planted]
        return d

    @classmethod
    def from_mapping(cls, data: Mapping[str, object]) -> "SynthConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidConfig(f"unknown config keys: {', '.join(sorted(unknown))}")
        kwargs = dict(data)
        if "planted" in kwargs:
            kwargs["planted"] = _parse_planted(kwargs["planted"])
        try:
            for name in ("n_patients", "n_null_events", "window_days", "group_size", "seed",
                         "span_days"):
                if name in kwargs:
                    kwargs[name] = int(kwargs[name])
            for name in ("null_rate_min", "null_rate_max"):
                if name in kwargs:
                    kwargs[name] = float(kwargs[name])
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(str(exc)) from exc
        return cls(**kwargs)


def _parse_planted(value) -> tuple[PlantedEvent, ...]:
    """Accept a list of dicts or a ``"KEY:rate:mult, KEY:rate:mult"`` string."""
    if isinstance(value, str):
        items = [v.strip() for v in value.split(",") if v.strip()]
        return tuple(parse_planted_spec(v) for v in items)
    try:
        return tuple(p if isinstance(p, PlantedEvent) else PlantedEvent(**p) for p in value)
    except TypeError as exc:
        raise InvalidConfig(f"bad planted entry: {exc}") from exc


def parse_planted_spec(text: str) -> PlantedEvent:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise InvalidConfig(f"planted entry must be KEY:RATE:MULT[:DESCRIPTION], got {text!r}")
    try:
        return PlantedEvent(parts[0], float(parts[1]), float(parts[2]),
                            parts[3] if len(parts) == 4 else "")
    except ValueError as exc:
        raise InvalidConfig(f"bad planted entry {text!r}: {exc}") from exc


def load_config(path: str | Path) -> SynthConfig:
    """Read a JSON config or a ``key = value`` file (``#`` comment lines allowed)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}: {exc}") from exc
    else:
        data = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InvalidConfig(f"{path}:{lineno}: expected key = value")
            data[key.strip()] = value.strip()
    return SynthConfig.from_mapping(data)


def _null_keys(rng: np.random.Generator, n: int, reserved_roots: set[str]) -> list[str]:
    # codes come in families sharing a level-3 ancestor, like real chapters
    n_roots = max(1, math.ceil(n / 3))
    roots: list[str] = []
    seen_roots = set(reserved_roots)
    while len(roots) < n_roots:
        root = (_FIRST_CHARS[rng.integers(len(_FIRST_CHARS))]
                + "".join(_NEXT_CHARS[i] for i in rng.integers(len(_NEXT_CHARS), size=2)))
        if root not in seen_roots:
            seen_roots.add(root)
            roots.append(root)

    keys: list[str] = []
    seen: set[str] = set()
    while len(keys) < n:
        root = roots[rng.integers(n_roots)]
        depth = int(rng.integers(3, 6))
        extra = "".join(_NEXT_CHARS[i] for i in rng.integers(len(_NEXT_CHARS), size=depth - 3))
        key = (root + extra).ljust(5, ".") + "00"
        if key not in seen:
            seen.add(key)
            keys.append(key)
    return keys


def generate_cohort(cfg: SynthConfig, out_dir: str | Path) -> tuple[Path, Path]:
    """Write therapy, medical, dictionary and config files into ``out_dir``.

    Returns the therapy and medical paths.  Output is a pure function of
    ``cfg``.
    """
    cfg.validate()
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc}") from exc

    rng = np.random.default_rng(cfg.seed)
    n, w = cfg.n_patients, cfg.window_days
    width = max(6, len(str(n)))
    pids = [f"P{i:0{width}d}" for i in range(n)]

    reserved = {parse_readcode(p.key).code[:3] for p in cfg.planted}
    null_keys = _null_keys(rng, cfg.n_null_events, reserved)
    null_rates = np.exp(rng.uniform(math.log(cfg.null_rate_min), math.log(cfg.null_rate_max),
                                    size=cfg.n_null_events))

    first_day = dt.date.fromisoformat(cfg.start_date).toordinal() + w + 1
    anchors = first_day + rng.integers(0, cfg.span_days, size=n)

    keys = [p.key for p in cfg.planted] + null_keys
    before_rates = [p.rate for p in cfg.planted] + list(null_rates)
    after_rates = [p.rate * p.multiplier for p in cfg.planted] + list(null_rates)

    rows_pid, rows_day, rows_key = [], [], []
    for j, (rb, ra) in enumerate(zip(before_rates, after_rates)):
        hit_before = rng.random(n) < rb
        hit_after = rng.random(n) < ra
        off_before = rng.integers(1, w + 1, size=n)
        off_after = rng.integers(1, w + 1, size=n)
        idx = np.flatnonzero(hit_before)
        rows_pid.append(idx)
        rows_day.append(anchors[idx] - off_before[idx])
        rows_key.append(np.full(idx.size, j))
        idx = np.flatnonzero(hit_after)
        rows_pid.append(idx)
        rows_day.append(anchors[idx] + off_after[idx])
        rows_key.append(np.full(idx.size, j))

    pid_arr = np.concatenate(rows_pid) if rows_pid else np.empty(0, dtype=np.int64)
    day_arr = np.concatenate(rows_day) if rows_day else np.empty(0, dtype=np.int64)
    key_arr = np.concatenate(rows_key) if rows_key else np.empty(0, dtype=np.int64)
    order = np.lexsort((key_arr, day_arr, pid_arr))

    therapy_path = out / THERAPY_FILE
    medical_path = out / MEDICAL_FILE
    iso = {}

    def date_str(day: int) -> str:
        s = iso.get(day)
        if s is None:
            s = iso[day] = dt.date.fromordinal(day).isoformat()
        return s

    try:
        with open(therapy_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("patient_id", "drug_code", "date"))
            for i in range(n):
                writer.writerow((pids[i], cfg.drug_code, date_str(int(anchors[i]))))
        with open(medical_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("patient_id", "event_code", "date"))
            for i in order:
                writer.writerow((pids[pid_arr[i]], keys[key_arr[i]], date_str(int(day_arr[i]))))
        with open(out / DICTIONARY_FILE, "w", encoding="utf-8", newline="\n") as fh:
            for j, p in enumerate(cfg.planted):
                fh.write(f"{p.key}\t{p.description or f'Planted event {j + 1}'}\n")
            for j, key in enumerate(null_keys):
                fh.write(f"{key}\tSynthetic event {j + 1:03d}\n")
        (out / CONFIG_FILE).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n",
                                       encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write cohort files in {out}: {exc}") from exc
    return therapy_path, medical_path


@dataclass(frozen=True)
class EvalResult:
    recall_at_k: float
    planted_ranks: dict[str, int | None] = field(default_factory=dict)
    k: int = 20


def evaluate(report: SignalReport, cfg: SynthConfig, k: int = 20) -> EvalResult:
    """Recall@k of the planted events in ``report``.

    In level13 reports the planted keys are compared through their level-3
    ancestors.
    """
    ranks: dict[str, int | None] = {}
    for p in cfg.planted:
        key = event_key(parse_readcode(p.key), Mode(report.mode))
        ranks[p.key] = report.rank_of(key)
    if not ranks:
        return EvalResult(0.0, {}, k)
    found = sum(1 for r in ranks.values() if r is not None and r <= k)
    return EvalResult(found / len(ranks), ranks, k)
