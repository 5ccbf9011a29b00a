"""End-to-end detection: files in, ranked signal report out."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError, UsageError
from .featmat import (Mode, WindowConfig, build_feature_matrices, build_universe, column_counts,
                      dump_matrix, events_in_windows, group_matrix)
from .ingest import build_exposure_index, load_medical, load_therapy
from .readcode import TermDictionary, load_dictionary
from .signals import SignalReport, filter_prefix, rank_by_p, rank_by_r1
from .stats import EventStats, Variant, per_event_tests
from .synth import CONFIG_FILE

log = logging.getLogger(__name__)

RANKINGS = ("p", "r1")


@dataclass(frozen=True)
class DetectConfig:
    drug_prefix: str
    window_days: int = 60
    group_size: int = 100
    mode: str = "level15"
    variant: str = "pooled_unpaired"
    alpha: float = 0.05
    ranking: str = "p"
    top_k: int = 20
    prefix: str | None = None
    require_increase: bool = True
    delimiter: str = ","

    def validate(self) -> None:
        if not self.drug_prefix:
            raise UsageError("drug prefix must be non-empty")
        if self.window_days < 1 or self.group_size < 1:
            raise UsageError("window_days and group_size must be >= 1")
        if self.mode not in {m.value for m in Mode}:
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.variant not in {v.value for v in Variant}:
            raise UsageError(f"unknown test variant {self.variant!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise UsageError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.ranking not in RANKINGS:
            raise UsageError(f"ranking must be one of {RANKINGS}, got {self.ranking!r}")
        if self.top_k < 1:
            raise UsageError("top_k must be >= 1")
        if self.prefix is not None and not self.prefix:
            raise UsageError("prefix filter must be non-empty when given")
        if len(self.delimiter) != 1:
            raise UsageError("delimiter must be a single character")


@dataclass
class DetectResult:
    report: SignalReport
    stats: list[EventStats]
    summary: dict[str, int] = field(default_factory=dict)


def detect(therapy: str | Path, medical: str | Path, cfg: DetectConfig,
           dictionary: str | Path | None = None,
           dump_dir: str | Path | None = None) -> DetectResult:
    cfg.validate()
    window = WindowConfig(cfg.window_days, cfg.group_size)
    terms = load_dictionary(dictionary) if dictionary else TermDictionary()

    prescriptions = load_therapy(therapy, cfg.drug_prefix, cfg.delimiter)
    events = load_medical(medical, cfg.delimiter)
    index = build_exposure_index(prescriptions)
    if not index:
        raise DataError(f"no patients prescribed a drug starting with {cfg.drug_prefix!r}")
    if len(index) < 2 * cfg.group_size:
        raise DataError(f"{len(index)} exposed patients cannot form two groups of "
                        f"{cfg.group_size}; the t-test needs at least two groups")

    in_window = events_in_windows(index, events, cfg.window_days)
    universe = build_universe(in_window, cfg.mode)
    a, b = build_feature_matrices(index, in_window, universe, window)
    x = group_matrix(a, cfg.group_size)
    y = group_matrix(b, cfg.group_size)
    stats = per_event_tests(x, y, column_counts(a), column_counts(b), len(index),
                            cfg.variant, terms)

    if dump_dir is not None:
        d = Path(dump_dir)
        d.mkdir(parents=True, exist_ok=True)
        for m, name in ((a, "A"), (b, "B"), (x, "X"), (y, "Y")):
            dump_matrix(m, d / f"matrix_{name}.tsv")

    summary = {"patients": len(index), "events": len(universe), "groups": x.shape[0]}
    provenance = _provenance(therapy, medical, dictionary, cfg, summary)
    selected = filter_prefix(stats, cfg.prefix) if cfg.prefix else stats
    rank = rank_by_p if cfg.ranking == "p" else rank_by_r1
    report = rank(selected, cfg.alpha, cfg.top_k, mode=cfg.mode,
                  require_increase=cfg.require_increase, provenance=provenance)
    summary["signals"] = len(report)
    log.info("patients=%d events=%d groups=%d signals=%d", summary["patients"],
             summary["events"], summary["groups"], summary["signals"])
    return DetectResult(report, stats, summary)


def _provenance(therapy, medical, dictionary, cfg: DetectConfig, summary) -> dict[str, object]:
    prov: dict[str, object] = {
        "therapy": str(therapy),
        "medical": str(medical),
        "dictionary": str(dictionary) if dictionary else "",
        "drug_prefix": cfg.drug_prefix,
        "window_days": cfg.window_days,
        "group_size": cfg.group_size,
        "variant": cfg.variant,
        "top_k": cfg.top_k,
        "prefix": cfg.prefix or "",
        "require_increase": cfg.require_increase,
        "delimiter": cfg.delimiter.encode("unicode_escape").decode("ascii"),
        "n_patients": summary["patients"],
        "n_events": summary["events"],
        "n_groups": summary["groups"],
    }
    synth_cfg = Path(therapy).parent / CONFIG_FILE
    if synth_cfg.is_file():
        try:
            prov["synth_seed"] = json.loads(synth_cfg.read_text(encoding="utf-8"))["seed"]
        except (OSError, ValueError, KeyError):
            pass
    return prov
