"""Command-line entry point: ``pemsignal {detect,simulate,evaluate,rollup}``.

Exit codes: 0 success, 1 usage, 2 I/O, 3 data validation, 4 internal.
Failures print one ``error: <category>: <message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import PemError, UsageError
from .pipeline import DetectConfig, detect
from .readcode import parse_readcode, rollup
from .signals import read_report, write_report
from .synth import CONFIG_FILE, SynthConfig, evaluate, generate_cohort, load_config, parse_planted_spec


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="pemsignal", description="Prescription-event-monitoring signal detection.",
                     formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("detect", help="run the detection pipeline", formatter_class=fmt)
    d.add_argument("--therapy", required=True, help="therapy file (patient_id, drug_code, date)")
    d.add_argument("--medical", required=True, help="medical file (patient_id, event_code, date)")
    d.add_argument("--dictionary", default=None, help="Readcode term dictionary (code TAB description)")
    d.add_argument("--drug-prefix", required=True, help="keep prescriptions whose drug code starts with this")
    d.add_argument("--window-days", type=int, default=60, help="observation window before and after")
    d.add_argument("--group-size", type=int, default=100, help="patients per group")
    d.add_argument("--mode", choices=("level15", "level13"), default="level15",
                   help="event columns: full codes or level-3 ancestors")
    d.add_argument("--variant", choices=("pooled_unpaired", "paired"), default="pooled_unpaired",
                   help="t-test variant")
    d.add_argument("--alpha", type=float, default=0.05, help="keep events with p below this")
    d.add_argument("--ranking", choices=("p", "r1"), default="p", help="sort by p or by R1")
    d.add_argument("--top-k", type=int, default=20, help="rows in the report")
    d.add_argument("--prefix", default=None, help="only events whose code starts with this")
    d.add_argument("--allow-decrease", action="store_true",
                   help="do not require N_A > N_B for a signal")
    d.add_argument("--delimiter", default=",", help="input field delimiter")
    d.add_argument("--format", choices=("tsv", "pretty"), default="tsv", help="report format")
    d.add_argument("--dump-matrices", default=None, metavar="DIR",
                   help="also write A, B, X, Y as TSV into DIR")
    d.add_argument("--output", "-o", required=True, help="report path")

    s = sub.add_parser("simulate", help="write a synthetic cohort", formatter_class=fmt)
    s.add_argument("--config", default=None, help="JSON or key=value config file")
    s.add_argument("--output-dir", "-o", required=True, help="directory for the cohort files")
    s.add_argument("--seed", type=int, default=None, help="random seed (config default: 0)")
    s.add_argument("--n-patients", type=int, default=None, help="cohort size (config default: 10000)")
    s.add_argument("--n-null-events", type=int, default=None,
                   help="events without effect (config default: 200)")
    s.add_argument("--planted", action="append", default=None, metavar="KEY:RATE:MULT",
                   help="planted reaction; repeatable; replaces the built-in set")
    s.add_argument("--no-planted", action="store_true", help="generate a null cohort")
    s.add_argument("--window-days", type=int, default=None, help="window (config default: 60)")
    s.add_argument("--group-size", type=int, default=None, help="group size (config default: 100)")

    e = sub.add_parser("evaluate", help="recall@k of planted events in a report", formatter_class=fmt)
    e.add_argument("--report", required=True, help="TSV report from detect")
    e.add_argument("--config", default=None,
                   help=f"synthetic config; defaults to {CONFIG_FILE} next to the report's therapy file")
    e.add_argument("--k", type=int, default=20, help="cut-off rank")

    r = sub.add_parser("rollup", help="roll codes from stdin up to a level", formatter_class=fmt)
    r.add_argument("--level", type=int, default=3, help="target hierarchy level (1-5)")
    return parser


def run_detect(args) -> int:
    cfg = DetectConfig(
        drug_prefix=args.drug_prefix, window_days=args.window_days, group_size=args.group_size,
        mode=args.mode, variant=args.variant, alpha=args.alpha, ranking=args.ranking,
        top_k=args.top_k, prefix=args.prefix, require_increase=not args.allow_decrease,
        delimiter=args.delimiter,
    )
    cfg.validate()
    result = detect(args.therapy, args.medical, cfg, args.dictionary, args.dump_matrices)
    write_report(result.report, args.output, args.format)
    s = result.summary
    print(f"patients={s['patients']} events={s['events']} groups={s['groups']} "
          f"signals={s['signals']}", file=sys.stderr)
    return 0


def run_simulate(args) -> int:
    cfg = load_config(args.config) if args.config else SynthConfig()
    overrides = {name: getattr(args, name)
                 for name in ("seed", "n_patients", "n_null_events", "window_days", "group_size")
                 if getattr(args, name) is not None}
    if args.no_planted and args.planted:
        raise UsageError("--planted and --no-planted are mutually exclusive")
    if args.no_planted:
        overrides["planted"] = ()
    elif args.planted:
        overrides["planted"] = tuple(parse_planted_spec(p) for p in args.planted)
    cfg = replace(cfg, **overrides)
    therapy, medical = generate_cohort(cfg, args.output_dir)
    print(f"therapy={therapy} medical={medical} seed={cfg.seed}", file=sys.stderr)
    return 0


def run_evaluate(args) -> int:
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    report = read_report(args.report)
    config_path = args.config
    if config_path is None:
        therapy = report.provenance.get("therapy")
        if not therapy:
            raise UsageError("report has no therapy provenance; pass --config")
        config_path = Path(str(therapy)).parent / CONFIG_FILE
    cfg = load_config(config_path)
    res = evaluate(report, cfg, args.k)
    print(json.dumps({"k": res.k, "recall_at_k": res.recall_at_k,
                      "planted_ranks": res.planted_ranks}, sort_keys=True))
    return 0


def run_rollup(args) -> int:
    if not 1 <= args.level <= 5:
        raise UsageError(f"--level must be in 1..5, got {args.level}")
    out = []
    for line in sys.stdin:
        if not line.strip():
            continue
        out.append(rollup(parse_readcode(line), args.level).render())
    sys.stdout.write("".join(c + "\n" for c in out))
    return 0


COMMANDS = {"detect": run_detect, "simulate": run_simulate, "evaluate": run_evaluate,
            "rollup": run_rollup}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        return COMMANDS[args.command](args)
    except PemError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        print(f"error: internal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
