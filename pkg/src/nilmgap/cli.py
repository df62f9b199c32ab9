"""Command-line entry point: ``nilmgap {synth,nar,denoise,run,report}``.

Exit codes: 0 success, 1 usage error, 2 data or file error. Diagnostics go to
standard error; tables go to standard output or files.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import report, synth
from .errors import DataError, IncompatiblePowerTypes
from .experiment import read_experiment_config, read_summary, run
from .ingest import load_household, read_descriptor, write_household
from .noise import compute_nar, denoise
from .report import emit_score_table

log = logging.getLogger("nilmgap")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def nar_row(ds, header: bool = False) -> str:
    """Label, duration [days], meter count, power types, NAR [%] (``-`` when undefined)."""
    days = len(ds) * ds.interval / 86400
    app_type = ds.appliance_power_type
    try:
        nar = f"{compute_nar(ds).percent:.1f}"
    except IncompatiblePowerTypes:
        nar = "-"
    row = f"{ds.label}\t{days:.1f}\t{len(ds.appliances)}\t{ds.mains.power_type.value}\t{app_type.value}\t{nar}"
    if header:
        return "household\tduration_days\tmeters\tmains_type\tappliance_type\tnar_percent\n" + row
    return row


def cmd_synth(args) -> int:
    models = synth.catalog_models([a.strip() for a in args.appliances.split(",") if a.strip()])
    noise = synth.NoiseSpec(args.nar)
    ds = synth.generate(models, noise, args.slots, args.seed, interval=args.interval, label=args.label)
    conf = write_household(ds, args.out)
    log.info("wrote %s (%d slots, NAR target %.3f)", conf, len(ds), args.nar)
    return 0


def cmd_nar(args) -> int:
    ds = load_household(read_descriptor(args.dataset))
    print(nar_row(ds, args.header))
    return 0


def cmd_denoise(args) -> int:
    desc = read_descriptor(args.dataset)
    ds = denoise(load_household(desc))
    conf = write_household(ds, args.out, desc.fill.max_gap)
    log.info("wrote denoised household to %s", conf)
    return 0


def cmd_run(args) -> int:
    cfg = read_experiment_config(args.config)
    if args.output is not None:
        cfg = replace(cfg, output=Path(args.output))
    result = run(cfg)
    text, _ = emit_score_table(result.results)
    sys.stdout.write(text)
    return 0


def _summary_path(path: Path) -> Path:
    for cand in (path, path / "summary.csv", path / "results" / "summary.csv"):
        if cand.is_file():
            return cand
    raise FileNotFoundError(f"no summary.csv under {path}")


def cmd_report(args) -> int:
    summary = _summary_path(Path(args.input))
    results = read_summary(summary)
    out = Path(args.out) if args.out else summary.parent
    for p in report.write_report(results, out, args.metric):
        log.info("wrote %s", p)
    sys.stdout.write(report.score_table_text(results, args.metric))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    p = _Parser(prog="nilmgap", description="Real vs denoised NILM benchmarking", parents=[common])
    sub = p.add_subparsers(dest="command", metavar="{synth,nar,denoise,run,report}", parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic household (descriptor + CSVs)")
    s.add_argument("--out", required=True)
    s.add_argument("--appliances", default="fridge,kettle,washing_machine")
    s.add_argument("--nar", type=float, default=0.15)
    s.add_argument("--slots", type=int, default=100_000)
    s.add_argument("--interval", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--label", default="synthetic")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("nar", parents=[common], help="print the noise-aggregate ratio row for a household")
    s.add_argument("--dataset", required=True)
    s.add_argument("--header", action="store_true")
    s.set_defaults(func=cmd_nar)

    s = sub.add_parser("denoise", parents=[common], help="write the denoised version of a household")
    s.add_argument("--dataset", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_denoise)

    s = sub.add_parser("run", parents=[common], help="run the real-vs-denoised experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--output")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("report", parents=[common], help="score tables and gap chart from result files")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--metric", choices=["mae", "nde"], default="mae")
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except SystemExit as e:  # --help
        return 0 if not e.code else 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args)
    except (DataError, OSError) as e:
        print(f"nilmgap {args.command}: {e}", file=sys.stderr)
        return 2
    except (KeyError, ValueError) as e:
        # bad option values, e.g. an unknown catalog appliance or NAR >= 1
        print(f"nilmgap {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
