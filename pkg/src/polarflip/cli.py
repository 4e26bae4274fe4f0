"""Command-line entry point: run an Eb/N0 sweep and write CSV."""

from __future__ import annotations

import argparse
import json
import sys

from .channel import ChannelConfig
from .sim import GLOBAL_KEYS, ConfigError, parse_config, run_sweep, simulate_frame, write_csv


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="polarflip",
        description="FER / CNP sweeps for CA-SCL, D-SCLF and PC-DSCLF polar decoders.",
    )
    p.add_argument("config", nargs="?", help="INI sweep configuration ([sweep] and [decoder.NAME] sections)")
    group = p.add_argument_group("overrides", "replace the corresponding [sweep] key")
    for key in GLOBAL_KEYS:
        group.add_argument("--" + key.replace("_", "-"), dest=key, metavar=key.upper())
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--trace", type=int, metavar="FRAME",
                   help="print the attempt trace of one frame index for every decoder and Eb/N0, then exit")
    p.add_argument("--trace-bits", action="store_true",
                   help="with --trace, also print per-bit survivor PMs and E values of each attempt")
    p.add_argument("--emit-spec", action="store_true", help="print the constructed code of every decoder as JSON and exit")
    p.add_argument("--quiet", action="store_true", help="no progress lines on stderr")
    return p


def _trace(sweep, frame: int, bits: bool, out) -> None:
    for setup in sweep.decoders:
        spec = setup.build_spec()
        for ebno in sweep.ebno_db:
            channel = ChannelConfig(ebno, setup.K / setup.N, sweep.seed)
            stats, res = simulate_frame(spec, setup.decoder, channel, frame, keep_outcomes=True)
            head = {"decoder": setup.name, "ebno_db": ebno, "frame": frame}
            for rec, outcome in zip(res.records, res.outcomes):
                out.write(json.dumps({**head, **json.loads(rec.to_json())}) + "\n")
                if bits:
                    for line in outcome.trace_lines(spec):
                        out.write(json.dumps({**head, "attempt": rec.attempt, **json.loads(line)}) + "\n")
            out.write(json.dumps({**head, "frame_error": stats.error, "cnp": stats.cnp, "attempts": stats.attempts}) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in GLOBAL_KEYS}
    text = ""
    source = "<defaults>"
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"polarflip: cannot read config: {exc}", file=sys.stderr)
            return 2
        source = args.config
    try:
        sweep = parse_config(text, overrides, source=source)
    except ConfigError as exc:
        print(f"polarflip: {exc}", file=sys.stderr)
        return 2

    if args.emit_spec:
        doc = {s.name: s.build_spec().to_dict() for s in sweep.decoders}
        json.dump(doc, sys.stdout, indent=1)
        sys.stdout.write("\n")
        return 0
    if args.trace is not None:
        _trace(sweep, args.trace, args.trace_bits, sys.stdout)
        return 0

    def progress(rec):
        if not args.quiet:
            print(f"{rec.decoder} {rec.ebno_db:g} dB: {rec.errors}/{rec.frames} fer={rec.fer:.3e} "
                  f"cnp={rec.avg_cnp:.1f}", file=sys.stderr)

    records = run_sweep(sweep, workers=args.workers, progress=progress)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_csv(records, fh)
    else:
        write_csv(records, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
