"""Command-line entry point: run one named experiment.

Usage: kaclab <experiment> [--key value]... [--config path] [--out dir]

Any --key matching a default of the chosen experiment overrides it; list
values are comma-separated strings.  Exit status: 0 when the experiment's
pass criterion holds, 1 when it fails, 2 on usage or runtime error.
"""

from __future__ import annotations

import argparse
import sys
import traceback

from . import experiments


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kaclab",
        description="Kac heat-reservoir experiments "
                    "(CSV/JSONL outputs plus figures).")
    p.add_argument("experiment", choices=sorted(experiments.EXPERIMENTS),
                   help="which experiment to run")
    p.add_argument("--config", default=None,
                   help="key=value file of overrides (flags win)")
    p.add_argument("--out", default=None,
                   help="output directory (default runs/<experiment>)")
    return p


def parse_overrides(rest) -> dict:
    out = {}
    i = 0
    while i < len(rest):
        tok = rest[i]
        if not tok.startswith("--"):
            raise ValueError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            if i + 1 >= len(rest):
                raise ValueError(f"missing value for --{key}")
            value = rest[i + 1]
            i += 1
        out[key] = value
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    try:
        overrides = parse_overrides(rest)
        summary = experiments.run(args.experiment, overrides=overrides,
                                  out=args.out, config_file=args.config)
    except (KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 2
    status = "PASS" if summary["pass"] else "FAIL"
    print(f"{summary['name']}: {status}")
    for m in summary["metrics"]:
        print(f"  {m['name']} = {m['value']:.6g} "
              f"(expected {m['expected']:.6g} +- {m['tolerance']:.6g})")
    return 0 if summary["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
