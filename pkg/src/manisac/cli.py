"""Command-line entry point.

    manisac --cmd solve --config scenario.yaml --gamma 10 --seeds 0:5 \
            --out results/ --threads 2 --set n_transmit=4

Exit codes: 0 success, 2 config error, 3 infeasible layout, 4 stalled solver,
5 I/O failure, 6 other guarded failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import apply_override, load_config
from .errors import (
    ConfigError,
    InfeasibleLayoutError,
    ManisacError,
    StalledSolverError,
)
from .runner import COMMANDS, run, write_results

THREADS_ENV = "MANISAC_THREADS"


def parse_seeds(text: str) -> list[int]:
    """Comma-separated seeds and half-open ranges: "0,5,7" or "0:50"."""
    seeds: list[int] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" in chunk:
            lo, hi = chunk.split(":")
            seeds.extend(range(int(lo), int(hi)))
        else:
            seeds.append(int(chunk))
    if not seeds:
        raise ConfigError(f"no seeds parsed from {text!r}")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manisac",
        description="Movable-antenna near-field ISAC experiments",
    )
    parser.add_argument("--cmd", required=True, choices=COMMANDS)
    parser.add_argument("--config", default=None,
                        help="YAML scenario file (defaults cover all keys)")
    parser.add_argument("--gamma", type=int, default=None,
                        help="candidate layout pairs for the position search")
    parser.add_argument("--seeds", default="0", help='e.g. "0,1,2" or "0:20"')
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"worker processes (default ${THREADS_ENV} or 1)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="config override, repeatable (dotted keys)")
    parser.add_argument("--binary-grids", action="store_true",
                        help="also write gain grids as little-endian float64 triplets")
    parser.add_argument("--dump-channels", action="store_true",
                        help="dump the selected layout's channels as JSON (solve)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        for override in args.set:
            if "=" not in override:
                raise ConfigError(f"--set expects KEY=VALUE, got {override!r}")
            key, value = override.split("=", 1)
            apply_override(cfg, key.strip(), value.strip())
        seeds = parse_seeds(args.seeds)
        threads = args.threads
        if threads is None:
            raw = os.environ.get(THREADS_ENV, "1")
            try:
                threads = int(raw)
            except ValueError:
                raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")
        if threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {threads}")
        bundle = run(cfg, args.cmd, seeds, gamma=args.gamma, threads=threads,
                     dump_channels=args.dump_channels)
        paths = write_results(bundle, args.out, binary_grids=args.binary_grids)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleLayoutError as exc:
        print(f"infeasible layout: {exc}", file=sys.stderr)
        return 3
    except StalledSolverError as exc:
        print(f"solver stalled: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 5
    except (ManisacError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 6
    print(f"{args.cmd}: wrote {len(paths)} files to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
