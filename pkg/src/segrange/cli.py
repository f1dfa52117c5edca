"""drbench: run and verify the benchmark kernels from the command line.

Exit codes: 0 on success (all requested verifications passed), 1 on a
verification failure, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys

from .bench import BENCH_NAMES, DEFAULT_SIZES, BenchSpec, emit_csv, run_spec
from .runtime import default_locale_count


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="drbench",
        description="Benchmark and verify the segmented-ranges kernels.",
    )
    p.add_argument("--bench", required=True, choices=BENCH_NAMES, help="kernel to run")
    p.add_argument("--size", type=int, default=None,
                   help="element count (matrix dimension for gemm); per-bench default")
    p.add_argument("--locales", type=int, default=None,
                   help="locale count; defaults to SEGRANGE_LOCALES or the host")
    p.add_argument("--reps", type=int, default=3, help="repetitions (default 3)")
    p.add_argument("--seed", type=int, default=1, help="rng seed (default 1)")
    p.add_argument("--check", action="store_true",
                   help="verify against the sequential oracle")
    p.add_argument("--mode", choices=("strict", "relaxed"), default="relaxed",
                   help="zip alignment mode (default relaxed)")
    p.add_argument("--csv", metavar="PATH", default=None, help="write per-rep CSV rows")
    return p


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    size = args.size if args.size is not None else DEFAULT_SIZES[args.bench]
    locales = args.locales if args.locales is not None else default_locale_count()
    try:
        spec = BenchSpec(
            name=args.bench, size=size, locales=locales, reps=args.reps,
            seed=args.seed, check=args.check, mode=args.mode,
        )
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"drbench: error: {exc}", file=sys.stderr)
        return 2

    result = run_spec(spec)
    for i, sec in enumerate(result.seconds):
        print(
            f"bench={spec.name} size={spec.size} locales={spec.locales} "
            f"rep={i} seconds={sec:.6f} checksum={result.checksum}"
        )
    summary = (
        f"{spec.name}: median {result.median_seconds:.6f}s over {spec.reps} rep(s), "
        f"checksum {result.checksum}"
    )
    if "bytes_per_second" in result.extra:
        summary += f", {result.extra['bytes_per_second'] / 1e9:.2f} GB/s effective"
    if result.verified is not None:
        summary += f", verified={'yes' if result.verified else 'NO'}"
    elif "note" in result.extra:
        summary += f" ({result.extra['note']})"
    print(summary)

    if args.csv:
        emit_csv([result], args.csv)
        print(f"wrote {args.csv}")

    if result.verified is False:
        print(f"drbench: verification FAILED for {spec.name}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
