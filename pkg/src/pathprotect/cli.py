"""Command-line front end.

Exit codes: 0 success, 2 invalid input (scenario, config or vectors),
3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import netsim
from .controller import load_config_file
from .errors import ValidationError
from .node import MODES
from .seqwin import SN_SPACE, max_compensable_delay
from .vectors import default_vectors_text, run_vectors

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

log = logging.getLogger("pathprotect")


def _run_one(path, seed, mode, out_dir, packets):
    scenario = load_config_file(path)
    metrics = netsim.run(scenario, mode=mode, seed=seed)
    written = metrics.write(out_dir, packets=packets)
    return metrics.summary(), written, metrics.conservation_ok()


def cmd_run(args) -> int:
    for path in args.scenario:
        if not os.path.isfile(path):
            print(f"error: scenario file not found: {path}", file=sys.stderr)
            return EXIT_VALIDATION
    jobs = []
    for path in args.scenario:
        stem = os.path.splitext(os.path.basename(path))[0]
        out = args.out if len(args.scenario) == 1 else os.path.join(args.out, stem)
        jobs.append((path, args.seed, args.mode, out, not args.no_packets))
    try:
        if args.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_run_one, *zip(*jobs)))
        else:
            results = [_run_one(*job) for job in jobs]
    except ValidationError as e:
        print(f"error: invalid scenario: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    status = EXIT_OK
    for (path, *_), (summary, written, conserved) in zip(jobs, results):
        sys.stdout.write(summary)
        for w in written:
            log.info("wrote %s", w)
        if not conserved:
            print(f"error: packet accounting does not balance for {path}", file=sys.stderr)
            status = EXIT_RUNTIME
    return status


def cmd_vectors(args) -> int:
    try:
        if args.path is None:
            text = default_vectors_text()
        else:
            with open(args.path, encoding="utf-8") as fh:
                text = fh.read()
        results = run_vectors(text)
    except FileNotFoundError:
        print(f"error: vector file not found: {args.path}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    if not results:
        print("warning: no vectors found", file=sys.stderr)
    failed = 0
    for r in results:
        if r.ok:
            print(f"PASS {r.name}")
        else:
            failed += 1
            print(f"FAIL {r.name}: {r.detail}")
    print(f"{len(results) - failed}/{len(results)} vectors passed")
    return EXIT_OK if failed == 0 else EXIT_VALIDATION


def cmd_bound(args) -> int:
    window = args.window if args.window is not None else args.sn_space // 2
    bits = args.packet_bits if args.packet_bits is not None else args.packet_bytes * 8
    try:
        seconds = max_compensable_delay(args.sn_space, window, bits, args.rate)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"{seconds:.9g} s")
    log.info("N=%d W=%d packet=%d bits rate=%g b/s", args.sn_space, window, bits, args.rate)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pathprotect",
                                     description="1+1 path protection toolkit")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate scenario files and write metrics")
    p.add_argument("scenario", nargs="+", help="YAML scenario/config document(s)")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--mode", choices=MODES, default=None,
                   help="override the forwarding mode (default: as in the scenario)")
    p.add_argument("--jobs", type=int, default=1,
                   help="run several scenarios in parallel processes (default: 1)")
    p.add_argument("--no-packets", action="store_true", help="skip packets.csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("vectors", help="round-trip golden wire vectors")
    p.add_argument("path", nargs="?", default=None,
                   help="vector file (default: the bundled suite)")
    p.set_defaults(func=cmd_vectors)

    p = sub.add_parser("bound", help="delay difference the acceptance window tolerates")
    p.add_argument("--sn-space", type=int, default=SN_SPACE, help="number of SNs (default 2^32)")
    p.add_argument("--window", type=int, default=None, help="window W (default sn-space/2)")
    size = p.add_mutually_exclusive_group()
    size.add_argument("--packet-bytes", type=int, default=40,
                      help="minimum packet size in bytes (default 40)")
    size.add_argument("--packet-bits", type=int, default=None)
    p.add_argument("--rate", type=float, default=1e12, help="line rate in b/s (default 1e12)")
    p.set_defaults(func=cmd_bound)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as e:  # noqa: BLE001 - last-resort mapping to the runtime exit code
        log.debug("unhandled error", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
