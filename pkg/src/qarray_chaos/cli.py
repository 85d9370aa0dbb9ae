"""Command-line entry point: ``run``, ``preset`` and ``verify``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import PRESETS, load_run_spec, preset_spec
from .errors import SpecError
from .runner import execute, verify_outputs


def _report(kind: str, exc: BaseException, code: int) -> int:
    print(json.dumps({"status": "error", "kind": kind, "type": type(exc).__name__, "message": str(exc)}),
          file=sys.stderr)
    return code


def _execute(spec, out, workers) -> int:
    try:
        execute(spec, out, workers)
    except Exception as exc:
        return _report("runtime", exc, 1)
    print(f"wrote {out or spec.output}")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="qarray-chaos", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="execute a run-spec file")
    p_run.add_argument("spec")
    p_run.add_argument("--out", default=None, help="output directory (overrides the spec)")
    p_run.add_argument("--workers", type=int, default=None)

    p_pre = sub.add_parser("preset", help="run a named figure preset")
    p_pre.add_argument("name", choices=PRESETS)
    p_pre.add_argument("--scale", choices=("reduced", "full"), default="reduced")
    p_pre.add_argument("--seed", type=int, default=0)
    p_pre.add_argument("--out", default=None)
    p_pre.add_argument("--workers", type=int, default=None)

    p_ver = sub.add_parser("verify", help="recompute and check config hashes and checksums")
    p_ver.add_argument("dir")

    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.cmd == "run":
        try:
            spec = load_run_spec(args.spec)
        except (SpecError, OSError) as exc:
            return _report("spec", exc, 2)
        return _execute(spec, args.out, args.workers)
    if args.cmd == "preset":
        try:
            spec = preset_spec(args.name, args.scale, args.seed, args.out or f"out/{args.name}")
        except SpecError as exc:
            return _report("spec", exc, 2)
        return _execute(spec, args.out or spec.output, args.workers)
    problems = verify_outputs(args.dir)
    if problems:
        for p in problems:
            print(f"FAIL {p}")
        return 1
    print(f"OK {args.dir}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
