"""Command-line interface.

Exit codes: 0 success, 1 on any acceptance-relevant failure (a rejected
cycle, a failed known-answer vector), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import campaign as ch
from . import coded_runtime as rt
from .coded_core import CodedCoreError, make_key
from .dsl import DslError, parse_program
from .mac import MacKey, hash_digest, hmac_tag
from .redundancy import POLICIES, VoteConfig, redundancy_campaign
from .sigtool import (CodedProgram, SigtoolError, build, emit_prom,
                      load_prom)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _cmd_sign(args) -> int:
    try:
        with open(args.program, "r", encoding="utf-8") as fh:
            source = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        key = make_key(args.key)
        ir = parse_program(source)
    except (CodedCoreError, DslError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    table, program = build(ir, key, args.seed)
    image = emit_prom(table, program)
    with open(args.output, "wb") as fh:
        fh.write(image)
    print(f"wrote {len(image)} bytes to {args.output} "
          f"(digest {table.program_digest.hex()[:16]}..., "
          f"{len(ir.instructions)} instructions, "
          f"{len(table.signatures)} signatures)")
    return EXIT_OK


def _load_image(path: str):
    try:
        with open(path, "rb") as fh:
            return load_prom(fh.read())
    except (OSError, SigtoolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


def _cmd_run(args) -> int:
    loaded = _load_image(args.prom)
    if loaded is None:
        return EXIT_CONFIG
    table, program = loaded
    try:
        with open(args.inputs, "r", encoding="utf-8") as fh:
            inputs = {k: int(v) for k, v in json.load(fh).items()}
    except (OSError, ValueError) as exc:
        print(f"error: bad inputs file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status = EXIT_OK
    for cycle in range(args.cycles):
        result = rt.run_cycle(program, table, inputs, cycle, table.key)
        if result.verdict == rt.ACCEPT:
            rendered = ", ".join(f"{k}={v}"
                                 for k, v in sorted(result.outputs.items()))
            print(f"cycle {cycle}: accept {rendered}")
        else:
            print(f"cycle {cycle}: {result.verdict} ({result.reject_reason})")
            status = EXIT_FAILURE
    return status


def _cmd_inject(args) -> int:
    loaded = _load_image(args.prom)
    if loaded is None:
        return EXIT_CONFIG
    table, program = loaded
    models = [m.strip().upper() for m in args.model.split(",")]
    for m in models:
        if m not in rt.FAULT_MODELS:
            print(f"error: unknown fault model {m!r}", file=sys.stderr)
            return EXIT_CONFIG
    report = rt.run_campaign(program, table, table.key, models,
                             args.trials, args.seed)
    print(report.to_json())
    return EXIT_OK


def _cmd_channel(args) -> int:
    try:
        config = ch.load_config(args.config)
        report = ch.run_channel_campaign(config)
    except ch.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rendered = report.to_json()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(rendered + "\n")
        print(f"wrote {args.output}")
    else:
        print(rendered)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        print(f"wrote {args.csv}")
    return EXIT_OK


def _cmd_redundancy(args) -> int:
    try:
        cfg = VoteConfig(policy=args.policy, p=args.p, q=args.q)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = redundancy_campaign(cfg, args.trials, args.seed)
    print(report.to_json())
    return EXIT_OK


# Known-answer vectors: FIPS 180-4 examples and RFC 4231 test case 1.
_HASH_VECTORS = (
    (b"", "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"),
    (b"abc",
     "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"),
    (b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq",
     "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1"),
)

_HMAC_VECTORS = (
    (bytes([0x0B] * 20), b"Hi There",
     "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"),
)


def _cmd_vectors(_args) -> int:
    status = EXIT_OK
    for message, expected in _HASH_VECTORS:
        got = hash_digest(message).hex()
        ok = got == expected
        print(f"hash {message[:16]!r}: {'PASS' if ok else 'FAIL (' + got + ')'}")
        status = status if ok else EXIT_FAILURE
    for key, message, expected in _HMAC_VECTORS:
        got = hmac_tag(MacKey(key), message).hex()
        ok = got == expected
        print(f"hmac {message!r}: {'PASS' if ok else 'FAIL (' + got + ')'}")
        status = status if ok else EXIT_FAILURE
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vitalcode",
        description="Coded-processor safety toolkit: signature "
                    "predetermination, fault campaigns, channel codes, "
                    "message authentication, redundancy voting.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sign", help="predetermine signatures for a program "
                                    "and emit a PROM image")
    p.add_argument("program", help="DSL source file")
    p.add_argument("--key", type=int, required=True,
                   help="prime code key (modulus)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_sign)

    p = sub.add_parser("run", help="execute cycles against a PROM image")
    p.add_argument("prom")
    p.add_argument("--inputs", required=True, help="JSON file of input values")
    p.add_argument("--cycles", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("inject", help="fault-injection campaign")
    p.add_argument("prom")
    p.add_argument("--model", required=True,
                   help="comma-separated fault models (F1..F6)")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_inject)

    p = sub.add_parser("channel", help="telegram channel campaign")
    p.add_argument("--config", required=True, help="campaign JSON config")
    p.add_argument("-o", "--output", help="write JSON report here")
    p.add_argument("--csv", help="also write a CSV report")
    p.set_defaults(func=_cmd_channel)

    p = sub.add_parser("redundancy", help="voting Monte Carlo")
    p.add_argument("--p", type=float, default=0.0,
                   help="independent fault probability per replica")
    p.add_argument("--q", type=float, default=0.0,
                   help="common-mode fault probability")
    p.add_argument("--policy", choices=POLICIES, default="majority")
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_redundancy)

    p = sub.add_parser("vectors", help="print crypto known-answer pass/fail")
    p.set_defaults(func=_cmd_vectors)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
