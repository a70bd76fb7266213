"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the library's own code paths: CRC by
bit-serial long division, Hamming by generator matrix, coded execution by
the plain interpreter, hashes by the standard library.
"""

from __future__ import annotations

import random
import warnings

from vitalcode.coded_core import make_key
from vitalcode.dsl import parse_program
from vitalcode.sigtool import DuplicateSignatureWarning, build

SAMPLE_PROGRAM = """
# Overspeed guard evaluated once per cycle.
input speed; input limit; input gain;
const margin = 3;
adj = speed * gain;
slack = limit - speed;
guard = slack + margin;
alarm = guard * gain;
output adj; output alarm;
"""

SAMPLE_INPUTS = {"speed": 17, "limit": 40, "gain": 5}
SAMPLE_CYCLE = 9
SAMPLE_SEED = 0


def build_sample(modulus: int, seed: int = SAMPLE_SEED):
    ir = parse_program(SAMPLE_PROGRAM)
    key = make_key(modulus)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DuplicateSignatureWarning)
        table, program = build(ir, key, seed)
    return ir, key, table, program


def crc_bitwise(payload: bytes, params) -> int:
    """Bit-serial long-division CRC; independent of the table-driven path."""
    mask = (1 << params.width) - 1
    top = 1 << (params.width - 1)
    reg = params.init
    for byte in payload:
        if params.reflect_in:
            byte = _reflect(byte, 8)
        for i in range(7, -1, -1):
            bit = (byte >> i) & 1
            if ((reg >> (params.width - 1)) & 1) ^ bit:
                reg = ((reg << 1) ^ params.polynomial) & mask
            else:
                reg = (reg << 1) & mask
    if params.reflect_out:
        reg = _reflect(reg, params.width)
    return reg ^ params.xorout


def _reflect(value: int, width: int) -> int:
    out = 0
    for _ in range(width):
        out = (out << 1) | (value & 1)
        value >>= 1
    return out


# Hamming(7,4) generator matrix for layout p1 p2 d1 p3 d2 d3 d4,
# rows indexed by data bits d1..d4, columns by positions 1..7.
_G = (
    (1, 1, 1, 0, 0, 0, 0),
    (1, 0, 0, 1, 1, 0, 0),
    (0, 1, 0, 1, 0, 1, 0),
    (1, 1, 0, 1, 0, 0, 1),
)


def hamming_encode_matrix(data: int) -> int:
    bits = [(data >> (3 - i)) & 1 for i in range(4)]
    word = 0
    for position in range(7):
        parity = 0
        for row in range(4):
            parity ^= bits[row] & _G[row][position]
        word = (word << 1) | parity
    return word


def random_straight_line_program(rng: random.Random,
                                 max_instructions: int = 6) -> str:
    """Random DSL source: a few inputs, consts and chained assignments.

    Operand magnitudes stay small so reference evaluation never leaves
    the 64-bit range.
    """
    n_inputs = rng.randint(1, 3)
    names = [f"in{i}" for i in range(n_inputs)]
    lines = [f"input {n};" for n in names]
    bounds = {n: 100 for n in names}
    for i in range(rng.randint(0, 2)):
        value = rng.randint(-20, 20)
        name = f"c{i}"
        lines.append(f"const {name} = {value};")
        names.append(name)
        bounds[name] = 20
    limit = 1 << 62
    assigned = []
    for i in range(rng.randint(1, max_instructions)):
        op = rng.choice(["+", "-", "*", None])
        dest = f"v{i}"
        if op is None:
            src = rng.choice(names)
            lines.append(f"{dest} = {src};")
            bounds[dest] = bounds[src]
        else:
            a = rng.choice(names)
            b = rng.choice(names)
            if rng.random() < 0.3:
                lit = rng.randint(-9, 9)
                b, b_bound = str(lit), abs(lit)
            else:
                b_bound = bounds[b]
            if op == "*" and bounds[a] * max(b_bound, 1) >= limit:
                op = "+"
            lines.append(f"{dest} = {a} {op} {b};")
            if op == "*":
                bounds[dest] = bounds[a] * max(b_bound, 1)
            else:
                bounds[dest] = bounds[a] + b_bound
        names.append(dest)
        assigned.append(dest)
    for name in rng.sample(assigned, rng.randint(1, len(assigned))):
        lines.append(f"output {name};")
    return "\n".join(lines)
