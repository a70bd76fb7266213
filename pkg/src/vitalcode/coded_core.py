"""Arithmetic-coded data and the elementary operations that preserve it.

A coded value carries its functional integer x alongside a code residue
c = (x + B + D) mod A, where A is a prime code key, B a per-variable
static signature and D the cycle-date term.  Every elementary operation
(add, sub, mul, move) updates the code channel with offline-precomputed
compensation constants so that a well-formed input yields a well-formed
output for the destination signature.  A corruption of either channel
survives an end check only if its delta happens to be a multiple of A.
"""

from __future__ import annotations

from dataclasses import dataclass

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1

MIN_KEY = 3
MAX_KEY_BITS = 48


class CodedCoreError(Exception):
    pass


class NotPrimeError(CodedCoreError):
    """Code key candidate is composite."""


class OutOfRangeError(CodedCoreError):
    """Code key candidate outside [3, 2^48)."""


class FunctionalOverflow(CodedCoreError):
    """Functional result left the 64-bit signed range.

    Wrapping is never performed silently: a wrapped functional value with
    an unwrapped code residue would break the congruence invariant in a
    way the end check cannot see.
    """


def _is_prime(n: int) -> bool:
    # Deterministic Miller-Rabin; the listed bases are exact for n < 3.3e24,
    # far beyond the 48-bit key ceiling.
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class CodeKey:
    """Prime modulus of the arithmetic code."""

    modulus: int
    bit_width: int

    def __post_init__(self):
        if not (MIN_KEY <= self.modulus < (1 << MAX_KEY_BITS)):
            raise OutOfRangeError(f"key {self.modulus} outside [3, 2^48)")
        if not _is_prime(self.modulus):
            raise NotPrimeError(f"key {self.modulus} is not prime")


def make_key(modulus: int) -> CodeKey:
    """Validate a candidate key and derive its bit width."""
    if not (MIN_KEY <= modulus < (1 << MAX_KEY_BITS)):
        raise OutOfRangeError(f"key {modulus} outside [3, 2^48)")
    if not _is_prime(modulus):
        raise NotPrimeError(f"key {modulus} is not prime")
    return CodeKey(modulus=modulus, bit_width=(modulus - 1).bit_length())


def residue(n: int, key: CodeKey) -> int:
    """Mathematical mod: the unique r in [0, A) with r == n (mod A)."""
    return n % key.modulus


@dataclass(frozen=True)
class CycleDate:
    """Cycle counter feeding the freshness term of the code channel."""

    cycle: int

    def __post_init__(self):
        if self.cycle < 0:
            raise ValueError("cycle must be non-negative")

    def term(self, key: CodeKey) -> int:
        # Aliases every A cycles; stale data older than that is invisible
        # to the date mechanism by construction.
        return self.cycle % key.modulus


def _date_term(date, key: CodeKey) -> int:
    if isinstance(date, CycleDate):
        return date.term(key)
    return int(date) % key.modulus


@dataclass(frozen=True)
class CodedValue:
    """Functional integer plus its code residue."""

    x: int
    c: int


ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"


@dataclass(frozen=True)
class CompensationConstant:
    """Offline-precomputed residue re-aligning the code channel."""

    value: int
    kind: str = ADDITIVE


def encode(x: int, signature: int, date, key: CodeKey) -> CodedValue:
    """Attach the code residue for a trusted plain value."""
    if not (INT64_MIN <= x <= INT64_MAX):
        raise FunctionalOverflow(f"value {x} outside 64-bit signed range")
    return CodedValue(x, (x + signature + _date_term(date, key)) % key.modulus)


def check(v: CodedValue, signature: int, date, key: CodeKey) -> bool:
    """True iff v is well-formed for the given signature and date."""
    return v.c == (v.x + signature + _date_term(date, key)) % key.modulus


def _guard64(x: int) -> int:
    if not (INT64_MIN <= x <= INT64_MAX):
        raise FunctionalOverflow(f"result {x} outside 64-bit signed range")
    return x


def opel_add(v1: CodedValue, v2: CodedValue, k: CompensationConstant,
             key: CodeKey) -> CodedValue:
    """Coded addition.

    k must be residue(B3 - B1 - B2 - D).  The code field is computed from
    c1, c2 and k only; the functional fields never enter the code channel.
    """
    if k.kind != ADDITIVE:
        raise ValueError("opel_add needs an additive constant")
    return CodedValue(_guard64(v1.x + v2.x),
                      (v1.c + v2.c + k.value) % key.modulus)


def opel_sub(v1: CodedValue, v2: CodedValue, k: CompensationConstant,
             key: CodeKey) -> CodedValue:
    """Coded subtraction; k must be residue(B3 - B1 + B2 + D)."""
    if k.kind != ADDITIVE:
        raise ValueError("opel_sub needs an additive constant")
    return CodedValue(_guard64(v1.x - v2.x),
                      (v1.c - v2.c + k.value) % key.modulus)


def opel_mul(v1: CodedValue, v2: CodedValue, t1: int, t2: int,
             km: CompensationConstant, key: CodeKey) -> CodedValue:
    """Coded multiplication.

    Residue codes are not multiplicatively closed under additive
    signatures, so the code channel consumes the functional values through
    the cross terms x1*t2 and x2*t1, with t1 = residue(B1 + D),
    t2 = residue(B2 + D) and km = residue(B3 + D - t1*t2).  A corruption
    of x1 by delta leaves a residual delta*c2 mod A in the end check,
    nonzero for prime A whenever c2 is not a multiple of A.
    """
    if km.kind != MULTIPLICATIVE:
        raise ValueError("opel_mul needs a multiplicative constant")
    a = key.modulus
    return CodedValue(_guard64(v1.x * v2.x),
                      (v1.c * v2.c - v1.x * t2 - v2.x * t1 + km.value) % a)


def opel_move(v: CodedValue, k: CompensationConstant, key: CodeKey) -> CodedValue:
    """Re-signature on assignment; k must be residue(B_dst - B_src)."""
    if k.kind != ADDITIVE:
        raise ValueError("opel_move needs an additive constant")
    return CodedValue(v.x, (v.c + k.value) % key.modulus)
