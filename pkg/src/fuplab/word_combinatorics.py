r"""Exact combinatorics of the logarithmic word refinement.

Words are strings over the alphabet {1, 2}.  A word of block length is
*controlled* when its fraction of 1-digits strictly exceeds a threshold
alpha; long words of eight blocks are *uncontrolled* exactly when every block
is uncontrolled, so their count is the eighth power of a binomial tail.  All
counting runs in exact integer and rational arithmetic; floating point only
enters when forming the log-ratio diagnostics of the counting bound
|uncontrolled words| <= C h^{-4 sqrt(alpha)}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "LadderParams",
    "t_ladder",
    "ones_fraction",
    "count_uncontrolled",
    "count_X",
    "bound_check",
    "split_XY",
    "word_to_code",
    "code_to_word",
    "is_controlled",
]

BLOCKS = 8      # a long word is eight blocks of length T0 (2*T1 = 8*T0)


def _snap_ceil(x: float, eps: float = 1e-9) -> int:
    """Ceiling that forgives float noise at integer boundaries."""
    r = round(x)
    if abs(x - r) <= eps:
        return int(r)
    return int(math.ceil(x))


@dataclass(frozen=True)
class LadderParams:
    """Word lengths tied to the frequency scale: T0 = ceil((rho/4) log(1/h))."""

    h: float
    rho: float
    alpha: Fraction
    t0: int
    t1: int

    @classmethod
    def create(cls, h: float, rho: float, alpha) -> "LadderParams":
        t0, t1 = t_ladder(h, rho)
        alpha = Fraction(alpha)
        if not 0 < alpha < Fraction(1, 2):
            raise ValueError("alpha must lie in (0, 1/2)")
        return cls(h, rho, alpha, t0, t1)


def t_ladder(h: float, rho: float) -> tuple[int, int]:
    """(T0, T1) with T0 = ceil((rho/4) log(1/h)) and T1 = 4 T0."""
    if not 0.0 < h < 1.0:
        raise ValueError("need 0 < h < 1")
    if not 0.75 < rho < 1.0:
        raise ValueError("need 3/4 < rho < 1")
    t0 = _snap_ceil((rho / 4.0) * math.log(1.0 / h))
    t0 = max(t0, 1)
    return t0, 4 * t0


def _validate_word(word: str) -> str:
    if len(word) == 0:
        raise ValueError("empty word")
    if any(c not in "12" for c in word):
        raise ValueError("word letters must be '1' or '2'")
    return word


def ones_fraction(word: str) -> Fraction:
    """Exact fraction of 1-digits."""
    _validate_word(word)
    return Fraction(word.count("1"), len(word))


def is_controlled(word: str, alpha) -> bool:
    """Controlled means the 1-fraction strictly exceeds alpha."""
    return ones_fraction(word) > Fraction(alpha)


def count_uncontrolled(t0: int, alpha) -> int:
    """Number of length-t0 words with 1-fraction at most alpha (exact).

    The controlled set uses a strict inequality, so words sitting exactly on
    the boundary count as uncontrolled.
    """
    if t0 < 1:
        raise ValueError("block length must be positive")
    alpha = Fraction(alpha)
    if not 0 < alpha < Fraction(1, 2):
        raise ValueError("alpha must lie in (0, 1/2)")
    kmax = int(alpha * t0)          # floor of an exact rational
    return sum(math.comb(t0, k) for k in range(kmax + 1))


def count_X(params: LadderParams) -> int:
    """Exact size of the uncontrolled long-word set: the 8th power of the
    single-block count (blocks are independent)."""
    return count_uncontrolled(params.t0, params.alpha) ** BLOCKS


def bound_check(rho: float, alpha, h_ladder, slack: float = 0.1):
    """Exponent-ratio table for the counting bound along an h-ladder.

    For each h the row carries the exact count, the ratio
    log(count)/log(1/h), the bound 4 sqrt(alpha) + slack it is compared
    against, and the implied-constant diagnostic
    log C = log(count) - 4 sqrt(alpha) log(1/h).
    """
    alpha = Fraction(alpha)
    rows = []
    target = 4.0 * math.sqrt(float(alpha))
    for h in h_ladder:
        params = LadderParams.create(h, rho, alpha)
        cnt = count_X(params)
        log_count = math.log(cnt) if cnt > 1 else 0.0
        log_inv_h = math.log(1.0 / h)
        ratio = log_count / log_inv_h
        rows.append(dict(alpha=float(alpha), rho=rho, h=h, T0=params.t0,
                         count=cnt, ratio=ratio,
                         logC=log_count - target * log_inv_h,
                         within=ratio <= target + slack))
    return rows


def word_to_code(word: str) -> int:
    """Bit encoding: letter '1' contributes a set bit (low bit = last letter)."""
    _validate_word(word)
    code = 0
    for c in word:
        code = (code << 1) | (1 if c == "1" else 0)
    return code


def code_to_word(code: int, length: int) -> str:
    return "".join("1" if (code >> (length - 1 - k)) & 1 else "2"
                   for k in range(length))


def split_XY(t0: int, alpha) -> tuple[np.ndarray, np.ndarray]:
    """Partition all words of length 8*T0 into uncontrolled/controlled sets.

    Words come back as integer codes (vectorized bit arithmetic); feasible for
    t0 <= 3, where the full population is at most 2^24.
    """
    if t0 > 3:
        raise ValueError("full enumeration supported for t0 <= 3 only")
    alpha = Fraction(alpha)
    block_bits = t0
    total_bits = BLOCKS * t0
    block_uncontrolled = np.zeros(1 << block_bits, dtype=bool)
    for b in range(1 << block_bits):
        ones = bin(b).count("1")
        block_uncontrolled[b] = Fraction(ones, t0) <= alpha
    codes = np.arange(1 << total_bits, dtype=np.uint32)
    in_x = np.ones(codes.shape, dtype=bool)
    mask = (1 << block_bits) - 1
    for blk in range(BLOCKS):
        shift = blk * block_bits
        in_x &= block_uncontrolled[(codes >> shift) & mask]
    return codes[in_x], codes[~in_x]
