"""Fixed-point quantization and term decomposition of 16-bit operands.

A *term* is a signed power of two ``(sign, magnitude)`` with ``sign`` encoded
as a single bit (0 for ``+``, 1 for ``-``), the same encoding the PE's XOR
gates consume.  A value's term list is ordered most-significant first.

Two decompositions are provided:

* ``booth``: radix-2 non-adjacent form, the minimal-weight signed-digit form.
* ``positional``: one ``+`` term per set bit; negative values use the bits of
  ``|v|`` with every term negated.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence, Union

import numpy as np

from .exceptions import ConfigurationError

WORD_BITS = 16
WORD_MIN = -(1 << (WORD_BITS - 1))
WORD_MAX = (1 << (WORD_BITS - 1)) - 1
MAX_MAGNITUDE = WORD_BITS - 1

ENCODINGS = ("booth", "positional")


class Term(NamedTuple):
    sign: int
    magnitude: int

    @property
    def value(self) -> int:
        return -(1 << self.magnitude) if self.sign else 1 << self.magnitude

    def __repr__(self) -> str:
        return f"({'-' if self.sign else '+'},{self.magnitude})"


TermList = tuple  # tuple[Term, ...], most-significant first


@dataclass(frozen=True)
class QVal:
    """A 16-bit two's complement value tagged with its effective precision."""

    raw: int
    precision: int = WORD_BITS

    def __post_init__(self):
        check_precision(self.precision)
        lo, hi = precision_range(self.precision)
        if not lo <= self.raw <= hi:
            raise ValueError(
                f"raw value {self.raw} not representable in {self.precision} bits"
            )

    def __int__(self) -> int:
        return self.raw


IntLike = Union[int, QVal]


def check_precision(precision) -> int:
    if isinstance(precision, bool) or int(precision) != precision:
        raise ConfigurationError(f"precision must be an integer, got {precision!r}")
    precision = int(precision)
    if not 1 <= precision <= WORD_BITS:
        raise ConfigurationError(
            f"precision must be in [1, {WORD_BITS}], got {precision}"
        )
    return precision


def precision_range(precision: int) -> tuple[int, int]:
    """Inclusive two's complement range of a ``precision``-bit value."""
    half = 1 << (precision - 1)
    return -half, half - 1


def quantize(value: int, precision: int = WORD_BITS) -> QVal:
    """Keep the ``precision`` low bits of ``value`` and sign-extend them."""
    precision = check_precision(precision)
    value = int(value)
    if not WORD_MIN <= value <= WORD_MAX:
        raise ConfigurationError(f"value {value} does not fit in {WORD_BITS} bits")
    half = 1 << (precision - 1)
    raw = ((value + half) & ((1 << precision) - 1)) - half
    return QVal(raw, precision)


def quantize_array(values, precision: int = WORD_BITS) -> np.ndarray:
    """Vectorised :func:`quantize`; returns an ``int64`` array of raw values."""
    precision = check_precision(precision)
    values = np.asarray(values, dtype=np.int64)
    if values.size and (values.min() < WORD_MIN or values.max() > WORD_MAX):
        raise ConfigurationError(f"values do not fit in {WORD_BITS} bits")
    half = 1 << (precision - 1)
    return ((values + half) & ((1 << precision) - 1)) - half


def _raw(v: IntLike) -> int:
    return v.raw if isinstance(v, QVal) else int(v)


def booth_encode(v: IntLike) -> TermList:
    """Non-adjacent form of ``v`` as a term list.

    >>> booth_encode(7)
    ((+,3), (-,0))
    >>> booth_encode(-2)
    ((-,1),)
    """
    k = _raw(v)
    terms = []
    position = 0
    while k:
        if k & 1:
            # digit is +1 when k = 1 (mod 4), -1 when k = 3 (mod 4)
            digit = 2 - (k & 3)
            terms.append(Term(0 if digit > 0 else 1, position))
            k -= digit
        k >>= 1
        position += 1
    return tuple(reversed(terms))


def positional_encode(v: IntLike) -> TermList:
    k = _raw(v)
    sign = 1 if k < 0 else 0
    k = abs(k)
    return tuple(
        Term(sign, bit) for bit in range(k.bit_length() - 1, -1, -1) if (k >> bit) & 1
    )


def encode(v: IntLike, encoding: str = "booth") -> TermList:
    if encoding == "booth":
        return booth_encode(v)
    if encoding == "positional":
        return positional_encode(v)
    raise ConfigurationError(f"unknown encoding {encoding!r}; expected one of {ENCODINGS}")


def term_count(v: IntLike, encoding: str = "booth") -> int:
    return len(encode(v, encoding))


def reconstruct(terms: Sequence[Term]) -> int:
    return sum(t.value for t in terms)


class TermTable(NamedTuple):
    """Per-value decompositions of every 16-bit word, indexed by ``v & 0xFFFF``."""

    counts: np.ndarray  # (65536,) term counts
    magnitudes: np.ndarray  # (65536, width) term magnitudes, zero padded
    signs: np.ndarray  # (65536, width) sign bits, zero padded

    @property
    def width(self) -> int:
        return self.magnitudes.shape[1]

    def lookup(self, values) -> np.ndarray:
        return np.asarray(values, dtype=np.int64) & 0xFFFF


@lru_cache(maxsize=None)
def term_table(encoding: str = "booth") -> TermTable:
    """Lookup tables used by the vectorised paths."""
    if encoding not in ENCODINGS:
        raise ConfigurationError(f"unknown encoding {encoding!r}; expected one of {ENCODINGS}")
    words = _all_words()
    # signed digits per bit position, LSB first
    digits = np.zeros((words.size, WORD_BITS + 1), dtype=np.int64)
    if encoding == "booth":
        k = words.copy()
        for position in range(WORD_BITS + 1):
            odd = (k & 1).astype(bool)
            digit = np.where(odd, 2 - (k & 3), 0)
            digits[:, position] = digit
            k = (k - digit) >> 1
    else:
        k = np.abs(words)
        for position in range(WORD_BITS + 1):
            digits[:, position] = ((k >> position) & 1) * np.where(words < 0, -1, 1)
    # descending magnitude: scan MSB first, live digits before empty slots
    msb_first = digits[:, ::-1]
    order = np.argsort(msb_first == 0, axis=1, kind="stable")
    counts = np.count_nonzero(digits, axis=1)
    width = int(counts.max())
    picked = np.take_along_axis(msb_first, order, axis=1)[:, :width]
    live = np.arange(width) < counts[:, None]
    magnitudes = np.where(live, WORD_BITS - order[:, :width], 0)
    signs = np.where(live & (picked < 0), 1, 0)
    for array in (counts, magnitudes, signs):
        array.flags.writeable = False
    return TermTable(counts, magnitudes, signs)


def _all_words() -> np.ndarray:
    # index i holds the word whose low 16 bits are i
    index = np.arange(1 << WORD_BITS, dtype=np.int64)
    return np.where(index > WORD_MAX, index - (1 << WORD_BITS), index)


def term_counts(values, encoding: str = "booth") -> np.ndarray:
    """Vectorised :func:`term_count` over an integer array."""
    table = term_table(encoding)
    return table.counts[table.lookup(values)]
