"""Bit-exact model of the term-serial processing element.

Every cycle a PE takes one (activation term, weight term) pair per lane and

1. adds the magnitudes into a 5-bit exponent and XORs the signs,
2. decodes each exponent into a signed one-hot 32-bit word,
3. counts the decoded words into 32 signed 6-bit buckets,
4. concatenates buckets whose positions are congruent mod 6 into six groups,
5. reduces the six groups with a shift-and-add tree,
6. accumulates the partial sum.

:class:`ProcessingElement` walks these steps one cycle at a time in plain
Python.  :func:`pe_process_groups` runs the identical datapath vectorised
over many independent PE invocations and is what the engine models use.
"""
from __future__ import annotations

from typing import NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import AccumulatorOverflowError, MalformedInputError
from .numeric import MAX_MAGNITUDE, Term, encode, term_table

LANES = 16
BUCKETS = 32
MAX_EXPONENT = 2 * MAX_MAGNITUDE
FIELD_BITS = 6
GROUPS = 6
ACCUMULATOR_BITS = 48

_ACC_LIMIT = 1 << (ACCUMULATOR_BITS - 1)
_FIELD_MASK = (1 << FIELD_BITS) - 1
_FIELD_SIGN = 1 << (FIELD_BITS - 1)


class ProductExp(NamedTuple):
    exp: int
    sign: int


TermPair = tuple  # (Optional[Term], Optional[Term])


def step1_exponents(pairs: Sequence[TermPair]) -> list[Optional[ProductExp]]:
    out = []
    for a_term, w_term in pairs:
        if a_term is None or w_term is None:
            out.append(None)
            continue
        for term in (a_term, w_term):
            if not 0 <= term.magnitude <= MAX_MAGNITUDE or term.sign not in (0, 1):
                raise MalformedInputError(f"term {term!r} is outside the 16-bit operand range")
        out.append(ProductExp(a_term.magnitude + w_term.magnitude, a_term.sign ^ w_term.sign))
    return out


def step2_decode(e: ProductExp) -> np.ndarray:
    """Signed one-hot of width 32: ``+1`` or ``-1`` at position ``exp``."""
    if not 0 <= e.exp <= MAX_EXPONENT:
        raise MalformedInputError(f"exponent {e.exp} unreachable for 16-bit operands")
    word = np.zeros(BUCKETS, dtype=np.int64)
    word[e.exp] = -1 if e.sign else 1
    return word


def step3_histogram(decoded: Sequence[np.ndarray]) -> np.ndarray:
    buckets = np.zeros(BUCKETS, dtype=np.int64)
    for word in decoded:
        buckets += word
    return buckets


def _to_field(count: int) -> int:
    if not -_FIELD_SIGN <= count < _FIELD_SIGN:
        raise MalformedInputError(f"bucket count {count} does not fit in {FIELD_BITS} bits")
    return count & _FIELD_MASK


def step4_concat_groups(h: Sequence[int]) -> tuple[int, ...]:
    """Concatenate congruent buckets into six signed group values.

    Fields are stacked from the highest bucket down.  Appending a field
    whose sign bit is set first decrements the value above it, which is how
    the sign extension of the lower field is absorbed without an adder.
    """
    if len(h) != BUCKETS:
        raise MalformedInputError(f"histogram must have {BUCKETS} buckets, got {len(h)}")
    groups = []
    for residue in range(GROUPS):
        positions = range(residue, BUCKETS, GROUPS)[::-1]
        value = None
        for j in positions:
            field = _to_field(int(h[j]))
            if value is None:
                # top field is kept signed
                value = field - (1 << FIELD_BITS) if field & _FIELD_SIGN else field
                continue
            if field & _FIELD_SIGN:
                value -= 1
            value = (value << FIELD_BITS) | field
        groups.append(value)
    return tuple(groups)


def step5_reduce(groups: Sequence[int]) -> int:
    return sum(g << i for i, g in enumerate(groups))


def step6_accumulate(acc: int, psum: int) -> int:
    acc += psum
    if not -_ACC_LIMIT <= acc < _ACC_LIMIT:
        raise AccumulatorOverflowError(
            f"accumulator value {acc} exceeds {ACCUMULATOR_BITS} bits"
        )
    return acc


def lane_schedule(a_terms: Sequence[Term], w_terms: Sequence[Term]):
    """Cross product of a lane's terms, activation index major."""
    for a_term in a_terms:
        for w_term in w_terms:
            yield a_term, w_term


class ProcessingElement:
    """Sequential PE: one call to :meth:`cycle` is one clock."""

    def __init__(self, lanes: int = LANES):
        if not 1 <= lanes <= LANES:
            raise MalformedInputError(f"lanes must be in [1, {LANES}], got {lanes}")
        self.lanes = lanes
        self.acc = 0
        self.cycles = 0

    def reset(self):
        self.acc = 0
        self.cycles = 0

    def cycle(self, pairs: Sequence[TermPair]) -> int:
        if len(pairs) != self.lanes:
            raise MalformedInputError(f"expected {self.lanes} term pairs, got {len(pairs)}")
        exps = step1_exponents(pairs)
        decoded = [step2_decode(e) for e in exps if e is not None]
        hist = step3_histogram(decoded)
        psum = step5_reduce(step4_concat_groups(hist))
        self.acc = step6_accumulate(self.acc, psum)
        self.cycles += 1
        return psum

    def process_group(self, activations: Sequence[Sequence[Term]], weights: Sequence[Sequence[Term]]):
        if len(activations) != self.lanes or len(weights) != self.lanes:
            raise MalformedInputError(f"expected {self.lanes} activations and weights")
        streams = [list(lane_schedule(a, w)) for a, w in zip(activations, weights)]
        for c in range(max(map(len, streams), default=0)):
            self.cycle([s[c] if c < len(s) else (None, None) for s in streams])
        return self.acc


def pe_process_group(activations, weights) -> tuple[int, int]:
    """Reference PE run over one group of term lists; returns ``(acc, cycles)``."""
    pe = ProcessingElement(lanes=len(activations))
    pe.process_group(activations, weights)
    return pe.acc, pe.cycles


def concat_groups_array(hist: np.ndarray) -> np.ndarray:
    """Vectorised :func:`step4_concat_groups` over rows of ``hist`` (n, 32)."""
    out = np.empty(hist.shape[:-1] + (GROUPS,), dtype=np.int64)
    for residue in range(GROUPS):
        positions = list(range(residue, BUCKETS, GROUPS))[::-1]
        top = hist[..., positions[0]]
        value = top.astype(np.int64)
        for j in positions[1:]:
            field = hist[..., j] & _FIELD_MASK
            value = ((value - ((field & _FIELD_SIGN) != 0)) << FIELD_BITS) | field
        out[..., residue] = value
    return out


def reduce_groups_array(groups: np.ndarray) -> np.ndarray:
    return sum(groups[..., i] << i for i in range(GROUPS))


def pe_process_groups(a_values, w_values, encoding: str = "booth"):
    """Run many independent PE invocations in lock-step.

    ``a_values`` and ``w_values`` are integer arrays of shape ``(G, lanes)``
    holding 16-bit operands; operands are decomposed with ``encoding``.
    Returns ``(acc, cycles)`` arrays of shape ``(G,)``.
    """
    a_values = np.asarray(a_values, dtype=np.int64)
    w_values = np.asarray(w_values, dtype=np.int64)
    if a_values.shape != w_values.shape or a_values.ndim != 2:
        raise MalformedInputError(
            f"operand arrays must share a (groups, lanes) shape, got {a_values.shape} and {w_values.shape}"
        )
    n_groups, lanes = a_values.shape
    if lanes > LANES:
        raise MalformedInputError(f"at most {LANES} lanes per PE, got {lanes}")
    table = term_table(encoding)
    a_idx, w_idx = table.lookup(a_values), table.lookup(w_values)
    ta, tw = table.counts[a_idx], table.counts[w_idx]
    lane_cycles = ta * tw
    cycles = lane_cycles.max(axis=1, initial=0)

    # longest-running groups first so the live set is always a prefix
    order = np.argsort(-cycles, kind="stable")
    lane_cycles, a_idx, w_idx, tw = lane_cycles[order], a_idx[order], w_idx[order], tw[order]
    sorted_cycles = cycles[order]
    width = table.width
    mags, signs = table.magnitudes.ravel(), table.signs.ravel()
    a_base = (a_idx * width).ravel()
    w_base = (w_idx * width).ravel()
    tw_flat = np.maximum(tw, 1).ravel()
    lc_flat = lane_cycles.ravel()
    acc = np.zeros(n_groups, dtype=np.int64)
    n_cycles = int(sorted_cycles[0]) if n_groups else 0
    for c in range(n_cycles):
        n_live = int(np.count_nonzero(sorted_cycles > c))
        lanes_idx = np.flatnonzero(lc_flat[:n_live * lanes] > c)
        # lexicographic (activation term, weight term) order per lane
        ia, iw = np.divmod(c, tw_flat[lanes_idx])
        ai, wi = a_base[lanes_idx] + ia, w_base[lanes_idx] + iw
        # step 1: exponent add and sign XOR
        exp = mags[ai] + mags[wi]
        neg = signs[ai] ^ signs[wi]
        # steps 2-3: decode into one-hots and count them per bucket
        flat = (lanes_idx // lanes) * BUCKETS + exp
        hist = (np.bincount(flat[neg == 0], minlength=n_live * BUCKETS)
                - np.bincount(flat[neg == 1], minlength=n_live * BUCKETS))
        hist = hist.reshape(n_live, BUCKETS)
        # steps 4-6
        acc[:n_live] += reduce_groups_array(concat_groups_array(hist))
    if acc.size and np.abs(acc).max() >= _ACC_LIMIT:
        raise AccumulatorOverflowError(f"accumulator exceeds {ACCUMULATOR_BITS} bits")
    out = np.empty_like(acc)
    out[order] = acc
    return out, cycles


def encode_lanes(values, encoding: str = "booth"):
    return [encode(int(v), encoding) for v in values]
