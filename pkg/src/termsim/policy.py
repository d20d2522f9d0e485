"""Ideal work reduction of the eight ineffectual-work avoidance policies.

Work is counted in units that depend on the policy family:

========  ===============================  ===========================
policy    effectual units per A x W        total units per A x W
========  ===============================  ===========================
A         1 if a != 0                      1
A+W       1 if a != 0 and w != 0           1
Ap        P_a                              16
Ap+Wp     P_a * P_w                        256
Ab        popcount(|a|)                    16
Ab+Wb     popcount(|a|) * popcount(|w|)    256
At        booth terms(a)                   16
At+Wt     booth terms(a) * terms(w)        256
========  ===============================  ===========================

Precision policies charge zeros their full precision.  Potentials ignore
lane synchronisation entirely.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .numeric import WORD_BITS, check_precision, term_counts
from .workload import Network, layer_operand_columns

Speedup = Union[Fraction, float]


class PolicyKind(enum.Enum):
    A = "A"
    A_W = "A+W"
    AP = "Ap"
    AP_WP = "Ap+Wp"
    AB = "Ab"
    AB_WB = "Ab+Wb"
    AT = "At"
    AT_WT = "At+Wt"

    @classmethod
    def parse(cls, text: str) -> "PolicyKind":
        for kind in cls:
            if kind.value.lower() == text.strip().lower():
                return kind
        raise ValueError(f"unknown policy {text!r}; expected one of {[k.value for k in cls]}")

    @property
    def units_per_mult(self) -> int:
        if self in (PolicyKind.A, PolicyKind.A_W):
            return 1
        if self in (PolicyKind.AP, PolicyKind.AB, PolicyKind.AT):
            return WORD_BITS
        return WORD_BITS * WORD_BITS


ALL_POLICIES = tuple(PolicyKind)


@dataclass(frozen=True)
class WorkRatio:
    effectual: int
    total: int

    def __post_init__(self):
        if not 0 <= self.effectual <= self.total:
            raise ValueError(f"invalid work counts {self.effectual}/{self.total}")

    @property
    def speedup(self) -> Speedup:
        if self.effectual == 0:
            return math.inf
        return Fraction(self.total, self.effectual)

    def __add__(self, other: "WorkRatio") -> "WorkRatio":
        return WorkRatio(self.effectual + other.effectual, self.total + other.total)


def _operand_units(values: np.ndarray, policy: PolicyKind, precision: int) -> np.ndarray:
    if policy in (PolicyKind.A, PolicyKind.A_W):
        return (values != 0).astype(np.int64)
    if policy in (PolicyKind.AP, PolicyKind.AP_WP):
        return np.full(values.shape, precision, dtype=np.int64)
    if policy in (PolicyKind.AB, PolicyKind.AB_WB):
        return term_counts(values, "positional")
    return term_counts(values, "booth")


def _weight_aware(policy: PolicyKind) -> bool:
    return policy in (PolicyKind.A_W, PolicyKind.AP_WP, PolicyKind.AB_WB, PolicyKind.AT_WT)


def effectual_units(activations, weights, policy: PolicyKind, activation_precision: int = WORD_BITS,
                    weight_precision: int = WORD_BITS) -> np.ndarray:
    """Effectual units of each multiplication ``activations[i] * weights[i]``."""
    a = np.asarray(activations, dtype=np.int64).ravel()
    w = np.asarray(weights, dtype=np.int64).ravel()
    if a.shape != w.shape:
        raise ValueError(f"operand arrays differ in length: {a.size} vs {w.size}")
    pa, pw = check_precision(activation_precision), check_precision(weight_precision)
    units = _operand_units(a, policy, pa)
    if _weight_aware(policy):
        units = units * _operand_units(w, policy, pw)
    return units


def policy_work(activations, weights, policy: PolicyKind, activation_precision: int = WORD_BITS,
                weight_precision: int = WORD_BITS) -> WorkRatio:
    """Work of ``policy`` over the multiplications ``activations[i] * weights[i]``."""
    units = effectual_units(activations, weights, policy, activation_precision, weight_precision)
    return WorkRatio(int(units.sum()), units.size * policy.units_per_mult)


def layer_work(layer, policy: PolicyKind, activation_precision: int, weight_precision: int) -> WorkRatio:
    """:func:`policy_work` over every multiplication of a convolution layer.

    Each multiplication pairs ``cols[window, p]`` with ``wmat[filter, p]``;
    per-operand units factor, so sums over windows and filters are taken
    separately per position ``p``.
    """
    cols, wmat = layer_operand_columns(layer.shape, layer.activations, layer.weights)
    pa, pw = check_precision(activation_precision), check_precision(weight_precision)
    ua = _operand_units(cols, policy, pa).sum(axis=0)  # (positions,)
    if _weight_aware(policy):
        uw = _operand_units(wmat, policy, pw).sum(axis=0)
    else:
        uw = np.full(ua.shape, layer.shape.filters, dtype=np.int64)
    effectual = int((ua * uw).sum())
    return WorkRatio(effectual, layer.shape.multiplications * policy.units_per_mult)


def geomean(values: Iterable[Speedup]) -> float:
    values = [float(v) for v in values]
    if not values:
        raise ValueError("geomean of an empty sequence")
    if any(math.isinf(v) for v in values):
        return math.inf
    return math.exp(sum(math.log(v) for v in values) / len(values))


@dataclass(frozen=True)
class PolicyRow:
    network: str
    layer: str
    policy: PolicyKind
    ratio: WorkRatio

    def as_dict(self) -> dict:
        return {"network": self.network, "layer": self.layer, "policy": self.policy.value,
                "effectual": self.ratio.effectual, "total": self.ratio.total,
                "speedup": self.ratio.speedup}


@dataclass
class PolicyReport:
    network: str
    policies: tuple[PolicyKind, ...]
    rows: list[PolicyRow]

    def layer_ratio(self, layer: str, policy: PolicyKind) -> WorkRatio:
        return next(r.ratio for r in self.rows if r.layer == layer and r.policy == policy)

    def network_ratio(self, policy: PolicyKind) -> WorkRatio:
        total = WorkRatio(0, 0)
        for row in self.rows:
            if row.policy == policy:
                total = total + row.ratio
        return total

    def geomean(self, policy: PolicyKind) -> float:
        return geomean(r.ratio.speedup for r in self.rows if r.policy == policy)

    def as_rows(self) -> list[dict]:
        out = [row.as_dict() for row in self.rows]
        for policy in self.policies:
            total = self.network_ratio(policy)
            out.append({"network": self.network, "layer": "geomean", "policy": policy.value,
                        "effectual": total.effectual, "total": total.total,
                        "speedup": self.geomean(policy)})
        return out


def policy_report(network: Network, policies: Optional[Sequence[PolicyKind]] = None) -> PolicyReport:
    """Per-layer work ratios for each policy plus a geometric mean row.

    The geomean row's ``effectual``/``total`` columns carry network-wide
    sums; its ``speedup`` is the geometric mean of the per-layer speedups.
    """
    policies = tuple(policies or ALL_POLICIES)
    rows = []
    for i, layer in enumerate(network.layers):
        pa, pw = network.layer_precision(i)
        for policy in policies:
            rows.append(PolicyRow(network.name, layer.name, policy, layer_work(layer, policy, pa, pw)))
    return PolicyReport(network.name, policies, rows)
