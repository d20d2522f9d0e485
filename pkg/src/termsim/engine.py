"""Cycle-accurate models of the bit-parallel, bit-serial and term-serial engines.

All three engines consume the same stream of :class:`GroupTrace` tile steps
and compute real output activations with their own datapath, so their
checksums double as an exactness witness:

* ``BASE`` multiplies whole operands, one group per cycle.
* ``LM`` walks activation and weight bits serially, ``P_a * P_w`` cycles
  per group.
* ``LAC`` runs every PE through the term-serial datapath; a group costs the
  slowest lane's ``t_a * t_w`` (at least one cycle).
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import islice
from typing import Iterable, Optional, Sequence

import numpy as np

from .exceptions import ConfigurationError, ExactnessError
from .numeric import ENCODINGS, WORD_BITS, check_precision, precision_range
from .pe import LANES, pe_process_groups
from .workload import GroupTrace, Network, build_groups, reference_conv

KINDS = ("BASE", "LM", "LAC")
ACTIVATION_WIRES = 256

# PEs simulated per call into the batched datapath
_PE_BATCH = 1 << 15


def _wires_label(wires: int) -> str:
    return f"{wires // 1024}K" if wires >= 1024 and wires % 1024 == 0 else str(wires)


@dataclass(frozen=True)
class EngineConfig:
    """One engine variant.

    ``filters`` is the number of filters processed concurrently (rows of
    the tile), ``windows`` the number of windows (columns; 1 for BASE and 16
    otherwise unless given) and ``lanes`` the products per PE per cycle.
    """

    kind: str
    filters: int = 8
    windows: Optional[int] = None
    lanes: int = LANES
    encoding: str = "booth"
    name: Optional[str] = None

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind not in KINDS:
            raise ConfigurationError(f"unknown engine kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if self.windows is None:
            object.__setattr__(self, "windows", 1 if kind == "BASE" else 16)
        for attr in ("filters", "windows", "lanes"):
            value = getattr(self, attr)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ConfigurationError(f"{attr} must be a positive integer, got {value!r}")
        if self.lanes > LANES:
            raise ConfigurationError(f"lanes must be at most {LANES}, got {self.lanes}")
        if self.encoding not in ENCODINGS:
            raise ConfigurationError(f"unknown encoding {self.encoding!r}")
        if self.name is None:
            name = f"{kind}_{_wires_label(self.weight_wires)}"
            if kind == "LAC" and self.encoding != "booth":
                name += f"_{self.encoding}"
            object.__setattr__(self, "name", name)

    @property
    def weight_wires(self) -> int:
        bits = WORD_BITS if self.kind == "BASE" else 1
        return bits * self.lanes * self.filters

    @property
    def activation_wires(self) -> int:
        bits = WORD_BITS if self.kind == "BASE" else 1
        return bits * self.lanes * self.windows


def base_2k() -> EngineConfig:
    return EngineConfig("BASE", filters=8)


def lac(weight_wires: int) -> EngineConfig:
    if weight_wires % LANES:
        raise ConfigurationError(f"LAC weight wires must be a multiple of {LANES}, got {weight_wires}")
    return EngineConfig("LAC", filters=weight_wires // LANES)


def lm(filters: int = 8) -> EngineConfig:
    return EngineConfig("LM", filters=filters)


@dataclass
class LayerCycles:
    layer: str
    cycles: int
    groups: int
    checksum: int
    outputs: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class CycleReport:
    config: str
    total_cycles: int
    groups: int
    per_layer: list[LayerCycles]
    checksum: int
    speedup_vs: dict[str, Fraction] = field(default_factory=dict)


class _OutputCollector:
    """Scatters per-group partial outputs into per-layer ``(filters, windows)`` arrays."""

    def __init__(self):
        self.layers: dict[str, list] = {}

    def add(self, group: GroupTrace, partial: np.ndarray, cycles: int):
        entry = self.layers.setdefault(group.layer, [[], 0, 0])
        f_ok, w_ok = group.filter_ids >= 0, group.window_ids >= 0
        entry[0].append((group.filter_ids[f_ok], group.window_ids[w_ok], partial[np.ix_(f_ok, w_ok)]))
        entry[1] += cycles
        entry[2] += 1

    def report(self, cfg: EngineConfig) -> CycleReport:
        per_layer = []
        for name, (parts, cycles, groups) in self.layers.items():
            n_f = max((int(f.max(initial=-1)) for f, _, _ in parts), default=-1) + 1
            n_w = max((int(w.max(initial=-1)) for _, w, _ in parts), default=-1) + 1
            out = np.zeros((n_f, n_w), dtype=np.int64)
            for f, w, p in parts:
                out[np.ix_(f, w)] += p
            per_layer.append(LayerCycles(name, cycles, groups, int(out.sum()), out))
        return CycleReport(
            config=cfg.name,
            total_cycles=sum(l.cycles for l in per_layer),
            groups=sum(l.groups for l in per_layer),
            per_layer=per_layer,
            checksum=sum(l.checksum for l in per_layer),
        )


def _batches(work: Iterable[GroupTrace], size: int):
    it = iter(work)
    while batch := list(islice(it, size)):
        yield batch


def _check_kind(cfg: EngineConfig, kind: str):
    if cfg.kind != kind:
        raise ConfigurationError(f"{kind} model called with a {cfg.kind} configuration")


def base_cycles(work: Iterable[GroupTrace], cfg: EngineConfig) -> CycleReport:
    """Bit-parallel engine: every group takes exactly one cycle."""
    _check_kind(cfg, "BASE")
    out = _OutputCollector()
    for g in work:
        out.add(g, g.weights @ g.activations.T, 1)
    return out.report(cfg)


def _bit_planes(values: np.ndarray, precision: int) -> np.ndarray:
    """Two's complement bits, LSB first, on a new leading axis."""
    shifts = np.arange(precision).reshape((precision,) + (1,) * values.ndim)
    return (values[None] >> shifts) & 1


def lm_cycles(work: Iterable[GroupTrace], cfg: EngineConfig, precision) -> CycleReport:
    """Bit-serial engine.

    ``precision`` is either an ``(P_a, P_w)`` pair applied to every group or
    a mapping from layer name to such a pair.
    """
    _check_kind(cfg, "LM")
    out = _OutputCollector()
    for g in work:
        pa, pw = precision[g.layer] if isinstance(precision, dict) else precision
        pa, pw = check_precision(pa), check_precision(pw)
        for values, p, what in ((g.activations, pa, "activation"), (g.weights, pw, "weight")):
            lo, hi = precision_range(p)
            if values.size and (values.min() < lo or values.max() > hi):
                raise ConfigurationError(
                    f"layer {g.layer!r}: {what} operands exceed the {p}-bit precision profile"
                )
        a_bits = _bit_planes(g.activations, pa)  # (pa, W, L)
        w_bits = _bit_planes(g.weights, pw)  # (pw, K, L)
        a_weight = np.array([1 << i for i in range(pa)], dtype=np.int64)
        a_weight[-1] = -a_weight[-1]
        w_weight = np.array([1 << j for j in range(pw)], dtype=np.int64)
        w_weight[-1] = -w_weight[-1]
        # one 1b x 1b product plane per (activation bit, weight bit) cycle
        planes = np.einsum("jkl,iwl->ijkw", w_bits, a_bits)
        partial = np.einsum("ijkw,i,j->kw", planes, a_weight, w_weight)
        out.add(g, partial, pa * pw)
    return out.report(cfg)


def lac_cycles(work: Iterable[GroupTrace], cfg: EngineConfig) -> CycleReport:
    """Term-serial engine with strict tile-wide synchronisation."""
    _check_kind(cfg, "LAC")
    out = _OutputCollector()
    per_group = max(1, _PE_BATCH // (cfg.filters * cfg.windows))
    for batch in _batches(work, per_group):
        acts = np.stack([g.activations for g in batch])  # (B, W, L)
        wts = np.stack([g.weights for g in batch])  # (B, K, L)
        b, n_w, lanes = acts.shape
        n_k = wts.shape[1]
        a_in = np.broadcast_to(acts[:, None], (b, n_k, n_w, lanes)).reshape(-1, lanes)
        w_in = np.broadcast_to(wts[:, :, None], (b, n_k, n_w, lanes)).reshape(-1, lanes)
        acc, cycles = pe_process_groups(a_in, w_in, cfg.encoding)
        acc = acc.reshape(b, n_k, n_w)
        cycles = cycles.reshape(b, -1).max(axis=1)
        for g, partial, t in zip(batch, acc, cycles):
            out.add(g, partial, max(1, int(t)))
    return out.report(cfg)


def run_layer(layer, cfg: EngineConfig, precision=None) -> CycleReport:
    """Simulate one :class:`~termsim.workload.Layer` on one engine."""
    groups = build_groups(layer.shape, layer.activations, layer.weights, cfg, name=layer.name)
    if cfg.kind == "BASE":
        return base_cycles(groups, cfg)
    if cfg.kind == "LM":
        return lm_cycles(groups, cfg, precision or layer.precision)
    return lac_cycles(groups, cfg)


def _merge(cfg: EngineConfig, reports: Sequence[CycleReport]) -> CycleReport:
    per_layer = [entry for r in reports for entry in r.per_layer]
    return CycleReport(
        config=cfg.name,
        total_cycles=sum(r.total_cycles for r in reports),
        groups=sum(r.groups for r in reports),
        per_layer=per_layer,
        checksum=sum(r.checksum for r in reports),
    )


@dataclass
class Comparison:
    """Result of :func:`simulate`: one report per requested configuration."""

    network: str
    reference: CycleReport
    reports: list[CycleReport]
    oracle_checksums: dict[str, int]
    potentials: dict[str, Fraction] = field(default_factory=dict)

    def speedup(self, config: str, layer: Optional[str] = None) -> Fraction:
        report = next(r for r in self.reports if r.config == config)
        if layer is None:
            return Fraction(self.reference.total_cycles, report.total_cycles)
        ref = next(l for l in self.reference.per_layer if l.layer == layer)
        mine = next(l for l in report.per_layer if l.layer == layer)
        return Fraction(ref.cycles, mine.cycles)

    def rows(self, per_layer: bool = True) -> list[dict]:
        rows = []
        for report in self.reports:
            entries = report.per_layer if per_layer else []
            for entry in entries:
                row = {
                    "network": self.network, "config": report.config, "layer": entry.layer,
                    "cycles": entry.cycles, "groups": entry.groups,
                    "speedup_vs_base": self.speedup(report.config, entry.layer),
                    "checksum": str(entry.checksum),
                }
                if self.potentials:
                    row["potential_speedup"] = self.potentials[entry.layer]
                rows.append(row)
            total = {
                "network": self.network, "config": report.config, "layer": "total",
                "cycles": report.total_cycles, "groups": report.groups,
                "speedup_vs_base": self.speedup(report.config),
                "checksum": str(report.checksum),
            }
            if self.potentials:
                total["potential_speedup"] = self.potentials.get("total")
            rows.append(total)
        return rows


def simulate(network: Network, cfgs: Sequence[EngineConfig], n_jobs: int = 1,
             with_potential: bool = False) -> Comparison:
    """Run every layer of ``network`` on every configuration.

    Speedups are taken against ``BASE_2K`` (added internally when not
    requested).  Every engine's outputs are checked against a direct
    convolution; a mismatch raises :class:`ExactnessError`.
    """
    cfgs = list(cfgs)
    if not cfgs:
        raise ConfigurationError("at least one engine configuration is required")
    names = [c.name for c in cfgs]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"duplicate engine configurations: {names}")
    ref_cfg = next((c for c in cfgs if c.name == "BASE_2K"), base_2k())
    all_cfgs = cfgs if ref_cfg in cfgs else cfgs + [ref_cfg]

    tasks = [(c, i) for c in all_cfgs for i in range(len(network.layers))]

    def run(task):
        cfg, i = task
        return run_layer(network.layers[i], cfg, network.layer_precision(i))

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    oracle = {}
    for layer in network.layers:
        expected = reference_conv(layer.shape, layer.activations, layer.weights)
        oracle[layer.name] = int(expected.sum())
        oracle[layer.name + "/outputs"] = expected.reshape(layer.shape.filters, -1)

    merged = {}
    n = len(network.layers)
    for k, cfg in enumerate(all_cfgs):
        parts = results[k * n:(k + 1) * n]
        for layer, part in zip(network.layers, parts):
            got = part.per_layer[0].outputs
            if not np.array_equal(got, oracle[layer.name + "/outputs"]):
                raise ExactnessError(
                    f"{cfg.name}: outputs of layer {layer.name!r} differ from the reference convolution"
                )
        merged[cfg.name] = _merge(cfg, parts)

    reference = merged[ref_cfg.name]
    reports = [merged[c.name] for c in cfgs]
    for r in reports:
        r.speedup_vs[reference.config] = Fraction(reference.total_cycles, r.total_cycles)
    checksums = {k: v for k, v in oracle.items() if not k.endswith("/outputs")}
    comparison = Comparison(network.name, reference, reports, checksums)
    if with_potential:
        from .policy import PolicyKind, policy_report
        table = policy_report(network, [PolicyKind.AT_WT])
        comparison.potentials = {
            row.layer: row.ratio.speedup for row in table.rows
        }
        comparison.potentials["total"] = table.network_ratio(PolicyKind.AT_WT).speedup
    return comparison


def format_value(value) -> str:
    if isinstance(value, Fraction):
        return f"{float(value):.6f}"
    if isinstance(value, float):
        return "inf" if value == float("inf") else f"{value:.6f}"
    return "" if value is None else str(value)


def rows_to_csv(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: format_value(v) for k, v in row.items()})
    return buf.getvalue()


def _json_value(value):
    if isinstance(value, Fraction):
        return round(float(value), 6)
    if isinstance(value, float) and value == float("inf"):
        return "inf"
    return value


def rows_to_json(rows: Sequence[dict]) -> str:
    return json.dumps([{k: _json_value(v) for k, v in row.items()} for row in rows], indent=2) + "\n"
