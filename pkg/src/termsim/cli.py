"""Command line front end.

Examples::

    termsim gen --seed 1 -o w.json
    termsim gen --network alexnet --distribution laplace -o alexnet.json
    termsim analyze --policy all --synthetic density=0.5,seed=1
    termsim simulate --engine lac:128 --engine base:2k --workload w.json -o report.csv
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .engine import EngineConfig, lac, rows_to_csv, rows_to_json, simulate
from .exceptions import ConfigurationError, TermSimError
from .numeric import ENCODINGS
from .policy import ALL_POLICIES, PolicyKind, policy_report
from .profiles import PRESETS, desk_network
from .workload import (
    DISTRIBUTIONS,
    Layer,
    LayerShape,
    Network,
    PrecisionProfile,
    gen_synthetic,
    load_network,
    save_network,
)

SYNTHETIC_DEFAULTS = {
    "c": 16, "x": 6, "y": 6, "n": 32, "h": 3, "k": 3, "s": 1,
    "density": 0.5, "wdensity": 1.0, "pa": 8, "pw": 8, "seed": 0, "dist": "uniform",
}
_INT_KEYS = {"c", "x", "y", "n", "h", "k", "s", "pa", "pw", "seed"}
_FLOAT_KEYS = {"density", "wdensity"}


class CliError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


def parse_synthetic(text: str) -> dict:
    """Parse ``key=value,...`` synthetic workload parameters."""
    params = dict(SYNTHETIC_DEFAULTS)
    for item in filter(None, (p.strip() for p in (text or "").split(","))):
        key, sep, value = item.partition("=")
        key = key.strip().lower()
        if not sep or key not in SYNTHETIC_DEFAULTS:
            raise ConfigurationError(
                f"bad synthetic parameter {item!r}; keys: {', '.join(SYNTHETIC_DEFAULTS)}"
            )
        try:
            if key in _INT_KEYS:
                params[key] = int(value)
            elif key in _FLOAT_KEYS:
                params[key] = float(value)
            else:
                params[key] = value.strip()
        except ValueError:
            raise ConfigurationError(f"bad value for synthetic parameter {key!r}: {value!r}") from None
    return params


def synthetic_network(params: dict) -> Network:
    shape = LayerShape(params["c"], params["x"], params["y"], params["n"],
                       params["h"], params["k"], params["s"])
    seed = params["seed"]
    acts = gen_synthetic(shape.activation_shape, params["density"], params["pa"],
                         seed=(seed, 0, 0), distribution=params["dist"])
    wgts = gen_synthetic(shape.weight_shape, params["wdensity"], params["pw"],
                         seed=(seed, 0, 1), distribution=params["dist"])
    profile = PrecisionProfile((params["pa"],), params["pw"])
    return Network("synthetic", (Layer("layer1", shape, acts, wgts),), profile)


def parse_engine(text: str) -> EngineConfig:
    """``kind[:wires[:encoding]]`` with kind in lac, lm, base."""
    parts = text.strip().lower().split(":")
    kind = parts[0]
    wires_text = parts[1] if len(parts) > 1 and parts[1] else None
    encoding = parts[2] if len(parts) > 2 else "booth"
    if len(parts) > 3 or kind not in ("lac", "lm", "base"):
        raise ConfigurationError(f"bad engine spec {text!r}; expected lac:WIRES, lm[:WIRES] or base:2k")
    if encoding not in ENCODINGS:
        raise ConfigurationError(f"bad engine spec {text!r}: unknown encoding {encoding!r}")
    wires = None
    if wires_text is not None:
        multiplier = 1024 if wires_text.endswith("k") else 1
        try:
            wires = int(wires_text.rstrip("k")) * multiplier
        except ValueError:
            raise ConfigurationError(f"bad engine spec {text!r}: wire count {wires_text!r}") from None
    if kind == "base":
        if wires not in (None, 2048):
            raise ConfigurationError(
                f"invalid engine {text!r}: BASE is only modelled as base:2k (8 filters)"
            )
        return EngineConfig("BASE", filters=8, encoding=encoding)
    if kind == "lac" and wires is None:
        raise ConfigurationError(f"bad engine spec {text!r}: LAC needs a wire count, e.g. lac:128")
    wires = 128 if wires is None else wires
    if wires <= 0 or wires % 16:
        raise ConfigurationError(f"invalid engine {text!r}: wires must be a positive multiple of 16")
    if kind == "lac":
        cfg = lac(wires)
        return EngineConfig("LAC", filters=cfg.filters, encoding=encoding)
    return EngineConfig("LM", filters=wires // 16, encoding=encoding)


def load_workload(args) -> Network:
    sources = [s for s in (args.workload, args.synthetic, args.network) if s is not None]
    if len(sources) > 1:
        raise CliError("workload", "give only one of --workload, --synthetic, --network")
    try:
        if args.workload is not None:
            if not Path(args.workload).exists():
                raise CliError("workload", f"workload file not found: {args.workload}")
            return load_network(args.workload)
        if args.network is not None:
            return desk_network(args.network, seed=args.seed or 0,
                                distribution=args.distribution or "uniform")
        params = parse_synthetic(args.synthetic or "")
        if args.seed is not None:
            params["seed"] = args.seed
        if args.distribution is not None:
            params["dist"] = args.distribution
        return synthetic_network(params)
    except (TermSimError, OSError) as exc:
        raise CliError("workload", str(exc)) from None


def emit(text: str, output, stage: str):
    if output in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(output).write_text(text)
    except OSError as exc:
        raise CliError(stage, f"cannot write {output}: {exc}") from None


def render(rows, fmt: str) -> str:
    return rows_to_json(rows) if fmt == "json" else rows_to_csv(rows)


def cmd_gen(args) -> int:
    network = load_workload(args)
    try:
        save_network(network, args.output)
    except OSError as exc:
        raise CliError("gen", f"cannot write {args.output}: {exc}") from None
    return 0


def cmd_analyze(args) -> int:
    try:
        if not args.policy or "all" in [p.lower() for p in args.policy]:
            policies = ALL_POLICIES
        else:
            policies = [PolicyKind.parse(p) for p in args.policy]
    except ValueError as exc:
        raise CliError("analyze", str(exc)) from None
    network = load_workload(args)
    report = policy_report(network, policies)
    emit(render(report.as_rows(), args.format), args.output, "analyze")
    return 0


def cmd_simulate(args) -> int:
    try:
        cfgs = [parse_engine(e) for e in args.engine]
    except TermSimError as exc:
        raise CliError("simulate", str(exc)) from None
    network = load_workload(args)
    try:
        comparison = simulate(network, cfgs, n_jobs=args.jobs, with_potential=args.potential)
    except TermSimError as exc:
        raise CliError("simulate", str(exc)) from None
    rows = comparison.rows(per_layer=not args.totals_only)
    emit(render(rows, args.format), args.output, "simulate")
    if args.plot_data:
        plot_rows = [
            {"layer": r["layer"], "config": r["config"], "speedup_vs_base": r["speedup_vs_base"]}
            for r in comparison.rows(per_layer=True)
        ]
        emit(rows_to_csv(plot_rows), args.plot_data, "simulate")
    return 0


def _add_workload_args(p: argparse.ArgumentParser):
    p.add_argument("--workload", metavar="PATH", help="network description JSON written by 'gen'")
    p.add_argument("--synthetic", metavar="SPEC",
                   help="synthetic single layer, e.g. c=16,x=6,y=6,n=32,h=3,k=3,density=0.5,seed=1")
    p.add_argument("--network", choices=sorted(PRESETS), help="desk-scale network for a bundled preset")
    p.add_argument("--seed", type=int, help="seed for synthetic data")
    p.add_argument("--distribution", choices=DISTRIBUTIONS, help="synthetic value distribution")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="termsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic workload")
    _add_workload_args(gen)
    gen.add_argument("-o", "--output", required=True, help="network description JSON to write")
    gen.set_defaults(func=cmd_gen)

    analyze = sub.add_parser("analyze", help="work-reduction potential of avoidance policies")
    _add_workload_args(analyze)
    analyze.add_argument("--policy", action="append",
                         help="policy name (A, A+W, Ap, Ap+Wp, Ab, Ab+Wb, At, At+Wt) or 'all'")
    analyze.add_argument("--format", choices=("csv", "json"), default="csv")
    analyze.add_argument("-o", "--output")
    analyze.set_defaults(func=cmd_analyze)

    sim = sub.add_parser("simulate", help="cycle-accurate engine comparison")
    _add_workload_args(sim)
    sim.add_argument("--engine", action="append", required=True,
                     help="engine spec: lac:128|256|512|1k, lm[:WIRES], base:2k")
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.add_argument("-o", "--output")
    sim.add_argument("--totals-only", action="store_true", help="omit per-layer rows")
    sim.add_argument("--potential", action="store_true",
                     help="add the At+Wt potential speedup column")
    sim.add_argument("--plot-data", metavar="PATH", help="write per-layer speedups as CSV")
    sim.add_argument("--jobs", type=int, default=1, help="parallel (config, layer) simulations")
    sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"termsim {args.command}: error in {exc.stage}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
