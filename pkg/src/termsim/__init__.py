"""Bit-exact, cycle-accurate model of a term-serial DNN inference accelerator."""

__version__ = "0.1.0"

from .engine import (
    CycleReport,
    EngineConfig,
    base_2k,
    base_cycles,
    lac,
    lac_cycles,
    lm,
    lm_cycles,
    simulate,
)
from .numeric import QVal, Term, booth_encode, positional_encode, quantize, term_count
from .pe import ProcessingElement, pe_process_group, pe_process_groups
from .policy import PolicyKind, WorkRatio, policy_report, policy_work
from .workload import (
    LayerShape,
    PrecisionProfile,
    TensorTrace,
    build_groups,
    enumerate_windows,
    gen_synthetic,
    load_trace,
    save_trace,
)

__all__ = [
    "CycleReport", "EngineConfig", "base_2k", "base_cycles", "lac", "lac_cycles", "lm",
    "lm_cycles", "simulate", "FixedPointQuantizer", "PolicyAnalyzer", "TermEncoder",
    "TermSerialEngine", "QVal", "Term", "booth_encode", "positional_encode", "quantize",
    "term_count", "ProcessingElement", "pe_process_group", "pe_process_groups", "PolicyKind",
    "WorkRatio", "policy_report", "policy_work", "LayerShape", "PrecisionProfile", "TensorTrace",
    "build_groups", "enumerate_windows", "gen_synthetic", "load_trace", "save_trace",
]

_ESTIMATORS = {"FixedPointQuantizer", "PolicyAnalyzer", "TermEncoder", "TermSerialEngine"}


def __getattr__(name):
    # scikit-learn is only imported when an estimator is first requested
    if name in _ESTIMATORS:
        from . import estimators
        return getattr(estimators, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
