"""scikit-learn compatible wrappers.

These expose the quantizer, term encoders, policy analyzer and engine
models through ``fit``/``transform``/``predict`` so they compose with
pipelines and parameter searches::

    engine = TermSerialEngine(kind="LAC", filters=16).fit(weights)
    outputs = engine.predict(activations)
    engine.report_.total_cycles
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import engine as _engine
from ._validation import check_int_array, check_pairs, required_precision
from .exceptions import ValidationError
from .numeric import check_precision, quantize_array, term_counts
from .policy import ALL_POLICIES, PolicyKind, effectual_units, policy_work
from .workload import Layer, LayerShape, TensorTrace


class FixedPointQuantizer(TransformerMixin, BaseEstimator):
    """Wrap values to ``precision``-bit two's complement (low bits, sign-extended)."""

    def __init__(self, precision=16):
        self.precision = precision

    def fit(self, X, y=None):
        check_precision(self.precision)
        X = check_int_array(X)
        self.n_features_in_ = X.shape[1] if X.ndim == 2 else 1
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        return quantize_array(check_int_array(X), self.precision)


class TermEncoder(TransformerMixin, BaseEstimator):
    """Map each value to its number of terms under ``encoding``."""

    def __init__(self, encoding="booth"):
        self.encoding = encoding

    def fit(self, X, y=None):
        term_counts(0, self.encoding)  # validates the encoding name
        X = check_int_array(X)
        self.n_features_in_ = X.shape[1] if X.ndim == 2 else 1
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        return term_counts(check_int_array(X), self.encoding)


def _resolve_policies(policies):
    if policies == "all":
        return ALL_POLICIES
    if isinstance(policies, (str, PolicyKind)):
        policies = [policies]
    return tuple(p if isinstance(p, PolicyKind) else PolicyKind.parse(p) for p in policies)


class PolicyAnalyzer(TransformerMixin, BaseEstimator):
    """Work-reduction potential of avoidance policies over (activation, weight) pairs.

    ``fit`` takes an ``(n, 2)`` array of multiplication operands and stores
    one :class:`~termsim.policy.WorkRatio` per policy in ``ratios_``.
    ``transform`` returns per-multiplication effectual unit counts, one
    column per policy.
    """

    def __init__(self, policies="all", activation_precision=16, weight_precision=16):
        self.policies = policies
        self.activation_precision = activation_precision
        self.weight_precision = weight_precision

    def fit(self, X, y=None):
        a, w = check_pairs(X)
        self.policies_ = _resolve_policies(self.policies)
        self.ratios_ = {
            p: policy_work(a, w, p, self.activation_precision, self.weight_precision)
            for p in self.policies_
        }
        self.speedups_ = {p.value: r.speedup for p, r in self.ratios_.items()}
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "ratios_")
        a, w = check_pairs(X)
        columns = [effectual_units(a, w, p, self.activation_precision, self.weight_precision)
                   for p in self.policies_]
        return np.stack(columns, axis=1) if columns else np.empty((a.size, 0), np.int64)


class TermSerialEngine(BaseEstimator):
    """One engine configuration applied to a convolution layer.

    ``fit`` loads the layer's filters ``(filters, channels, kh, kw)``;
    ``predict`` convolves an activation tensor ``(channels, height, width)``
    through the engine's datapath and returns ``(filters, out_h, out_w)``.
    The cycle accounting of the last prediction is kept in ``report_``.
    """

    def __init__(self, kind="LAC", filters=8, windows=None, lanes=16, encoding="booth",
                 stride=1, activation_precision=None, weight_precision=None):
        self.kind = kind
        self.filters = filters
        self.windows = windows
        self.lanes = lanes
        self.encoding = encoding
        self.stride = stride
        self.activation_precision = activation_precision
        self.weight_precision = weight_precision

    def _config(self):
        return _engine.EngineConfig(self.kind, filters=self.filters, windows=self.windows,
                                    lanes=self.lanes, encoding=self.encoding)

    def fit(self, X, y=None):
        self.config_ = self._config()
        weights = check_int_array(X, "weights", ndim=4)
        self.weight_precision_ = (check_precision(self.weight_precision)
                                  if self.weight_precision is not None
                                  else required_precision(weights))
        self.weights_ = TensorTrace(weights, self.weight_precision_)
        return self

    def _layer(self, X) -> Layer:
        check_is_fitted(self, "weights_")
        acts = check_int_array(X, "activations", ndim=3)
        n, c, kh, kw = self.weights_.shape
        if acts.shape[0] != c:
            raise ValidationError(f"activations have {acts.shape[0]} channels, filters expect {c}")
        shape = LayerShape(c, acts.shape[1], acts.shape[2], n, kh, kw, self.stride)
        pa = (check_precision(self.activation_precision) if self.activation_precision is not None
              else required_precision(acts))
        return Layer("layer", shape, TensorTrace(acts, pa), self.weights_)

    def predict(self, X):
        layer = self._layer(X)
        self.report_ = _engine.run_layer(layer, self.config_, layer.precision)
        self.cycles_ = self.report_.total_cycles
        return self.report_.per_layer[0].outputs.reshape(
            layer.shape.filters, layer.shape.out_height, layer.shape.out_width
        )

    def speedup(self, X, reference=None) -> Fraction:
        """Cycle ratio of ``reference`` (``BASE_2K`` by default) over this engine on ``X``."""
        layer = self._layer(X)
        mine = _engine.run_layer(layer, self.config_, layer.precision)
        ref = _engine.run_layer(layer, reference or _engine.base_2k(), layer.precision)
        return Fraction(ref.total_cycles, mine.total_cycles)
