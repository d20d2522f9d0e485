"""Convolution geometry, tensor traces and the group streams fed to engines."""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .exceptions import (
    ConfigurationError,
    ElementCountError,
    ElementRangeError,
    MalformedHeaderError,
    ValidationError,
)
from .numeric import WORD_BITS, check_precision, precision_range


@dataclass(frozen=True)
class LayerShape:
    """A valid-only convolution: ``filters`` kernels of ``channels x kernel_h x kernel_w``."""

    channels: int
    in_height: int
    in_width: int
    filters: int
    kernel_height: int
    kernel_width: int
    stride: int = 1

    def __post_init__(self):
        for name in ("channels", "in_height", "in_width", "filters",
                     "kernel_height", "kernel_width", "stride"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
        if self.kernel_height > self.in_height or self.kernel_width > self.in_width:
            raise ValidationError(
                f"filter {self.kernel_height}x{self.kernel_width} larger than input "
                f"{self.in_height}x{self.in_width}"
            )

    @classmethod
    def fully_connected(cls, inputs: int, outputs: int) -> "LayerShape":
        return cls(inputs, 1, 1, outputs, 1, 1)

    @property
    def out_height(self) -> int:
        return (self.in_height - self.kernel_height) // self.stride + 1

    @property
    def out_width(self) -> int:
        return (self.in_width - self.kernel_width) // self.stride + 1

    @property
    def windows(self) -> int:
        return self.out_height * self.out_width

    @property
    def window_size(self) -> int:
        return self.channels * self.kernel_height * self.kernel_width

    @property
    def multiplications(self) -> int:
        return self.filters * self.windows * self.window_size

    @property
    def activation_shape(self) -> tuple[int, int, int]:
        return (self.channels, self.in_height, self.in_width)

    @property
    def weight_shape(self) -> tuple[int, int, int, int]:
        return (self.filters, self.channels, self.kernel_height, self.kernel_width)

    def as_dict(self) -> dict:
        return {
            "channels": self.channels, "in_height": self.in_height, "in_width": self.in_width,
            "filters": self.filters, "kernel_height": self.kernel_height,
            "kernel_width": self.kernel_width, "stride": self.stride,
        }


def enumerate_windows(layer: LayerShape) -> Iterator[tuple[int, int]]:
    """Top-left input coordinates of every window, row-major."""
    for i in range(layer.out_height):
        for j in range(layer.out_width):
            yield i * layer.stride, j * layer.stride


@dataclass(frozen=True, eq=False)
class TensorTrace:
    """An immutable integer tensor whose elements fit ``precision`` bits."""

    data: np.ndarray
    precision: int = WORD_BITS

    def __post_init__(self):
        check_precision(self.precision)
        data = np.array(self.data, dtype=np.int64, copy=True)
        lo, hi = precision_range(self.precision)
        bad = np.flatnonzero((data < lo) | (data > hi))
        if bad.size:
            index = int(bad[0])
            raise ElementRangeError(
                f"element {index} = {int(data.flat[index])} exceeds {self.precision}-bit range"
            )
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, TensorTrace):
            return NotImplemented
        return self.precision == other.precision and np.array_equal(self.data, other.data) \
            and self.data.shape == other.data.shape

    __hash__ = None


@dataclass(frozen=True)
class PrecisionProfile:
    """Per-layer activation precisions plus one weight precision per network."""

    activation: tuple[int, ...]
    weight: int

    def __post_init__(self):
        object.__setattr__(self, "activation", tuple(check_precision(p) for p in self.activation))
        object.__setattr__(self, "weight", check_precision(self.weight))
        if not self.activation:
            raise ConfigurationError("precision profile needs at least one layer")

    def layer(self, index: int) -> tuple[int, int]:
        return self.activation[index], self.weight

    def __len__(self):
        return len(self.activation)


DISTRIBUTIONS = ("uniform", "laplace")


def gen_synthetic(shape: Sequence[int], density: float, precision: int, seed,
                  signed: bool = True, distribution: str = "uniform",
                  scale: float = 0.02) -> TensorTrace:
    """Random tensor with exactly ``round(density * size)`` nonzero elements.

    With ``distribution="uniform"`` nonzeros are uniform over the nonzero
    values representable in ``precision`` bits (only the positive ones when
    ``signed`` is false).  ``"laplace"`` draws magnitudes ``1 + floor(X)``
    with ``X`` exponential of mean ``scale * 2**(precision - 1)``, clipped
    to the representable range, and a fair random sign when ``signed``.
    """
    precision = check_precision(precision)
    if not 0.0 <= density <= 1.0:
        raise ConfigurationError(f"density must be in [0, 1], got {density}")
    if distribution not in DISTRIBUTIONS:
        raise ConfigurationError(
            f"unknown distribution {distribution!r}; expected one of {DISTRIBUTIONS}"
        )
    if distribution == "laplace" and not scale > 0:
        raise ConfigurationError(f"scale must be positive, got {scale}")
    shape = tuple(int(s) for s in shape)
    size = math.prod(shape)
    rng = np.random.default_rng(seed)
    nonzero = int(round(density * size))
    lo, hi = precision_range(precision)
    if not signed:
        lo = 1
        if hi < 1 and nonzero:
            raise ConfigurationError(f"no positive values representable in {precision} bits")
    data = np.zeros(size, dtype=np.int64)
    positions = rng.choice(size, size=nonzero, replace=False)
    if distribution == "laplace":
        mags = 1 + np.floor(rng.exponential(scale * (1 << (precision - 1)), nonzero)).astype(np.int64)
        if signed:
            negative = rng.integers(0, 2, nonzero) == 1
            values = np.where(negative, -np.minimum(mags, -lo), np.minimum(mags, max(hi, 1)))
            if hi == 0:
                values = np.full(nonzero, -1, dtype=np.int64)
        else:
            values = np.minimum(mags, hi)
    elif signed:
        # uniform over [lo, -1] u [1, hi]: shift the non-negative half up by one
        values = lo + rng.integers(0, hi - lo, size=nonzero)
        values = np.where(values >= 0, values + 1, values)
    else:
        values = rng.integers(lo, hi, size=nonzero, endpoint=True)
    data[positions] = values
    return TensorTrace(data.reshape(shape), precision)


# Trace files: header, then little-endian int16 elements in C order.
TRACE_MAGIC = b"LTRC"
TRACE_VERSION = 1
_HEADER = struct.Struct("<4sHBB")
_DIM = struct.Struct("<I")


def save_trace(trace: TensorTrace, path) -> None:
    header = _HEADER.pack(TRACE_MAGIC, TRACE_VERSION, trace.precision, trace.data.ndim)
    dims = b"".join(_DIM.pack(d) for d in trace.shape)
    body = trace.data.astype("<i2").tobytes()
    Path(path).write_bytes(header + dims + body)


def load_trace(path) -> TensorTrace:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise MalformedHeaderError(f"{path}: file too short for trace header")
    magic, version, precision, ndim = _HEADER.unpack_from(blob)
    if magic != TRACE_MAGIC:
        raise MalformedHeaderError(f"{path}: bad magic {magic!r}")
    if version != TRACE_VERSION:
        raise MalformedHeaderError(f"{path}: unsupported trace version {version}")
    if not 1 <= precision <= WORD_BITS:
        raise MalformedHeaderError(f"{path}: precision {precision} out of range")
    offset = _HEADER.size + ndim * _DIM.size
    if len(blob) < offset:
        raise MalformedHeaderError(f"{path}: header truncated in dimension list")
    dims = tuple(_DIM.unpack_from(blob, _HEADER.size + i * _DIM.size)[0] for i in range(ndim))
    expected = math.prod(dims)
    payload = blob[offset:]
    if len(payload) != 2 * expected:
        raise ElementCountError(
            f"{path}: element count mismatch: header declares {expected}, "
            f"file holds {len(payload) / 2:g}"
        )
    data = np.frombuffer(payload, dtype="<i2").astype(np.int64).reshape(dims)
    try:
        return TensorTrace(data, precision)
    except ElementRangeError as exc:
        raise ElementRangeError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class Layer:
    name: str
    shape: LayerShape
    activations: TensorTrace
    weights: TensorTrace

    def __post_init__(self):
        if self.activations.shape != self.shape.activation_shape:
            raise ValidationError(
                f"layer {self.name}: activations have shape {self.activations.shape}, "
                f"expected {self.shape.activation_shape}"
            )
        if self.weights.shape != self.shape.weight_shape:
            raise ValidationError(
                f"layer {self.name}: weights have shape {self.weights.shape}, "
                f"expected {self.shape.weight_shape}"
            )

    @property
    def precision(self) -> tuple[int, int]:
        return self.activations.precision, self.weights.precision


@dataclass(frozen=True)
class Network:
    name: str
    layers: tuple[Layer, ...]
    profile: Optional[PrecisionProfile] = None

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.profile is not None and len(self.profile) != len(self.layers):
            raise ValidationError(
                f"network {self.name}: profile lists {len(self.profile)} layers, "
                f"network has {len(self.layers)}"
            )

    def layer_precision(self, index: int) -> tuple[int, int]:
        if self.profile is not None:
            return self.profile.layer(index)
        return self.layers[index].precision


def im2col(layer: LayerShape, activations) -> np.ndarray:
    """Window matrix of shape ``(windows, kh, kw, channels)``, windows row-major.

    The trailing axes follow the group enumeration order: kernel position
    outermost, channels innermost.
    """
    acts = np.asarray(getattr(activations, "data", activations), dtype=np.int64)
    if acts.shape != layer.activation_shape:
        raise ValidationError(f"activations shape {acts.shape} != {layer.activation_shape}")
    view = np.lib.stride_tricks.sliding_window_view(
        acts, (layer.kernel_height, layer.kernel_width), axis=(1, 2)
    )[:, ::layer.stride, ::layer.stride]
    # (c, oh, ow, kh, kw) -> (oh, ow, kh, kw, c)
    cols = view.transpose(1, 2, 3, 4, 0)
    return cols.reshape(layer.windows, layer.kernel_height, layer.kernel_width, layer.channels)


def weight_matrix(layer: LayerShape, weights) -> np.ndarray:
    w = np.asarray(getattr(weights, "data", weights), dtype=np.int64)
    if w.shape != layer.weight_shape:
        raise ValidationError(f"weights shape {w.shape} != {layer.weight_shape}")
    return w.transpose(0, 2, 3, 1)


def chunked_operands(layer: LayerShape, activations, weights, windows: int, filters: int,
                     lanes: int) -> tuple[np.ndarray, np.ndarray]:
    """Zero-padded operand blocks for tile scheduling.

    Returns activations shaped ``(window_batches, windows, chunks, lanes)``
    and weights shaped ``(filter_batches, filters, chunks, lanes)`` where a
    chunk is ``lanes`` consecutive channels at one kernel position.
    """
    cols = im2col(layer, activations)
    wmat = weight_matrix(layer, weights)
    n_chunks = -(-layer.channels // lanes)
    padded_c = n_chunks * lanes
    n_wb = -(-layer.windows // windows)
    n_fb = -(-layer.filters // filters)
    a = np.zeros((n_wb * windows, layer.kernel_height, layer.kernel_width, padded_c), np.int64)
    a[:layer.windows, :, :, :layer.channels] = cols
    w = np.zeros((n_fb * filters, layer.kernel_height, layer.kernel_width, padded_c), np.int64)
    w[:layer.filters, :, :, :layer.channels] = wmat
    kpos = layer.kernel_height * layer.kernel_width
    a = a.reshape(n_wb, windows, kpos * n_chunks, lanes)
    w = w.reshape(n_fb, filters, kpos * n_chunks, lanes)
    return a, w


@dataclass(frozen=True, eq=False)
class GroupTrace:
    """One tile step: ``windows x lanes`` activations against ``filters x lanes`` weights.

    ``window_ids`` / ``filter_ids`` are -1 for zero padding rows.
    """

    activations: np.ndarray
    weights: np.ndarray
    window_ids: np.ndarray
    filter_ids: np.ndarray
    chunk: int
    layer: str = ""

    @property
    def lanes(self) -> int:
        return self.activations.shape[1]

    def term_counts(self, encoding: str = "booth"):
        from .numeric import term_counts
        return term_counts(self.activations, encoding), term_counts(self.weights, encoding)


def build_groups(layer: LayerShape, activations, weights, cfg, name: str = "") -> Iterator[GroupTrace]:
    """Enumerate window-batch x filter-batch x channel-chunk tile steps."""
    a, w = chunked_operands(layer, activations, weights, cfg.windows, cfg.filters, cfg.lanes)
    n_wb, n_fb, n_chunks = a.shape[0], w.shape[0], a.shape[2]
    for wb in range(n_wb):
        window_ids = np.arange(wb * cfg.windows, (wb + 1) * cfg.windows)
        window_ids = np.where(window_ids < layer.windows, window_ids, -1)
        for fb in range(n_fb):
            filter_ids = np.arange(fb * cfg.filters, (fb + 1) * cfg.filters)
            filter_ids = np.where(filter_ids < layer.filters, filter_ids, -1)
            for ch in range(n_chunks):
                yield GroupTrace(a[wb, :, ch], w[fb, :, ch], window_ids, filter_ids, ch, name)


def reference_conv(layer: LayerShape, activations, weights) -> np.ndarray:
    """Direct convolution oracle; returns ``(filters, out_height, out_width)``."""
    acts = np.asarray(getattr(activations, "data", activations), dtype=np.int64)
    w = np.asarray(getattr(weights, "data", weights), dtype=np.int64)
    out = np.zeros((layer.filters, layer.out_height, layer.out_width), dtype=np.int64)
    s = layer.stride
    for i in range(layer.out_height):
        for j in range(layer.out_width):
            patch = acts[:, i * s:i * s + layer.kernel_height, j * s:j * s + layer.kernel_width]
            out[:, i, j] = np.tensordot(w, patch, axes=([1, 2, 3], [0, 1, 2]))
    return out


def layer_operand_columns(layer: LayerShape, activations, weights):
    """Window-flattened activations ``(windows, K)`` and weights ``(filters, K)``.

    Every multiplication of the layer is ``a[window, p] * w[filter, p]``.
    """
    cols = im2col(layer, activations).reshape(layer.windows, -1)
    wmat = weight_matrix(layer, weights).reshape(layer.filters, -1)
    return cols, wmat


# Network description files (JSON) reference one trace per tensor.

def save_network(network: Network, path) -> None:
    path = Path(path)
    stem = path.name[:-5] if path.name.endswith(".json") else path.name
    layers = []
    for i, layer in enumerate(network.layers):
        act_file = f"{stem}.{i}.act.trace"
        wgt_file = f"{stem}.{i}.wgt.trace"
        save_trace(layer.activations, path.parent / act_file)
        save_trace(layer.weights, path.parent / wgt_file)
        layers.append({"name": layer.name, "shape": layer.shape.as_dict(),
                       "activations": act_file, "weights": wgt_file})
    doc = {"network": network.name, "layers": layers}
    if network.profile is not None:
        doc["profile"] = {"activation": list(network.profile.activation),
                          "weight": network.profile.weight}
    path.write_text(json.dumps(doc, indent=2) + "\n")


def load_network(path) -> Network:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from None
    try:
        layers = []
        for i, entry in enumerate(doc["layers"]):
            shape = LayerShape(**entry["shape"])
            layers.append(Layer(entry.get("name", f"layer{i}"), shape,
                                load_trace(path.parent / entry["activations"]),
                                load_trace(path.parent / entry["weights"])))
        profile = None
        if "profile" in doc:
            profile = PrecisionProfile(tuple(doc["profile"]["activation"]), doc["profile"]["weight"])
        return Network(doc.get("network", path.stem), tuple(layers), profile)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: malformed network description ({exc!r})") from None
