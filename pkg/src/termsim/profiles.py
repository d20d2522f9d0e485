"""Bundled precision profiles and desk-scale synthetic networks.

Profiles are the per-layer activation precisions and per-network weight
precision of the convolutional layers of six image classification networks.
Layer shapes of the original networks are not bundled; :func:`desk_network`
builds a small synthetic stand-in with one layer per profile entry.
"""
from __future__ import annotations

from .exceptions import ConfigurationError
from .workload import Layer, LayerShape, Network, PrecisionProfile, gen_synthetic

PRESETS = {
    "alexnet": PrecisionProfile((9, 8, 5, 5, 7), 11),
    "googlenet": PrecisionProfile((10, 8, 10, 9, 8, 10, 9, 8, 9, 10, 7), 11),
    "vggs": PrecisionProfile((7, 8, 9, 7, 9), 12),
    "vggm": PrecisionProfile((7, 7, 7, 8, 7), 12),
    "alexnet-sparse": PrecisionProfile((8, 9, 9, 9, 8), 7),
    "resnet50-sparse": PrecisionProfile(
        (10, 8, 6, 6, 5, 7, 6, 6, 7, 7, 6, 7, 6, 7, 6, 8, 7, 6, 8, 6, 5, 8,
         8, 6, 8, 7, 7, 6, 9, 7, 5, 8, 7, 6, 8, 7, 6, 8, 7, 6, 8, 8, 7, 8, 7,
         9, 6, 10, 7, 6, 10, 8, 7),
        13,
    ),
}

SPARSE = {"alexnet-sparse", "resnet50-sparse"}

DESK_SHAPE = LayerShape(channels=16, in_height=6, in_width=6, filters=64,
                        kernel_height=3, kernel_width=3)


def get_profile(name: str) -> PrecisionProfile:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise ConfigurationError(
            f"unknown network preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None


def desk_network(name: str, seed: int = 0, shape: LayerShape = DESK_SHAPE,
                 activation_density: float = 0.5, weight_density: float | None = None,
                 distribution: str = "uniform", max_layers: int | None = None) -> Network:
    """Synthetic network following a preset's precision profile.

    Activations are non-negative (post-ReLU); weights are signed.  Sparse
    presets default to a weight density of 0.3, dense ones to 1.0.
    ``max_layers`` keeps only the leading entries of the profile.
    """
    profile = get_profile(name)
    if max_layers is not None:
        profile = PrecisionProfile(profile.activation[:max_layers], profile.weight)
    if weight_density is None:
        weight_density = 0.3 if name.lower() in SPARSE else 1.0
    layers = []
    for i, pa in enumerate(profile.activation):
        acts = gen_synthetic(shape.activation_shape, activation_density, pa,
                             seed=(seed, i, 0), signed=False,
                             distribution=distribution)
        wgts = gen_synthetic(shape.weight_shape, weight_density, profile.weight,
                             seed=(seed, i, 1), distribution=distribution)
        layers.append(Layer(f"conv{i + 1}", shape, acts, wgts))
    return Network(name.lower(), tuple(layers), profile)


def benchmark_suite(seed: int = 0) -> list[Network]:
    """Fixed desk-scale suite: every preset, first five layers, skewed values."""
    return [desk_network(name, seed=seed, distribution="laplace", max_layers=5)
            for name in PRESETS]
