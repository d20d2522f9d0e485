"""The four-window, four-filter, two-channel 4-bit example workload."""
import numpy as np

from termsim.engine import EngineConfig
from termsim.workload import Layer, LayerShape, Network, PrecisionProfile, TensorTrace

TOY_SHAPE = LayerShape(channels=2, in_height=2, in_width=2, filters=4, kernel_height=1, kernel_width=1)

# activations (c, x, y); window 0 channel 0 is A_0 = 0b110
TOY_ACTS = np.array([[[6, 1], [4, 3]],
                     [[2, 5], [0, 3]]])
# weights (N, c, 1, 1); filter 1 channel 0 is W_0^1 = 0b111
TOY_WEIGHTS = np.array([[1, 2], [7, 4], [2, 0], [5, 1]]).reshape(4, 2, 1, 1)

# 3-bit signed data for the bit-serial engine
TOY_ACTS_3B = np.array([[[3, -1], [2, 0]],
                        [[-4, 1], [3, 2]]])
TOY_WEIGHTS_3B = np.array([[1, -2], [3, 2], [-1, 0], [2, -3]]).reshape(4, 2, 1, 1)

TOY_BASE = EngineConfig("BASE", filters=1, windows=1, lanes=2)
TOY_LAC = EngineConfig("LAC", filters=4, windows=4, lanes=2, encoding="positional")
TOY_LM = EngineConfig("LM", filters=4, windows=4, lanes=2)


def toy_layer(acts=TOY_ACTS, weights=TOY_WEIGHTS, precision=4) -> Layer:
    return Layer("toy", TOY_SHAPE, TensorTrace(acts, precision), TensorTrace(weights, precision))


def toy_network(acts=TOY_ACTS, weights=TOY_WEIGHTS, precision=4) -> Network:
    return Network("toy", (toy_layer(acts, weights, precision),),
                   PrecisionProfile((precision,), precision))
