"""Gated causal temporal convolutions over each pedestrian's sequence.

Each layer runs two causal convolutions over time, a tanh gate and a
sigmoid filter, and multiplies them. Left zero padding keeps output
length equal to input length and makes step t blind to steps after t.
Pedestrians never mix here; the batch axis of conv1d_causal carries them.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .errors import ShapeError
from .init import xavier_uniform


def receptive_field(kernel: int, dilations) -> int:
    """Number of trailing input steps that can reach one output step."""
    dilations = tuple(dilations)
    if kernel < 1 or len(dilations) < 1 or any(d < 1 for d in dilations):
        raise ShapeError(f"bad kernel {kernel} or dilations {dilations}")
    return 1 + (kernel - 1) * sum(dilations)


class GatedConvLayer:
    """tanh(conv_g(h)) * sigmoid(conv_f(h)), both causal."""

    def __init__(self, store, prefix: str, c_in: int, c_out: int, kernel: int,
                 dilation: int, rng: np.random.Generator):
        self.dilation = dilation
        fan_in, fan_out = c_in * kernel, c_out * kernel
        self.Wg = store.add(f"{prefix}.gate.W", xavier_uniform(rng, fan_in, fan_out, (c_out, c_in, kernel)))
        self.bg = store.add(f"{prefix}.gate.b", np.zeros(c_out))
        self.Wf = store.add(f"{prefix}.filt.W", xavier_uniform(rng, fan_in, fan_out, (c_out, c_in, kernel)))
        self.bf = store.add(f"{prefix}.filt.b", np.zeros(c_out))

    def forward(self, h: T.Tensor) -> T.Tensor:
        """h is [N, C_in, T] -> [N, C_out, T]."""
        gate = T.tanh(T.conv1d_causal(h, self.Wg, self.bg, dilation=self.dilation))
        filt = T.sigmoid(T.conv1d_causal(h, self.Wf, self.bf, dilation=self.dilation))
        return T.mul(gate, filt)


class TemporalConvNet:
    """Stack of gated causal layers, channels-last at the boundary.

    Input and output are [N, T, C] to match the spatial encoder; the
    internal layout is [N, C, T] for the convolutions.
    """

    def __init__(self, store, prefix: str, in_dim: int, channels: int,
                 layers: int, kernel: int, dilations, rng: np.random.Generator):
        dilations = tuple(dilations)
        if len(dilations) != layers:
            raise ShapeError(f"{len(dilations)} dilations for {layers} layers")
        self.kernel = kernel
        self.dilations = dilations
        self.layers = []
        for i in range(layers):
            c_in = in_dim if i == 0 else channels
            self.layers.append(
                GatedConvLayer(store, f"{prefix}.l{i}", c_in, channels, kernel, dilations[i], rng)
            )

    def receptive_field(self) -> int:
        return receptive_field(self.kernel, self.dilations)

    def forward(self, h: T.Tensor) -> T.Tensor:
        """h is [N, T, C_in] -> [N, T, channels]."""
        if h.data.ndim != 3:
            raise ShapeError(f"expected [N, T, C], got {h.shape}")
        x = T.transpose(h, (0, 2, 1))
        for layer in self.layers:
            x = layer.forward(x)
        return T.transpose(x, (0, 2, 1))
