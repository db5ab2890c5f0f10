"""Per-time-step spatial encoder: attention over pedestrians with
displacement-derived edge features, gated value transform, multi-head
aggregation, and an affine graph residual.

The scene graph is fully connected including the self-loop, so a lone
pedestrian attends to itself with weight 1. Edge features embed the
displacement p_i - p_j, never absolute positions, which is what makes
the spatial encoding translation invariant.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .errors import ShapeError
from .init import add_affine, xavier_uniform


def gated_transform(value_pre: T.Tensor, gate_pre: T.Tensor = None) -> T.Tensor:
    """Self-gated value: u * tanh(u), or u * tanh(v) with a separate gate.

    The gate saturates toward 1 for large pre-activations, so the
    transform passes large values through nearly unchanged while
    squashing small ones quadratically.
    """
    if gate_pre is None:
        gate_pre = value_pre
    return T.mul(T.tanh(gate_pre), value_pre)


class GraphAttentionLayer:
    """One multi-head attention layer over the pedestrian graph.

    Per head, the scalar attention logit between pedestrians i and j is
        leaky_relu(w1 . h_i + w2 . h_j + a_e . edge_ij)
    followed by a masked softmax over j. Values pass through a gated
    transform u * tanh(u) before aggregation, and each head's weighted
    sum gets a final leaky_relu. Heads are concatenated and an affine
    projection of the input is added as the graph residual.
    """

    def __init__(self, store, prefix: str, in_dim: int, heads: int, head_out: int,
                 rng: np.random.Generator, slope: float = 0.2,
                 use_edges: bool = True, separate_gate: bool = False):
        self.prefix = prefix
        self.in_dim = in_dim
        self.heads = heads
        self.head_out = head_out
        self.slope = slope
        self.use_edges = use_edges
        self.separate_gate = separate_gate
        self.out_dim = heads * head_out

        if use_edges:
            self.edge_W, self.edge_b = add_affine(store, f"{prefix}.edge", 2, head_out, rng)
        self.head_params = []
        for k in range(heads):
            hp = {}
            hp["w1"] = store.add(f"{prefix}.h{k}.w1", xavier_uniform(rng, in_dim, 1))
            hp["w2"] = store.add(f"{prefix}.h{k}.w2", xavier_uniform(rng, in_dim, 1))
            if use_edges:
                hp["ae"] = store.add(f"{prefix}.h{k}.ae", xavier_uniform(rng, head_out, 1))
            hp["Wh"], hp["bh"] = add_affine(store, f"{prefix}.h{k}.val", in_dim, head_out, rng)
            if separate_gate:
                hp["Wg"], hp["bg"] = add_affine(store, f"{prefix}.h{k}.gate", in_dim, head_out, rng)
            self.head_params.append(hp)
        self.res_W, self.res_b = add_affine(store, f"{prefix}.res", in_dim, self.out_dim, rng)

    def edge_features(self, positions: np.ndarray) -> T.Tensor:
        """Embed pairwise displacements: edge[i, j] = f(p_i - p_j)."""
        if positions.ndim != 2 or positions.shape[1] != 2:
            raise ShapeError(f"positions must be [N, 2], got {positions.shape}")
        disp = positions[:, None, :] - positions[None, :, :]
        return T.affine(T.Tensor(disp), self.edge_W, self.edge_b)

    def forward(self, h: T.Tensor, positions: np.ndarray):
        """Returns ([N, heads*head_out] output, [heads, N, N] attention)."""
        n = h.data.shape[0]
        if h.data.shape != (n, self.in_dim):
            raise ShapeError(f"node features {h.shape}, expected [N, {self.in_dim}]")
        edge = self.edge_features(positions) if self.use_edges else None
        mask = np.ones((n, n), dtype=bool)

        head_outs = []
        attn = np.empty((self.heads, n, n))
        for k, hp in enumerate(self.head_params):
            si = T.affine(h, hp["w1"], None)                   # [N, 1], row term
            sj = T.affine(h, hp["w2"], None)                   # [N, 1], column term
            logits = T.add(
                T.repeat_axis(si, axis=1, times=n),
                T.repeat_axis(T.transpose(sj, (1, 0)), axis=0, times=n),
            )
            if edge is not None:
                es = T.reshape(T.affine(edge, hp["ae"], None), (n, n))
                logits = T.add(logits, es)
            alpha = T.masked_softmax(T.leaky_relu(logits, self.slope), mask)
            attn[k] = alpha.data

            u = T.affine(h, hp["Wh"], hp["bh"])
            gate_pre = T.affine(h, hp["Wg"], hp["bg"]) if self.separate_gate else None
            g = gated_transform(u, gate_pre)
            head_outs.append(T.leaky_relu(T.matmul(alpha, g), self.slope))

        merged = head_outs[0] if len(head_outs) == 1 else T.concat(head_outs, axis=1)
        out = T.add(merged, T.affine(h, self.res_W, self.res_b))
        return out, attn


class SpatialEncoder:
    """Input embedding plus two attention layers, run at every observed step.

    Steps are independent: layer weights are shared across time but no
    state crosses step boundaries. Returns the per-step encodings stacked
    to [N, T_obs, width] and, per layer, the attention tensor
    [heads, T_obs, N, N] for inspection dumps.
    """

    def __init__(self, store, cfg, rng: np.random.Generator):
        use_edges = cfg.variant != "vanilla_gat"
        self.embed_W, self.embed_b = add_affine(store, "embed", 4, cfg.embed_dim, rng)
        self.gal1 = GraphAttentionLayer(
            store, "gal1", cfg.embed_dim, cfg.gal1_heads, cfg.gal1_out, rng,
            slope=cfg.leaky_slope, use_edges=use_edges, separate_gate=cfg.separate_gate,
        )
        self.gal2 = GraphAttentionLayer(
            store, "gal2", self.gal1.out_dim, cfg.gal2_heads, cfg.gal2_out, rng,
            slope=cfg.leaky_slope, use_edges=use_edges, separate_gate=cfg.separate_gate,
        )
        self.out_dim = self.gal2.out_dim

    def forward(self, features: T.Tensor, positions: np.ndarray):
        """features [N, T, 4], positions [N, T, 2] -> [N, T, out_dim]."""
        n, t_obs = features.data.shape[0], features.data.shape[1]
        embedded = T.affine(features, self.embed_W, self.embed_b)
        step_outs = []
        attn1 = np.empty((self.gal1.heads, t_obs, n, n))
        attn2 = np.empty((self.gal2.heads, t_obs, n, n))
        for t in range(t_obs):
            h_t = T.reshape(T.slice_axis(embedded, 1, t, t + 1), (n, -1))
            pos_t = positions[:, t, :]
            h1, a1 = self.gal1.forward(h_t, pos_t)
            h2, a2 = self.gal2.forward(h1, pos_t)
            attn1[:, t] = a1
            attn2[:, t] = a2
            step_outs.append(T.reshape(h2, (n, 1, self.out_dim)))
        out = step_outs[0] if t_obs == 1 else T.concat(step_outs, axis=1)
        return out, [attn1, attn2]
